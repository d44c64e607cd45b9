#include "monsoon/loss.hpp"

#include <cmath>
#include <string>

#include "monsoon/errors.hpp"

namespace monsoon {

namespace {

void check_shapes(std::span<const double> pred, std::span<const double> actual) {
    if (pred.size() != actual.size())
        throw ShapeError("peak_biased: length mismatch, pred " + std::to_string(pred.size()) +
                         " vs actual " + std::to_string(actual.size()));
    if (pred.empty())
        throw ShapeError("peak_biased: empty series");
}

} // namespace

double peak_biased_loss(std::span<const double> pred, std::span<const double> actual,
                        LossExponents exp) {
    check_shapes(pred, actual);
    double sum = 0.0;
    for (std::size_t t = 0; t < pred.size(); ++t) {
        const double p = pred[t], a = actual[t];
        if (p < a)
            sum += std::pow(a - p, exp.under);
        else if (p > a)
            sum += std::pow(p - a, exp.over);
    }
    return sum / static_cast<double>(pred.size());
}

void peak_biased_grad_into(std::span<const double> pred, std::span<const double> actual,
                           LossExponents exp, std::span<double> grad) {
    check_shapes(pred, actual);
    if (grad.size() != pred.size())
        throw ShapeError("peak_biased_grad: bad output length");
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    for (std::size_t t = 0; t < pred.size(); ++t) {
        const double p = pred[t], a = actual[t];
        if (p < a)
            grad[t] = -exp.under * std::pow(a - p, exp.under - 1.0) * inv_n;
        else if (p > a)
            grad[t] = exp.over * std::pow(p - a, exp.over - 1.0) * inv_n;
        else
            grad[t] = 0.0; // subgradient at the kink
    }
}

std::vector<double> peak_biased_grad(std::span<const double> pred, std::span<const double> actual,
                                     LossExponents exp) {
    std::vector<double> grad(pred.size(), 0.0);
    peak_biased_grad_into(pred, actual, exp, grad);
    return grad;
}

} // namespace monsoon
