#pragma once

#include <span>
#include <vector>

namespace monsoon {

// Asymmetric regression error for rainfall: underestimation is penalised with
// exponent `under` (default 1.5), overestimation with exponent `over`
// (default 1, i.e. linear). Equal entries contribute nothing.
struct LossExponents {
    double under = 1.5;
    double over = 1.0;
};

// Mean over N entries of  [pred<actual]*(actual-pred)^under + [pred>actual]*(pred-actual)^over.
double peak_biased_loss(std::span<const double> pred, std::span<const double> actual,
                        LossExponents exp = {});

// dLoss/dpred. At the kink (pred == actual) the subgradient 0 is used.
std::vector<double> peak_biased_grad(std::span<const double> pred, std::span<const double> actual,
                                     LossExponents exp = {});

// In-place variant used by the training hot loop; grad must have pred.size() slots.
void peak_biased_grad_into(std::span<const double> pred, std::span<const double> actual,
                           LossExponents exp, std::span<double> grad);

} // namespace monsoon
