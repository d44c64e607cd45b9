#include "monsoon/nn.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "json.hpp"

#include "monsoon/errors.hpp"
#include "monsoon/rng.hpp"

namespace monsoon::nn {

namespace {

constexpr std::size_t kGradBlock = 8; // samples per deterministic reduction block

double apply_act(Activation a, double z) {
    switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case Activation::tanh: return std::tanh(z);
    case Activation::identity: return z;
    }
    return z;
}

// derivative expressed through the stored pre-activation and output
double act_deriv(Activation a, double pre, double out) {
    switch (a) {
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: return out * (1.0 - out);
    case Activation::tanh: return 1.0 - out * out;
    case Activation::identity: return 1.0;
    }
    return 1.0;
}

// y = W x + b, W row-major (rows x cols)
void affine(const double* W, const double* b, const double* x, int rows, int cols, double* y) {
    for (int r = 0; r < rows; ++r) {
        double s = b ? b[r] : 0.0;
        const double* wr = W + static_cast<std::size_t>(r) * cols;
        for (int c = 0; c < cols; ++c)
            s += wr[c] * x[c];
        y[r] = s;
    }
}

// y += W^T d
void add_wt_vec(const double* W, const double* d, int rows, int cols, double* y) {
    for (int r = 0; r < rows; ++r) {
        const double dr = d[r];
        const double* wr = W + static_cast<std::size_t>(r) * cols;
        for (int c = 0; c < cols; ++c)
            y[c] += dr * wr[c];
    }
}

// G += d x^T
void add_outer(double* G, const double* d, const double* x, int rows, int cols) {
    for (int r = 0; r < rows; ++r) {
        const double dr = d[r];
        double* gr = G + static_cast<std::size_t>(r) * cols;
        for (int c = 0; c < cols; ++c)
            gr[c] += dr * x[c];
    }
}

void validate_specs(std::span<const LayerSpec> specs) {
    if (specs.empty())
        throw ConfigError("model needs at least one layer");
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& s = specs[i];
        if (s.in_dim < 1 || s.out_dim < 1)
            throw ConfigError("layer " + std::to_string(i) + " has non-positive dimensions");
        if (s.kind == LayerKind::lstm && i != 0)
            throw ConfigError("an lstm layer is only supported at the head of the chain");
        if (i > 0 && s.in_dim != specs[i - 1].out_dim)
            throw ConfigError("layer " + std::to_string(i) + " input width " +
                              std::to_string(s.in_dim) + " does not match previous output width " +
                              std::to_string(specs[i - 1].out_dim));
    }
}

void check_input_shape(const LayerSpec& first, const Tensor2& input) {
    if (first.kind == LayerKind::lstm) {
        if (input.rows() < 1 || input.cols() != static_cast<std::size_t>(first.in_dim))
            throw ShapeError("lstm input must be (timesteps x " + std::to_string(first.in_dim) +
                             "), got " + std::to_string(input.rows()) + "x" +
                             std::to_string(input.cols()));
    } else {
        if (input.rows() != 1 || input.cols() != static_cast<std::size_t>(first.in_dim))
            throw ShapeError("dense input must be (1 x " + std::to_string(first.in_dim) +
                             "), got " + std::to_string(input.rows()) + "x" +
                             std::to_string(input.cols()));
    }
}

bool finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// Shared single-sample pass. Records into `rec` when non-null. Never throws;
// returns false if any activation went non-finite so parallel callers can
// flag the failure instead of unwinding inside an OpenMP region.
bool forward_core(const ModelParams& p, const ParamLayout& layout, const Tensor2& input,
                  std::vector<double>& out, Trace* rec) {
    const double* flat = p.flat.data();
    std::vector<double> cur;
    std::size_t li = 0;

    if (p.spec[0].kind == LayerKind::lstm) {
        const auto& s = p.spec[0];
        const int in = s.in_dim, hid = s.out_dim;
        const auto& blocks = layout.layers[0];
        const std::size_t T = input.rows();
        std::vector<double> h(hid, 0.0), c(hid, 0.0);
        std::vector<double> gi(hid), gf(hid), gc(hid), go(hid), tanh_c(hid), tmp(hid);
        if (rec) {
            auto& L = rec->lstm_step;
            L.timesteps = T;
            L.x.resize(T); L.gi.resize(T); L.gf.resize(T); L.gc.resize(T); L.go.resize(T);
            L.cell.resize(T); L.cell_tanh.resize(T); L.hidden.resize(T);
            rec->has_lstm = true;
        }
        for (std::size_t t = 0; t < T; ++t) {
            const double* xt = input.data() + t * in;
            for (int g = 0; g < 4; ++g) {
                const double* Wx = flat + blocks[g * 3 + 0].offset;
                const double* Wh = flat + blocks[g * 3 + 1].offset;
                const double* b = flat + blocks[g * 3 + 2].offset;
                affine(Wx, b, xt, hid, in, tmp.data());
                affine(Wh, nullptr, h.data(), hid, hid, (g == 0 ? gi : g == 1 ? gf : g == 2 ? gc : go).data());
                auto& gate = g == 0 ? gi : g == 1 ? gf : g == 2 ? gc : go;
                for (int k = 0; k < hid; ++k) {
                    const double z = tmp[k] + gate[k];
                    gate[k] = (g == 2) ? std::tanh(z) : 1.0 / (1.0 + std::exp(-z));
                }
            }
            for (int k = 0; k < hid; ++k) {
                c[k] = gf[k] * c[k] + gi[k] * gc[k];
                tanh_c[k] = std::tanh(c[k]);
                h[k] = go[k] * tanh_c[k];
            }
            if (rec) {
                auto& L = rec->lstm_step;
                L.x[t].assign(xt, xt + in);
                L.gi[t] = gi; L.gf[t] = gf; L.gc[t] = gc; L.go[t] = go;
                L.cell[t] = c; L.cell_tanh[t] = tanh_c; L.hidden[t] = h;
            }
        }
        cur = h;
        li = 1;
    } else {
        cur.assign(input.data(), input.data() + input.cols());
    }

    for (; li < p.spec.size(); ++li) {
        const auto& s = p.spec[li];
        const auto& blocks = layout.layers[li];
        std::vector<double> pre(s.out_dim);
        affine(flat + blocks[0].offset, flat + blocks[1].offset, cur.data(), s.out_dim, s.in_dim,
               pre.data());
        std::vector<double> act(s.out_dim);
        for (int k = 0; k < s.out_dim; ++k)
            act[k] = apply_act(s.activation, pre[k]);
        if (rec)
            rec->dense_steps.push_back({std::move(cur), pre, act});
        cur = std::move(act);
    }

    out = std::move(cur);
    if (rec) {
        rec->output = out;
        rec->origin = &p;
        rec->origin_version = p.version;
    }
    return finite(out);
}

} // namespace

std::string to_string(Activation a) {
    switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
    }
    return "identity";
}

std::string to_string(LayerKind k) { return k == LayerKind::lstm ? "lstm" : "dense"; }

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "tanh") return Activation::tanh;
    if (s == "identity" || s == "default") return Activation::identity;
    throw ConfigError("unknown activation '" + s + "'");
}

LayerKind layer_kind_from_string(const std::string& s) {
    if (s == "dense") return LayerKind::dense;
    if (s == "lstm") return LayerKind::lstm;
    throw ConfigError("unknown layer kind '" + s + "'");
}

LayerSpec dense(int in_dim, int out_dim, Activation act) {
    return {LayerKind::dense, in_dim, out_dim, act};
}

LayerSpec lstm(int feature_dim, int hidden_dim) {
    return {LayerKind::lstm, feature_dim, hidden_dim, Activation::identity};
}

ParamLayout ParamLayout::build(std::span<const LayerSpec> specs) {
    validate_specs(specs);
    ParamLayout layout;
    std::size_t off = 0;
    for (const auto& s : specs) {
        std::vector<Block> blocks;
        const auto in = static_cast<std::size_t>(s.in_dim);
        const auto out = static_cast<std::size_t>(s.out_dim);
        if (s.kind == LayerKind::dense) {
            blocks.push_back({off, out * in});
            off += out * in;
            blocks.push_back({off, out});
            off += out;
        } else {
            for (int g = 0; g < 4; ++g) {
                blocks.push_back({off, out * in});
                off += out * in;
                blocks.push_back({off, out * out});
                off += out * out;
                blocks.push_back({off, out});
                off += out;
            }
        }
        layout.layers.push_back(std::move(blocks));
    }
    layout.total = off;
    return layout;
}

ModelParams init_params(std::span<const LayerSpec> specs, std::uint64_t seed) {
    const ParamLayout layout = ParamLayout::build(specs);
    ModelParams p;
    p.spec.assign(specs.begin(), specs.end());
    p.flat.assign(layout.total, 0.0);
    p.seed = seed;
    Rng rng(seed);
    for (std::size_t li = 0; li < specs.size(); ++li) {
        const auto& s = specs[li];
        const auto& blocks = layout.layers[li];
        if (s.kind == LayerKind::dense) {
            const double r = std::sqrt(6.0 / (s.in_dim + s.out_dim));
            for (std::size_t k = 0; k < blocks[0].size; ++k)
                p.flat[blocks[0].offset + k] = rng.next_real(-r, r);
        } else {
            const double r = std::sqrt(1.0 / s.out_dim);
            for (int g = 0; g < 4; ++g)
                for (int wb = 0; wb < 2; ++wb) { // Wx then Wh; biases stay zero
                    const auto& b = blocks[g * 3 + wb];
                    for (std::size_t k = 0; k < b.size; ++k)
                        p.flat[b.offset + k] = rng.next_real(-r, r);
                }
        }
    }
    return p;
}

std::vector<double> forward(const ModelParams& params, const Tensor2& input) {
    validate_specs(params.spec);
    check_input_shape(params.spec[0], input);
    const ParamLayout layout = ParamLayout::build(params.spec);
    std::vector<double> out;
    if (!forward_core(params, layout, input, out, nullptr))
        throw NumericError("forward pass produced a non-finite value");
    return out;
}

Trace forward_trace(const ModelParams& params, const Tensor2& input) {
    validate_specs(params.spec);
    check_input_shape(params.spec[0], input);
    const ParamLayout layout = ParamLayout::build(params.spec);
    Trace trace;
    std::vector<double> out;
    if (!forward_core(params, layout, input, out, &trace))
        throw NumericError("forward pass produced a non-finite value");
    return trace;
}

namespace {

void backward_core(const ModelParams& params, const ParamLayout& layout, const Trace& trace,
                   std::span<const double> out_grad, std::span<double> grads) {
    if (trace.origin != &params || trace.origin_version != params.version)
        throw UsageError("trace does not belong to the current parameters; rerun forward_trace");
    if (grads.size() != layout.total)
        throw ShapeError("gradient buffer has " + std::to_string(grads.size()) + " slots, expected " +
                         std::to_string(layout.total));
    if (out_grad.size() != params.output_dim())
        throw ShapeError("output gradient has " + std::to_string(out_grad.size()) +
                         " entries, expected " + std::to_string(params.output_dim()));

    const double* flat = params.flat.data();
    std::vector<double> d(out_grad.begin(), out_grad.end());

    const std::size_t n_dense = trace.dense_steps.size();
    for (std::size_t k = n_dense; k-- > 0;) {
        const std::size_t li = trace.has_lstm ? k + 1 : k;
        const auto& s = params.spec[li];
        const auto& blocks = layout.layers[li];
        const auto& step = trace.dense_steps[k];
        std::vector<double> dz(s.out_dim);
        for (int j = 0; j < s.out_dim; ++j)
            dz[j] = d[j] * act_deriv(s.activation, step.pre[j], step.out[j]);
        add_outer(grads.data() + blocks[0].offset, dz.data(), step.input.data(), s.out_dim, s.in_dim);
        for (int j = 0; j < s.out_dim; ++j)
            grads[blocks[1].offset + j] += dz[j];
        std::vector<double> dx(s.in_dim, 0.0);
        add_wt_vec(flat + blocks[0].offset, dz.data(), s.out_dim, s.in_dim, dx.data());
        d = std::move(dx);
    }

    if (!trace.has_lstm)
        return;

    const auto& s = params.spec[0];
    const auto& blocks = layout.layers[0];
    const auto& L = trace.lstm_step;
    const int in = s.in_dim, hid = s.out_dim;
    std::vector<double> dh = d;
    std::vector<double> dc(hid, 0.0);
    std::vector<double> dpre_i(hid), dpre_f(hid), dpre_g(hid), dpre_o(hid);
    const std::vector<double> zeros(hid, 0.0);

    for (std::size_t t = L.timesteps; t-- > 0;) {
        const auto& gi = L.gi[t];
        const auto& gf = L.gf[t];
        const auto& gc = L.gc[t];
        const auto& go = L.go[t];
        const auto& tc = L.cell_tanh[t];
        const auto& c_prev = t > 0 ? L.cell[t - 1] : zeros;
        const auto& h_prev = t > 0 ? L.hidden[t - 1] : zeros;

        for (int k = 0; k < hid; ++k) {
            dc[k] += dh[k] * go[k] * (1.0 - tc[k] * tc[k]);
            dpre_o[k] = dh[k] * tc[k] * go[k] * (1.0 - go[k]);
            dpre_i[k] = dc[k] * gc[k] * gi[k] * (1.0 - gi[k]);
            dpre_g[k] = dc[k] * gi[k] * (1.0 - gc[k] * gc[k]);
            dpre_f[k] = dc[k] * c_prev[k] * gf[k] * (1.0 - gf[k]);
        }

        const std::vector<double>* dpre[4] = {&dpre_i, &dpre_f, &dpre_g, &dpre_o};
        for (int g = 0; g < 4; ++g) {
            add_outer(grads.data() + blocks[g * 3 + 0].offset, dpre[g]->data(), L.x[t].data(), hid, in);
            add_outer(grads.data() + blocks[g * 3 + 1].offset, dpre[g]->data(), h_prev.data(), hid, hid);
            for (int k = 0; k < hid; ++k)
                grads[blocks[g * 3 + 2].offset + k] += (*dpre[g])[k];
        }

        std::fill(dh.begin(), dh.end(), 0.0);
        for (int g = 0; g < 4; ++g)
            add_wt_vec(flat + blocks[g * 3 + 1].offset, dpre[g]->data(), hid, hid, dh.data());
        for (int k = 0; k < hid; ++k)
            dc[k] *= gf[k];
    }
}

} // namespace

void backward(const ModelParams& params, const Trace& trace, std::span<const double> out_grad,
              std::span<double> grads) {
    const ParamLayout layout = ParamLayout::build(params.spec);
    backward_core(params, layout, trace, out_grad, grads);
}

void adam_step(ModelParams& params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg) {
    const std::size_t n = params.flat.size();
    if (grads.size() != n)
        throw ShapeError("adam gradient has " + std::to_string(grads.size()) + " slots, expected " +
                         std::to_string(n));
    if (state.m.size() != n) {
        state.m.assign(n, 0.0);
        state.v.assign(n, 0.0);
        state.step = 0;
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < n; ++k) {
        state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * grads[k];
        state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * grads[k] * grads[k];
        const double mhat = state.m[k] / bc1;
        const double vhat = state.v[k] / bc2;
        params.flat[k] -= cfg.step_size * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
    ++params.version;
}

namespace {

void validate_train_config(const TrainConfig& cfg) {
    if (cfg.batch_size < 1)
        throw ConfigError("batch_size must be at least 1");
    if (cfg.max_epochs < 1)
        throw ConfigError("max_epochs must be at least 1");
    if (cfg.early_stop_patience < 0 || cfg.early_stop_patience >= cfg.max_epochs)
        throw ConfigError("early_stop_patience must be in [0, max_epochs)");
    if (cfg.adam.step_size <= 0.0 || cfg.adam.epsilon <= 0.0 || cfg.adam.beta1 < 0.0 ||
        cfg.adam.beta1 >= 1.0 || cfg.adam.beta2 < 0.0 || cfg.adam.beta2 >= 1.0)
        throw ConfigError("adam settings out of range");
    if (cfg.loss_exp.under <= 0.0 || cfg.loss_exp.over <= 0.0)
        throw ConfigError("loss exponents must be positive");
    if (!(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0))
        throw ConfigError("validation_fraction must lie in (0, 1)");
    if (cfg.output_cap_mm <= 0.0)
        throw ConfigError("output_cap_mm must be positive");
}

} // namespace

TrainResult train(std::span<const TrainSample> samples, std::span<const LayerSpec> specs,
                  const TrainConfig& cfg, std::uint64_t seed, Exec exec) {
    validate_train_config(cfg);
    if (samples.empty())
        throw ConfigError("training needs at least one sample");
    validate_specs(specs);
    const ParamLayout layout = ParamLayout::build(specs);

    ModelParams params = init_params(specs, seed);
    const std::size_t out_dim = params.output_dim();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        check_input_shape(specs[0], samples[i].input);
        if (samples[i].target.size() != out_dim)
            throw ShapeError("sample " + std::to_string(i) + " target has " +
                             std::to_string(samples[i].target.size()) + " entries, expected " +
                             std::to_string(out_dim));
    }

    // Chronological split: the tail of the sample list is held out.
    const std::size_t n = samples.size();
    std::size_t n_val =
        n >= 2 ? std::max<std::size_t>(
                     1, static_cast<std::size_t>(std::floor(cfg.validation_fraction * n)))
               : 0;
    const std::size_t n_train = n - n_val;
    std::vector<std::size_t> val_idx;
    if (n_val == 0) {
        val_idx.push_back(0); // single sample doubles as its own holdout
        n_val = 1;
    } else {
        for (std::size_t i = n_train; i < n; ++i)
            val_idx.push_back(i);
    }

    Rng shuffle_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(n_train);
    for (std::size_t i = 0; i < n_train; ++i)
        order[i] = i;

    AdamState adam;
    std::vector<double> acc, mean_grads(layout.total), val_losses(n_val);
    const double cap = cfg.output_cap_mm;

    TrainHistory history;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> best_flat = params.flat;
    int stall = 0;

    // Per-sample loss and gradient in mm space; non-finite outputs poison the
    // loss slot so the epoch check can fail without throwing inside a
    // parallel region.
    auto sample_loss = [&](std::size_t si, std::span<double> grad_out, double* loss_out) {
        const TrainSample& smp = samples[si];
        Trace trace;
        std::vector<double> raw;
        const bool ok = forward_core(params, layout, smp.input, raw, grad_out.empty() ? nullptr : &trace);
        std::vector<double> pred(raw.size());
        for (std::size_t j = 0; j < raw.size(); ++j)
            pred[j] = raw[j] * cap;
        if (!ok) {
            *loss_out = std::numeric_limits<double>::quiet_NaN();
            return;
        }
        *loss_out = peak_biased_loss(pred, smp.target, cfg.loss_exp);
        if (!grad_out.empty()) {
            std::vector<double> dpred(pred.size());
            peak_biased_grad_into(pred, smp.target, cfg.loss_exp, dpred);
            for (double& g : dpred)
                g *= cap;
            backward_core(params, layout, trace, dpred, grad_out);
        }
    };

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double train_loss_sum = 0.0;
        for (std::size_t lo = 0; lo < n_train; lo += cfg.batch_size) {
            const std::size_t hi = std::min(n_train, lo + cfg.batch_size);
            const std::size_t bn = hi - lo;
            blocked_sum(bn, layout.total + 1, kGradBlock, exec,
                        [&](std::size_t i, std::vector<double>& a) {
                            double loss = 0.0;
                            sample_loss(order[lo + i], std::span<double>(a.data(), layout.total),
                                        &loss);
                            a[layout.total] += loss;
                        },
                        acc);
            if (!std::isfinite(acc[layout.total]))
                throw NumericError("training diverged at epoch " + std::to_string(epoch));
            train_loss_sum += acc[layout.total];
            for (std::size_t k = 0; k < layout.total; ++k)
                mean_grads[k] = acc[k] / static_cast<double>(bn);
            adam_step(params, mean_grads, adam, cfg.adam);
        }
        const double train_loss = train_loss_sum / static_cast<double>(n_train);

        for_each_index(n_val, exec, [&](std::size_t i) {
            sample_loss(val_idx[i], {}, &val_losses[i]);
        });
        double val_sum = 0.0;
        for (double v : val_losses)
            val_sum += v;
        const double val_loss = val_sum / static_cast<double>(n_val);
        if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
            throw NumericError("training diverged at epoch " + std::to_string(epoch));

        history.train_loss.push_back(train_loss);
        history.val_loss.push_back(val_loss);
        history.epochs_run = epoch;

        if (val_loss < best_val) {
            best_val = val_loss;
            history.best_epoch = epoch;
            best_flat = params.flat;
            stall = 0;
        } else {
            ++stall;
        }
        if (stall >= cfg.early_stop_patience)
            break;
    }

    params.flat = std::move(best_flat);
    ++params.version;
    return {std::move(params), std::move(history)};
}

std::vector<std::vector<double>> predict(const ModelParams& params,
                                         std::span<const TrainSample> samples, double output_cap_mm,
                                         Exec exec) {
    validate_specs(params.spec);
    const ParamLayout layout = ParamLayout::build(params.spec);
    for (const auto& s : samples)
        check_input_shape(params.spec[0], s.input);
    std::vector<std::vector<double>> out(samples.size());
    std::vector<char> bad(samples.size(), 0);
    for_each_index(samples.size(), exec, [&](std::size_t i) {
        std::vector<double> raw;
        if (!forward_core(params, layout, samples[i].input, raw, nullptr))
            bad[i] = 1;
        for (double& v : raw)
            v *= output_cap_mm;
        out[i] = std::move(raw);
    });
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (bad[i])
            throw NumericError("prediction produced a non-finite value for sample " +
                               std::to_string(i));
    return out;
}

std::vector<double> ensemble_average(const std::vector<std::vector<double>>& predictions) {
    if (predictions.empty())
        throw ConfigError("ensemble_average needs at least one member");
    const std::size_t n = predictions[0].size();
    for (const auto& p : predictions)
        if (p.size() != n)
            throw ShapeError("ensemble members disagree on length");
    std::vector<double> mean(n, 0.0);
    for (const auto& p : predictions)
        for (std::size_t k = 0; k < n; ++k)
            mean[k] += p[k];
    const double inv = 1.0 / static_cast<double>(predictions.size());
    for (double& v : mean)
        v *= inv;
    return mean;
}

void save_checkpoint(const ModelParams& params, const TrainHistory& history, double output_cap_mm,
                     const std::string& path) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = "monsoon-bench-checkpoint";
    j["seed"] = params.seed;
    j["output_cap_mm"] = output_cap_mm;
    j["layers"] = nlohmann::json::array();
    for (const auto& s : params.spec)
        j["layers"].push_back({{"kind", to_string(s.kind)},
                               {"in", s.in_dim},
                               {"out", s.out_dim},
                               {"activation", to_string(s.activation)}});
    j["weights"] = params.flat;
    j["history"] = {{"train_loss", history.train_loss},
                    {"val_loss", history.val_loss},
                    {"best_epoch", history.best_epoch},
                    {"epochs_run", history.epochs_run}};

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out)
            throw DataError("cannot write checkpoint file " + path);
        out << j.dump(2) << '\n';
        if (!out)
            throw DataError("failed while writing checkpoint file " + path);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw DataError("cannot move checkpoint into place at " + path + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open checkpoint file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint " + path + " is not valid JSON: " + e.what());
    }
    try {
        if (!j.contains("format_version") || j["format_version"].get<int>() != 1)
            throw DataError("checkpoint " + path + " has an unsupported format version");
        Checkpoint ck;
        for (const auto& L : j.at("layers")) {
            LayerSpec s;
            s.kind = layer_kind_from_string(L.at("kind").get<std::string>());
            s.in_dim = L.at("in").get<int>();
            s.out_dim = L.at("out").get<int>();
            s.activation = activation_from_string(L.at("activation").get<std::string>());
            ck.params.spec.push_back(s);
        }
        const ParamLayout layout = ParamLayout::build(ck.params.spec);
        ck.params.flat = j.at("weights").get<std::vector<double>>();
        if (ck.params.flat.size() != layout.total)
            throw DataError("checkpoint " + path + " has " + std::to_string(ck.params.flat.size()) +
                            " weights, expected " + std::to_string(layout.total));
        ck.params.seed = j.value("seed", std::uint64_t{0});
        ck.output_cap_mm = j.value("output_cap_mm", 1.0);
        if (j.contains("history")) {
            const auto& h = j["history"];
            ck.history.train_loss = h.value("train_loss", std::vector<double>{});
            ck.history.val_loss = h.value("val_loss", std::vector<double>{});
            ck.history.best_epoch = h.value("best_epoch", 0);
            ck.history.epochs_run = h.value("epochs_run", 0);
        }
        return ck;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint " + path + " is malformed: " + e.what());
    }
}

} // namespace monsoon::nn
