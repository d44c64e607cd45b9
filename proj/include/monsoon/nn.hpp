#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "monsoon/loss.hpp"
#include "monsoon/parallel.hpp"
#include "monsoon/tensor.hpp"

namespace monsoon::nn {

enum class Activation { relu, sigmoid, tanh, identity };
enum class LayerKind { dense, lstm };

std::string to_string(Activation a);
std::string to_string(LayerKind k);
Activation activation_from_string(const std::string& s);
LayerKind layer_kind_from_string(const std::string& s);

// For dense layers `activation` is the output nonlinearity; an lstm layer uses
// the standard sigmoid gates / tanh cell internally and emits its final hidden
// state, so `activation` is ignored there. An lstm layer may only sit first in
// the chain; its in_dim is the per-timestep feature count and out_dim the
// hidden size.
struct LayerSpec {
    LayerKind kind = LayerKind::dense;
    int in_dim = 0;
    int out_dim = 0;
    Activation activation = Activation::identity;
};

LayerSpec dense(int in_dim, int out_dim, Activation act);
LayerSpec lstm(int feature_dim, int hidden_dim);

// Offsets of each parameter block inside the flat weight vector.
// dense: [W (out x in), b (out)]
// lstm:  [Wx, Wh, b] x 4 gates in the order input, forget, cell, output
struct ParamLayout {
    struct Block {
        std::size_t offset = 0;
        std::size_t size = 0;
    };
    std::vector<std::vector<Block>> layers;
    std::size_t total = 0;

    static ParamLayout build(std::span<const LayerSpec> specs);
};

struct ModelParams {
    std::vector<LayerSpec> spec;
    std::vector<double> flat; // layout per ParamLayout::build(spec)
    std::uint64_t seed = 0;
    std::uint64_t version = 0; // bumped on every in-place update; traces pin it

    std::size_t output_dim() const { return spec.empty() ? 0 : static_cast<std::size_t>(spec.back().out_dim); }
};

// Seeded init: dense weights uniform +-sqrt(6/(fan_in+fan_out)), lstm blocks
// uniform +-sqrt(1/hidden), biases zero.
ModelParams init_params(std::span<const LayerSpec> specs, std::uint64_t seed);

// Activation record of one forward pass, consumed by backward().
struct Trace {
    struct DenseTrace {
        std::vector<double> input;
        std::vector<double> pre;
        std::vector<double> out;
    };
    struct LstmTrace {
        std::size_t timesteps = 0;
        // per timestep, post-activation gate values and states
        std::vector<std::vector<double>> x, gi, gf, gc, go, cell, cell_tanh, hidden;
    };
    std::vector<DenseTrace> dense_steps;
    LstmTrace lstm_step;
    bool has_lstm = false;
    std::vector<double> output;
    const ModelParams* origin = nullptr;
    std::uint64_t origin_version = 0;
};

// Single-sample forward pass. Input is (timesteps x feature_dim) when the
// first layer is lstm, (1 x in_dim) otherwise. Throws ShapeError on a bad
// input shape and NumericError if any activation goes non-finite.
std::vector<double> forward(const ModelParams& params, const Tensor2& input);
Trace forward_trace(const ModelParams& params, const Tensor2& input);

// Accumulates (+=) parameter gradients for dLoss/dOutput into `grads`, which
// must have layout.total slots. The trace must come from forward_trace on the
// same, unmodified params; anything else is a usage error.
void backward(const ModelParams& params, const Trace& trace, std::span<const double> out_grad,
              std::span<double> grads);

struct AdamConfig {
    double step_size = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    std::vector<double> m, v;
    long long step = 0;
};

// Standard bias-corrected Adam update, elementwise over the flat vector.
void adam_step(ModelParams& params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg);

struct TrainConfig {
    int batch_size = 64;
    int max_epochs = 300;
    int early_stop_patience = 20;
    AdamConfig adam;
    LossExponents loss_exp;
    double validation_fraction = 0.1;
    // Scale applied to the head output before the loss; rainfall models emit
    // sigmoid units that are mapped back to mm so the loss keeps its physical
    // meaning. 1.0 leaves outputs untouched.
    double output_cap_mm = 1.0;
};

struct TrainSample {
    Tensor2 input;              // (T x F) for lstm chains, (1 x in_dim) for dense
    std::vector<double> target; // in loss space (mm)
};

struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    int best_epoch = 0;  // 1-based epoch with the lowest validation loss
    int epochs_run = 0;
};

struct TrainResult {
    ModelParams params; // weights restored from the best validation epoch
    TrainHistory history;
};

// Mini-batch Adam on the peak-biased loss with chronological validation split
// and early stopping. Fully deterministic for a fixed seed; gradient batch
// sums use a fixed blocking, so serial and parallel runs match bitwise.
TrainResult train(std::span<const TrainSample> samples, std::span<const LayerSpec> specs,
                  const TrainConfig& cfg, std::uint64_t seed, Exec exec = Exec::parallel);

// Per-sample prediction in loss space (output_cap applied), parallel across samples.
std::vector<std::vector<double>> predict(const ModelParams& params,
                                         std::span<const TrainSample> samples,
                                         double output_cap_mm, Exec exec = Exec::parallel);

// Elementwise arithmetic mean of k equal-length vectors.
std::vector<double> ensemble_average(const std::vector<std::vector<double>>& predictions);

// Versioned JSON checkpoint: layer specs, flat weights, seed, history.
void save_checkpoint(const ModelParams& params, const TrainHistory& history,
                     double output_cap_mm, const std::string& path);
struct Checkpoint {
    ModelParams params;
    TrainHistory history;
    double output_cap_mm = 1.0;
};
Checkpoint load_checkpoint(const std::string& path);

} // namespace monsoon::nn
