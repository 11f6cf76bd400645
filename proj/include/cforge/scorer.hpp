#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <utility>
#include <vector>

#include "cforge/matrix.hpp"

namespace cforge {

// Weights of the two-layer relu perceptron mapping a concatenated
// verb+object feature vector to one logit per verb class.
struct ScorerParams {
    std::size_t d_v = 0;
    std::size_t d_o = 0;
    std::size_t hidden = 0;
    std::size_t n_verbs = 0;
    Matrix w1;               // hidden x (d_v + d_o)
    std::vector<double> b1;  // hidden
    Matrix w2;               // n_verbs x hidden
    std::vector<double> b2;  // n_verbs

    std::size_t input_dim() const { return d_v + d_o; }
    std::size_t n_params() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

    // Flat coordinate view in w1, b1, w2, b2 order.
    double& param(std::size_t flat);
    double param(std::size_t flat) const;

    friend bool operator==(const ScorerParams&, const ScorerParams&) = default;
};

// Per-batch cache for backpropagation.
struct ForwardTape {
    Matrix inputs;      // batch x input_dim
    Matrix pre_hidden;  // batch x hidden, before relu
    Matrix hidden;      // batch x hidden, after relu
};

struct OptimState {
    double learning_rate = 0.01;
    double momentum = 0.9;
    ScorerParams velocity;  // zero-initialized, shaped like the params
};

// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
ScorerParams init_params(std::size_t d_v, std::size_t d_o, std::size_t hidden, std::size_t n_verbs,
                         std::uint64_t seed);

OptimState init_optim(const ScorerParams& params, double learning_rate, double momentum);

// logits = w2 * relu(w1 * x + b1) + b2, one row per input row.
Matrix forward(const ScorerParams& params, const Matrix& features, ForwardTape* tape = nullptr);

// Exact analytic parameter gradients for the given upstream dloss/dlogits.
ScorerParams backward(const ScorerParams& params, const ForwardTape& tape,
                      const Matrix& dloss_dlogits);

// velocity <- momentum * velocity - lr * grad; params <- params + velocity.
void sgd_step(ScorerParams& params, const ScorerParams& grads, OptimState& opt);

// Maps a batch of logits to (loss, dloss/dlogits).
using LossFn = std::function<std::pair<double, Matrix>(const Matrix& logits)>;

// Max relative error between analytic gradients and central finite
// differences (step 1e-6) over the n_coords parameter coordinates with the
// largest analytic magnitude, where the difference quotient is above its
// cancellation noise floor.
double gradient_check(const ScorerParams& params, const Matrix& features, const LossFn& loss_fn,
                      std::size_t n_coords = 120);

// Shifts b1 until no pre-activation of this batch sits within `margin`
// of the relu kink, keeping finite-difference checks well-defined.
void nudge_from_relu_kink(ScorerParams& params, const Matrix& features, double margin = 1e-3);

// Binary little-endian checkpoint of params + optimizer state; round-trips
// bit-exactly.
void save_checkpoint(const ScorerParams& params, const OptimState& opt,
                     const std::filesystem::path& path);
std::pair<ScorerParams, OptimState> load_checkpoint(const std::filesystem::path& path);

}  // namespace cforge
