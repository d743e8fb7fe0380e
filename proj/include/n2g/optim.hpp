#pragma once

#include "n2g/nn.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace n2g {

enum class LossKind : std::uint8_t { cross_entropy, binary_cross_entropy };

/// Loss with separate L2 coefficients: `lambda` for conv and FC weights,
/// `lambda_att` for the attention bank. Biases are never regularized.
struct LossConfig {
    double lambda = 0.0;
    double lambda_att = 0.0;
    LossKind task = LossKind::cross_entropy;

    /// False when both coefficients are set and lambda_att < lambda.
    bool attention_dominates() const { return lambda == 0.0 || lambda_att == 0.0 || lambda_att >= lambda; }
};

template <typename T>
struct LossResult {
    double task_loss = 0.0;
    double regularizer = 0.0;
    double total = 0.0;
    /// d(task_loss)/d(logits), batch x classes.
    std::vector<T> dlogits;
};

/// Task loss averaged over the batch plus both L2 terms. Cross-entropy takes one
/// class id per sample; binary cross-entropy takes `classes` 0/1 flags per sample
/// and averages over samples and classes.
template <typename T>
LossResult<T> total_loss(std::span<const T> logits, std::size_t batch, std::size_t classes,
                         std::span<const std::int32_t> targets, const ModelParams<T>& params, const LossConfig& cfg);

template <typename T>
double regularizer(const ModelParams<T>& params, const LossConfig& cfg);

/// Adds the L2 gradient (2 * lambda * w, 2 * lambda_att * w_att) into `grads`.
template <typename T>
void add_regularizer_grad(const ModelParams<T>& params, const LossConfig& cfg, ModelParams<T>& grads);

enum class OptimizerKind : std::uint8_t { rmsprop, nadam };
std::string_view to_string(OptimizerKind);
OptimizerKind parse_optimizer(std::string_view);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::rmsprop;
    double lr = 0.008;
    double rho = 0.9;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    /// Decoupled decay on conv/FC weights only: w -= lr * weight_decay * w.
    double weight_decay = 0.0;
};

template <typename T>
struct OptimizerState {
    OptimizerConfig cfg;
    std::uint64_t step = 0;
    ModelParams<T> first;   // Nadam first moment (unused by RMSprop)
    ModelParams<T> second;  // squared-gradient average

    OptimizerState() = default;
    OptimizerState(const OptimizerConfig& c, const ModelParams<T>& like)
        : cfg(c), first(like.zeros_like()), second(like.zeros_like()) {}
};

/// v = rho v + (1 - rho) g^2;  w -= lr g / (sqrt(v) + eps).
/// Throws std::domain_error on a non-finite gradient, leaving state untouched.
template <typename T>
void rmsprop_step(OptimizerState<T>& state, ModelParams<T>& params, const ModelParams<T>& grads);

/// Nesterov-accelerated Adam with bias correction:
/// m_hat = b1 m / (1 - b1^(t+1)) + (1 - b1) g / (1 - b1^t),  v_hat = v / (1 - b2^t).
template <typename T>
void nadam_step(OptimizerState<T>& state, ModelParams<T>& params, const ModelParams<T>& grads);

/// Dispatches on state.cfg.kind.
template <typename T>
void optimizer_step(OptimizerState<T>& state, ModelParams<T>& params, const ModelParams<T>& grads);

} // namespace n2g
