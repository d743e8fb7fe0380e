#include "n2g/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace n2g {

template <typename T>
LossResult<T> total_loss(std::span<const T> logits, std::size_t batch, std::size_t classes,
                         std::span<const std::int32_t> targets, const ModelParams<T>& params, const LossConfig& cfg) {
    if (logits.size() != batch * classes) throw std::invalid_argument("total_loss: logits shape mismatch");
    if (batch == 0) throw std::invalid_argument("total_loss: empty batch");
    for (T v : logits)
        if (std::isnan(v)) throw std::domain_error("total_loss: NaN logit");

    LossResult<T> r;
    r.dlogits.assign(batch * classes, T(0));
    double sum = 0.0;
    if (cfg.task == LossKind::cross_entropy) {
        if (targets.size() != batch) throw std::invalid_argument("total_loss: expected one class id per sample");
        const double inv_b = 1.0 / static_cast<double>(batch);
        for (std::size_t s = 0; s < batch; ++s) {
            const auto y = targets[s];
            if (y < 0 || static_cast<std::size_t>(y) >= classes)
                throw std::out_of_range("total_loss: label " + std::to_string(y) + " outside [0, " +
                                        std::to_string(classes) + ")");
            const T* z = logits.data() + s * classes;
            const double top = static_cast<double>(*std::max_element(z, z + classes));
            double denom = 0.0;
            for (std::size_t c = 0; c < classes; ++c) denom += std::exp(static_cast<double>(z[c]) - top);
            const double log_denom = std::log(denom);
            sum += log_denom - (static_cast<double>(z[y]) - top);
            T* dz = r.dlogits.data() + s * classes;
            for (std::size_t c = 0; c < classes; ++c) {
                const double p = std::exp(static_cast<double>(z[c]) - top - log_denom);
                dz[c] = static_cast<T>((p - (static_cast<std::size_t>(y) == c ? 1.0 : 0.0)) * inv_b);
            }
        }
        r.task_loss = sum * inv_b;
    } else {
        if (targets.size() != batch * classes)
            throw std::invalid_argument("total_loss: expected classes flags per sample");
        const double inv_n = 1.0 / static_cast<double>(batch * classes);
        for (std::size_t i = 0; i < batch * classes; ++i) {
            const auto t = targets[i];
            if (t != 0 && t != 1) throw std::out_of_range("total_loss: multi-label flag must be 0 or 1");
            const double x = static_cast<double>(logits[i]);
            const double y = static_cast<double>(t);
            sum += std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
            const double p = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
            r.dlogits[i] = static_cast<T>((p - y) * inv_n);
        }
        r.task_loss = sum * inv_n;
    }
    r.regularizer = regularizer(params, cfg);
    r.total = r.task_loss + r.regularizer;
    return r;
}

template <typename T>
double regularizer(const ModelParams<T>& params, const LossConfig& cfg) {
    double weights = 0.0;
    double attention = 0.0;
    params.for_each_tensor([&](std::string_view, ParamRole role, auto values) {
        if (role == ParamRole::bias) return;
        double sq = 0.0;
        for (T v : values) sq += static_cast<double>(v) * static_cast<double>(v);
        (role == ParamRole::attention ? attention : weights) += sq;
    });
    return cfg.lambda * weights + cfg.lambda_att * attention;
}

template <typename T>
void add_regularizer_grad(const ModelParams<T>& params, const LossConfig& cfg, ModelParams<T>& grads) {
    auto add = [](const std::vector<T>& w, std::vector<T>& g, double coef) {
        if (coef == 0.0) return;
        const T scale = static_cast<T>(2.0 * coef);
        for (std::size_t i = 0; i < w.size(); ++i) g[i] += scale * w[i];
    };
    add(params.conv_weight, grads.conv_weight, cfg.lambda);
    add(params.fc1_weight, grads.fc1_weight, cfg.lambda);
    add(params.fc2_weight, grads.fc2_weight, cfg.lambda);
    add(params.attention, grads.attention, cfg.lambda_att);
}

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::rmsprop ? "rmsprop" : "nadam"; }

OptimizerKind parse_optimizer(std::string_view s) {
    if (s == "rmsprop") return OptimizerKind::rmsprop;
    if (s == "nadam") return OptimizerKind::nadam;
    throw std::invalid_argument("unknown optimizer '" + std::string(s) + "' (rmsprop|nadam)");
}

namespace {

template <typename T>
void require_finite(const ModelParams<T>& grads) {
    grads.for_each_tensor([](std::string_view name, ParamRole, auto values) {
        for (T v : values)
            if (!std::isfinite(v))
                throw std::domain_error("optimizer step rejected: non-finite gradient in " + std::string(name));
    });
}

// Walks params, gradients and both moment buffers tensor by tensor.
template <typename T, typename Fn>
void zip_tensors(ModelParams<T>& p, const ModelParams<T>& g, ModelParams<T>& m, ModelParams<T>& v, Fn&& fn) {
    fn(p.conv_weight, g.conv_weight, m.conv_weight, v.conv_weight, ParamRole::weight);
    fn(p.conv_bias, g.conv_bias, m.conv_bias, v.conv_bias, ParamRole::bias);
    fn(p.attention, g.attention, m.attention, v.attention, ParamRole::attention);
    fn(p.fc1_weight, g.fc1_weight, m.fc1_weight, v.fc1_weight, ParamRole::weight);
    fn(p.fc1_bias, g.fc1_bias, m.fc1_bias, v.fc1_bias, ParamRole::bias);
    fn(p.fc2_weight, g.fc2_weight, m.fc2_weight, v.fc2_weight, ParamRole::weight);
    fn(p.fc2_bias, g.fc2_bias, m.fc2_bias, v.fc2_bias, ParamRole::bias);
}

template <typename T>
void check_shapes(const OptimizerState<T>& state, const ModelParams<T>& params, const ModelParams<T>& grads) {
    if (params.parameter_count() != grads.parameter_count() ||
        state.second.parameter_count() != params.parameter_count() ||
        params.fc1_weight.size() != grads.fc1_weight.size())
        throw std::invalid_argument("optimizer step: parameter, gradient and state shapes differ");
}

} // namespace

template <typename T>
void rmsprop_step(OptimizerState<T>& state, ModelParams<T>& params, const ModelParams<T>& grads) {
    check_shapes(state, params, grads);
    require_finite(grads);
    const auto& c = state.cfg;
    const T rho = static_cast<T>(c.rho);
    const T one_minus_rho = static_cast<T>(1.0 - c.rho);
    const T lr = static_cast<T>(c.lr);
    const T eps = static_cast<T>(c.eps);
    const T decay = static_cast<T>(c.lr * c.weight_decay);
    zip_tensors(params, grads, state.first, state.second,
                [&](std::vector<T>& w, const std::vector<T>& g, std::vector<T>&, std::vector<T>& v, ParamRole role) {
                    const bool decays = role == ParamRole::weight && c.weight_decay != 0.0;
                    for (std::size_t i = 0; i < w.size(); ++i) {
                        v[i] = rho * v[i] + one_minus_rho * g[i] * g[i];
                        if (decays) w[i] -= decay * w[i];
                        w[i] -= lr * g[i] / (std::sqrt(v[i]) + eps);
                    }
                });
    ++state.step;
}

template <typename T>
void nadam_step(OptimizerState<T>& state, ModelParams<T>& params, const ModelParams<T>& grads) {
    check_shapes(state, params, grads);
    require_finite(grads);
    const auto& c = state.cfg;
    const double t = static_cast<double>(state.step + 1);
    const T b1 = static_cast<T>(c.beta1);
    const T b2 = static_cast<T>(c.beta2);
    const T m_next_corr = static_cast<T>(c.beta1 / (1.0 - std::pow(c.beta1, t + 1.0)));
    const T g_corr = static_cast<T>((1.0 - c.beta1) / (1.0 - std::pow(c.beta1, t)));
    const T v_corr = static_cast<T>(1.0 / (1.0 - std::pow(c.beta2, t)));
    const T lr = static_cast<T>(c.lr);
    const T eps = static_cast<T>(c.eps);
    const T decay = static_cast<T>(c.lr * c.weight_decay);
    zip_tensors(params, grads, state.first, state.second,
                [&](std::vector<T>& w, const std::vector<T>& g, std::vector<T>& m, std::vector<T>& v, ParamRole role) {
                    const bool decays = role == ParamRole::weight && c.weight_decay != 0.0;
                    for (std::size_t i = 0; i < w.size(); ++i) {
                        m[i] = b1 * m[i] + (T(1) - b1) * g[i];
                        v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
                        const T m_hat = m_next_corr * m[i] + g_corr * g[i];
                        const T v_hat = v[i] * v_corr;
                        if (decays) w[i] -= decay * w[i];
                        w[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
                    }
                });
    ++state.step;
}

template <typename T>
void optimizer_step(OptimizerState<T>& state, ModelParams<T>& params, const ModelParams<T>& grads) {
    if (state.cfg.kind == OptimizerKind::rmsprop)
        rmsprop_step(state, params, grads);
    else
        nadam_step(state, params, grads);
}

#define N2G_INSTANTIATE(T)                                                                                   \
    template LossResult<T> total_loss<T>(std::span<const T>, std::size_t, std::size_t,                       \
                                         std::span<const std::int32_t>, const ModelParams<T>&,               \
                                         const LossConfig&);                                                 \
    template double regularizer<T>(const ModelParams<T>&, const LossConfig&);                                \
    template void add_regularizer_grad<T>(const ModelParams<T>&, const LossConfig&, ModelParams<T>&);        \
    template void rmsprop_step<T>(OptimizerState<T>&, ModelParams<T>&, const ModelParams<T>&);               \
    template void nadam_step<T>(OptimizerState<T>&, ModelParams<T>&, const ModelParams<T>&);                 \
    template void optimizer_step<T>(OptimizerState<T>&, ModelParams<T>&, const ModelParams<T>&);

N2G_INSTANTIATE(float)
N2G_INSTANTIATE(double)
#undef N2G_INSTANTIATE

} // namespace n2g
