#pragma once

// Central-difference gradient checking on small random network instances.

#include "oracles.hpp"

#include "n2g/nn.hpp"
#include "n2g/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace gradcheck {

using namespace n2g;

inline std::vector<double> random_grids(std::size_t batch, std::size_t k, std::size_t f, Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> g(batch * k * f);
    for (auto& v : g) v = u(rng);
    return g;
}

inline std::vector<std::int32_t> random_targets(TaskHead head, std::size_t batch, std::size_t classes, Rng& rng) {
    std::vector<std::int32_t> t(head == TaskHead::softmax ? batch : batch * classes);
    for (auto& v : t) v = static_cast<std::int32_t>(rng() % (head == TaskHead::softmax ? classes : 2));
    return t;
}

template <typename T>
std::vector<std::span<T>> tensors(ModelParams<T>& p) {
    std::vector<std::span<T>> out;
    p.for_each_tensor([&](auto, ParamRole, std::span<T> s) { out.push_back(s); });
    return out;
}

inline std::vector<std::string> tensor_names(const ModelParams<double>& p) {
    std::vector<std::string> out;
    p.for_each_tensor([&](std::string_view name, ParamRole, auto) { out.emplace_back(name); });
    return out;
}

struct Instance {
    ModelParams<double> params;
    std::vector<double> grids;
    std::vector<std::int32_t> targets;
    std::vector<std::uint64_t> ids;
    std::size_t batch = 1;
    LossConfig loss;
};

inline Instance make_instance(const NetConfig& cfg, std::uint32_t k, std::uint32_t f, std::uint32_t classes,
                       std::size_t batch, std::uint64_t seed) {
    Rng rng(seed);
    Instance in;
    in.params = init_params<double>(cfg, k, f, classes, rng);
    oracle::randomize(in.params, rng);
    in.grids = random_grids(batch, k, f, rng);
    in.targets = random_targets(cfg.head, batch, classes, rng);
    in.ids.resize(batch);
    std::iota(in.ids.begin(), in.ids.end(), std::uint64_t{100});
    in.batch = batch;
    in.loss.lambda = 0.003;
    in.loss.lambda_att = 0.02;
    in.loss.task = cfg.head == TaskHead::sigmoid ? LossKind::binary_cross_entropy : LossKind::cross_entropy;
    return in;
}

inline double objective(const Instance& in, const ModelParams<double>& p, const DropoutPlan& plan) {
    ForwardCache<double> cache;
    forward(p, std::span<const double>(in.grids), in.batch, Mode::train, &plan, cache);
    return total_loss<double>(cache.logits, in.batch, p.classes, in.targets, p, in.loss).total;
}

/// Largest per-element relative error between analytic and central-difference gradients.
inline double gradient_error(const Instance& in, std::string* worst = nullptr) {
    const DropoutPlan plan{42, 3, in.ids};
    ForwardCache<double> cache;
    forward(in.params, std::span<const double>(in.grids), in.batch, Mode::train, &plan, cache);
    const auto loss = total_loss<double>(cache.logits, in.batch, in.params.classes, in.targets, in.params, in.loss);
    ModelParams<double> grads = backward(in.params, cache, std::span<const double>(loss.dlogits));
    add_regularizer_grad(in.params, in.loss, grads);

    ModelParams<double> p = in.params;
    auto ps = tensors(p);
    auto gs = tensors(grads);
    const auto names = tensor_names(p);
    const double eps = 1e-5;
    double max_err = 0.0;
    for (std::size_t t = 0; t < ps.size(); ++t) {
        for (std::size_t i = 0; i < ps[t].size(); ++i) {
            const double orig = ps[t][i];
            ps[t][i] = orig + eps;
            const double up = objective(in, p, plan);
            ps[t][i] = orig - eps;
            const double down = objective(in, p, plan);
            ps[t][i] = orig;
            const double numeric = (up - down) / (2 * eps);
            const double analytic = gs[t][i];
            const double err = std::abs(numeric - analytic) / std::max({1e-6, std::abs(numeric), std::abs(analytic)});
            if (err > max_err) {
                max_err = err;
                if (worst) *worst = names[t] + "[" + std::to_string(i) + "]";
            }
        }
    }
    return max_err;
}

} // namespace gradcheck
