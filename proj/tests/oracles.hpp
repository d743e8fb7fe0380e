#pragma once

// Independent reference implementations used by the unit and acceptance tests.
// Nothing here calls into the library code it is checking.

#include "n2g/graph.hpp"
#include "n2g/nn.hpp"
#include "n2g/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

namespace oracle {

using n2g::Edge;
using n2g::NodeId;

inline std::vector<Edge> random_edges(NodeId n, std::size_t m, n2g::Rng& rng) {
    std::vector<Edge> edges;
    if (n == 0) return edges;
    std::uniform_int_distribution<NodeId> pick(0, n - 1);
    for (std::size_t i = 0; i < m; ++i) edges.emplace_back(pick(rng), pick(rng));
    return edges;
}

inline n2g::FeatureMatrix random_features(std::size_t n, std::size_t f, n2g::Rng& rng) {
    n2g::FeatureMatrix x(n, f);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    for (auto& v : x.values()) v = u(rng);
    return x;
}

using Dense = std::vector<std::vector<bool>>;

inline Dense dense_adjacency(NodeId n, const std::vector<Edge>& edges) {
    Dense a(n, std::vector<bool>(n, false));
    for (auto [u, v] : edges) {
        if (u == v) continue;
        a[u][v] = true;
        a[v][u] = true;
    }
    return a;
}

inline std::uint32_t dense_degree(const Dense& a, NodeId v) {
    return static_cast<std::uint32_t>(std::count(a[v].begin(), a[v].end(), true));
}

/// Nodes at BFS depth exactly 1 and exactly 2 from v.
inline std::pair<std::vector<NodeId>, std::vector<NodeId>> bfs_frontiers(const Dense& a, NodeId v) {
    const NodeId n = static_cast<NodeId>(a.size());
    std::vector<int> depth(n, -1);
    depth[v] = 0;
    std::vector<NodeId> queue{v};
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const NodeId u = queue[head];
        if (depth[u] == 2) continue;
        for (NodeId w = 0; w < n; ++w) {
            if (a[u][w] && depth[w] < 0) {
                depth[w] = depth[u] + 1;
                queue.push_back(w);
            }
        }
    }
    std::pair<std::vector<NodeId>, std::vector<NodeId>> out;
    for (NodeId w = 0; w < n; ++w) {
        if (depth[w] == 1) out.first.push_back(w);
        if (depth[w] == 2) out.second.push_back(w);
    }
    return out;
}

/// Both neighbor sets materialized, each sorted by (degree desc, id asc),
/// concatenated, then cut to k.
inline std::vector<NodeId> rank(const Dense& a, NodeId v, std::uint32_t k, bool second_order = true) {
    auto [n1, n2] = bfs_frontiers(a, v);
    auto by_degree = [&](NodeId x, NodeId y) {
        const auto dx = dense_degree(a, x);
        const auto dy = dense_degree(a, y);
        return dx != dy ? dx > dy : x < y;
    };
    std::sort(n1.begin(), n1.end(), by_degree);
    std::sort(n2.begin(), n2.end(), by_degree);
    std::vector<NodeId> order = n1;
    if (second_order) order.insert(order.end(), n2.begin(), n2.end());
    if (order.size() > k) order.resize(k);
    return order;
}

/// Dense fusion: theta * central broadcast + (1 - theta) * neighbor rows, zero rows past the order.
template <typename T>
std::vector<T> fused_grid(const n2g::FeatureMatrix& x, const std::vector<NodeId>& order, NodeId v, std::uint32_t k,
                          double theta_bias) {
    const std::size_t f = x.cols();
    const T theta = static_cast<T>(theta_bias);
    const T rest = T(1) - theta;
    std::vector<T> g(k * f);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t c = 0; c < f; ++c) {
            const T neighbor = j < order.size() ? static_cast<T>(x(order[j], c)) : T(0);
            g[j * f + c] = theta * static_cast<T>(x(v, c)) + rest * neighbor;
        }
    }
    return g;
}

/// Straight-line network forward in double precision. Dropout scales, when
/// given, are per-sample vectors (conv: L*f, hidden: d_hidden).
inline std::vector<double> forward(const n2g::ModelParams<double>& p, const std::vector<double>& grids,
                                   std::size_t batch, const std::vector<std::vector<double>>* conv_scale = nullptr,
                                   const std::vector<std::vector<double>>* hidden_scale = nullptr) {
    const std::size_t k = p.k, f = p.f, n_ker = p.cfg.n_ker, L = k - n_ker + 1, H = p.cfg.hidden, C = p.classes;
    const bool per_channel = p.cfg.per_channel_kernel;
    std::vector<double> att(L, 0.0);
    for (std::size_t j = 0; j < L; ++j) {
        double sum = 0.0;
        for (std::size_t h = 0; h < p.cfg.heads; ++h) sum += p.attention[h * L + j];
        att[j] = p.cfg.heads ? sum / static_cast<double>(p.cfg.heads) : 0.0;
    }
    std::vector<double> logits(batch * C);
    for (std::size_t s = 0; s < batch; ++s) {
        const double* G = grids.data() + s * k * f;
        std::vector<double> z(L * f);
        for (std::size_t j = 0; j < L; ++j) {
            for (std::size_t c = 0; c < f; ++c) {
                double x = p.conv_bias[per_channel ? c : 0];
                for (std::size_t t = 0; t < n_ker; ++t)
                    x += p.conv_weight[per_channel ? t * f + c : t] * G[(j + t) * f + c];
                double xp = x + att[j] * x;
                if (p.cfg.conv_activation == n2g::Activation::relu) xp = std::max(xp, 0.0);
                if (conv_scale) xp *= (*conv_scale)[s][j * f + c];
                z[j * f + c] = xp;
            }
        }
        std::vector<double> hidden(H);
        for (std::size_t d = 0; d < H; ++d) {
            double acc = p.fc1_bias[d];
            for (std::size_t i = 0; i < L * f; ++i) acc += z[i] * p.fc1_weight[i * H + d];
            acc = std::max(acc, 0.0);
            if (hidden_scale) acc *= (*hidden_scale)[s][d];
            hidden[d] = acc;
        }
        for (std::size_t c = 0; c < C; ++c) {
            double acc = p.fc2_bias[c];
            for (std::size_t d = 0; d < H; ++d) acc += hidden[d] * p.fc2_weight[d * C + c];
            logits[s * C + c] = acc;
        }
    }
    return logits;
}

/// Fills every tensor (attention and biases included) with uniform values.
template <typename T>
void randomize(n2g::ModelParams<T>& p, n2g::Rng& rng, double scale = 0.5) {
    std::uniform_real_distribution<double> u(-scale, scale);
    p.for_each_tensor([&](auto, n2g::ParamRole, auto values) {
        for (auto& v : values) v = static_cast<T>(u(rng));
    });
}

} // namespace oracle
