#include "n2g/grid_mapper.hpp"

#include "n2g/detail/binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <stdexcept>
#include <string>

namespace n2g {

void MapperConfig::validate() const {
    if (k < 1) throw std::invalid_argument("grid height k must be at least 1");
    if (!(theta_bias >= 0.0 && theta_bias <= 1.0))
        throw std::invalid_argument("theta_bias must lie in [0, 1], got " + std::to_string(theta_bias));
}

std::uint32_t label_arity(const Labels& labels) {
    if (labels.empty()) return 0;
    return labels.kind == LabelKind::single ? 1u : labels.num_classes;
}

template <typename T>
GridSample<T> GridSet<T>::sample(std::size_t i) const {
    GridSample<T> s;
    s.node_id = node_ids.at(i);
    s.k = k;
    s.f = f;
    auto gr = grid(i);
    s.grid.assign(gr.begin(), gr.end());
    auto lb = label(i);
    s.label.assign(lb.begin(), lb.end());
    return s;
}

std::vector<NodeId> rank_neighbors(const Graph& g, NodeId v, std::uint32_t k, bool use_second_order) {
    if (k < 1) throw std::invalid_argument("grid height k must be at least 1");
    const auto offsets = g.offsets();
    const auto n1 = g.neighbors(v);
    auto ranks_before = [offsets](NodeId a, NodeId b) {
        const auto da = offsets[a + 1] - offsets[a];
        const auto db = offsets[b + 1] - offsets[b];
        return da != db ? da > db : a < b;
    };

    std::vector<NodeId> order(n1.begin(), n1.end());
    if (order.size() >= k) {
        std::partial_sort(order.begin(), order.begin() + k, order.end(), ranks_before);
        order.resize(k);
        return order;
    }
    std::sort(order.begin(), order.end(), ranks_before);
    if (!use_second_order) return order;

    std::vector<NodeId> two_hop;
    for (NodeId u : n1)
        for (NodeId w : g.neighbors(u))
            if (w != v && !std::binary_search(n1.begin(), n1.end(), w)) two_hop.push_back(w);
    std::sort(two_hop.begin(), two_hop.end());
    two_hop.erase(std::unique(two_hop.begin(), two_hop.end()), two_hop.end());

    const std::size_t room = k - order.size();
    if (two_hop.size() > room) {
        std::partial_sort(two_hop.begin(), two_hop.begin() + static_cast<std::ptrdiff_t>(room), two_hop.end(),
                          ranks_before);
        two_hop.resize(room);
    } else {
        std::sort(two_hop.begin(), two_hop.end(), ranks_before);
    }
    order.insert(order.end(), two_hop.begin(), two_hop.end());
    return order;
}

template <typename T>
std::vector<T> build_neighbor_grid(const Graph& g, std::span<const NodeId> order, std::uint32_t k) {
    if (order.size() > k)
        throw std::invalid_argument("neighbor order has " + std::to_string(order.size()) + " entries, grid holds " +
                                    std::to_string(k));
    const std::size_t f = g.feature_dim();
    std::vector<T> grid(static_cast<std::size_t>(k) * f, T(0));
    for (std::size_t i = 0; i < order.size(); ++i) {
        auto src = g.features().row(order[i]);
        std::transform(src.begin(), src.end(), grid.begin() + static_cast<std::ptrdiff_t>(i * f),
                       [](float x) { return static_cast<T>(x); });
    }
    return grid;
}

template <typename T>
std::vector<T> central_fuse(std::span<const T> neighbor_grid, std::span<const float> central, double theta_bias) {
    const std::size_t f = central.size();
    if (f == 0 || neighbor_grid.size() % f != 0)
        throw std::invalid_argument("grid size is not a multiple of the central feature length");
    if (!(theta_bias >= 0.0 && theta_bias <= 1.0)) throw std::invalid_argument("theta_bias must lie in [0, 1]");
    const T theta = static_cast<T>(theta_bias);
    const T rest = T(1) - theta;
    std::vector<T> out(neighbor_grid.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const T c = static_cast<T>(central[i % f]);
        const T n = neighbor_grid[i];
        if (!std::isfinite(c) || !std::isfinite(n))
            throw std::domain_error("central_fuse: non-finite input at element " + std::to_string(i));
        out[i] = theta * c + rest * n;
    }
    return out;
}

namespace {

// Fused equivalent of central_fuse(build_neighbor_grid(rank_neighbors(...))),
// written straight into the output slot.
template <typename T>
void map_into(const Graph& g, NodeId v, const MapperConfig& cfg, std::span<T> out) {
    const auto order = rank_neighbors(g, v, cfg.k, cfg.use_second_order);
    const std::size_t f = g.feature_dim();
    const T theta = static_cast<T>(cfg.theta_bias);
    const T rest = T(1) - theta;
    const auto central = g.features().row(v);
    for (std::size_t i = 0; i < cfg.k; ++i) {
        T* row = out.data() + i * f;
        if (i < order.size()) {
            const auto src = g.features().row(order[i]);
            for (std::size_t c = 0; c < f; ++c)
                row[c] = theta * static_cast<T>(central[c]) + rest * static_cast<T>(src[c]);
        } else {
            for (std::size_t c = 0; c < f; ++c) row[c] = theta * static_cast<T>(central[c]) + rest * T(0);
        }
    }
    for (T x : out)
        if (!std::isfinite(x)) throw std::domain_error("map_node: non-finite grid value for node " + std::to_string(v));
}

template <typename T>
GridSet<T> allocate_set(const Graph& g, std::span<const NodeId> nodes, const MapperConfig& cfg) {
    cfg.validate();
    GridSet<T> set;
    set.k = cfg.k;
    set.f = g.feature_dim();
    set.label_arity = label_arity(g.labels());
    set.node_ids.assign(nodes.begin(), nodes.end());
    set.grids.resize(nodes.size() * set.grid_size());
    set.labels.resize(nodes.size() * set.label_arity);
    const Labels& labels = g.labels();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const NodeId v = nodes[i];
        if (v >= g.node_count()) throw std::out_of_range("map_all: node id " + std::to_string(v) + " out of range");
        if (set.label_arity == 0) continue;
        auto* dst = set.labels.data() + i * set.label_arity;
        if (labels.kind == LabelKind::single) {
            dst[0] = labels.classes[v];
        } else {
            for (std::uint32_t c = 0; c < set.label_arity; ++c)
                dst[c] = labels.flags[static_cast<std::size_t>(v) * labels.num_classes + c];
        }
    }
    return set;
}

} // namespace

template <typename T>
GridSample<T> map_node(const Graph& g, NodeId v, const MapperConfig& cfg) {
    const NodeId one[] = {v};
    return map_all_serial<T>(g, one, cfg).sample(0);
}

template <typename T>
GridSet<T> map_all_serial(const Graph& g, std::span<const NodeId> nodes, const MapperConfig& cfg) {
    GridSet<T> set = allocate_set<T>(g, nodes, cfg);
    const std::size_t stride = set.grid_size();
    for (std::size_t i = 0; i < nodes.size(); ++i)
        map_into<T>(g, nodes[i], cfg, std::span<T>(set.grids.data() + i * stride, stride));
    return set;
}

template <typename T>
GridSet<T> map_all(const Graph& g, std::span<const NodeId> nodes, const MapperConfig& cfg) {
    GridSet<T> set = allocate_set<T>(g, nodes, cfg);
    const std::size_t stride = set.grid_size();
    const auto n = static_cast<std::int64_t>(nodes.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            map_into<T>(g, nodes[i], cfg, std::span<T>(set.grids.data() + i * stride, stride));
        } catch (...) {
#pragma omp critical(n2g_map_all_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return set;
}

void write_grid_cache(const std::filesystem::path& path, const GridSet<float>& grids) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open grid cache for writing: " + path.string());
    out.write("N2G1", 4);
    detail::write_le<std::uint32_t>(out, grids.k);
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(grids.f));
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(grids.size()));
    detail::write_le<std::uint32_t>(out, grids.label_arity);
    for (std::size_t i = 0; i < grids.size(); ++i) {
        detail::write_le<std::uint32_t>(out, grids.node_ids[i]);
        auto lb = grids.label(i);
        detail::write_le_array(out, lb.data(), lb.size());
        auto gr = grids.grid(i);
        detail::write_le_array(out, gr.data(), gr.size());
    }
    if (!out) throw std::runtime_error("failed writing grid cache: " + path.string());
}

GridSet<float> read_grid_cache(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open grid cache: " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::string(magic, 4) != "N2G1")
        throw std::runtime_error("not a grid cache file (bad magic): " + path.string());
    GridSet<float> set;
    set.k = detail::read_le<std::uint32_t>(in, "k");
    set.f = detail::read_le<std::uint32_t>(in, "f");
    const auto count = detail::read_le<std::uint32_t>(in, "sample count");
    set.label_arity = detail::read_le<std::uint32_t>(in, "label arity");
    set.node_ids.resize(count);
    set.labels.resize(static_cast<std::size_t>(count) * set.label_arity);
    set.grids.resize(static_cast<std::size_t>(count) * set.grid_size());
    for (std::size_t i = 0; i < count; ++i) {
        set.node_ids[i] = detail::read_le<std::uint32_t>(in, "node id");
        detail::read_le_array(in, set.labels.data() + i * set.label_arity, set.label_arity, "label");
        detail::read_le_array(in, set.grids.data() + i * set.grid_size(), set.grid_size(), "grid");
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw std::runtime_error("trailing bytes after grid cache records: " + path.string());
    return set;
}

#define N2G_INSTANTIATE(T)                                                                                  \
    template struct GridSet<T>;                                                                             \
    template std::vector<T> build_neighbor_grid<T>(const Graph&, std::span<const NodeId>, std::uint32_t);    \
    template std::vector<T> central_fuse<T>(std::span<const T>, std::span<const float>, double);            \
    template GridSample<T> map_node<T>(const Graph&, NodeId, const MapperConfig&);                          \
    template GridSet<T> map_all<T>(const Graph&, std::span<const NodeId>, const MapperConfig&);             \
    template GridSet<T> map_all_serial<T>(const Graph&, std::span<const NodeId>, const MapperConfig&);

N2G_INSTANTIATE(float)
N2G_INSTANTIATE(double)
#undef N2G_INSTANTIATE

} // namespace n2g
