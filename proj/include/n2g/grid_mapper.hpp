#pragma once

// Graph-to-grid mapping. Every node becomes an independent k x 1 x f tensor:
// row i holds the features of the i-th ranked neighbor (one-hop neighbors by
// descending degree, then two-hop neighbors by descending degree, ties broken by
// ascending id), unfilled rows are zero, and the central node's own features are
// blended into every row with weight theta_bias.
//
// Grids are stored row-major as [slot][channel], i.e. element (i, c) lives at
// i * f + c.

#include "n2g/graph.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace n2g {

struct MapperConfig {
    std::uint32_t k = 16;
    double theta_bias = 0.4;
    /// When false the grid is filled from one-hop neighbors only.
    bool use_second_order = true;

    /// Throws std::invalid_argument unless k >= 1 and 0 <= theta_bias <= 1.
    void validate() const;
};

template <typename T>
struct GridSample {
    NodeId node_id = 0;
    std::uint32_t k = 0;
    std::size_t f = 0;
    std::vector<T> grid;
    /// One class id for single-label graphs, num_classes 0/1 flags for multi-label.
    std::vector<std::int32_t> label;
};

/// A batch of mapped nodes in one contiguous buffer.
template <typename T>
struct GridSet {
    std::uint32_t k = 0;
    std::size_t f = 0;
    std::uint32_t label_arity = 0;
    std::vector<NodeId> node_ids;
    std::vector<T> grids;
    std::vector<std::int32_t> labels;

    std::size_t size() const { return node_ids.size(); }
    std::size_t grid_size() const { return static_cast<std::size_t>(k) * f; }
    std::span<const T> grid(std::size_t i) const { return {grids.data() + i * grid_size(), grid_size()}; }
    std::span<const std::int32_t> label(std::size_t i) const {
        return {labels.data() + i * label_arity, label_arity};
    }
    GridSample<T> sample(std::size_t i) const;
    /// Bytes held by grid and label storage.
    std::size_t bytes() const {
        return grids.size() * sizeof(T) + labels.size() * sizeof(std::int32_t) + node_ids.size() * sizeof(NodeId);
    }

    bool operator==(const GridSet&) const = default;
};

/// Neighbor order used to fill the grid; at most k entries. Two-hop neighbors are
/// only enumerated when the node has fewer than k one-hop neighbors.
std::vector<NodeId> rank_neighbors(const Graph& g, NodeId v, std::uint32_t k, bool use_second_order = true);

/// G_n: row i carries features[order[i]], remaining rows are zero.
template <typename T>
std::vector<T> build_neighbor_grid(const Graph& g, std::span<const NodeId> order, std::uint32_t k);

/// G = theta * G_c + (1 - theta) * G_n where G_c repeats `central` in every row.
/// Throws std::domain_error on non-finite input.
template <typename T>
std::vector<T> central_fuse(std::span<const T> neighbor_grid, std::span<const float> central, double theta_bias);

template <typename T>
GridSample<T> map_node(const Graph& g, NodeId v, const MapperConfig& cfg);

/// Maps every node in `nodes`, parallel over nodes. Output slot i belongs to
/// nodes[i]; results do not depend on the number of threads.
template <typename T>
GridSet<T> map_all(const Graph& g, std::span<const NodeId> nodes, const MapperConfig& cfg);

/// Single-threaded reference for map_all.
template <typename T>
GridSet<T> map_all_serial(const Graph& g, std::span<const NodeId> nodes, const MapperConfig& cfg);

/// Label payload width for a graph: 1 for single-label, num_classes for
/// multi-label, 0 for unlabeled graphs.
std::uint32_t label_arity(const Labels& labels);

// Grid cache file: "N2G1", k, f, count, label arity as 4-byte little-endian
// integers, then per sample the node id, `arity` int32 label values and k*f
// float32 grid values.
void write_grid_cache(const std::filesystem::path& path, const GridSet<float>& grids);
GridSet<float> read_grid_cache(const std::filesystem::path& path);

} // namespace n2g
