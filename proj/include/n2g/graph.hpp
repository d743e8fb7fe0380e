#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace n2g {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

/// Dense row-major node feature matrix, single precision.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::size_t rows, std::size_t cols);
    FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<float> values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    std::span<const float> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<float> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    float operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    float& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

    std::span<const float> values() const { return data_; }
    std::span<float> values() { return data_; }

    /// Scales every row to unit L1 norm; all-zero rows are left alone.
    void normalize_rows();

    bool operator==(const FeatureMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<float> data_;
};

enum class LabelKind : std::uint8_t { single, multi };

/// Per-node labels. Single-label graphs store one class id per node (-1 marks
/// an unlabeled node); multi-label graphs store a node_count x num_classes 0/1 table.
struct Labels {
    LabelKind kind = LabelKind::single;
    std::uint32_t num_classes = 0;
    std::vector<std::int32_t> classes;
    std::vector<std::uint8_t> flags;

    bool empty() const { return classes.empty() && flags.empty(); }
    bool operator==(const Labels&) const = default;
};

struct Splits {
    std::vector<NodeId> train;
    std::vector<NodeId> val;
    std::vector<NodeId> test;

    bool operator==(const Splits&) const = default;
};

/// Immutable undirected graph in compressed adjacency form. Neighbor lists are
/// sorted ascending, duplicate-free and never contain the node itself.
class Graph {
public:
    Graph() = default;

    NodeId node_count() const { return static_cast<NodeId>(offsets_.empty() ? 0 : offsets_.size() - 1); }
    /// Number of undirected edges.
    std::size_t edge_count() const { return adjacency_.size() / 2; }

    std::uint32_t degree(NodeId v) const;
    std::span<const NodeId> neighbors(NodeId v) const;

    /// One-hop neighbors, ascending.
    std::vector<NodeId> first_order(NodeId v) const;
    /// Nodes exactly two hops away (excludes v and its one-hop neighbors), ascending.
    std::vector<NodeId> second_order(NodeId v) const;

    std::span<const std::uint64_t> offsets() const { return offsets_; }
    std::span<const NodeId> adjacency() const { return adjacency_; }

    const FeatureMatrix& features() const { return features_; }
    const Labels& labels() const { return labels_; }
    const Splits& splits() const { return splits_; }
    std::size_t feature_dim() const { return features_.cols(); }

    bool operator==(const Graph&) const = default;

    friend Graph build_graph(NodeId, std::span<const Edge>, FeatureMatrix, Labels, Splits);
    friend Graph induced_subgraph(const Graph&, std::span<const NodeId>, std::vector<NodeId>*);
    friend Graph replace_features(Graph, FeatureMatrix);

private:
    void check_node(NodeId v) const;

    std::vector<std::uint64_t> offsets_;
    std::vector<NodeId> adjacency_;
    FeatureMatrix features_;
    Labels labels_;
    Splits splits_;
};

/// Canonicalizes an edge list into a Graph: edges are symmetrized, self-loops and
/// duplicates dropped. Throws std::out_of_range on bad node ids and
/// std::invalid_argument on shape mismatches or overlapping splits.
Graph build_graph(NodeId node_count, std::span<const Edge> edges, FeatureMatrix features,
                  Labels labels = {}, Splits splits = {});

/// Subgraph induced by `nodes` (renumbered 0..n-1 in the given order). Split
/// membership is carried over for kept nodes. If `old_ids` is non-null it
/// receives the original id of every new node.
Graph induced_subgraph(const Graph& g, std::span<const NodeId> nodes,
                       std::vector<NodeId>* old_ids = nullptr);

/// Same graph with a new feature matrix of the same row count.
Graph replace_features(Graph g, FeatureMatrix features);

} // namespace n2g
