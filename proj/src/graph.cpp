#include "n2g/graph.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <stdexcept>
#include <string>

namespace n2g {

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<float> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows * cols)
        throw std::invalid_argument("feature matrix: expected " + std::to_string(rows * cols) +
                                    " values, got " + std::to_string(data_.size()));
}

void FeatureMatrix::normalize_rows() {
    for (std::size_t r = 0; r < rows_; ++r) {
        auto values = row(r);
        double sum = 0.0;
        for (float x : values) sum += std::abs(x);
        if (sum == 0.0) continue;
        const float inv = static_cast<float>(1.0 / sum);
        for (float& x : values) x *= inv;
    }
}

void Graph::check_node(NodeId v) const {
    if (v >= node_count())
        throw std::out_of_range("node id " + std::to_string(v) + " out of range (node_count " +
                                std::to_string(node_count()) + ")");
}

std::uint32_t Graph::degree(NodeId v) const {
    check_node(v);
    return static_cast<std::uint32_t>(offsets_[v + 1] - offsets_[v]);
}

std::span<const NodeId> Graph::neighbors(NodeId v) const {
    check_node(v);
    return {adjacency_.data() + offsets_[v], static_cast<std::size_t>(offsets_[v + 1] - offsets_[v])};
}

std::vector<NodeId> Graph::first_order(NodeId v) const {
    auto n = neighbors(v);
    return {n.begin(), n.end()};
}

std::vector<NodeId> Graph::second_order(NodeId v) const {
    auto n1 = neighbors(v);
    std::vector<NodeId> out;
    for (NodeId u : n1)
        for (NodeId w : neighbors(u))
            if (w != v) out.push_back(w);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    std::vector<NodeId> result;
    result.reserve(out.size());
    std::set_difference(out.begin(), out.end(), n1.begin(), n1.end(), std::back_inserter(result));
    return result;
}

namespace {

void validate_labels(const Labels& labels, NodeId n) {
    if (labels.empty()) return;
    if (labels.kind == LabelKind::single) {
        if (!labels.flags.empty())
            throw std::invalid_argument("single-label graph carries multi-label flags");
        if (labels.classes.size() != n)
            throw std::invalid_argument("label count " + std::to_string(labels.classes.size()) +
                                        " does not match node count " + std::to_string(n));
        for (auto c : labels.classes)
            if (c < -1 || (c >= 0 && static_cast<std::uint32_t>(c) >= labels.num_classes))
                throw std::invalid_argument("class id " + std::to_string(c) + " outside [0, " +
                                            std::to_string(labels.num_classes) + ")");
    } else {
        if (!labels.classes.empty())
            throw std::invalid_argument("multi-label graph carries single-label classes");
        if (labels.flags.size() != static_cast<std::size_t>(n) * labels.num_classes)
            throw std::invalid_argument("multi-label table has " + std::to_string(labels.flags.size()) +
                                        " entries, expected node_count x num_classes");
    }
}

void validate_splits(const Splits& splits, NodeId n) {
    std::vector<std::uint8_t> seen(n, 0);
    auto mark = [&](const std::vector<NodeId>& ids, std::uint8_t tag, const char* name) {
        for (NodeId id : ids) {
            if (id >= n)
                throw std::out_of_range(std::string(name) + " split references node " + std::to_string(id) +
                                        " outside node_count " + std::to_string(n));
            if (seen[id] != 0)
                throw std::invalid_argument("node " + std::to_string(id) + " appears in more than one split");
            seen[id] = tag;
        }
    };
    mark(splits.train, 1, "train");
    mark(splits.val, 2, "val");
    mark(splits.test, 3, "test");
}

} // namespace

Graph build_graph(NodeId node_count, std::span<const Edge> edges, FeatureMatrix features, Labels labels,
                  Splits splits) {
    if (features.rows() != node_count)
        throw std::invalid_argument("feature rows " + std::to_string(features.rows()) +
                                    " do not match node count " + std::to_string(node_count));
    validate_labels(labels, node_count);
    validate_splits(splits, node_count);

    std::vector<std::uint64_t> counts(static_cast<std::size_t>(node_count) + 1, 0);
    for (auto [u, v] : edges) {
        if (u >= node_count || v >= node_count)
            throw std::out_of_range("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                                    ") references a node outside node_count " + std::to_string(node_count));
        if (u == v) continue;
        ++counts[u + 1];
        ++counts[v + 1];
    }
    for (std::size_t i = 1; i < counts.size(); ++i) counts[i] += counts[i - 1];

    std::vector<NodeId> raw(counts.back());
    std::vector<std::uint64_t> cursor(counts.begin(), counts.end() - 1);
    for (auto [u, v] : edges) {
        if (u == v) continue;
        raw[cursor[u]++] = v;
        raw[cursor[v]++] = u;
    }

    Graph g;
    g.offsets_.assign(static_cast<std::size_t>(node_count) + 1, 0);
    g.adjacency_.reserve(raw.size());
    for (NodeId v = 0; v < node_count; ++v) {
        auto first = raw.begin() + static_cast<std::ptrdiff_t>(counts[v]);
        auto last = raw.begin() + static_cast<std::ptrdiff_t>(counts[v + 1]);
        std::sort(first, last);
        last = std::unique(first, last);
        g.adjacency_.insert(g.adjacency_.end(), first, last);
        g.offsets_[v + 1] = g.adjacency_.size();
    }
    g.adjacency_.shrink_to_fit();
    g.features_ = std::move(features);
    g.labels_ = std::move(labels);
    g.splits_ = std::move(splits);
    return g;
}

Graph induced_subgraph(const Graph& g, std::span<const NodeId> nodes, std::vector<NodeId>* old_ids) {
    constexpr NodeId absent = ~NodeId{0};
    std::vector<NodeId> remap(g.node_count(), absent);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        NodeId v = nodes[i];
        if (v >= g.node_count()) throw std::out_of_range("induced_subgraph: node id out of range");
        if (remap[v] != absent) throw std::invalid_argument("induced_subgraph: duplicate node id");
        remap[v] = static_cast<NodeId>(i);
    }
    const auto n = static_cast<NodeId>(nodes.size());

    std::vector<Edge> edges;
    for (NodeId v : nodes)
        for (NodeId u : g.neighbors(v))
            if (remap[u] != absent && v < u) edges.emplace_back(remap[v], remap[u]);

    const std::size_t f = g.features().cols();
    FeatureMatrix features(n, f);
    for (NodeId i = 0; i < n; ++i) {
        auto src = g.features().row(nodes[i]);
        std::copy(src.begin(), src.end(), features.row(i).begin());
    }

    Labels labels;
    const Labels& src = g.labels();
    labels.kind = src.kind;
    labels.num_classes = src.num_classes;
    if (!src.classes.empty())
        for (NodeId v : nodes) labels.classes.push_back(src.classes[v]);
    if (!src.flags.empty())
        for (NodeId v : nodes)
            labels.flags.insert(labels.flags.end(), src.flags.begin() + static_cast<std::ptrdiff_t>(v) * src.num_classes,
                                src.flags.begin() + static_cast<std::ptrdiff_t>(v + 1) * src.num_classes);

    Splits splits;
    auto carry = [&](const std::vector<NodeId>& from, std::vector<NodeId>& to) {
        for (NodeId v : from)
            if (remap[v] != absent) to.push_back(remap[v]);
    };
    carry(g.splits().train, splits.train);
    carry(g.splits().val, splits.val);
    carry(g.splits().test, splits.test);

    if (old_ids) old_ids->assign(nodes.begin(), nodes.end());
    return build_graph(n, edges, std::move(features), std::move(labels), std::move(splits));
}

Graph replace_features(Graph g, FeatureMatrix features) {
    if (features.rows() != g.node_count())
        throw std::invalid_argument("feature matrix has " + std::to_string(features.rows()) + " rows for " +
                                    std::to_string(g.node_count()) + " nodes");
    g.features_ = std::move(features);
    return g;
}

} // namespace n2g
