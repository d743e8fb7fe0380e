#include "n2g/synth.hpp"

#include "n2g/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

namespace n2g {

namespace {

constexpr std::size_t edge_chunk = 4096;
constexpr std::size_t feature_chunk = 1024;

NodeId block_start(std::uint32_t c, NodeId n, std::uint32_t l) {
    return static_cast<NodeId>(static_cast<std::uint64_t>(c) * n / l);
}

} // namespace

std::uint32_t block_of(NodeId v, NodeId n, std::uint32_t l) {
    return static_cast<std::uint32_t>(((static_cast<std::uint64_t>(v) + 1) * l + n - 1) / n - 1);
}

EdgeProbabilities edge_probabilities(const SynthConfig& cfg) {
    const NodeId n = cfg.num_nodes;
    const std::uint32_t l = cfg.num_classes;
    if (l < 1 || n < l) throw std::invalid_argument("synthetic graph: every class needs at least one node");

    double intra_pairs = 0.0;  // sum_c s_c (s_c - 1)
    double inter_pairs = 0.0;  // sum_c s_c (n - s_c)
    for (std::uint32_t c = 0; c < l; ++c) {
        const double s = static_cast<double>(block_start(c + 1, n, l) - block_start(c, n, l));
        intra_pairs += s * (s - 1.0);
        inter_pairs += s * (static_cast<double>(n) - s);
    }

    EdgeProbabilities p;
    if (cfg.p_in.has_value() != cfg.p_out.has_value())
        throw std::invalid_argument("synthetic graph: give both p_in and p_out or neither");
    if (cfg.p_in) {
        p.p_in = *cfg.p_in;
        p.p_out = *cfg.p_out;
    } else {
        const double intra_share = cfg.intra_inter_ratio / (cfg.intra_inter_ratio + 1.0);
        const double nd = static_cast<double>(n) * cfg.avg_degree;
        if (inter_pairs == 0.0) {
            p.p_in = intra_pairs > 0.0 ? nd / intra_pairs : 0.0;
        } else {
            p.p_in = intra_pairs > 0.0 ? intra_share * nd / intra_pairs : 0.0;
            p.p_out = (1.0 - intra_share) * nd / inter_pairs;
        }
    }
    if (!(p.p_in > p.p_out) || p.p_out < 0.0)
        throw std::invalid_argument("synthetic graph: need p_in > p_out >= 0 (p_in=" + std::to_string(p.p_in) +
                                    ", p_out=" + std::to_string(p.p_out) + ")");
    if (p.p_in > 1.0)
        throw std::invalid_argument("synthetic graph: target degree needs p_in=" + std::to_string(p.p_in) + " > 1");
    p.expected_degree = (p.p_in * intra_pairs + p.p_out * inter_pairs) / static_cast<double>(n);
    return p;
}

DatasetBundle generate(const SynthConfig& cfg) {
    const EdgeProbabilities probs = edge_probabilities(cfg);
    const NodeId n = cfg.num_nodes;
    const std::uint32_t l = cfg.num_classes;
    const std::size_t f = cfg.f;
    if (f < 1) throw std::invalid_argument("synthetic graph: feature dimension must be positive");
    if (static_cast<std::uint64_t>(cfg.train_nodes) + cfg.val_nodes + cfg.test_nodes > n)
        throw std::invalid_argument("synthetic graph: split sizes exceed node count");

    // Edges: row i samples partners j > i by geometric skipping, one counter
    // stream per row, chunks concatenated in row order.
    const std::size_t chunks = (static_cast<std::size_t>(n) + edge_chunk - 1) / edge_chunk;
    std::vector<std::vector<Edge>> chunk_edges(chunks);
    const double log_in = probs.p_in < 1.0 ? std::log1p(-probs.p_in) : 0.0;
    const double log_out = probs.p_out < 1.0 ? std::log1p(-probs.p_out) : 0.0;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t ch = 0; ch < static_cast<std::int64_t>(chunks); ++ch) {
        auto& out = chunk_edges[ch];
        const NodeId lo = static_cast<NodeId>(ch * edge_chunk);
        const NodeId hi = static_cast<NodeId>(std::min<std::size_t>(n, (ch + 1) * edge_chunk));
        for (NodeId i = lo; i < hi; ++i) {
            const std::uint64_t key = stream_seed(cfg.seed, {1, i});
            std::uint64_t counter = 0;
            const NodeId block_end = block_start(block_of(i, n, l) + 1, n, l);
            auto sample_range = [&](std::uint64_t first, std::uint64_t last, double p, double log_q) {
                if (p <= 0.0 || first >= last) return;
                if (p >= 1.0) {
                    for (std::uint64_t j = first; j < last; ++j) out.emplace_back(i, static_cast<NodeId>(j));
                    return;
                }
                std::uint64_t j = first;
                while (true) {
                    const double u = counter_uniform(key, counter++);
                    const double skip = std::floor(std::log1p(-u) / log_q);
                    if (skip >= static_cast<double>(last - j)) return;
                    j += static_cast<std::uint64_t>(skip);
                    out.emplace_back(i, static_cast<NodeId>(j));
                    ++j;
                    if (j >= last) return;
                }
            };
            sample_range(static_cast<std::uint64_t>(i) + 1, block_end, probs.p_in, log_in);
            sample_range(block_end, n, probs.p_out, log_out);
        }
    }
    std::size_t total = 0;
    for (const auto& c : chunk_edges) total += c.size();
    std::vector<Edge> edges;
    edges.reserve(total);
    for (auto& c : chunk_edges) {
        edges.insert(edges.end(), c.begin(), c.end());
        std::vector<Edge>().swap(c);
    }

    // Class centroids on distinct hypercube vertices.
    const std::size_t informative = std::min<std::size_t>(std::max<std::uint32_t>(cfg.informative, 1), f);
    if (informative < 63 && (std::uint64_t{1} << informative) < l)
        throw std::invalid_argument("synthetic graph: too few informative dimensions for distinct class centroids");
    std::vector<std::vector<float>> centroids;
    {
        Rng rng(stream_seed(cfg.seed, {3}));
        std::bernoulli_distribution coin(0.5);
        std::set<std::vector<float>> seen;
        while (centroids.size() < l) {
            std::vector<float> c(informative);
            for (auto& x : c) x = coin(rng) ? 2.0f : -2.0f;
            if (seen.insert(c).second) centroids.push_back(std::move(c));
        }
    }

    FeatureMatrix features(n, f);
    Labels labels;
    labels.kind = LabelKind::single;
    labels.num_classes = l;
    labels.classes.resize(n);
    const std::size_t fchunks = (static_cast<std::size_t>(n) + feature_chunk - 1) / feature_chunk;
    const auto noise = static_cast<float>(cfg.noise_scale);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t ch = 0; ch < static_cast<std::int64_t>(fchunks); ++ch) {
        Rng rng(stream_seed(cfg.seed, {2, static_cast<std::uint64_t>(ch)}));
        std::normal_distribution<float> gauss(0.0f, 1.0f);
        const NodeId lo = static_cast<NodeId>(ch * feature_chunk);
        const NodeId hi = static_cast<NodeId>(std::min<std::size_t>(n, (ch + 1) * feature_chunk));
        for (NodeId v = lo; v < hi; ++v) {
            const std::uint32_t c = block_of(v, n, l);
            labels.classes[v] = static_cast<std::int32_t>(c);
            auto row = features.row(v);
            for (std::size_t d = 0; d < f; ++d) {
                const float center = d < informative ? centroids[c][d] : 0.0f;
                row[d] = center + noise * gauss(rng);
            }
        }
    }

    Splits splits;
    {
        std::vector<NodeId> perm(n);
        std::iota(perm.begin(), perm.end(), NodeId{0});
        Rng rng(stream_seed(cfg.seed, {4}));
        std::shuffle(perm.begin(), perm.end(), rng);
        auto take = [&](std::size_t from, std::size_t count) {
            std::vector<NodeId> ids(perm.begin() + static_cast<std::ptrdiff_t>(from),
                                    perm.begin() + static_cast<std::ptrdiff_t>(from + count));
            std::sort(ids.begin(), ids.end());
            return ids;
        };
        splits.train = take(0, cfg.train_nodes);
        splits.val = take(cfg.train_nodes, cfg.val_nodes);
        splits.test = take(static_cast<std::size_t>(cfg.train_nodes) + cfg.val_nodes, cfg.test_nodes);
    }

    DatasetMeta meta;
    meta.name = "synthetic-" + std::to_string(n);
    meta.node_count = n;
    meta.f = f;
    meta.classes = l;
    meta.task = TaskKind::transductive;
    meta.labels = LabelKind::single;
    meta.train_count = splits.train.size();
    meta.val_count = splits.val.size();
    meta.test_count = splits.test.size();
    Graph g = build_graph(n, edges, std::move(features), std::move(labels), std::move(splits));
    return make_bundle(std::move(meta), std::move(g));
}

} // namespace n2g
