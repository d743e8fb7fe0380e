#pragma once

// Planted-partition graphs with Madelon-style class-clustered features.
//
// Nodes are split into `num_classes` contiguous, near-equal blocks. Every
// intra-block pair is connected with probability p_in, every inter-block pair
// with p_out. Unless given explicitly, p_in/p_out are derived from the target
// average degree with intra:inter expected edge mass fixed at
// `intra_inter_ratio`:1.
//
// Features: class c is centered at a distinct +/-1 sign pattern over the first
// `informative` dimensions, scaled by 2; every dimension gets
// noise_scale * N(0, 1) added.

#include "n2g/dataset.hpp"

#include <cstdint>
#include <optional>

namespace n2g {

struct SynthConfig {
    NodeId num_nodes = 10000;
    std::uint32_t num_classes = 3;
    std::uint32_t f = 500;
    std::uint32_t informative = 10;
    double avg_degree = 6.0;
    double intra_inter_ratio = 4.0;
    std::optional<double> p_in;
    std::optional<double> p_out;
    double noise_scale = 1.0;
    std::uint32_t train_nodes = 500;
    std::uint32_t val_nodes = 500;
    std::uint32_t test_nodes = 1000;
    std::uint64_t seed = 1;
};

struct EdgeProbabilities {
    double p_in = 0.0;
    double p_out = 0.0;
    /// Expected degree averaged over nodes under these probabilities.
    double expected_degree = 0.0;
};

/// Resolves p_in/p_out for a config. Throws std::invalid_argument when a class
/// would be empty, p_in <= p_out, or a probability leaves [0, 1].
EdgeProbabilities edge_probabilities(const SynthConfig& cfg);

/// Class of node v under the contiguous block partition.
std::uint32_t block_of(NodeId v, NodeId num_nodes, std::uint32_t num_classes);

/// Generates a transductive single-label bundle. Pure function of cfg,
/// independent of thread count.
DatasetBundle generate(const SynthConfig& cfg);

} // namespace n2g
