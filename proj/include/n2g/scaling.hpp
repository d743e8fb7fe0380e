#pragma once

#include "n2g/synth.hpp"
#include "n2g/train.hpp"

#include <cstdint>

namespace n2g {

/// Timing and memory figures for one generate -> map -> train run.
struct ScalingResult {
    NodeId nodes = 0;
    std::size_t edges = 0;
    double gen_ms = 0.0;
    double map_ms = 0.0;
    double train_ms = 0.0;
    /// Mapping plus training up to the best validation epoch.
    double time_to_best_ms = 0.0;
    double test_metric = 0.0;
    std::uint32_t epochs = 0;
    /// RSS after the graph is in memory, before mapping.
    std::uint64_t baseline_rss_bytes = 0;
    std::uint64_t peak_rss_bytes = 0;
    /// Peak growth over the baseline during map + train. Includes generation
    /// when the kernel cannot reset the watermark (see peak_reset).
    std::uint64_t map_train_peak_bytes = 0;
    std::uint64_t grid_cache_bytes = 0;
    std::uint64_t model_bytes = 0;
    bool peak_reset = false;
};

ScalingResult run_scaling(const SynthConfig& synth, const TrainConfig& cfg);

} // namespace n2g
