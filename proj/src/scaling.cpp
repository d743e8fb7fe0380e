#include "n2g/scaling.hpp"

#include "n2g/sysinfo.hpp"

#include <malloc.h>

namespace n2g {

ScalingResult run_scaling(const SynthConfig& synth, const TrainConfig& cfg) {
    const TrainConfig eff = apply_ablation(cfg);
    eff.validate();
    ScalingResult r;
    Stopwatch gen_clock;
    const DatasetBundle bundle = generate(synth);
    r.gen_ms = gen_clock.elapsed_ms();
    r.nodes = bundle.graph.node_count();
    r.edges = bundle.graph.edge_count();

    // Hand generation scratch back to the kernel so map + train cannot hide in it.
    malloc_trim(0);
    r.peak_reset = reset_peak_rss();
    r.baseline_rss_bytes = current_rss_bytes();
    const PreparedData data = prepare(bundle, eff.mapper);
    const TrainResult res = fit(data, eff);
    r.peak_rss_bytes = peak_rss_bytes();
    r.map_train_peak_bytes = r.peak_rss_bytes > r.baseline_rss_bytes ? r.peak_rss_bytes - r.baseline_rss_bytes : 0;

    r.map_ms = data.map_ms;
    r.train_ms = res.report.train_ms;
    r.time_to_best_ms = res.report.time_to_best_ms;
    r.test_metric = res.report.test_metric;
    r.epochs = static_cast<std::uint32_t>(res.report.epochs.size());
    r.grid_cache_bytes = data.bytes();
    r.model_bytes = res.params.parameter_count() * sizeof(float);
    return r;
}

} // namespace n2g
