#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace n2g {

struct EpochRecord {
    std::uint32_t epoch = 0;
    double train_loss = 0.0;
    double val_metric = 0.0;
    double wall_ms = 0.0;

    bool operator==(const EpochRecord&) const = default;
};

/// Outcome of one training run (or a set of repeated runs).
struct MetricsReport {
    std::string metric = "accuracy";  // accuracy | micro_f1
    std::vector<EpochRecord> epochs;
    std::uint32_t best_epoch = 0;
    double best_val_metric = 0.0;
    double test_metric = 0.0;
    double test_std = 0.0;
    std::uint32_t runs = 1;
    double map_ms = 0.0;
    double train_ms = 0.0;
    double total_ms = 0.0;
    double time_to_best_ms = 0.0;
    std::uint64_t peak_rss_bytes = 0;
    std::uint64_t grid_cache_bytes = 0;

    bool operator==(const MetricsReport&) const = default;
};

/// True when two reports agree on every field except wall-clock and memory figures.
bool same_outcome(const MetricsReport& a, const MetricsReport& b);

/// Writes three files. `path` is CSV (epoch,train_loss,val_metric) and
/// `summary_path(path)` holds the run outcome as JSON; both depend only on data,
/// config and seed. Wall-clock and memory figures go to `timing_path(path)`.
/// Numbers use shortest round-trip form.
void save_report(const MetricsReport& report, const std::filesystem::path& path);
MetricsReport load_report(const std::filesystem::path& path);
std::filesystem::path summary_path(const std::filesystem::path& report_path);
std::filesystem::path timing_path(const std::filesystem::path& report_path);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

} // namespace n2g
