#pragma once

#include "n2g/dataset.hpp"
#include "n2g/grid_mapper.hpp"
#include "n2g/nn.hpp"
#include "n2g/optim.hpp"
#include "n2g/report.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace n2g {

struct Ablation {
    bool second_order = true;
    bool central_fusion = true;
    bool attention = true;

    bool operator==(const Ablation&) const = default;
};

struct TrainConfig {
    MapperConfig mapper;
    NetConfig net;
    LossConfig loss;
    OptimizerConfig optimizer;
    std::uint32_t batch_size = 15;
    std::uint32_t max_epochs = 400;
    std::uint32_t patience = 30;
    std::uint64_t seed = 1;
    /// Repeats with seeds seed, seed+1, ...; the report carries mean and std.
    std::uint32_t runs = 1;
    Ablation ablation;
    /// Samples per forward pass during evaluation.
    std::uint32_t eval_chunk = 256;

    void validate() const;
};

/// The configuration actually trained: no second order keeps N1 only, no
/// central fusion sets theta_bias to 0, no attention sets heads to 0.
TrainConfig apply_ablation(const TrainConfig& cfg);

/// Mapped samples for one run. Transductive sets are mapped on the full graph;
/// inductive sets each on their own split graph.
struct PreparedData {
    GridSet<float> train;
    GridSet<float> val;
    GridSet<float> test;
    std::uint32_t classes = 0;
    LabelKind labels = LabelKind::single;
    double map_ms = 0.0;

    std::uint64_t bytes() const { return train.bytes() + val.bytes() + test.bytes(); }
};

PreparedData prepare(const DatasetBundle& bundle, const MapperConfig& mapper);

struct TrainResult {
    ModelParams<float> params;
    MetricsReport report;
};

/// One training run on already-mapped data. cfg must already be ablated.
TrainResult fit(const PreparedData& data, const TrainConfig& cfg);

/// Maps, then trains cfg.runs times. Params come from the first run.
TrainResult train(const DatasetBundle& bundle, const TrainConfig& cfg);

struct MetricCounts {
    std::uint64_t correct = 0;
    std::uint64_t total = 0;
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    double accuracy() const;
    /// 2TP / (2TP + FP + FN), or 0 when nothing is positive.
    double micro_f1() const;
};

/// Argmax accuracy counts; one class id per sample.
template <typename T>
void count_single(std::span<const T> logits, std::size_t batch, std::size_t classes,
                  std::span<const std::int32_t> targets, MetricCounts& counts);
/// Threshold-0.5 (logit > 0) counts; `classes` flags per sample.
template <typename T>
void count_multi(std::span<const T> logits, std::size_t batch, std::size_t classes,
                 std::span<const std::int32_t> targets, MetricCounts& counts);

/// Accuracy for softmax heads, micro-F1 for sigmoid heads. Throws on an empty set.
double evaluate(const ModelParams<float>& params, const GridSet<float>& samples, std::uint32_t chunk = 256);

std::string metric_name(TaskHead head);

struct AblationRow {
    Ablation flags;
    double metric = 0.0;
    double std = 0.0;
};

/// All eight flag combinations, all-on first and all-off last.
std::vector<Ablation> ablation_grid();
std::vector<AblationRow> ablate(const DatasetBundle& bundle, const TrainConfig& base);
void write_ablation_csv(const std::filesystem::path& path, std::span<const AblationRow> rows);

enum class SweepAxis : std::uint8_t { k, theta_bias };
std::string_view to_string(SweepAxis);
SweepAxis parse_sweep_axis(std::string_view);

struct SweepPoint {
    double value = 0.0;
    double metric = 0.0;
    double std = 0.0;
};

std::vector<SweepPoint> sweep(const DatasetBundle& bundle, const TrainConfig& base, SweepAxis axis,
                              std::span<const double> values);
void write_sweep_csv(const std::filesystem::path& path, SweepAxis axis, std::span<const SweepPoint> points);

} // namespace n2g
