#include "n2g/train.hpp"

#include "n2g/rng.hpp"
#include "n2g/sysinfo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

namespace n2g {

namespace {

// Stream coordinates under the run seed.
constexpr std::uint64_t init_stream = 0;
constexpr std::uint64_t shuffle_stream = 1;
constexpr std::uint64_t dropout_stream = 2;

GridSet<float> map_nodes(const Graph& g, const std::vector<NodeId>& nodes, const MapperConfig& mapper) {
    return map_all<float>(g, nodes, mapper);
}

std::vector<NodeId> all_nodes(const Graph& g) {
    std::vector<NodeId> ids(g.node_count());
    std::iota(ids.begin(), ids.end(), NodeId{0});
    return ids;
}

void mean_std(const std::vector<double>& xs, double& mean, double& std) {
    mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    std = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
}

} // namespace

void TrainConfig::validate() const {
    mapper.validate();
    net.validate(mapper.k);
    if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
    if (patience > max_epochs) throw std::invalid_argument("patience must not exceed max_epochs");
    if (runs < 1) throw std::invalid_argument("runs must be at least 1");
    if (eval_chunk < 1) throw std::invalid_argument("eval_chunk must be at least 1");
    if (loss.lambda < 0.0 || loss.lambda_att < 0.0) throw std::invalid_argument("L2 coefficients must be >= 0");
    if (!(optimizer.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
    const bool multi = net.head == TaskHead::sigmoid;
    if (multi != (loss.task == LossKind::binary_cross_entropy))
        throw std::invalid_argument("sigmoid head pairs with binary cross-entropy, softmax with cross-entropy");
}

TrainConfig apply_ablation(const TrainConfig& cfg) {
    TrainConfig out = cfg;
    if (!cfg.ablation.second_order) out.mapper.use_second_order = false;
    if (!cfg.ablation.central_fusion) out.mapper.theta_bias = 0.0;
    if (!cfg.ablation.attention) out.net.heads = 0;
    return out;
}

PreparedData prepare(const DatasetBundle& bundle, const MapperConfig& mapper) {
    PreparedData d;
    d.classes = bundle.meta.classes;
    d.labels = bundle.meta.labels;
    Stopwatch sw;
    if (bundle.inductive()) {
        d.train = map_nodes(bundle.train.graph, all_nodes(bundle.train.graph), mapper);
        d.val = map_nodes(bundle.val.graph, all_nodes(bundle.val.graph), mapper);
        d.test = map_nodes(bundle.test.graph, all_nodes(bundle.test.graph), mapper);
    } else {
        const Splits& s = bundle.graph.splits();
        d.train = map_nodes(bundle.graph, s.train, mapper);
        d.val = map_nodes(bundle.graph, s.val, mapper);
        d.test = map_nodes(bundle.graph, s.test, mapper);
    }
    d.map_ms = sw.elapsed_ms();
    return d;
}

double MetricCounts::accuracy() const {
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

double MetricCounts::micro_f1() const {
    const std::uint64_t denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
}

template <typename T>
void count_single(std::span<const T> logits, std::size_t batch, std::size_t classes,
                  std::span<const std::int32_t> targets, MetricCounts& counts) {
    for (std::size_t i = 0; i < batch; ++i) {
        const T* row = logits.data() + i * classes;
        const auto pred = static_cast<std::int32_t>(std::max_element(row, row + classes) - row);
        counts.correct += pred == targets[i];
        ++counts.total;
    }
}

template <typename T>
void count_multi(std::span<const T> logits, std::size_t batch, std::size_t classes,
                 std::span<const std::int32_t> targets, MetricCounts& counts) {
    for (std::size_t i = 0; i < batch * classes; ++i) {
        const bool pred = logits[i] > T(0);
        const bool truth = targets[i] != 0;
        counts.tp += pred && truth;
        counts.fp += pred && !truth;
        counts.fn += !pred && truth;
    }
    counts.total += batch;
}

template void count_single<float>(std::span<const float>, std::size_t, std::size_t, std::span<const std::int32_t>,
                                  MetricCounts&);
template void count_single<double>(std::span<const double>, std::size_t, std::size_t, std::span<const std::int32_t>,
                                   MetricCounts&);
template void count_multi<float>(std::span<const float>, std::size_t, std::size_t, std::span<const std::int32_t>,
                                 MetricCounts&);
template void count_multi<double>(std::span<const double>, std::size_t, std::size_t, std::span<const std::int32_t>,
                                  MetricCounts&);

std::string metric_name(TaskHead head) { return head == TaskHead::sigmoid ? "micro_f1" : "accuracy"; }

double evaluate(const ModelParams<float>& params, const GridSet<float>& samples, std::uint32_t chunk) {
    if (samples.size() == 0) throw std::invalid_argument("evaluate: empty sample set");
    if (samples.k != params.k || samples.f != params.f)
        throw std::invalid_argument("evaluate: grid shape does not match the model");
    const bool multi = params.cfg.head == TaskHead::sigmoid;
    MetricCounts counts;
    ForwardCache<float> cache;
    const std::size_t gs = samples.grid_size();
    for (std::size_t lo = 0; lo < samples.size(); lo += chunk) {
        const std::size_t b = std::min<std::size_t>(chunk, samples.size() - lo);
        forward(params, std::span<const float>(samples.grids.data() + lo * gs, b * gs), b, Mode::eval, nullptr,
                cache);
        std::span<const std::int32_t> targets(samples.labels.data() + lo * samples.label_arity,
                                              b * samples.label_arity);
        if (multi) count_multi<float>(cache.logits, b, params.classes, targets, counts);
        else count_single<float>(cache.logits, b, params.classes, targets, counts);
    }
    return multi ? counts.micro_f1() : counts.accuracy();
}

TrainResult fit(const PreparedData& data, const TrainConfig& cfg) {
    cfg.validate();
    const bool multi = cfg.net.head == TaskHead::sigmoid;
    if (multi != (data.labels == LabelKind::multi))
        throw std::invalid_argument(std::string("a ") + (multi ? "sigmoid" : "softmax") +
                                    " head cannot train on " + (multi ? "single" : "multi") + "-label data");
    const GridSet<float>& tr = data.train;
    if (tr.k != cfg.mapper.k) throw std::invalid_argument("mapped grids do not match mapper.k");
    if (cfg.max_epochs > 0 && (tr.size() == 0 || data.val.size() == 0))
        throw std::invalid_argument("training needs non-empty train and validation sets");

    TrainResult result;
    MetricsReport& report = result.report;
    report.metric = metric_name(cfg.net.head);
    report.map_ms = data.map_ms;
    report.grid_cache_bytes = data.bytes();

    Rng init_rng(stream_seed(cfg.seed, {init_stream}));
    ModelParams<float> params =
        init_params<float>(cfg.net, cfg.mapper.k, static_cast<std::uint32_t>(tr.f), data.classes, init_rng);
    OptimizerState<float> opt(cfg.optimizer, params);
    ModelParams<float> best = params;
    const std::uint64_t dropout_seed = stream_seed(cfg.seed, {dropout_stream});

    Stopwatch train_clock;
    const std::size_t gs = tr.grid_size();
    const std::size_t arity = tr.label_arity;
    std::vector<std::size_t> order(tr.size());
    std::vector<float> batch_grids;
    std::vector<std::int32_t> batch_labels;
    std::vector<std::uint64_t> batch_ids;
    ForwardCache<float> cache;
    std::uint64_t step = 0;
    bool have_best = false;
    std::uint32_t since_best = 0;

    for (std::uint32_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle_rng(stream_seed(cfg.seed, {shuffle_stream, epoch}));
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double loss_sum = 0.0;
        for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size) {
            const std::size_t b = std::min<std::size_t>(cfg.batch_size, order.size() - lo);
            batch_grids.resize(b * gs);
            batch_labels.resize(b * arity);
            batch_ids.resize(b);
            for (std::size_t i = 0; i < b; ++i) {
                const std::size_t s = order[lo + i];
                std::copy_n(tr.grids.data() + s * gs, gs, batch_grids.data() + i * gs);
                std::copy_n(tr.labels.data() + s * arity, arity, batch_labels.data() + i * arity);
                batch_ids[i] = tr.node_ids[s];
            }
            const DropoutPlan plan{dropout_seed, step, batch_ids};
            LossResult<float> loss;
            try {
                forward(params, std::span<const float>(batch_grids), b, Mode::train, &plan, cache);
                loss = total_loss<float>(cache.logits, b, data.classes, batch_labels, params, cfg.loss);
            } catch (const std::domain_error& e) {
                throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ", step " +
                                         std::to_string(step) + ": " + e.what());
            }
            if (!std::isfinite(loss.total))
                throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ", step " +
                                         std::to_string(step) + ": loss " + std::to_string(loss.total));
            ModelParams<float> grads = backward(params, cache, std::span<const float>(loss.dlogits));
            add_regularizer_grad(params, cfg.loss, grads);
            optimizer_step(opt, params, grads);
            loss_sum += loss.total * static_cast<double>(b);
            ++step;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(order.size());
        rec.val_metric = evaluate(params, data.val, cfg.eval_chunk);
        rec.wall_ms = train_clock.elapsed_ms();
        report.epochs.push_back(rec);

        if (!have_best || rec.val_metric > report.best_val_metric) {
            have_best = true;
            report.best_val_metric = rec.val_metric;
            report.best_epoch = epoch;
            report.time_to_best_ms = report.map_ms + rec.wall_ms;
            best = params;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    report.train_ms = train_clock.elapsed_ms();
    report.total_ms = report.map_ms + report.train_ms;
    if (data.test.size() > 0) report.test_metric = evaluate(best, data.test, cfg.eval_chunk);
    report.peak_rss_bytes = peak_rss_bytes();
    result.params = std::move(best);
    return result;
}

TrainResult train(const DatasetBundle& bundle, const TrainConfig& cfg) {
    const TrainConfig eff = apply_ablation(cfg);
    eff.validate();
    const PreparedData data = prepare(bundle, eff.mapper);
    TrainResult first;
    std::vector<double> metrics;
    double train_ms = 0.0;
    for (std::uint32_t r = 0; r < eff.runs; ++r) {
        TrainConfig run_cfg = eff;
        run_cfg.seed = eff.seed + r;
        TrainResult res = fit(data, run_cfg);
        metrics.push_back(res.report.test_metric);
        train_ms += res.report.train_ms;
        if (r == 0) first = std::move(res);
    }
    MetricsReport& rep = first.report;
    mean_std(metrics, rep.test_metric, rep.test_std);
    rep.runs = eff.runs;
    rep.train_ms = train_ms;
    rep.total_ms = rep.map_ms + train_ms;
    rep.peak_rss_bytes = peak_rss_bytes();
    return first;
}

std::vector<Ablation> ablation_grid() {
    return {{true, true, true},   {false, true, true}, {true, false, true}, {true, true, false},
            {false, false, true}, {false, true, false}, {true, false, false}, {false, false, false}};
}

std::vector<AblationRow> ablate(const DatasetBundle& bundle, const TrainConfig& base) {
    std::vector<AblationRow> rows;
    for (const Ablation& flags : ablation_grid()) {
        TrainConfig cfg = base;
        cfg.ablation = flags;
        const TrainResult res = train(bundle, cfg);
        rows.push_back({flags, res.report.test_metric, res.report.test_std});
    }
    return rows;
}

void write_ablation_csv(const std::filesystem::path& path, std::span<const AblationRow> rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "second_order,central_fusion,attention,metric,std\n";
    for (const auto& r : rows)
        out << int(r.flags.second_order) << ',' << int(r.flags.central_fusion) << ',' << int(r.flags.attention)
            << ',' << format_double(r.metric) << ',' << format_double(r.std) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string_view to_string(SweepAxis a) { return a == SweepAxis::k ? "k" : "theta_bias"; }

SweepAxis parse_sweep_axis(std::string_view s) {
    if (s == "k") return SweepAxis::k;
    if (s == "theta_bias" || s == "theta-bias") return SweepAxis::theta_bias;
    throw std::invalid_argument("unknown sweep axis '" + std::string(s) + "' (expected k or theta_bias)");
}

std::vector<SweepPoint> sweep(const DatasetBundle& bundle, const TrainConfig& base, SweepAxis axis,
                              std::span<const double> values) {
    std::vector<SweepPoint> points;
    for (double v : values) {
        TrainConfig cfg = base;
        if (axis == SweepAxis::k) {
            if (!(v >= 1.0) || v != std::floor(v)) throw std::invalid_argument("k sweep values must be positive integers");
            cfg.mapper.k = static_cast<std::uint32_t>(v);
        } else {
            cfg.mapper.theta_bias = v;
        }
        const TrainResult res = train(bundle, cfg);
        points.push_back({v, res.report.test_metric, res.report.test_std});
    }
    return points;
}

void write_sweep_csv(const std::filesystem::path& path, SweepAxis axis, std::span<const SweepPoint> points) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << to_string(axis) << ",metric,std\n";
    for (const auto& p : points)
        out << format_double(p.value) << ',' << format_double(p.metric) << ',' << format_double(p.std) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

} // namespace n2g
