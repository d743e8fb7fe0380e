#include "n2g/report.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace n2g {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

bool same_outcome(const MetricsReport& a, const MetricsReport& b) {
    if (a.epochs.size() != b.epochs.size()) return false;
    for (std::size_t i = 0; i < a.epochs.size(); ++i) {
        const auto& x = a.epochs[i];
        const auto& y = b.epochs[i];
        if (x.epoch != y.epoch || x.train_loss != y.train_loss || x.val_metric != y.val_metric) return false;
    }
    return a.metric == b.metric && a.best_epoch == b.best_epoch && a.best_val_metric == b.best_val_metric &&
           a.test_metric == b.test_metric && a.test_std == b.test_std && a.runs == b.runs &&
           a.grid_cache_bytes == b.grid_cache_bytes;
}

std::filesystem::path summary_path(const std::filesystem::path& report_path) {
    auto p = report_path;
    p += ".summary.json";
    return p;
}

std::filesystem::path timing_path(const std::filesystem::path& report_path) {
    auto p = report_path;
    p += ".timing.json";
    return p;
}

namespace {

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing report file: " + path.string());
    return nlohmann::json::parse(in);
}

} // namespace

void save_report(const MetricsReport& report, const std::filesystem::path& path) {
    {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write report: " + path.string());
        out << "epoch,train_loss,val_metric\n";
        for (const auto& e : report.epochs)
            out << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.val_metric) << '\n';
        if (!out) throw std::runtime_error("failed writing report: " + path.string());
    }
    nlohmann::ordered_json s;
    s["metric"] = report.metric;
    s["best_epoch"] = report.best_epoch;
    s["best_val_metric"] = report.best_val_metric;
    s["test_metric"] = report.test_metric;
    s["test_std"] = report.test_std;
    s["runs"] = report.runs;
    s["grid_cache_bytes"] = report.grid_cache_bytes;
    write_json(summary_path(path), s);

    nlohmann::ordered_json t;
    auto wall = nlohmann::ordered_json::array();
    for (const auto& e : report.epochs) wall.push_back(e.wall_ms);
    t["epoch_wall_ms"] = wall;
    t["map_ms"] = report.map_ms;
    t["train_ms"] = report.train_ms;
    t["total_ms"] = report.total_ms;
    t["time_to_best_ms"] = report.time_to_best_ms;
    t["peak_rss_bytes"] = report.peak_rss_bytes;
    write_json(timing_path(path), t);
}

MetricsReport load_report(const std::filesystem::path& path) {
    MetricsReport r;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open report: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "epoch,train_loss,val_metric")
        throw std::runtime_error("report has an unexpected header: " + path.string());
    auto parse = [&](std::string_view field, auto& out) {
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
        if (ec != std::errc{} || ptr != field.data() + field.size())
            throw std::runtime_error("malformed report field '" + std::string(field) + "' in " + path.string());
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::string_view rest = line;
        std::string_view fields[3];
        for (int i = 0; i < 3; ++i) {
            const auto comma = rest.find(',');
            if ((comma == std::string_view::npos) != (i == 2))
                throw std::runtime_error("report row needs 3 fields: " + line);
            fields[i] = rest.substr(0, comma);
            rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        }
        EpochRecord e;
        parse(fields[0], e.epoch);
        parse(fields[1], e.train_loss);
        parse(fields[2], e.val_metric);
        r.epochs.push_back(e);
    }
    const auto s = read_json(summary_path(path));
    r.metric = s.at("metric");
    r.best_epoch = s.at("best_epoch");
    r.best_val_metric = s.at("best_val_metric");
    r.test_metric = s.at("test_metric");
    r.test_std = s.at("test_std");
    r.runs = s.at("runs");
    r.grid_cache_bytes = s.at("grid_cache_bytes");

    // Timing is optional on load: a report copied without its sidecar still parses.
    if (std::filesystem::exists(timing_path(path))) {
        const auto t = read_json(timing_path(path));
        const auto& wall = t.at("epoch_wall_ms");
        if (wall.size() != r.epochs.size())
            throw std::runtime_error("timing sidecar disagrees with report rows: " + timing_path(path).string());
        for (std::size_t i = 0; i < wall.size(); ++i) r.epochs[i].wall_ms = wall[i];
        r.map_ms = t.at("map_ms");
        r.train_ms = t.at("train_ms");
        r.total_ms = t.at("total_ms");
        r.time_to_best_ms = t.at("time_to_best_ms");
        r.peak_rss_bytes = t.at("peak_rss_bytes");
    }
    return r;
}

} // namespace n2g
