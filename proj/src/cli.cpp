#include "n2g/cli.hpp"

#include "n2g/dataset.hpp"
#include "n2g/grid_mapper.hpp"
#include "n2g/nn.hpp"
#include "n2g/report.hpp"
#include "n2g/scaling.hpp"
#include "n2g/synth.hpp"
#include "n2g/sysinfo.hpp"
#include "n2g/train.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#ifndef N2G_VERSION
#define N2G_VERSION "0.0.0"
#endif

namespace n2g::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config;
    std::string out = ".";
    int threads = 0;
    std::uint64_t seed = 1;
    bool dry_run = false;

    std::string dataset;
    std::string data;
    bool normalize_features = false;

    std::uint32_t k = 16;
    double theta_bias = 0.4;
    bool second_order = true;

    std::uint32_t n_ker = 1;
    std::uint32_t heads = 50;
    std::uint32_t hidden = 64;
    double dropout = 0.5;
    std::string dropout_sites = "fc1";
    std::string head = "softmax";
    std::string conv_activation = "identity";
    bool per_channel_kernel = false;
    double lambda = 0.0;
    double lambda_att = 0.0;
    std::string optimizer = "rmsprop";
    double lr = 0.008;
    double rho = 0.9;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    std::uint32_t batch = 15;
    std::uint32_t epochs = 400;
    std::uint32_t patience = 30;
    std::uint32_t runs = 1;
    bool central_fusion = true;
    bool attention = true;
    std::uint32_t eval_chunk = 256;

    std::uint32_t nodes = 10000;
    std::uint32_t classes = 3;
    std::uint32_t features = 500;
    std::uint32_t informative = 10;
    double degree = 6.0;
    double intra_inter_ratio = 4.0;
    std::optional<double> p_in;
    std::optional<double> p_out;
    double noise = 1.0;
    std::uint32_t train_nodes = 500;
    std::uint32_t val_nodes = 500;
    std::uint32_t test_nodes = 1000;
    std::string format = "bin";

    std::string split;
    std::string checkpoint;
    bool save_model = true;
    std::string axis = "theta_bias";
    std::string values;
};

void add_common(CLI::App& app, Options& o) {
    app.add_option("--config", o.config, "flat key=value file; command-line flags take precedence");
    app.add_option("--out", o.out, "output directory");
    app.add_option("--threads", o.threads, "worker thread cap (0 = OpenMP default)")->check(CLI::NonNegativeNumber);
    app.add_option("--seed", o.seed, "base random seed");
    app.add_flag("--dry-run", o.dry_run, "resolve settings and write the manifest only");
}

void add_data(CLI::App& app, Options& o) {
    app.add_option("--dataset", o.dataset, "dataset name; selects presets and $N2G_DATA_DIR/<name>");
    app.add_option("--data", o.data, "dataset directory (overrides the name lookup)");
    app.add_option("--normalize-features", o.normalize_features, "scale feature rows to unit L1 norm");
}

void add_mapper(CLI::App& app, Options& o, bool with_k = true) {
    if (with_k) app.add_option("--k", o.k, "grid height (neighbor slots)");
    app.add_option("--theta-bias", o.theta_bias, "central-fusion coefficient in [0,1]");
    app.add_option("--second-order", o.second_order, "fill remaining slots from two-hop neighbors");
}

void add_model(CLI::App& app, Options& o) {
    app.add_option("--n-ker", o.n_ker, "convolution kernel size");
    app.add_option("--heads", o.heads, "attention heads (0 disables attention)");
    app.add_option("--hidden", o.hidden, "hidden width of the first fully-connected layer");
    app.add_option("--dropout", o.dropout, "dropout rate");
    app.add_option("--dropout-sites", o.dropout_sites, "fc1 | conv+fc1");
    app.add_option("--head", o.head, "softmax | sigmoid");
    app.add_option("--conv-activation", o.conv_activation, "identity | relu");
    app.add_option("--per-channel-kernel", o.per_channel_kernel, "one convolution kernel per feature channel");
    app.add_option("--lambda", o.lambda, "L2 coefficient on network weights");
    app.add_option("--lambda-att", o.lambda_att, "L2 coefficient on attention filters");
    app.add_option("--optimizer", o.optimizer, "rmsprop | nadam");
    app.add_option("--lr", o.lr, "learning rate");
    app.add_option("--rho", o.rho, "RMSprop decay");
    app.add_option("--beta1", o.beta1, "Nadam first-moment decay");
    app.add_option("--beta2", o.beta2, "Nadam second-moment decay");
    app.add_option("--eps", o.eps, "optimizer epsilon");
    app.add_option("--weight-decay", o.weight_decay, "decoupled weight decay on network weights");
    app.add_option("--batch", o.batch, "mini-batch size");
    app.add_option("--epochs", o.epochs, "maximum epochs");
    app.add_option("--patience", o.patience, "early-stopping patience in epochs");
    app.add_option("--runs", o.runs, "repeated runs with seeds seed, seed+1, ...");
    app.add_option("--central-fusion", o.central_fusion, "false forces theta-bias to 0");
    app.add_option("--attention", o.attention, "false forces heads to 0");
    app.add_option("--eval-chunk", o.eval_chunk, "samples per evaluation pass");
}

void add_synth(CLI::App& app, Options& o, const std::string& nodes_flag) {
    app.add_option(nodes_flag, o.nodes, "number of nodes");
    app.add_option("--classes", o.classes, "number of classes");
    app.add_option("--features", o.features, "feature dimension");
    app.add_option("--informative", o.informative, "feature dimensions carrying the class centroid");
    app.add_option("--degree", o.degree, "target average degree");
    app.add_option("--intra-inter-ratio", o.intra_inter_ratio, "intra:inter expected edge mass");
    app.add_option("--p-in", o.p_in, "explicit intra-class edge probability");
    app.add_option("--p-out", o.p_out, "explicit inter-class edge probability");
    app.add_option("--noise", o.noise, "feature noise scale");
    app.add_option("--train-nodes", o.train_nodes, "training nodes");
    app.add_option("--val-nodes", o.val_nodes, "validation nodes");
    app.add_option("--test-nodes", o.test_nodes, "test nodes");
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

/// Last value given for --name in args, either as "--name v" or "--name=v".
std::optional<std::string> scan_flag(std::span<const std::string> args, const std::string& name) {
    std::optional<std::string> found;
    const std::string flag = "--" + name;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == flag && i + 1 < args.size()) found = args[i + 1];
        else if (args[i].rfind(flag + "=", 0) == 0) found = args[i].substr(flag.size() + 1);
    }
    return found;
}

std::string option_key(const CLI::Option* opt) {
    const auto& names = opt->get_lnames();
    return names.empty() ? std::string{} : names.front();
}

TrainConfig train_config(const Options& o) {
    TrainConfig c;
    c.mapper.k = o.k;
    c.mapper.theta_bias = o.theta_bias;
    c.mapper.use_second_order = o.second_order;
    c.net.n_ker = o.n_ker;
    c.net.heads = o.heads;
    c.net.hidden = o.hidden;
    c.net.dropout = o.dropout;
    c.net.dropout_sites = parse_dropout_sites(o.dropout_sites);
    c.net.head = parse_task_head(o.head);
    c.net.conv_activation = parse_activation(o.conv_activation);
    c.net.per_channel_kernel = o.per_channel_kernel;
    c.loss.lambda = o.lambda;
    c.loss.lambda_att = o.lambda_att;
    c.loss.task = c.net.head == TaskHead::sigmoid ? LossKind::binary_cross_entropy : LossKind::cross_entropy;
    c.optimizer.kind = parse_optimizer(o.optimizer);
    c.optimizer.lr = o.lr;
    c.optimizer.rho = o.rho;
    c.optimizer.beta1 = o.beta1;
    c.optimizer.beta2 = o.beta2;
    c.optimizer.eps = o.eps;
    c.optimizer.weight_decay = o.weight_decay;
    c.batch_size = o.batch;
    c.max_epochs = o.epochs;
    c.patience = std::min(o.patience, o.epochs);
    c.seed = o.seed;
    c.runs = o.runs;
    c.ablation.second_order = o.second_order;
    c.ablation.central_fusion = o.central_fusion;
    c.ablation.attention = o.attention;
    c.eval_chunk = o.eval_chunk;
    return c;
}

MapperConfig mapper_config(const Options& o) {
    MapperConfig m;
    m.k = o.k;
    m.theta_bias = o.central_fusion ? o.theta_bias : 0.0;
    m.use_second_order = o.second_order;
    return m;
}

SynthConfig synth_config(const Options& o) {
    SynthConfig s;
    s.num_nodes = o.nodes;
    s.num_classes = o.classes;
    s.f = o.features;
    s.informative = o.informative;
    s.avg_degree = o.degree;
    s.intra_inter_ratio = o.intra_inter_ratio;
    s.p_in = o.p_in;
    s.p_out = o.p_out;
    s.noise_scale = o.noise;
    s.train_nodes = o.train_nodes;
    s.val_nodes = o.val_nodes;
    s.test_nodes = o.test_nodes;
    s.seed = o.seed;
    return s;
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) throw UsageError("--values: '" + item + "' is not a number");
        out.push_back(v);
    }
    if (out.empty()) throw UsageError("--values needs at least one number");
    return out;
}

fs::path dataset_dir(const Options& o) {
    if (!o.data.empty()) return o.data;
    if (o.dataset.empty()) throw UsageError("give --dataset or --data");
    const char* root = std::getenv("N2G_DATA_DIR");
    return fs::path(root && *root ? root : "data") / o.dataset;
}

DatasetBundle load(const Options& o) {
    DatasetBundle b = load_dataset(dataset_dir(o));
    if (o.normalize_features) normalize_features(b);
    return b;
}

void write_manifest(const CLI::App& sub, const fs::path& dir) {
    fs::create_directories(dir);
    std::ofstream out(dir / "manifest.cfg");
    if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.cfg").string());
    out << "# n2g " << N2G_VERSION << ", compiler " << __VERSION__ << ", OpenMP " << _OPENMP << '\n';
    out << "# rerun: n2g " << sub.get_name() << " --config manifest.cfg\n";
    for (const CLI::Option* opt : sub.get_options()) {
        const std::string key = option_key(opt);
        if (key.empty() || key == "help" || key == "config" || key == "dry-run") continue;
        std::string value;
        if (opt->count() > 0) {
            const auto results = opt->reduced_results();
            if (!results.empty()) value = results.back();
        } else {
            value = opt->get_default_str();
        }
        if (opt->count() == 0 && value.empty()) continue;
        out << key << '=' << value << '\n';
    }
    if (!out) throw std::runtime_error("failed writing " + (dir / "manifest.cfg").string());
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

std::string fixed(double v, int digits = 4) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(digits);
    ss << v;
    return ss.str();
}

int cmd_map(const Options& o, std::ostream& out) {
    MapperConfig m = mapper_config(o);
    m.validate();
    const std::string split = o.split.empty() ? "train" : o.split;
    if (split != "train" && split != "val" && split != "test") throw UsageError("--split must be train, val or test");
    const DatasetBundle b = load(o);
    const Graph* g = &b.graph;
    std::vector<NodeId> nodes;
    if (b.inductive()) {
        g = split == "train" ? &b.train.graph : split == "val" ? &b.val.graph : &b.test.graph;
        nodes.resize(g->node_count());
        for (NodeId v = 0; v < g->node_count(); ++v) nodes[v] = v;
    } else {
        const Splits& s = b.graph.splits();
        nodes = split == "train" ? s.train : split == "val" ? s.val : s.test;
    }
    Stopwatch sw;
    const GridSet<float> grids = map_all<float>(*g, nodes, m);
    const double ms = sw.elapsed_ms();
    const fs::path path = fs::path(o.out) / ("grids-" + split + ".n2g");
    write_grid_cache(path, grids);
    out << "mapped " << grids.size() << " nodes to " << m.k << "x1x" << grids.f << " grids in " << fixed(ms, 1)
        << " ms -> " << path.string() << '\n';
    return 0;
}

int cmd_train(const Options& o, std::ostream& out) {
    const TrainConfig cfg = train_config(o);
    const DatasetBundle b = load(o);
    const TrainResult res = train(b, cfg);
    const fs::path dir = o.out;
    save_report(res.report, dir / "report.csv");
    if (o.save_model) save_checkpoint(dir / "model.n2gm", res.params);
    const auto& r = res.report;
    out << r.metric << ' ' << fixed(r.test_metric) << " +- " << fixed(r.test_std) << " over " << r.runs
        << " run(s); best epoch " << r.best_epoch << " (val " << fixed(r.best_val_metric) << "); map "
        << fixed(r.map_ms, 1) << " ms, train " << fixed(r.train_ms, 1) << " ms\n";
    return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
    if (o.checkpoint.empty()) throw UsageError("--checkpoint is required");
    const std::string split = o.split.empty() ? "test" : o.split;
    if (split != "train" && split != "val" && split != "test") throw UsageError("--split must be train, val or test");
    const ModelParams<float> params = load_checkpoint<float>(o.checkpoint);
    MapperConfig m = mapper_config(o);
    m.k = params.k;
    m.validate();
    const DatasetBundle b = load(o);
    const PreparedData data = prepare(b, m);
    const GridSet<float>& set = split == "train" ? data.train : split == "val" ? data.val : data.test;
    if (set.f != params.f) throw std::runtime_error("checkpoint expects f=" + std::to_string(params.f));
    const double metric = evaluate(params, set, o.eval_chunk);
    const std::string name = metric_name(params.cfg.head);
    nlohmann::ordered_json j;
    j["split"] = split;
    j["samples"] = set.size();
    j["metric"] = name;
    j["value"] = metric;
    write_json(fs::path(o.out) / "eval.json", j);
    out << name << ' ' << fixed(metric) << " on " << set.size() << ' ' << split << " nodes\n";
    return 0;
}

int cmd_ablate(const Options& o, std::ostream& out) {
    const TrainConfig cfg = train_config(o);
    const DatasetBundle b = load(o);
    const auto rows = ablate(b, cfg);
    write_ablation_csv(fs::path(o.out) / "ablation.csv", rows);
    out << "second_order central_fusion attention  metric\n";
    for (const auto& r : rows)
        out << "      " << r.flags.second_order << "            " << r.flags.central_fusion << "            "
            << r.flags.attention << "      " << fixed(r.metric) << " +- " << fixed(r.std) << '\n';
    return 0;
}

int cmd_sweep(const Options& o, std::ostream& out) {
    const TrainConfig cfg = train_config(o);
    const SweepAxis axis = parse_sweep_axis(o.axis);
    const std::vector<double> values = parse_values(o.values);
    const DatasetBundle b = load(o);
    const auto points = sweep(b, cfg, axis, values);
    write_sweep_csv(fs::path(o.out) / "sweep.csv", axis, points);
    for (const auto& p : points)
        out << to_string(axis) << '=' << format_double(p.value) << "  " << fixed(p.metric) << " +- " << fixed(p.std)
            << '\n';
    return 0;
}

int cmd_gen_synth(const Options& o, std::ostream& out) {
    if (o.format != "bin" && o.format != "text") throw UsageError("--format must be bin or text");
    const SynthConfig s = synth_config(o);
    const EdgeProbabilities p = edge_probabilities(s);
    Stopwatch sw;
    const DatasetBundle b = generate(s);
    save_dataset(b, o.out, o.format == "bin" ? FeatureFormat::binary : FeatureFormat::text);
    out << "generated " << b.graph.node_count() << " nodes, " << b.graph.edge_count() << " edges (p_in "
        << format_double(p.p_in) << ", p_out " << format_double(p.p_out) << ", expected degree "
        << fixed(p.expected_degree, 3) << ") in " << fixed(sw.elapsed_ms(), 1) << " ms -> " << o.out << '\n';
    return 0;
}

int cmd_bench(const Options& o, std::ostream& out) {
    const SynthConfig s = synth_config(o);
    edge_probabilities(s);
    const TrainConfig cfg = train_config(o);
    const ScalingResult r = run_scaling(s, cfg);
    nlohmann::ordered_json j;
    j["nodes"] = r.nodes;
    j["edges"] = r.edges;
    j["train_nodes"] = s.train_nodes;
    j["gen_ms"] = r.gen_ms;
    j["map_ms"] = r.map_ms;
    j["train_ms"] = r.train_ms;
    j["time_to_best_validation_ms"] = r.time_to_best_ms;
    j["epochs"] = r.epochs;
    j["test_accuracy"] = r.test_metric;
    j["peak_rss_bytes"] = r.peak_rss_bytes;
    j["baseline_rss_bytes"] = r.baseline_rss_bytes;
    j["map_train_peak_bytes"] = r.map_train_peak_bytes;
    j["grid_cache_bytes"] = r.grid_cache_bytes;
    j["model_bytes"] = r.model_bytes;
    j["peak_watermark_reset"] = r.peak_reset;
    const fs::path path = fs::path(o.out) / ("bench-" + std::to_string(r.nodes) + ".json");
    write_json(path, j);
    const double mib = 1024.0 * 1024.0;
    out << "nodes " << r.nodes << ", edges " << r.edges << ", train nodes " << s.train_nodes << '\n'
        << "  generate " << fixed(r.gen_ms, 1) << " ms, map " << fixed(r.map_ms, 1) << " ms, train "
        << fixed(r.train_ms, 1) << " ms (" << r.epochs << " epochs), time to best validation "
        << fixed(r.time_to_best_ms, 1) << " ms\n"
        << "  peak RSS " << fixed(r.peak_rss_bytes / mib, 1) << " MiB, map+train growth "
        << fixed(r.map_train_peak_bytes / mib, 1) << " MiB, grid cache " << fixed(r.grid_cache_bytes / mib, 1)
        << " MiB, test accuracy " << fixed(r.test_metric) << '\n';
    return 0;
}

int cmd_inspect_attention(const Options& o, std::ostream& out) {
    if (o.checkpoint.empty()) throw UsageError("--checkpoint is required");
    const ModelParams<float> params = load_checkpoint<float>(o.checkpoint);
    if (params.cfg.heads == 0) throw std::runtime_error("checkpoint was trained without attention");
    const std::vector<float> mean = mean_attention(params);
    fs::create_directories(o.out);
    const fs::path path = fs::path(o.out) / "attention.csv";
    std::ofstream csv(path);
    if (!csv) throw std::runtime_error("cannot write " + path.string());
    csv << "slot,weight\n";
    for (std::size_t i = 0; i < mean.size(); ++i) {
        csv << i << ',' << format_double(mean[i]) << '\n';
        out << "slot " << i << ": " << fixed(mean[i], 6) << '\n';
    }
    return 0;
}

const std::map<std::string, std::vector<std::string>>& presets() {
    static const std::map<std::string, std::vector<std::string>> table = {
        {"cora",
         {"--k=16", "--theta-bias=0.4", "--heads=50", "--lambda-att=0.0008", "--batch=15", "--optimizer=rmsprop",
          "--lr=0.008", "--weight-decay=0.0005", "--dropout=0.5", "--dropout-sites=fc1", "--head=softmax",
          "--normalize-features=true"}},
        {"citeseer",
         {"--k=12", "--theta-bias=0.4", "--heads=50", "--lambda-att=0.025", "--batch=30", "--optimizer=rmsprop",
          "--lr=0.008", "--weight-decay=0.0005", "--dropout=0.5", "--dropout-sites=fc1", "--head=softmax",
          "--normalize-features=true"}},
        {"pubmed",
         {"--k=12", "--theta-bias=0.4", "--heads=50", "--lambda-att=0.07", "--batch=8", "--optimizer=rmsprop",
          "--lr=0.008", "--weight-decay=0.0005", "--dropout=0.5", "--dropout-sites=fc1", "--head=softmax",
          "--normalize-features=true"}},
        {"ppi",
         {"--k=16", "--theta-bias=0.55", "--heads=50", "--lambda=5e-7", "--lambda-att=1e-6", "--batch=2000",
          "--optimizer=nadam", "--lr=0.001", "--weight-decay=0", "--dropout=0.5", "--dropout-sites=conv+fc1",
          "--head=sigmoid"}},
    };
    return table;
}

} // namespace

std::vector<std::string> preset_args(std::string_view dataset) {
    const auto it = presets().find(std::string(dataset));
    return it == presets().end() ? std::vector<std::string>{} : it->second;
}

std::vector<std::string> read_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path.string());
    std::vector<std::string> args;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos || eq == 0)
            throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
        args.push_back("--" + trim(std::string_view(t).substr(0, eq)) + "=" + trim(std::string_view(t).substr(eq + 1)));
    }
    return args;
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    std::map<std::string, Options> opts;
    CLI::App app{"Node-to-grid mapping and grid-network training for node classification", "n2g"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
    app.require_subcommand(1);
    app.set_version_flag("--version", N2G_VERSION);

    Options& o_map = opts["map"];
    auto* map = app.add_subcommand("map", "map nodes of one split to grids and write a grid cache");
    add_common(*map, o_map);
    add_data(*map, o_map);
    add_mapper(*map, o_map);
    map->add_option("--split", o_map.split, "train | val | test (default train)");

    Options& o_train_cmd = opts["train"];
    auto* train_cmd = app.add_subcommand("train", "train and report on a dataset");
    add_common(*train_cmd, o_train_cmd);
    add_data(*train_cmd, o_train_cmd);
    add_mapper(*train_cmd, o_train_cmd);
    add_model(*train_cmd, o_train_cmd);
    train_cmd->add_option("--save-model", o_train_cmd.save_model, "write model.n2gm");

    Options& o_eval = opts["eval"];
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on one split");
    add_common(*eval, o_eval);
    add_data(*eval, o_eval);
    add_mapper(*eval, o_eval, false);
    eval->add_option("--checkpoint", o_eval.checkpoint, "model file written by train");
    eval->add_option("--split", o_eval.split, "train | val | test (default test)");
    eval->add_option("--eval-chunk", o_eval.eval_chunk, "samples per evaluation pass");

    Options& o_ablate_cmd = opts["ablate"];
    auto* ablate_cmd = app.add_subcommand("ablate", "train all eight strategy on/off combinations");
    add_common(*ablate_cmd, o_ablate_cmd);
    add_data(*ablate_cmd, o_ablate_cmd);
    add_mapper(*ablate_cmd, o_ablate_cmd);
    add_model(*ablate_cmd, o_ablate_cmd);

    Options& o_sweep_cmd = opts["sweep"];
    auto* sweep_cmd = app.add_subcommand("sweep", "train once per value of k or theta-bias");
    add_common(*sweep_cmd, o_sweep_cmd);
    add_data(*sweep_cmd, o_sweep_cmd);
    add_mapper(*sweep_cmd, o_sweep_cmd);
    add_model(*sweep_cmd, o_sweep_cmd);
    sweep_cmd->add_option("--axis", o_sweep_cmd.axis, "k | theta_bias");
    sweep_cmd->add_option("--values", o_sweep_cmd.values, "comma-separated values")->required();

    Options& o_gen = opts["gen-synth"];
    auto* gen = app.add_subcommand("gen-synth", "generate a planted-partition dataset");
    add_common(*gen, o_gen);
    add_synth(*gen, o_gen, "--nodes");
    gen->add_option("--format", o_gen.format, "feature file format: bin | text");

    Options& o_bench = opts["bench"];
    // bench trains briefly unless told otherwise.
    o_bench.nodes = 100000;
    o_bench.epochs = 5;
    o_bench.patience = 5;
    auto* bench = app.add_subcommand("bench", "time and measure generate, map and train on a synthetic graph");
    add_common(*bench, o_bench);
    add_synth(*bench, o_bench, "--synthetic");
    add_mapper(*bench, o_bench);
    add_model(*bench, o_bench);

    Options& o_inspect = opts["inspect-attention"];
    auto* inspect = app.add_subcommand("inspect-attention", "write the mean attention filter of a checkpoint");
    add_common(*inspect, o_inspect);
    inspect->add_option("--checkpoint", o_inspect.checkpoint, "model file written by train");


    // Layering: documented default < dataset preset < config file < flag.
    std::vector<std::string> full;
    try {
        if (args.empty()) throw CLI::CallForHelp();
        CLI::App* sub = nullptr;
        for (CLI::App* s : app.get_subcommands({}))
            if (s->get_name() == args.front()) sub = s;
        if (sub) {
            const auto rest = args.subspan(1);
            std::vector<std::string> config_args;
            if (auto cfg = scan_flag(rest, "config")) config_args = read_config(*cfg);
            std::optional<std::string> dataset = scan_flag(rest, "dataset");
            if (!dataset) dataset = scan_flag(config_args, "dataset");
            full.push_back(args.front());
            if (dataset) {
                for (const std::string& a : preset_args(*dataset)) {
                    const std::string key = a.substr(0, a.find('='));
                    if (sub->get_option_no_throw(key)) full.push_back(a);
                }
            }
            full.insert(full.end(), config_args.begin(), config_args.end());
            full.insert(full.end(), rest.begin(), rest.end());
        } else {
            full.assign(args.begin(), args.end());
        }
        std::vector<std::string> reversed(full.rbegin(), full.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    const Options& o = opts.at(name);
    if (o.threads > 0) omp_set_num_threads(o.threads);

    // Settings are checked before any work so bad values are usage errors.
    try {
        if (name == "train" || name == "ablate" || name == "sweep" || name == "bench") train_config(o).validate();
        if (name == "map" || name == "eval") {
            MapperConfig m = mapper_config(o);
            if (name == "eval") m.k = std::max<std::uint32_t>(m.k, 1);
            m.validate();
        }
        if (name == "gen-synth" || name == "bench") edge_probabilities(synth_config(o));
        if (name == "sweep") {
            parse_sweep_axis(o.axis);
            parse_values(o.values);
        }
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    try {
        write_manifest(*sub, o.out);
        if (o.dry_run) return 0;
        if (name == "map") return cmd_map(o, out);
        if (name == "train") return cmd_train(o, out);
        if (name == "eval") return cmd_eval(o, out);
        if (name == "ablate") return cmd_ablate(o, out);
        if (name == "sweep") return cmd_sweep(o, out);
        if (name == "gen-synth") return cmd_gen_synth(o, out);
        if (name == "bench") return cmd_bench(o, out);
        if (name == "inspect-attention") return cmd_inspect_attention(o, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

} // namespace n2g::cli
