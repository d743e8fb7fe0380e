#include "n2g/dataset.hpp"

#include "n2g/detail/binary_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <map>
#include <unordered_map>

namespace n2g {

std::string_view to_string(TaskKind t) { return t == TaskKind::transductive ? "transductive" : "inductive"; }

TaskKind parse_task_kind(std::string_view s) {
    if (s == "transductive") return TaskKind::transductive;
    if (s == "inductive") return TaskKind::inductive;
    throw std::invalid_argument("unknown task kind '" + std::string(s) + "' (transductive|inductive)");
}

namespace {

namespace fs = std::filesystem;

std::vector<std::string_view> tokenize(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == '\t' || line[i] == ' ' || line[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != '\t' && line[i] != ' ' && line[i] != '\r') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

bool skippable(std::string_view line) {
    for (char ch : line) {
        if (ch == '#') return true;
        if (ch != ' ' && ch != '\t' && ch != '\r') return false;
    }
    return true;
}

/// Reads a text file line by line, reporting errors with file:line context.
class LineReader {
public:
    explicit LineReader(const fs::path& path) : path_(path), in_(path) {
        if (!in_) throw DatasetError("missing dataset file: " + path.string());
    }

    bool next(std::vector<std::string_view>& tokens) {
        while (std::getline(in_, line_)) {
            ++number_;
            if (skippable(line_)) continue;
            tokens = tokenize(line_);
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw DatasetError(path_.filename().string() + ":" + std::to_string(number_) + ": " + what);
    }

    template <typename T>
    T number(std::string_view token, const char* what) const {
        T value{};
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec != std::errc{} || ptr != token.data() + token.size())
            fail(std::string("malformed ") + what + " '" + std::string(token) + "'");
        return value;
    }

private:
    fs::path path_;
    std::ifstream in_;
    std::string line_;
    std::size_t number_ = 0;
};

/// Maps node tokens from the text files to dense ids.
class IdResolver {
public:
    explicit IdResolver(NodeId count) : count_(count), dense_(true) {}
    IdResolver(std::vector<std::string> tokens) : count_(static_cast<NodeId>(tokens.size())) {
        dense_ = true;
        for (std::size_t i = 0; i < tokens.size() && dense_; ++i) dense_ = tokens[i] == std::to_string(i);
        if (!dense_)
            for (std::size_t i = 0; i < tokens.size(); ++i) map_.emplace(std::move(tokens[i]), static_cast<NodeId>(i));
    }

    NodeId resolve(std::string_view token, const LineReader& reader) const {
        if (dense_) {
            const auto id = reader.number<std::uint64_t>(token, "node id");
            if (id >= count_) reader.fail("node id " + std::string(token) + " outside node_count");
            return static_cast<NodeId>(id);
        }
        auto it = map_.find(std::string(token));
        if (it == map_.end()) reader.fail("unknown node id '" + std::string(token) + "'");
        return it->second;
    }

private:
    NodeId count_;
    bool dense_ = true;
    std::unordered_map<std::string, NodeId> map_;
};

DatasetMeta read_meta(const fs::path& dir) {
    LineReader reader(dir / "meta.tsv");
    std::map<std::string, std::string, std::less<>> kv;
    std::vector<std::string_view> tok;
    while (reader.next(tok)) {
        if (tok.size() != 2) reader.fail("expected key<TAB>value");
        kv[std::string(tok[0])] = std::string(tok[1]);
    }
    auto need = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw DatasetError("meta.tsv: missing key '" + std::string(key) + "'");
        return it->second;
    };
    auto to_u64 = [](const std::string& key, const std::string& v) {
        std::uint64_t out{};
        auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || ptr != v.data() + v.size())
            throw DatasetError("meta.tsv: malformed value for '" + key + "': " + v);
        return out;
    };
    DatasetMeta m;
    m.name = need("name");
    m.node_count = static_cast<NodeId>(to_u64("node_count", need("node_count")));
    m.f = to_u64("f", need("f"));
    m.classes = static_cast<std::uint32_t>(to_u64("classes", need("classes")));
    try {
        m.task = parse_task_kind(need("task"));
        if (auto it = kv.find("labels"); it != kv.end()) {
            if (it->second == "single") m.labels = LabelKind::single;
            else if (it->second == "multi") m.labels = LabelKind::multi;
            else throw std::invalid_argument("labels must be single or multi");
        }
    } catch (const std::invalid_argument& e) {
        throw DatasetError(std::string("meta.tsv: ") + e.what());
    }
    if (auto it = kv.find("train_count"); it != kv.end()) m.train_count = to_u64("train_count", it->second);
    if (auto it = kv.find("val_count"); it != kv.end()) m.val_count = to_u64("val_count", it->second);
    if (auto it = kv.find("test_count"); it != kv.end()) m.test_count = to_u64("test_count", it->second);
    return m;
}

void check_count(const char* what, std::size_t actual, std::size_t expected) {
    if (actual != expected)
        throw DatasetError(std::string("manifest mismatch: ") + what + " is " + std::to_string(actual) + ", meta.tsv says " +
                           std::to_string(expected));
}

FeatureMatrix read_features_bin(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError("missing dataset file: " + path.string());
    try {
        const auto rows = detail::read_le<std::uint64_t>(in, "feature rows");
        const auto cols = detail::read_le<std::uint64_t>(in, "feature cols");
        std::vector<float> values(rows * cols);
        detail::read_le_array(in, values.data(), values.size(), "feature values");
        if (in.peek() != std::char_traits<char>::eof()) throw DatasetError("features.bin: trailing bytes");
        return FeatureMatrix(rows, cols, std::move(values));
    } catch (const std::runtime_error& e) {
        throw DatasetError(std::string("features.bin: ") + e.what());
    }
}

std::string format_float(float v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

} // namespace

DatasetBundle make_bundle(DatasetMeta meta, Graph graph) {
    DatasetBundle b;
    b.meta = std::move(meta);
    if (b.meta.task == TaskKind::transductive) {
        b.graph = std::move(graph);
        return b;
    }
    const Splits& s = graph.splits();
    if (s.train.size() + s.val.size() + s.test.size() != graph.node_count())
        throw DatasetError("inductive dataset: every node must belong to exactly one split");
    b.train.graph = induced_subgraph(graph, s.train, &b.train.original_ids);
    b.val.graph = induced_subgraph(graph, s.val, &b.val.original_ids);
    b.test.graph = induced_subgraph(graph, s.test, &b.test.original_ids);
    return b;
}

Graph full_graph(const DatasetBundle& bundle) {
    if (!bundle.inductive()) return bundle.graph;
    const NodeId n = bundle.meta.node_count;
    const std::size_t f = bundle.meta.f;
    FeatureMatrix features(n, f);
    Labels labels;
    labels.kind = bundle.meta.labels;
    labels.num_classes = bundle.meta.classes;
    if (labels.kind == LabelKind::single) labels.classes.assign(n, -1);
    else labels.flags.assign(static_cast<std::size_t>(n) * labels.num_classes, 0);
    std::vector<Edge> edges;
    Splits splits;

    auto merge = [&](const SplitGraph& part, std::vector<NodeId>& split_ids) {
        const Graph& g = part.graph;
        const Labels& src = g.labels();
        for (NodeId v = 0; v < g.node_count(); ++v) {
            const NodeId orig = part.original_ids[v];
            auto row = g.features().row(v);
            std::copy(row.begin(), row.end(), features.row(orig).begin());
            if (!src.classes.empty()) labels.classes[orig] = src.classes[v];
            if (!src.flags.empty())
                std::copy_n(src.flags.begin() + static_cast<std::ptrdiff_t>(v) * src.num_classes, src.num_classes,
                            labels.flags.begin() + static_cast<std::ptrdiff_t>(orig) * src.num_classes);
            for (NodeId u : g.neighbors(v))
                if (v < u) edges.emplace_back(orig, part.original_ids[u]);
        }
        split_ids = part.original_ids;
    };
    merge(bundle.train, splits.train);
    merge(bundle.val, splits.val);
    merge(bundle.test, splits.test);
    return build_graph(n, edges, std::move(features), std::move(labels), std::move(splits));
}

DatasetBundle load_dataset(const std::filesystem::path& dir) {
    if (!fs::is_directory(dir)) throw DatasetError("dataset directory not found: " + dir.string());
    DatasetMeta meta = read_meta(dir);

    FeatureMatrix features;
    std::optional<IdResolver> ids;
    if (fs::exists(dir / "features.bin")) {
        features = read_features_bin(dir / "features.bin");
        ids.emplace(static_cast<NodeId>(features.rows()));
    } else {
        LineReader reader(dir / "features.tsv");
        std::vector<std::string> tokens;
        std::vector<float> values;
        std::vector<std::string_view> tok;
        while (reader.next(tok)) {
            if (tok.size() != meta.f + 1)
                reader.fail("expected node id and " + std::to_string(meta.f) + " feature values, found " +
                            std::to_string(tok.size()) + " fields");
            tokens.emplace_back(tok[0]);
            for (std::size_t i = 1; i < tok.size(); ++i) values.push_back(reader.number<float>(tok[i], "feature value"));
        }
        features = FeatureMatrix(tokens.size(), meta.f, std::move(values));
        ids.emplace(std::move(tokens));
    }
    check_count("feature rows", features.rows(), meta.node_count);
    check_count("feature columns", features.cols(), meta.f);
    const NodeId n = meta.node_count;

    std::vector<Edge> edges;
    {
        LineReader reader(dir / "edges.tsv");
        std::vector<std::string_view> tok;
        while (reader.next(tok)) {
            if (tok.size() != 2) reader.fail("expected u<TAB>v");
            edges.emplace_back(ids->resolve(tok[0], reader), ids->resolve(tok[1], reader));
        }
    }

    Labels labels;
    labels.kind = meta.labels;
    labels.num_classes = meta.classes;
    if (labels.kind == LabelKind::single) labels.classes.assign(n, -1);
    else labels.flags.assign(static_cast<std::size_t>(n) * meta.classes, 0);
    if (fs::exists(dir / "labels.tsv")) {
        LineReader reader(dir / "labels.tsv");
        std::vector<std::string_view> tok;
        while (reader.next(tok)) {
            if (tok.empty() || tok.size() > 2) reader.fail("expected node id<TAB>label");
            const NodeId v = ids->resolve(tok[0], reader);
            const std::string_view payload = tok.size() == 2 ? tok[1] : std::string_view{};
            std::size_t start = 0;
            while (start < payload.size()) {
                std::size_t end = payload.find(',', start);
                if (end == std::string_view::npos) end = payload.size();
                const auto c = reader.number<std::int64_t>(payload.substr(start, end - start), "class id");
                if (c < 0 || c >= static_cast<std::int64_t>(meta.classes))
                    reader.fail("class id " + std::to_string(c) + " outside [0, " + std::to_string(meta.classes) + ")");
                if (labels.kind == LabelKind::single) {
                    if (start != 0) reader.fail("single-label dataset lists several classes for one node");
                    labels.classes[v] = static_cast<std::int32_t>(c);
                } else {
                    labels.flags[static_cast<std::size_t>(v) * meta.classes + static_cast<std::size_t>(c)] = 1;
                }
                start = end + 1;
            }
        }
    }

    Splits splits;
    {
        LineReader reader(dir / "splits.tsv");
        std::vector<std::string_view> tok;
        while (reader.next(tok)) {
            if (tok.size() != 2) reader.fail("expected node id<TAB>split");
            const NodeId v = ids->resolve(tok[0], reader);
            if (tok[1] == "train") splits.train.push_back(v);
            else if (tok[1] == "val") splits.val.push_back(v);
            else if (tok[1] == "test") splits.test.push_back(v);
            else reader.fail("unknown split '" + std::string(tok[1]) + "' (train|val|test)");
        }
    }
    if (meta.train_count) check_count("train split size", splits.train.size(), *meta.train_count);
    if (meta.val_count) check_count("val split size", splits.val.size(), *meta.val_count);
    if (meta.test_count) check_count("test split size", splits.test.size(), *meta.test_count);

    Graph graph;
    try {
        graph = build_graph(n, edges, std::move(features), std::move(labels), std::move(splits));
    } catch (const std::logic_error& e) {
        throw DatasetError(dir.string() + ": " + e.what());
    }
    return make_bundle(std::move(meta), std::move(graph));
}

void normalize_features(DatasetBundle& bundle) {
    auto apply = [](Graph& g) {
        FeatureMatrix f = g.features();
        f.normalize_rows();
        g = replace_features(std::move(g), std::move(f));
    };
    if (bundle.inductive()) {
        apply(bundle.train.graph);
        apply(bundle.val.graph);
        apply(bundle.test.graph);
    } else {
        apply(bundle.graph);
    }
}

void save_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir, FeatureFormat format) {
    fs::create_directories(dir);
    const Graph g = full_graph(bundle);
    const DatasetMeta& m = bundle.meta;
    auto open = [&](const char* name) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw DatasetError("cannot write " + (dir / name).string());
        return out;
    };
    {
        auto out = open("meta.tsv");
        out << "name\t" << m.name << "\nnode_count\t" << m.node_count << "\nf\t" << m.f << "\nclasses\t" << m.classes
            << "\ntask\t" << to_string(m.task) << "\nlabels\t" << (m.labels == LabelKind::single ? "single" : "multi")
            << '\n';
        if (m.train_count) out << "train_count\t" << *m.train_count << '\n';
        if (m.val_count) out << "val_count\t" << *m.val_count << '\n';
        if (m.test_count) out << "test_count\t" << *m.test_count << '\n';
    }
    {
        auto out = open("edges.tsv");
        for (NodeId v = 0; v < g.node_count(); ++v)
            for (NodeId u : g.neighbors(v))
                if (v < u) out << v << '\t' << u << '\n';
    }
    if (format == FeatureFormat::binary) {
        fs::remove(dir / "features.tsv");
        auto out = open("features.bin");
        detail::write_le<std::uint64_t>(out, g.features().rows());
        detail::write_le<std::uint64_t>(out, g.features().cols());
        detail::write_le_array(out, g.features().values().data(), g.features().values().size());
    } else {
        fs::remove(dir / "features.bin");
        auto out = open("features.tsv");
        for (NodeId v = 0; v < g.node_count(); ++v) {
            out << v;
            for (float x : g.features().row(v)) out << '\t' << format_float(x);
            out << '\n';
        }
    }
    {
        auto out = open("labels.tsv");
        const Labels& l = g.labels();
        for (NodeId v = 0; v < g.node_count(); ++v) {
            if (l.kind == LabelKind::single) {
                if (!l.classes.empty() && l.classes[v] >= 0) out << v << '\t' << l.classes[v] << '\n';
            } else if (!l.flags.empty()) {
                std::string payload;
                for (std::uint32_t c = 0; c < l.num_classes; ++c)
                    if (l.flags[static_cast<std::size_t>(v) * l.num_classes + c]) {
                        if (!payload.empty()) payload += ',';
                        payload += std::to_string(c);
                    }
                out << v << '\t' << payload << '\n';
            }
        }
    }
    {
        auto out = open("splits.tsv");
        for (NodeId v : g.splits().train) out << v << "\ttrain\n";
        for (NodeId v : g.splits().val) out << v << "\tval\n";
        for (NodeId v : g.splits().test) out << v << "\ttest\n";
    }
}

} // namespace n2g
