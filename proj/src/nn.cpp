#include "n2g/nn.hpp"

#include "n2g/detail/binary_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace n2g {

std::string_view to_string(TaskHead h) { return h == TaskHead::softmax ? "softmax" : "sigmoid"; }
std::string_view to_string(DropoutSites s) { return s == DropoutSites::fc1_only ? "fc1" : "conv+fc1"; }
std::string_view to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

TaskHead parse_task_head(std::string_view s) {
    if (s == "softmax") return TaskHead::softmax;
    if (s == "sigmoid") return TaskHead::sigmoid;
    throw std::invalid_argument("unknown task head '" + std::string(s) + "' (softmax|sigmoid)");
}

DropoutSites parse_dropout_sites(std::string_view s) {
    if (s == "fc1") return DropoutSites::fc1_only;
    if (s == "conv+fc1") return DropoutSites::conv_and_fc1;
    throw std::invalid_argument("unknown dropout sites '" + std::string(s) + "' (fc1|conv+fc1)");
}

Activation parse_activation(std::string_view s) {
    if (s == "identity") return Activation::identity;
    if (s == "relu") return Activation::relu;
    throw std::invalid_argument("unknown activation '" + std::string(s) + "' (identity|relu)");
}

void NetConfig::validate(std::uint32_t k) const {
    if (n_ker < 1) throw std::invalid_argument("n_ker must be at least 1");
    if (n_ker > k)
        throw std::invalid_argument("n_ker (" + std::to_string(n_ker) + ") exceeds grid height k (" +
                                    std::to_string(k) + ")");
    if (hidden < 1) throw std::invalid_argument("hidden width must be at least 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout rate must lie in [0, 1)");
}

template <typename T>
ModelParams<T> ModelParams<T>::zeros_like() const {
    ModelParams z;
    z.cfg = cfg;
    z.k = k;
    z.f = f;
    z.classes = classes;
    z.conv_weight.assign(conv_weight.size(), T(0));
    z.conv_bias.assign(conv_bias.size(), T(0));
    z.attention.assign(attention.size(), T(0));
    z.fc1_weight.assign(fc1_weight.size(), T(0));
    z.fc1_bias.assign(fc1_bias.size(), T(0));
    z.fc2_weight.assign(fc2_weight.size(), T(0));
    z.fc2_bias.assign(fc2_bias.size(), T(0));
    return z;
}

template <typename T>
std::size_t ModelParams<T>::parameter_count() const {
    std::size_t n = 0;
    for_each_tensor([&](std::string_view, ParamRole, auto values) { n += values.size(); });
    return n;
}

template <typename T>
ModelParams<T> init_params(const NetConfig& cfg, std::uint32_t k, std::uint32_t f, std::uint32_t classes, Rng& rng) {
    cfg.validate(k);
    if (f < 1 || classes < 1) throw std::invalid_argument("init_params: feature and class counts must be positive");
    ModelParams<T> p;
    p.cfg = cfg;
    p.k = k;
    p.f = f;
    p.classes = classes;
    const std::size_t L = p.slots();
    const std::size_t N = p.flat_size();

    auto glorot = [&rng](std::vector<T>& w, std::size_t n, double fan_in, double fan_out) {
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        w.resize(n);
        for (auto& x : w) x = static_cast<T>(dist(rng));
    };
    const std::size_t kernel_width = cfg.per_channel_kernel ? f : 1;
    glorot(p.conv_weight, cfg.n_ker * kernel_width, cfg.n_ker, cfg.n_ker);
    p.conv_bias.assign(kernel_width, T(0));
    p.attention.assign(static_cast<std::size_t>(cfg.heads) * L, T(0));
    glorot(p.fc1_weight, N * cfg.hidden, static_cast<double>(N), cfg.hidden);
    p.fc1_bias.assign(cfg.hidden, T(0));
    glorot(p.fc2_weight, static_cast<std::size_t>(cfg.hidden) * classes, cfg.hidden, classes);
    p.fc2_bias.assign(classes, T(0));
    return p;
}

template <typename T>
std::vector<T> mean_attention(const ModelParams<T>& params) {
    const std::size_t L = params.slots();
    const std::size_t h = params.cfg.heads;
    if (h == 0) throw std::invalid_argument("mean_attention: model has no attention heads");
    std::vector<T> mean(L, T(0));
    for (std::size_t t = 0; t < h; ++t)
        for (std::size_t j = 0; j < L; ++j) mean[j] += params.attention[t * L + j];
    for (auto& m : mean) m /= static_cast<T>(h);
    return mean;
}

namespace {

template <typename T>
T dropout_scale(std::uint64_t key, std::uint64_t index, double rate) {
    return counter_uniform(key, index) < rate ? T(0) : static_cast<T>(1.0 / (1.0 - rate));
}

template <typename Fn>
void for_samples(std::size_t n, Execution exec, Fn&& fn) {
    if (exec == Execution::serial) {
        for (std::size_t s = 0; s < n; ++s) fn(s);
        return;
    }
    const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t s = 0; s < count; ++s) fn(static_cast<std::size_t>(s));
}

} // namespace

template <typename T>
void forward(const ModelParams<T>& params, std::span<const T> grids, std::size_t batch, Mode mode,
             const DropoutPlan* dropout, ForwardCache<T>& cache, Execution exec) {
    const std::size_t k = params.k;
    const std::size_t f = params.f;
    const std::size_t L = params.slots();
    const std::size_t N = params.flat_size();
    const std::size_t H = params.cfg.hidden;
    const std::size_t C = params.classes;
    const std::size_t n_ker = params.cfg.n_ker;
    const bool per_channel = params.cfg.per_channel_kernel;
    const bool relu_conv = params.cfg.conv_activation == Activation::relu;
    const double rate = params.cfg.dropout;

    if (grids.size() != batch * k * f)
        throw std::invalid_argument("forward: expected " + std::to_string(batch * k * f) + " grid values, got " +
                                    std::to_string(grids.size()));
    const bool train = mode == Mode::train && rate > 0.0;
    if (train && (dropout == nullptr || dropout->sample_ids.size() != batch))
        throw std::invalid_argument("forward: train mode needs a dropout plan with one id per sample");
    const bool conv_dropout = train && params.cfg.dropout_sites == DropoutSites::conv_and_fc1;

    cache.batch = batch;
    cache.mode = mode;
    cache.input = grids;
    cache.attn = params.cfg.heads > 0 ? mean_attention(params) : std::vector<T>(L, T(0));
    cache.conv_out.resize(batch * N);
    cache.attended.resize(batch * N);
    cache.flat.resize(batch * N);
    cache.conv_drop.assign(conv_dropout ? batch * N : 0, T(0));
    cache.hidden_pre.resize(batch * H);
    cache.hidden.resize(batch * H);
    cache.hidden_drop.assign(train ? batch * H : 0, T(0));
    cache.logits.resize(batch * C);

    const T* attn = cache.attn.data();
    for_samples(batch, exec, [&](std::size_t s) {
        const T* G = grids.data() + s * k * f;
        T* x = cache.conv_out.data() + s * N;
        T* xp = cache.attended.data() + s * N;
        T* z = cache.flat.data() + s * N;
        for (std::size_t j = 0; j < L; ++j) {
            for (std::size_t c = 0; c < f; ++c) {
                T acc = params.conv_bias[per_channel ? c : 0];
                for (std::size_t t = 0; t < n_ker; ++t)
                    acc += params.conv_weight[per_channel ? t * f + c : t] * G[(j + t) * f + c];
                const std::size_t i = j * f + c;
                x[i] = acc;
                xp[i] = acc + attn[j] * acc;
                z[i] = relu_conv && xp[i] < T(0) ? T(0) : xp[i];
            }
        }
        if (conv_dropout) {
            const std::uint64_t key = stream_seed(dropout->seed, {dropout->step, dropout->sample_ids[s], 0});
            T* scale = cache.conv_drop.data() + s * N;
            for (std::size_t i = 0; i < N; ++i) {
                scale[i] = dropout_scale<T>(key, i, rate);
                z[i] *= scale[i];
            }
        }

        T* hp = cache.hidden_pre.data() + s * H;
        std::copy(params.fc1_bias.begin(), params.fc1_bias.end(), hp);
        for (std::size_t i = 0; i < N; ++i) {
            const T zi = z[i];
            if (zi == T(0)) continue;
            const T* row = params.fc1_weight.data() + i * H;
            for (std::size_t d = 0; d < H; ++d) hp[d] += zi * row[d];
        }
        T* h = cache.hidden.data() + s * H;
        for (std::size_t d = 0; d < H; ++d) h[d] = hp[d] > T(0) ? hp[d] : T(0);
        if (train) {
            const std::uint64_t key = stream_seed(dropout->seed, {dropout->step, dropout->sample_ids[s], 1});
            T* scale = cache.hidden_drop.data() + s * H;
            for (std::size_t d = 0; d < H; ++d) {
                scale[d] = dropout_scale<T>(key, d, rate);
                h[d] *= scale[d];
            }
        }

        T* y = cache.logits.data() + s * C;
        std::copy(params.fc2_bias.begin(), params.fc2_bias.end(), y);
        for (std::size_t d = 0; d < H; ++d) {
            const T hd = h[d];
            if (hd == T(0)) continue;
            const T* row = params.fc2_weight.data() + d * C;
            for (std::size_t c = 0; c < C; ++c) y[c] += hd * row[c];
        }
    });

    for (T v : cache.logits)
        if (!std::isfinite(v)) throw std::domain_error("forward: non-finite logits");
}

template <typename T>
ModelParams<T> backward(const ModelParams<T>& params, const ForwardCache<T>& cache, std::span<const T> dlogits,
                        Execution exec) {
    const std::size_t B = cache.batch;
    const std::size_t k = params.k;
    const std::size_t f = params.f;
    const std::size_t L = params.slots();
    const std::size_t N = params.flat_size();
    const std::size_t H = params.cfg.hidden;
    const std::size_t C = params.classes;
    const std::size_t n_ker = params.cfg.n_ker;
    const std::size_t heads = params.cfg.heads;
    const bool per_channel = params.cfg.per_channel_kernel;
    const bool relu_conv = params.cfg.conv_activation == Activation::relu;

    if (dlogits.size() != B * C)
        throw std::invalid_argument("backward: upstream gradient has " + std::to_string(dlogits.size()) +
                                    " values, expected batch x classes = " + std::to_string(B * C));
    if (cache.conv_out.size() != B * N || cache.hidden.size() != B * H || cache.input.size() != B * k * f)
        throw std::invalid_argument("backward: forward cache does not match the model shapes");

    ModelParams<T> g = params.zeros_like();

    // fc2: parallel over weight rows, batch summed in sample order.
    for_samples(H, exec, [&](std::size_t d) {
        T* row = g.fc2_weight.data() + d * C;
        for (std::size_t s = 0; s < B; ++s) {
            const T hd = cache.hidden[s * H + d];
            if (hd == T(0)) continue;
            for (std::size_t c = 0; c < C; ++c) row[c] += hd * dlogits[s * C + c];
        }
    });
    for (std::size_t s = 0; s < B; ++s)
        for (std::size_t c = 0; c < C; ++c) g.fc2_bias[c] += dlogits[s * C + c];

    std::vector<T> dh(B * H);
    for_samples(B, exec, [&](std::size_t s) {
        for (std::size_t d = 0; d < H; ++d) {
            T acc = T(0);
            const T* row = params.fc2_weight.data() + d * C;
            for (std::size_t c = 0; c < C; ++c) acc += row[c] * dlogits[s * C + c];
            if (!cache.hidden_drop.empty()) acc *= cache.hidden_drop[s * H + d];
            dh[s * H + d] = cache.hidden_pre[s * H + d] > T(0) ? acc : T(0);
        }
    });

    for_samples(N, exec, [&](std::size_t i) {
        T* row = g.fc1_weight.data() + i * H;
        for (std::size_t s = 0; s < B; ++s) {
            const T zi = cache.flat[s * N + i];
            if (zi == T(0)) continue;
            const T* ds = dh.data() + s * H;
            for (std::size_t d = 0; d < H; ++d) row[d] += zi * ds[d];
        }
    });
    for (std::size_t s = 0; s < B; ++s)
        for (std::size_t d = 0; d < H; ++d) g.fc1_bias[d] += dh[s * H + d];

    // Conv and attention: per-sample partial sums, reduced in sample order below.
    const std::size_t kernel_width = per_channel ? f : 1;
    const std::size_t wsz = n_ker * kernel_width;
    const std::size_t part = wsz + kernel_width + L;
    std::vector<T> partial(B * part, T(0));
    for_samples(B, exec, [&](std::size_t s) {
        T* pw = partial.data() + s * part;
        T* pb = pw + wsz;
        T* pa = pb + kernel_width;
        const T* G = cache.input.data() + s * k * f;
        const T* x = cache.conv_out.data() + s * N;
        const T* xp = cache.attended.data() + s * N;
        const T* ds = dh.data() + s * H;
        const T* drop = cache.conv_drop.empty() ? nullptr : cache.conv_drop.data() + s * N;
        for (std::size_t j = 0; j < L; ++j) {
            const T a = cache.attn[j];
            for (std::size_t c = 0; c < f; ++c) {
                const std::size_t i = j * f + c;
                T gate = drop ? drop[i] : T(1);
                if (relu_conv && !(xp[i] > T(0))) gate = T(0);
                if (gate == T(0)) continue;
                const T* row = params.fc1_weight.data() + i * H;
                T dz = T(0);
                for (std::size_t d = 0; d < H; ++d) dz += row[d] * ds[d];
                const T dxp = dz * gate;
                pa[j] += dxp * x[i];
                const T dx = dxp + a * dxp;
                pb[per_channel ? c : 0] += dx;
                for (std::size_t t = 0; t < n_ker; ++t) pw[per_channel ? t * f + c : t] += dx * G[(j + t) * f + c];
            }
        }
    });
    std::vector<T> dattn(L, T(0));
    for (std::size_t s = 0; s < B; ++s) {
        const T* pw = partial.data() + s * part;
        for (std::size_t w = 0; w < wsz; ++w) g.conv_weight[w] += pw[w];
        for (std::size_t b = 0; b < kernel_width; ++b) g.conv_bias[b] += pw[wsz + b];
        for (std::size_t j = 0; j < L; ++j) dattn[j] += pw[wsz + kernel_width + j];
    }
    if (heads > 0) {
        const T inv = T(1) / static_cast<T>(heads);
        for (std::size_t t = 0; t < heads; ++t)
            for (std::size_t j = 0; j < L; ++j) g.attention[t * L + j] = dattn[j] * inv;
    }
    return g;
}

namespace {

template <typename T>
constexpr const char* scalar_name() {
    return sizeof(T) == 4 ? "float32" : "float64";
}

} // namespace

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ModelParams<T>& params) {
    nlohmann::json header;
    header["format"] = "n2g-model";
    header["version"] = 1;
    header["scalar"] = scalar_name<T>();
    header["k"] = params.k;
    header["f"] = params.f;
    header["classes"] = params.classes;
    header["n_ker"] = params.cfg.n_ker;
    header["heads"] = params.cfg.heads;
    header["hidden"] = params.cfg.hidden;
    header["dropout"] = params.cfg.dropout;
    header["dropout_sites"] = to_string(params.cfg.dropout_sites);
    header["head"] = to_string(params.cfg.head);
    header["conv_activation"] = to_string(params.cfg.conv_activation);
    header["per_channel_kernel"] = params.cfg.per_channel_kernel;
    auto& tensors = header["tensors"] = nlohmann::json::array();
    params.for_each_tensor([&](std::string_view name, ParamRole, auto values) {
        tensors.push_back({{"name", name}, {"size", values.size()}});
    });
    const std::string text = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
    out.write("N2GM", 4);
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    params.for_each_tensor(
        [&](std::string_view, ParamRole, auto values) { detail::write_le_array(out, values.data(), values.size()); });
    if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

template <typename T>
ModelParams<T> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::string(magic, 4) != "N2GM")
        throw std::runtime_error("not a model checkpoint (bad magic): " + path.string());
    const auto len = detail::read_le<std::uint32_t>(in, "header length");
    std::string text(len, '\0');
    if (!in.read(text.data(), len)) throw std::runtime_error("truncated checkpoint header: " + path.string());
    const auto header = nlohmann::json::parse(text);
    if (header.at("scalar").get<std::string>() != scalar_name<T>())
        throw std::runtime_error("checkpoint holds " + header.at("scalar").get<std::string>() + " values, requested " +
                                 scalar_name<T>());

    ModelParams<T> p;
    p.k = header.at("k");
    p.f = header.at("f");
    p.classes = header.at("classes");
    p.cfg.n_ker = header.at("n_ker");
    p.cfg.heads = header.at("heads");
    p.cfg.hidden = header.at("hidden");
    p.cfg.dropout = header.at("dropout");
    p.cfg.dropout_sites = parse_dropout_sites(header.at("dropout_sites").get<std::string>());
    p.cfg.head = parse_task_head(header.at("head").get<std::string>());
    p.cfg.conv_activation = parse_activation(header.at("conv_activation").get<std::string>());
    p.cfg.per_channel_kernel = header.at("per_channel_kernel");

    const auto& tensors = header.at("tensors");
    std::size_t index = 0;
    auto read_tensor = [&](std::vector<T>& dst) {
        const auto& entry = tensors.at(index++);
        dst.resize(entry.at("size").get<std::size_t>());
        detail::read_le_array(in, dst.data(), dst.size(), entry.at("name").get<std::string>().c_str());
    };
    read_tensor(p.conv_weight);
    read_tensor(p.conv_bias);
    read_tensor(p.attention);
    read_tensor(p.fc1_weight);
    read_tensor(p.fc1_bias);
    read_tensor(p.fc2_weight);
    read_tensor(p.fc2_bias);
    if (p.fc1_weight.size() != p.flat_size() * p.cfg.hidden || p.attention.size() != p.cfg.heads * p.slots())
        throw std::runtime_error("checkpoint tensor sizes disagree with header shapes: " + path.string());
    return p;
}

#define N2G_INSTANTIATE(T)                                                                                    \
    template struct ModelParams<T>;                                                                           \
    template ModelParams<T> init_params<T>(const NetConfig&, std::uint32_t, std::uint32_t, std::uint32_t, Rng&); \
    template std::vector<T> mean_attention<T>(const ModelParams<T>&);                                         \
    template void forward<T>(const ModelParams<T>&, std::span<const T>, std::size_t, Mode, const DropoutPlan*,  \
                             ForwardCache<T>&, Execution);                                                    \
    template ModelParams<T> backward<T>(const ModelParams<T>&, const ForwardCache<T>&, std::span<const T>,     \
                                        Execution);                                                           \
    template void save_checkpoint<T>(const std::filesystem::path&, const ModelParams<T>&);                    \
    template ModelParams<T> load_checkpoint<T>(const std::filesystem::path&);

N2G_INSTANTIATE(float)
N2G_INSTANTIATE(double)
#undef N2G_INSTANTIATE

} // namespace n2g
