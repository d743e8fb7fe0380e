#pragma once

// Three-layer grid network with analytic backward pass:
//
//   x  = Conv(G)                 1-D conv along the slot axis, stride 1, no padding,
//                                one kernel shared by every channel
//   x' = x + mean_h(F_att) o x   grid-level attention, one weight per slot
//   z  = act(x')                 flattened slot-major (j * f + c)
//   h  = relu(W1 z + b1)
//   y  = W2 h + b2               logits
//
// Dropout uses inverted scaling and counter-based masks keyed by (seed, step,
// sample id), so masks are reproducible and independent of thread count.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "n2g/rng.hpp"

namespace n2g {

enum class TaskHead : std::uint8_t { softmax, sigmoid };
enum class DropoutSites : std::uint8_t { fc1_only, conv_and_fc1 };
enum class Activation : std::uint8_t { identity, relu };
enum class Mode : std::uint8_t { train, eval };
enum class Execution : std::uint8_t { parallel, serial };

std::string_view to_string(TaskHead);
std::string_view to_string(DropoutSites);
std::string_view to_string(Activation);
TaskHead parse_task_head(std::string_view);
DropoutSites parse_dropout_sites(std::string_view);
Activation parse_activation(std::string_view);

struct NetConfig {
    std::uint32_t n_ker = 1;
    /// Attention heads; 0 disables attention.
    std::uint32_t heads = 50;
    std::uint32_t hidden = 64;
    double dropout = 0.5;
    DropoutSites dropout_sites = DropoutSites::fc1_only;
    TaskHead head = TaskHead::softmax;
    Activation conv_activation = Activation::identity;
    bool per_channel_kernel = false;

    void validate(std::uint32_t k) const;
    bool operator==(const NetConfig&) const = default;
};

enum class ParamRole : std::uint8_t { weight, attention, bias };

template <typename T>
struct ModelParams {
    NetConfig cfg;
    std::uint32_t k = 0;
    std::uint32_t f = 0;
    std::uint32_t classes = 0;

    std::vector<T> conv_weight;  // n_ker, or n_ker x f when per-channel
    std::vector<T> conv_bias;    // 1, or f when per-channel
    std::vector<T> attention;    // heads x L
    std::vector<T> fc1_weight;   // (L * f) x hidden
    std::vector<T> fc1_bias;     // hidden
    std::vector<T> fc2_weight;   // hidden x classes
    std::vector<T> fc2_bias;     // classes

    /// Conv output length L = k - n_ker + 1.
    std::uint32_t slots() const { return k - cfg.n_ker + 1; }
    std::size_t flat_size() const { return static_cast<std::size_t>(slots()) * f; }

    /// Same shapes, all zeros.
    ModelParams zeros_like() const;
    std::size_t parameter_count() const;

    /// Visits tensors in declaration order as (name, role, values).
    template <typename Fn>
    void for_each_tensor(Fn&& fn) {
        fn("conv_weight", ParamRole::weight, std::span<T>(conv_weight));
        fn("conv_bias", ParamRole::bias, std::span<T>(conv_bias));
        fn("attention", ParamRole::attention, std::span<T>(attention));
        fn("fc1_weight", ParamRole::weight, std::span<T>(fc1_weight));
        fn("fc1_bias", ParamRole::bias, std::span<T>(fc1_bias));
        fn("fc2_weight", ParamRole::weight, std::span<T>(fc2_weight));
        fn("fc2_bias", ParamRole::bias, std::span<T>(fc2_bias));
    }
    template <typename Fn>
    void for_each_tensor(Fn&& fn) const {
        fn("conv_weight", ParamRole::weight, std::span<const T>(conv_weight));
        fn("conv_bias", ParamRole::bias, std::span<const T>(conv_bias));
        fn("attention", ParamRole::attention, std::span<const T>(attention));
        fn("fc1_weight", ParamRole::weight, std::span<const T>(fc1_weight));
        fn("fc1_bias", ParamRole::bias, std::span<const T>(fc1_bias));
        fn("fc2_weight", ParamRole::weight, std::span<const T>(fc2_weight));
        fn("fc2_bias", ParamRole::bias, std::span<const T>(fc2_bias));
    }

    bool operator==(const ModelParams&) const = default;
};

/// Glorot-uniform conv and FC weights, zero attention bank, zero biases.
template <typename T>
ModelParams<T> init_params(const NetConfig& cfg, std::uint32_t k, std::uint32_t f, std::uint32_t classes, Rng& rng);

/// Element-wise mean over the attention heads (length L). Throws if heads == 0.
template <typename T>
std::vector<T> mean_attention(const ModelParams<T>& params);

/// Dropout stream for one train-mode pass. Sample i of the batch draws its masks
/// from key (seed, step, sample_ids[i]).
struct DropoutPlan {
    std::uint64_t seed = 0;
    std::uint64_t step = 0;
    std::span<const std::uint64_t> sample_ids;
};

template <typename T>
struct ForwardCache {
    std::size_t batch = 0;
    Mode mode = Mode::eval;
    std::span<const T> input;
    std::vector<T> attn;         // L, mean attention (zeros when heads == 0)
    std::vector<T> conv_out;     // B x L*f  (x)
    std::vector<T> attended;     // B x L*f  (x')
    std::vector<T> flat;         // B x L*f  (z, after activation and dropout)
    std::vector<T> conv_drop;    // B x L*f  dropout scale, empty when unused
    std::vector<T> hidden_pre;   // B x hidden
    std::vector<T> hidden;       // B x hidden (after relu and dropout)
    std::vector<T> hidden_drop;  // B x hidden dropout scale, empty in eval mode
    std::vector<T> logits;       // B x classes
};

/// Runs the network over `batch` grids stored back to back (k * f each).
template <typename T>
void forward(const ModelParams<T>& params, std::span<const T> grids, std::size_t batch, Mode mode,
             const DropoutPlan* dropout, ForwardCache<T>& cache, Execution exec = Execution::parallel);

/// Gradients of sum_i <dlogits_i, logits_i> with respect to every parameter.
/// `dlogits` is batch x classes. Reductions over the batch run in sample order.
template <typename T>
ModelParams<T> backward(const ModelParams<T>& params, const ForwardCache<T>& cache, std::span<const T> dlogits,
                        Execution exec = Execution::parallel);

/// Checkpoint: "N2GM", u32 header length, JSON header (config, shapes, scalar
/// type), then every tensor in declaration order as little-endian raw values.
template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ModelParams<T>& params);
template <typename T>
ModelParams<T> load_checkpoint(const std::filesystem::path& path);

} // namespace n2g
