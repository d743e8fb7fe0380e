// Parallel kernels against their serial references.
#include "n2g/grid_mapper.hpp"
#include "n2g/nn.hpp"
#include "n2g/rng.hpp"
#include "n2g/synth.hpp"

#include <benchmark/benchmark.h>

#include <numeric>

namespace {

const n2g::DatasetBundle& bundle() {
    static const n2g::DatasetBundle b = [] {
        n2g::SynthConfig cfg;
        cfg.num_nodes = 20000;
        cfg.f = 200;
        return n2g::generate(cfg);
    }();
    return b;
}

std::vector<n2g::NodeId> first_nodes(std::size_t n) {
    std::vector<n2g::NodeId> ids(n);
    std::iota(ids.begin(), ids.end(), n2g::NodeId{0});
    return ids;
}

void BM_MapAll(benchmark::State& state) {
    const auto ids = first_nodes(static_cast<std::size_t>(state.range(0)));
    const n2g::MapperConfig cfg;
    const n2g::Graph& g = bundle().graph;
    for (auto _ : state) benchmark::DoNotOptimize(n2g::map_all<float>(g, ids, cfg));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_MapAllSerial(benchmark::State& state) {
    const auto ids = first_nodes(static_cast<std::size_t>(state.range(0)));
    const n2g::MapperConfig cfg;
    const n2g::Graph& g = bundle().graph;
    for (auto _ : state) benchmark::DoNotOptimize(n2g::map_all_serial<float>(g, ids, cfg));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

struct NetFixture {
    n2g::ModelParams<float> params;
    n2g::GridSet<float> grids;
    std::vector<float> dlogits;

    explicit NetFixture(std::size_t batch) {
        n2g::Rng rng(7);
        params = n2g::init_params<float>(n2g::NetConfig{}, 16, 200, 3, rng);
        grids = n2g::map_all<float>(bundle().graph, first_nodes(batch), n2g::MapperConfig{});
        dlogits.assign(batch * 3, 0.01f);
    }
};

void forward_backward(benchmark::State& state, n2g::Execution exec) {
    const auto batch = static_cast<std::size_t>(state.range(0));
    NetFixture fx(batch);
    n2g::ForwardCache<float> cache;
    std::vector<std::uint64_t> ids(batch);
    std::iota(ids.begin(), ids.end(), std::uint64_t{0});
    const n2g::DropoutPlan plan{1, 0, ids};
    for (auto _ : state) {
        n2g::forward(fx.params, std::span<const float>(fx.grids.grids), batch, n2g::Mode::train, &plan, cache, exec);
        benchmark::DoNotOptimize(n2g::backward(fx.params, cache, std::span<const float>(fx.dlogits), exec));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ForwardBackward(benchmark::State& state) { forward_backward(state, n2g::Execution::parallel); }
void BM_ForwardBackwardSerial(benchmark::State& state) { forward_backward(state, n2g::Execution::serial); }

} // namespace

BENCHMARK(BM_MapAll)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MapAllSerial)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForwardBackward)->Arg(15)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForwardBackwardSerial)->Arg(15)->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
