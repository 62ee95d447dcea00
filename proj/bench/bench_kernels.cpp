// Serial reference vs OpenMP version of each hot kernel. Arg 0 = serial, 1 = parallel.

#include <map>
#include <random>

#include <benchmark/benchmark.h>
#include <spdlog/spdlog.h>

#include "dynsel/data.hpp"
#include "dynsel/kernels.hpp"
#include "dynsel/pool.hpp"
#include "dynsel/selection.hpp"

using namespace dynsel;

namespace {

kernels::Exec exec_of(const benchmark::State& state) {
    return state.range(0) == 0 ? kernels::Exec::Serial : kernels::Exec::Parallel;
}

const data::Dataset& ecoli() {
    static const data::Dataset ds =
        data::standardize(data::encode_nominals(data::load_file(std::string(DYNSEL_DATA_DIR) + "/ecoli.dat"))).train;
    return ds;
}

const pool::Pool& ecoli_pool() {
    static const pool::Pool p = pool::generate_pool(ecoli(), resample::Variant::SM, pool::PoolConfig{}, 1,
                                                    kernels::Exec::Serial);
    return p;
}

// Synthetic reference set large enough for the neighbour search to matter.
const Matrix& cloud(std::size_t rows) {
    static std::map<std::size_t, Matrix> cache;
    auto it = cache.find(rows);
    if (it != cache.end()) return it->second;
    Rng rng(rows);
    std::normal_distribution<double> n(0, 1);
    Matrix m;
    for (std::size_t i = 0; i < rows; ++i) m.append_row(std::vector<double>{n(rng), n(rng), n(rng), n(rng), n(rng)});
    return cache.emplace(rows, std::move(m)).first->second;
}

void BM_KnnBatch(benchmark::State& state) {
    const auto& ref = cloud(4000);
    const auto& queries = cloud(1000);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::knn_batch(ref, queries, 210, exec_of(state)));
}

void BM_PoolOutputs(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(kernels::pool_outputs(ecoli_pool().trees, ecoli().features, exec_of(state)));
}

void BM_GeneratePool(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(
            pool::generate_pool(ecoli(), resample::Variant::SM, pool::PoolConfig{}, 2, exec_of(state)));
}

void BM_PrepareRrc(benchmark::State& state) {
    const auto ctx0 = ds::make_context(ecoli_pool().trees, ecoli(), ecoli().size(), ds::Params{}, kernels::Exec::Serial);
    for (auto _ : state) {
        auto ctx = ctx0;
        ds::prepare_rrc(ctx, exec_of(state));
        benchmark::DoNotOptimize(ctx.csrc.data());
    }
}

void BM_TrainMeta(benchmark::State& state) {
    const auto ctx0 = ds::make_context(ecoli_pool().trees, ecoli(), ecoli().size(), ds::Params{}, kernels::Exec::Serial);
    for (auto _ : state) {
        auto ctx = ctx0;
        ds::train_meta(ctx, exec_of(state));
        benchmark::DoNotOptimize(ctx.meta);
    }
}

void BM_PredictBatch(benchmark::State& state) {
    auto ctx = ds::make_context(ecoli_pool().trees, ecoli(), ecoli().size(), ds::Params{}, kernels::Exec::Serial);
    ds::prepare_rrc(ctx, kernels::Exec::Serial);
    ds::train_meta(ctx, kernels::Exec::Serial);
    const std::vector<ds::Method> all(ds::kAllMethods.begin(), ds::kAllMethods.end());
    for (auto _ : state) benchmark::DoNotOptimize(ds::predict_batch(ctx, ecoli().features, all, exec_of(state)));
}

}  // namespace

BENCHMARK(BM_KnnBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PoolOutputs)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GeneratePool)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PrepareRrc)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainMeta)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
    spdlog::set_level(spdlog::level::err);
    // build shared inputs up front so the first timed run does not pay for them
    ecoli_pool();
    cloud(4000);
    cloud(1000);
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
