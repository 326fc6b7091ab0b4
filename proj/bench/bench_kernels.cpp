// Serial references against the OpenMP kernels.

#include "hgfm/analysis.hpp"
#include "hgfm/parallel.hpp"
#include "hgfm/random_systems.hpp"
#include "hgfm/scenario.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace hgfm;

namespace {

Eigen::MatrixXd symmetric(Eigen::Index n) {
    Eigen::MatrixXd S = Eigen::MatrixXd::Random(n, n);
    return S + S.transpose();
}

const SystemModel& fig2_model() {
    static const SystemModel m = build_model(build_run(load_scenario(HGFM_FIXTURE_DIR "/fig2.json")).system);
    return m;
}

std::vector<SystemModel> certified_batch(std::size_t count) {
    std::mt19937_64 rng(1);
    std::vector<SystemModel> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(build_model(random_certified_system(rng)));
    return out;
}

void BM_QuadraticFormSerial(benchmark::State& state) {
    const auto n = static_cast<Eigen::Index>(state.range(0));
    const Eigen::MatrixXd S = symmetric(n);
    const Eigen::MatrixXd X = random_unit_states(n, 20000, 7);
    for (auto _ : state) benchmark::DoNotOptimize(max_quadratic_form_serial(S, X));
}

void BM_QuadraticFormParallel(benchmark::State& state) {
    const auto n = static_cast<Eigen::Index>(state.range(0));
    const Eigen::MatrixXd S = symmetric(n);
    const Eigen::MatrixXd X = random_unit_states(n, 20000, 7);
    for (auto _ : state) benchmark::DoNotOptimize(max_quadratic_form(S, X));
    state.counters["threads"] = worker_threads();
}

void BM_NMinusOneSerial(benchmark::State& state) {
    const SystemModel& m = fig2_model();
    for (auto _ : state) benchmark::DoNotOptimize(n_minus_one_serial(m));
}

void BM_NMinusOneParallel(benchmark::State& state) {
    const SystemModel& m = fig2_model();
    for (auto _ : state) benchmark::DoNotOptimize(n_minus_one(m));
    state.counters["threads"] = worker_threads();
}

void BM_SpectraSerial(benchmark::State& state) {
    const auto batch = certified_batch(static_cast<std::size_t>(state.range(0)));
    const std::function<double(std::size_t)> job = [&](std::size_t i) { return spectrum(batch[i]).max_real_restricted; };
    for (auto _ : state) benchmark::DoNotOptimize(map_serial<double>(batch.size(), job));
}

void BM_SpectraParallel(benchmark::State& state) {
    const auto batch = certified_batch(static_cast<std::size_t>(state.range(0)));
    const std::function<double(std::size_t)> job = [&](std::size_t i) { return spectrum(batch[i]).max_real_restricted; };
    for (auto _ : state) benchmark::DoNotOptimize(map_parallel<double>(batch.size(), job));
    state.counters["threads"] = worker_threads();
}

}  // namespace

BENCHMARK(BM_QuadraticFormSerial)->Arg(8)->Arg(32)->Arg(96);
BENCHMARK(BM_QuadraticFormParallel)->Arg(8)->Arg(32)->Arg(96);
BENCHMARK(BM_NMinusOneSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NMinusOneParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SpectraSerial)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SpectraParallel)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
