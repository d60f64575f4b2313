// Verification kernels: dense Nyquist margin scan and the Toeplitz
// eigenvalue oracle.
#include <benchmark/benchmark.h>

#include "pnfir/passivity.hpp"
#include "pnfir/rng.hpp"

namespace {

Eigen::VectorXd decaying_taps(int m) {
    pnfir::Rng rng(5);
    Eigen::VectorXd g(m);
    for (int k = 0; k < m; ++k) g[k] = (0.5 + 0.1 * rng.uniform()) * std::pow(0.95, k);
    return g;
}

void bench_frequency_margin(benchmark::State& state) {
    const Eigen::VectorXd g = decaying_taps(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(pnfir::verify_frequency_margin(g, 4000));
    }
}

void bench_toeplitz_min_eig(benchmark::State& state) {
    const Eigen::VectorXd g = decaying_taps(100);
    for (auto _ : state) {
        benchmark::DoNotOptimize(pnfir::toeplitz_min_eig(g, static_cast<int>(state.range(0))));
    }
}

}  // namespace

BENCHMARK(bench_frequency_margin)->Arg(100)->Arg(950)->Unit(benchmark::kMicrosecond);
BENCHMARK(bench_toeplitz_min_eig)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
