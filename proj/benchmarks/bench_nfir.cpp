// Throughput of operator evaluation, batch and sample by sample.
#include <benchmark/benchmark.h>

#include "pnfir/closed_loop.hpp"
#include "pnfir/nfir.hpp"
#include "pnfir/rng.hpp"

namespace {

pnfir::NfirOperator make_operator(int m, int branches) {
    pnfir::NfirOperator op;
    op.ts = 0.01;
    pnfir::Rng rng(7);
    for (int j = 0; j < branches; ++j) {
        pnfir::NfirBranch b;
        b.lifting = pnfir::VolcanoLifting{0.0, 0.3 + 0.5 * j};
        b.taps = Eigen::VectorXd(m);
        for (int k = 0; k < m; ++k) b.taps[k] = 0.1 * rng.gaussian() * std::pow(0.97, k);
        op.branches.push_back(std::move(b));
    }
    return op;
}

pnfir::Signal make_input(Eigen::Index n, double ts) {
    pnfir::Rng rng(11);
    Eigen::VectorXd u(n);
    for (Eigen::Index t = 0; t < n; ++t) u[t] = rng.gaussian();
    return pnfir::Signal(std::move(u), ts);
}

void bench_nfir_apply(benchmark::State& state) {
    const auto op = make_operator(static_cast<int>(state.range(0)),
                                  static_cast<int>(state.range(1)));
    const auto u = make_input(2001, op.ts);
    for (auto _ : state) {
        const pnfir::Signal y = pnfir::nfir_apply(op, u);
        benchmark::DoNotOptimize(y.samples.data());
    }
    state.SetItemsProcessed(state.iterations() * u.size());
}

void bench_controller_step(benchmark::State& state) {
    const auto op = make_operator(static_cast<int>(state.range(0)),
                                  static_cast<int>(state.range(1)));
    pnfir::NfirController controller(op);
    pnfir::Rng rng(13);
    for (auto _ : state) {
        benchmark::DoNotOptimize(controller.step(rng.gaussian()));
    }
    state.SetItemsProcessed(state.iterations());
}

}  // namespace

BENCHMARK(bench_nfir_apply)->Args({100, 6})->Args({950, 6})->Unit(benchmark::kMillisecond);
BENCHMARK(bench_controller_step)->Args({100, 6})->Args({950, 6});
