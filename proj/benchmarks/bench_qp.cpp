// Solve time of the frequency-constrained identification QP at a few grid
// cells. The workload matches the bench command: fit a passive FIR of order
// m to a 200-sample filtered step response of 1/(1 + 0.5 s) under H
// frequency constraints.
#include <benchmark/benchmark.h>

#include "pnfir/plants.hpp"
#include "pnfir/qp.hpp"
#include "pnfir/trainer.hpp"
#include "pnfir/vrft.hpp"

namespace {

pnfir::AssembledProblem make_problem(int m, int h) {
    pnfir::TrainingPair pair;
    pair.u = pnfir::probe_filtered_step(200, 0.05, 0.2);
    pnfir::TransferFunction tf;
    tf.num = Eigen::VectorXd::Constant(1, 1.0);
    tf.den = (Eigen::VectorXd(2) << 1.0, 0.5).finished();
    pair.y = pnfir::simulate_lti(tf, pair.u);

    pnfir::SynthesisSpec spec;
    spec.liftings = {pnfir::IdentityLifting{}};
    spec.m = m;
    pnfir::PassivityConfig pc;
    pc.h = h;
    pc.rho = 100.0;
    pc.rho_decay = Eigen::VectorXd::Constant(1, 0.975);
    pc.epsilon_override = Eigen::VectorXd::Constant(1, 0.001);
    spec.passivity = pc;
    return pnfir::assemble_regressor({pair}, spec);
}

void bench_solve(benchmark::State& state) {
    const auto problem = make_problem(static_cast<int>(state.range(0)),
                                      static_cast<int>(state.range(1)));
    for (auto _ : state) {
        const pnfir::SolverReport report = pnfir::solve(problem.qp);
        benchmark::DoNotOptimize(report.solution.data());
        if (report.status != pnfir::SolveStatus::optimal) {
            state.SkipWithError("solve did not reach optimal");
            break;
        }
    }
}

}  // namespace

BENCHMARK(bench_solve)
    ->Args({25, 200})
    ->Args({100, 200})
    ->Args({100, 800})
    ->Args({200, 800})
    ->Unit(benchmark::kMillisecond);
