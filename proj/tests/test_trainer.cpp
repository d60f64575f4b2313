#include <cmath>
#include <optional>
#include <vector>

#include "doctest.h"
#include "pnfir/nfir.hpp"
#include "pnfir/passivity.hpp"
#include "pnfir/rng.hpp"
#include "pnfir/trainer.hpp"

using namespace pnfir;

namespace {

Signal make_signal(std::vector<double> v, double ts = 1.0) {
    Signal s;
    s.ts = ts;
    s.samples = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    return s;
}

Signal random_signal(Rng& rng, Eigen::Index n, double ts = 1.0) {
    Signal s;
    s.ts = ts;
    s.samples = Eigen::VectorXd::NullaryExpr(n, [&](Eigen::Index) { return rng.gaussian(); });
    return s;
}

}  // namespace

TEST_CASE("identity regressor is the shifted input matrix") {
    TrainingPair pair{make_signal({1, 2, 3}), make_signal({4, 5, 6}), std::nullopt};
    SynthesisSpec spec;
    spec.liftings = {IdentityLifting{}};
    spec.m = 2;
    const AssembledProblem ap = assemble_regressor({pair}, spec);
    Eigen::MatrixXd expect(3, 2);
    expect << 1, 0, 2, 1, 3, 2;
    CHECK(ap.qp.regressor.isApprox(expect, 1e-15));
    CHECK(ap.qp.target.isApprox(make_signal({4, 5, 6}).samples, 1e-15));
    REQUIRE(ap.tap_offsets.size() == 1);
    CHECK(ap.tap_offsets[0] == 0);
    CHECK(ap.alpha_index == -1);
    CHECK(ap.ts == doctest::Approx(1.0));
    CHECK(ap.qp.constraints.empty());
}

TEST_CASE("two branches give block columns and offsets") {
    TrainingPair pair{make_signal({1, -1, 2}), make_signal({0, 0, 0}), std::nullopt};
    SynthesisSpec spec;
    spec.liftings = {IdentityLifting{}, VolcanoLifting{0.0, 1.0}};
    spec.m = 2;
    const AssembledProblem ap = assemble_regressor({pair}, spec);
    REQUIRE(ap.tap_offsets.size() == 2);
    CHECK(ap.tap_offsets[0] == 0);
    CHECK(ap.tap_offsets[1] == 2);
    CHECK(ap.qp.regressor.cols() == 4);
    // branch 0 columns are the plain shifted input
    CHECK(ap.qp.regressor(2, 0) == doctest::Approx(2.0));
    CHECK(ap.qp.regressor(2, 1) == doctest::Approx(-1.0));
    // branch 1 columns carry f(t) f(t-k): volcano of radius 1 at 0 maps
    // |z|<1 to 1 and z=2 to 0.5, so A(2, off+0) = f(2)^2 u(2) = 0.5^2*2
    CHECK(ap.qp.regressor(2, 2) == doctest::Approx(0.25 * 2.0));
    CHECK(ap.qp.regressor(2, 3) == doctest::Approx(0.5 * 1.0 * -1.0));
}

TEST_CASE("integrator appends a cumulative sum column with a sign bound") {
    TrainingPair pair{make_signal({1, 2, 3}, 0.5), make_signal({0, 0, 0}, 0.5), std::nullopt};
    SynthesisSpec spec;
    spec.liftings = {IdentityLifting{}};
    spec.m = 1;
    spec.integrator = true;
    const AssembledProblem ap = assemble_regressor({pair}, spec);
    CHECK(ap.alpha_index == 1);
    CHECK(ap.qp.regressor(0, 1) == doctest::Approx(0.5));
    CHECK(ap.qp.regressor(1, 1) == doctest::Approx(1.5));
    CHECK(ap.qp.regressor(2, 1) == doctest::Approx(3.0));
    REQUIRE(ap.qp.constraints.bounds().size() == 1);
    CHECK(ap.qp.constraints.bounds()[0].var == 1);
    CHECK(ap.qp.constraints.bounds()[0].lower == doctest::Approx(0.0));
    CHECK(ap.qp.constraints.bounds()[0].upper == kInf);
}

TEST_CASE("burn-in drops rows that read zero padding") {
    TrainingPair pair{make_signal({1, 2, 3, 4}), make_signal({10, 20, 30, 40}), std::nullopt};
    SynthesisSpec spec;
    spec.liftings = {IdentityLifting{}};
    spec.m = 2;
    spec.burn_in = true;  // burn = m + R - 2 = 1
    const AssembledProblem ap = assemble_regressor({pair}, spec);
    CHECK(ap.qp.regressor.rows() == 3);
    Eigen::MatrixXd expect(3, 2);
    expect << 2, 1, 3, 2, 4, 3;
    CHECK(ap.qp.regressor.isApprox(expect, 1e-15));
    CHECK(ap.qp.target.isApprox(make_signal({20, 30, 40}).samples, 1e-15));
}

TEST_CASE("ridge hits tap variables only") {
    TrainingPair pair{make_signal({1, 2, 3}), make_signal({0, 0, 0}), std::nullopt};
    SynthesisSpec spec;
    spec.liftings = {IdentityLifting{}};
    spec.m = 2;
    spec.integrator = true;
    spec.gamma = 2.5;
    const AssembledProblem ap = assemble_regressor({pair}, spec);
    REQUIRE(ap.qp.ridge.size() == 3);
    CHECK(ap.qp.ridge[0] == doctest::Approx(2.5));
    CHECK(ap.qp.ridge[1] == doctest::Approx(2.5));
    CHECK(ap.qp.ridge[2] == doctest::Approx(0.0));
}

TEST_CASE("passivity config attaches frequency rows and decay bounds") {
    TrainingPair pair{make_signal({1, 2, 3, 4, 5}), make_signal({1, 2, 3, 4, 5}), std::nullopt};
    SynthesisSpec spec;
    spec.liftings = {IdentityLifting{}, IdentityLifting{}};
    spec.m = 3;
    PassivityConfig pc;
    pc.h = 8;
    pc.rho = 5.0;
    pc.rho_decay = Eigen::VectorXd::Constant(1, 0.9);
    spec.passivity = pc;
    const AssembledProblem ap = assemble_regressor({pair}, spec);
    // (H+1) frequency rows per branch, then m decay bounds per branch
    CHECK(ap.qp.constraints.num_block_rows() == 2 * 9);
    CHECK(ap.qp.constraints.bounds().size() == 2 * 3);
    const auto dense = ap.qp.constraints.materialize_dense();
    // first frequency row (h = 0) of branch 0: sum_k 2 g(k) >= eps
    const double eps = epsilon_bound(3, 0.9, 5.0, 8);
    CHECK(dense.coeffs(0, 0) == doctest::Approx(2.0));
    CHECK(dense.coeffs(0, 1) == doctest::Approx(2.0));
    CHECK(dense.coeffs(0, 2) == doctest::Approx(2.0));
    CHECK(dense.coeffs(0, 3) == doctest::Approx(0.0));  // branch 1 vars untouched
    CHECK(dense.lower[0] == doctest::Approx(eps));
    CHECK(dense.upper[0] == kInf);
    // branch 1 decay bound at k = 2: |g| <= rho * rho_j^2
    const auto& bd = ap.qp.constraints.bounds();
    CHECK(bd[5].var == 5);
    CHECK(bd[5].upper == doctest::Approx(5.0 * 0.81));
    CHECK(bd[5].lower == doctest::Approx(-5.0 * 0.81));
}

TEST_CASE("per-branch epsilon override replaces the analytic bound") {
    TrainingPair pair{make_signal({1, 2, 3, 4}), make_signal({1, 2, 3, 4}), std::nullopt};
    SynthesisSpec spec;
    spec.liftings = {IdentityLifting{}, VolcanoLifting{0.0, 2.0}};
    spec.m = 2;
    PassivityConfig pc;
    pc.h = 4;
    pc.rho = 3.0;
    pc.rho_decay = Eigen::VectorXd::Constant(1, 0.8);
    pc.epsilon_override = (Eigen::VectorXd(2) << 0.25, 0.5).finished();
    spec.passivity = pc;
    const AssembledProblem ap = assemble_regressor({pair}, spec);
    const auto dense = ap.qp.constraints.materialize_dense();
    CHECK(dense.lower[0] == doctest::Approx(0.25));
    CHECK(dense.lower[5] == doctest::Approx(0.5));
}

TEST_CASE("training recovers a known FIR exactly") {
    Rng rng(31);
    const Eigen::VectorXd g = (Eigen::VectorXd(3) << 1.0, 0.4, -0.2).finished();
    Signal u = random_signal(rng, 120);
    TrainingPair pair{u, fir_apply(g, u), std::nullopt};
    SynthesisSpec spec;
    spec.liftings = {IdentityLifting{}};
    spec.m = 3;
    const TrainResult result = train({pair}, spec);
    REQUIRE(result.report.status == SolveStatus::optimal);
    REQUIRE(result.op.branches.size() == 1);
    CHECK(result.op.branches[0].taps.isApprox(g, 1e-6));
    CHECK(result.rmse <= 1e-7);
    CHECK(result.op.alpha == doctest::Approx(0.0));
    CHECK(result.op.ts == doctest::Approx(1.0));
}

TEST_CASE("training recovers a nonlinear operator built from the same liftings") {
    Rng rng(32);
    NfirOperator truth;
    truth.ts = 1.0;
    truth.branches.push_back({GaussianWindowLifting{Eigen::VectorXd::Constant(1, 1.0), 4.0},
                              (Eigen::VectorXd(2) << 0.8, 0.3).finished()});
    truth.branches.push_back({IdentityLifting{}, (Eigen::VectorXd(2) << 0.5, -0.1).finished()});
    Signal u = random_signal(rng, 400);
    TrainingPair pair{u, nfir_apply(truth, u), std::nullopt};
    SynthesisSpec spec;
    spec.liftings = {truth.branches[0].lifting, truth.branches[1].lifting};
    spec.m = 2;
    const TrainResult result = train({pair}, spec);
    REQUIRE(result.report.status == SolveStatus::optimal);
    CHECK(result.rmse <= 1e-6);
    CHECK(result.op.branches[0].taps.isApprox(truth.branches[0].taps, 1e-4));
    CHECK(result.op.branches[1].taps.isApprox(truth.branches[1].taps, 1e-4));
}

TEST_CASE("integrator recovery pins alpha") {
    Rng rng(33);
    Signal u = random_signal(rng, 150, 0.1);
    Signal y = u;  // y = 0.7 u + 0.25 ts cumsum(u)
    double acc = 0.0;
    for (Eigen::Index t = 0; t < u.size(); ++t) {
        acc += u.samples[t];
        y.samples[t] = 0.7 * u.samples[t] + 0.25 * 0.1 * acc;
    }
    SynthesisSpec spec;
    spec.liftings = {IdentityLifting{}};
    spec.m = 1;
    spec.integrator = true;
    const TrainResult result = train({{u, y, std::nullopt}}, spec);
    REQUIRE(result.report.status == SolveStatus::optimal);
    CHECK(result.op.branches[0].taps[0] == doctest::Approx(0.7).epsilon(1e-6));
    CHECK(result.op.alpha == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("passivity constraint forces a passive approximation of an active target") {
    Rng rng(34);
    // pure delay: not passive (negative real part at high frequency)
    const Eigen::VectorXd g = (Eigen::VectorXd(2) << 0.0, 1.0).finished();
    Signal u = random_signal(rng, 200);
    TrainingPair pair{u, fir_apply(g, u), std::nullopt};

    SynthesisSpec free_spec;
    free_spec.liftings = {IdentityLifting{}};
    free_spec.m = 2;
    const TrainResult unconstrained = train({pair}, free_spec);
    REQUIRE(unconstrained.report.status == SolveStatus::optimal);

    SynthesisSpec spec = free_spec;
    PassivityConfig pc;
    pc.h = 64;
    pc.rho = 10.0;
    pc.rho_decay = Eigen::VectorXd::Constant(1, 0.9);
    pc.epsilon_override = Eigen::VectorXd::Constant(1, 1e-3);
    spec.passivity = pc;
    const TrainResult constrained = train({pair}, spec);
    REQUIRE(constrained.report.status == SolveStatus::optimal);

    CHECK(verify_frequency_margin(constrained.op.branches[0].taps, 4096) >= 0.0);
    CHECK(constrained.rmse > unconstrained.rmse);
    CHECK(toeplitz_min_eig(constrained.op.branches[0].taps, 256) >= -1e-8);
}

TEST_CASE("external liftings train from the q channel") {
    Rng rng(35);
    NfirOperator truth;
    truth.branches.push_back({ExternalGaussianLifting{1.0, 2.0},
                              (Eigen::VectorXd(2) << 0.9, 0.2).finished()});
    Signal u = random_signal(rng, 300);
    Signal q = random_signal(rng, 300);
    Signal y = nfir_apply_external(truth, u, q);
    TrainingPair pair{u, y, q};
    SynthesisSpec spec;
    spec.liftings = {truth.branches[0].lifting};
    spec.m = 2;
    const TrainResult result = train({pair}, spec);
    REQUIRE(result.report.status == SolveStatus::optimal);
    CHECK(result.op.branches[0].taps.isApprox(truth.branches[0].taps, 1e-5));
    CHECK(result.op.externally_driven());
}

TEST_CASE("multiple pairs stack rows") {
    TrainingPair a{make_signal({1, 2}), make_signal({1, 2}), std::nullopt};
    TrainingPair b{make_signal({3, 4, 5}), make_signal({3, 4, 5}), std::nullopt};
    SynthesisSpec spec;
    spec.liftings = {IdentityLifting{}};
    spec.m = 1;
    const AssembledProblem ap = assemble_regressor({a, b}, spec);
    CHECK(ap.qp.regressor.rows() == 5);
    CHECK(ap.qp.regressor(0, 0) == doctest::Approx(1.0));
    CHECK(ap.qp.regressor(2, 0) == doctest::Approx(3.0));
    // convolution state does not leak across the pair boundary: row 2 is the
    // first row of pair b and with m = 2 would read only b's own history
}

TEST_CASE("validation rejects malformed requests") {
    TrainingPair pair{make_signal({1, 2, 3}), make_signal({1, 2, 3}), std::nullopt};
    SynthesisSpec spec;
    spec.liftings = {IdentityLifting{}};
    spec.m = 2;

    SynthesisSpec bad = spec;
    bad.m = 0;
    CHECK_THROWS_AS(assemble_regressor({pair}, bad), std::invalid_argument);

    bad = spec;
    bad.liftings.clear();
    CHECK_THROWS_AS(assemble_regressor({pair}, bad), std::invalid_argument);

    bad = spec;
    bad.gamma = -1.0;
    CHECK_THROWS_AS(assemble_regressor({pair}, bad), std::invalid_argument);

    CHECK_THROWS_AS(assemble_regressor({}, spec), std::invalid_argument);

    TrainingPair mismatch{make_signal({1, 2, 3}), make_signal({1, 2}), std::nullopt};
    CHECK_THROWS_AS(assemble_regressor({mismatch}, spec), std::invalid_argument);

    TrainingPair other_ts{make_signal({1, 2, 3}, 0.5), make_signal({1, 2, 3}, 0.5), std::nullopt};
    CHECK_THROWS_AS(assemble_regressor({pair, other_ts}, spec), std::invalid_argument);

    // m above the data length needs the explicit override
    bad = spec;
    bad.m = 5;
    CHECK_THROWS_AS(assemble_regressor({pair}, bad), std::invalid_argument);
    bad.allow_order_above_data = true;
    bad.gamma = 1.0;
    CHECK_NOTHROW(assemble_regressor({pair}, bad));

    // external lifting without q
    bad = spec;
    bad.liftings = {ExternalGaussianLifting{0.0, 1.0}};
    CHECK_THROWS_AS(assemble_regressor({pair}, bad), std::invalid_argument);

    // q of the wrong length
    TrainingPair badq{make_signal({1, 2, 3}), make_signal({1, 2, 3}), make_signal({1, 2})};
    CHECK_THROWS_AS(assemble_regressor({badq}, bad), std::invalid_argument);

    // burn-in consuming every row: m = 2 with a window-3 lifting burns
    // m + R - 2 = 3 samples, the whole pair
    bad = spec;
    bad.liftings = {GaussianWindowLifting{Eigen::VectorXd::Zero(3), 1.0}};
    bad.burn_in = true;
    CHECK_THROWS_AS(assemble_regressor({pair}, bad), std::invalid_argument);

    // passivity parameter validation
    bad = spec;
    PassivityConfig pc;
    pc.h = 0;
    bad.passivity = pc;
    CHECK_THROWS_AS(assemble_regressor({pair}, bad), std::invalid_argument);
    pc.h = 4;
    pc.rho = 0.0;
    bad.passivity = pc;
    CHECK_THROWS_AS(assemble_regressor({pair}, bad), std::invalid_argument);
    pc.rho = 1.0;
    pc.rho_decay = Eigen::VectorXd::Constant(3, 0.9);  // neither scalar nor one per branch
    bad.passivity = pc;
    CHECK_THROWS_AS(assemble_regressor({pair}, bad), std::invalid_argument);
}
