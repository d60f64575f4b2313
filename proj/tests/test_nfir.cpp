#include <cmath>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "pnfir/nfir.hpp"
#include "pnfir/rng.hpp"

using namespace pnfir;

namespace {

Signal sig(std::initializer_list<double> v, double ts = 1.0) {
    Eigen::VectorXd s(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (const double x : v) s[i++] = x;
    return Signal(std::move(s), ts);
}

Signal random_signal(Rng& rng, Eigen::Index n, double ts = 1.0) {
    Eigen::VectorXd s(n);
    for (Eigen::Index i = 0; i < n; ++i) s[i] = rng.gaussian();
    return Signal(std::move(s), ts);
}

Eigen::VectorXd random_taps(Rng& rng, Eigen::Index m) {
    Eigen::VectorXd g(m);
    for (Eigen::Index i = 0; i < m; ++i) g[i] = rng.uniform(-1.0, 1.0);
    return g;
}

// f(z) = z on [-100, 100] through the tabulated escape hatch
LiftingFunction linear_map() {
    Eigen::VectorXd knots(2), values(2);
    knots << -100.0, 100.0;
    values << -100.0, 100.0;
    return TabulatedLifting{knots, values};
}

NfirOperator random_operator(Rng& rng, Eigen::Index m, bool with_alpha) {
    NfirOperator op;
    op.ts = 0.5;
    op.branches.push_back({IdentityLifting{}, random_taps(rng, m)});
    op.branches.push_back({VolcanoLifting{0.2, 0.8}, random_taps(rng, m)});
    Eigen::VectorXd ref(3);
    ref << 0.5, -0.5, 1.0;
    op.branches.push_back({GaussianWindowLifting{ref, 2.0}, random_taps(rng, m)});
    if (with_alpha) op.alpha = 0.3;
    return op;
}

}  // namespace

TEST_CASE("fir_apply pinned examples") {
    CHECK(fir_apply((Eigen::VectorXd(2) << 1, 2).finished(), sig({1, 0, 0}))
              .samples.isApprox(sig({1, 2, 0}).samples));
    Rng rng(1);
    const Signal u = random_signal(rng, 9);
    CHECK(fir_apply(Eigen::VectorXd::Ones(1), u).samples == u.samples);
    CHECK(fir_apply(Eigen::VectorXd::Ones(2), sig({1, 2, 3}))
              .samples.isApprox(sig({1, 3, 5}).samples));
}

TEST_CASE("identity lifting branch equals plain convolution") {
    Rng rng(2);
    const Eigen::VectorXd g = random_taps(rng, 5);
    NfirOperator op;
    op.branches.push_back({IdentityLifting{}, g});
    const Signal u = random_signal(rng, 30);
    CHECK(nfir_apply(op, u).samples.isApprox(fir_apply(g, u).samples, 1e-14));
}

TEST_CASE("hand evaluated nonlinear branch") {
    NfirOperator op;
    op.branches.push_back({linear_map(), (Eigen::VectorXd(2) << 1, 1).finished()});
    const Signal y = nfir_apply(op, sig({1, 2, 0}));
    CHECK(y.samples[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(y.samples[1] == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(y.samples[2] == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("zero input maps to zero output") {
    Rng rng(3);
    NfirOperator op = random_operator(rng, 4, true);
    const Signal z(Eigen::VectorXd::Zero(20), op.ts);
    CHECK(nfir_apply(op, z).samples.isZero(0.0));
}

TEST_CASE("external branches") {
    Rng rng(4);
    const Eigen::VectorXd g = random_taps(rng, 4);
    NfirOperator op;
    op.branches.push_back({ExternalGaussianLifting{5.0, 100.0}, g});
    const Signal u = random_signal(rng, 25);
    CHECK_THROWS_AS(nfir_apply(op, u), std::invalid_argument);

    // q pinned at the setpoint: weight 1, so the branch is the plain filter
    const Signal q1(Eigen::VectorXd::Constant(25, 5.0), 1.0);
    CHECK(nfir_apply_external(op, u, q1).samples.isApprox(fir_apply(g, u).samples, 1e-14));

    // q pinned at zero: every product picks up the squared weight
    const double w = std::exp(-25.0 / 200.0);
    const Signal q0(Eigen::VectorXd::Zero(25), 1.0);
    CHECK(nfir_apply_external(op, u, q0).samples.isApprox((w * w) * fir_apply(g, u).samples,
                                                          1e-14));

    // liftings that ignore q reduce to nfir_apply
    NfirOperator plain;
    plain.branches.push_back({VolcanoLifting{0.0, 1.0}, g});
    CHECK(nfir_apply_external(plain, u, q0).samples == nfir_apply(plain, u).samples);
    CHECK_THROWS_AS(nfir_apply_external(op, u, sig({1, 2})), std::invalid_argument);
}

TEST_CASE("causality and finite memory") {
    Rng rng(5);
    NfirOperator op = random_operator(rng, 6, false);
    const Eigen::Index mem = op.memory();  // m + R - 1
    CHECK(mem == 6 + 3 - 1);
    const Signal u = random_signal(rng, 40);
    const Signal y = nfir_apply(op, u);
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::Index t = 5 + static_cast<Eigen::Index>(rng.uniform(0, 29.999));
        Signal v = u;
        v.samples[t] += rng.uniform(0.5, 2.0);
        const Signal yv = nfir_apply(op, v);
        // future perturbations leave the past untouched
        CHECK(yv.samples.head(t) == y.samples.head(t));
        // and stop mattering once they scroll out of the memory window
        if (t + mem < 40) {
            CHECK(yv.samples.tail(40 - t - mem) == y.samples.tail(40 - t - mem));
        }
    }
}

TEST_CASE("output is linear in stacked coefficients") {
    Rng rng(6);
    const Signal u = random_signal(rng, 30);
    NfirOperator a = random_operator(rng, 5, true);
    NfirOperator b = a;
    for (std::size_t j = 0; j < b.branches.size(); ++j) {
        b.branches[j].taps = random_taps(rng, 5);
    }
    b.alpha = 0.9;
    NfirOperator mix = a;
    const double s = 0.37;
    for (std::size_t j = 0; j < mix.branches.size(); ++j) {
        mix.branches[j].taps = a.branches[j].taps + s * b.branches[j].taps;
    }
    mix.alpha = a.alpha + s * b.alpha;
    const Eigen::VectorXd expect = nfir_apply(a, u).samples + s * nfir_apply(b, u).samples;
    CHECK(nfir_apply(mix, u).samples.isApprox(expect, 1e-12));
}

TEST_CASE("three sample convolution matrix") {
    // n_b = 1, R = 1, m = 2, N = 3: the operator is multiplication by
    //   [a1 g0   0      0    ]        a1 = f(w0)^2   a2 = f(w1)^2
    //   [a3 g1   a2 g0  0    ]  with  a3 = f(w1) f(w0)
    //   [0       a5 g1  a4 g0]        a4 = f(w2)^2   a5 = f(w2) f(w1)
    Rng rng(7);
    const LiftingFunction f = VolcanoLifting{0.5, 1.2};
    const Eigen::VectorXd g = random_taps(rng, 2);
    NfirOperator op;
    op.branches.push_back({f, g});
    for (int rep = 0; rep < 25; ++rep) {
        const Signal u = random_signal(rng, 3);
        const double f0 = lifting_eval(f, u.samples.segment(0, 1));
        const double f1 = lifting_eval(f, u.samples.segment(1, 1));
        const double f2 = lifting_eval(f, u.samples.segment(2, 1));
        Eigen::Matrix3d mat = Eigen::Matrix3d::Zero();
        mat(0, 0) = f0 * f0 * g[0];
        mat(1, 0) = f1 * f0 * g[1];
        mat(1, 1) = f1 * f1 * g[0];
        mat(2, 1) = f2 * f1 * g[1];
        mat(2, 2) = f2 * f2 * g[0];
        const Eigen::Vector3d expect = mat * u.samples;
        CHECK(nfir_apply(op, u).samples.isApprox(expect, 1e-12));
    }
}

TEST_CASE("distant gaussian windows recover per-regime filters") {
    Rng rng(8);
    const double sigma = 0.01;  // narrow kernels, training levels far apart
    const std::vector<double> levels = {-4.0, 0.0, 4.0};
    NfirOperator op;
    std::vector<Eigen::VectorXd> gs;
    for (const double lv : levels) {
        Eigen::VectorXd g = random_taps(rng, 4);
        gs.push_back(g);
        op.branches.push_back({GaussianWindowLifting{Eigen::VectorXd::Constant(1, lv), sigma}, g});
    }
    for (std::size_t j = 0; j < levels.size(); ++j) {
        Signal u(Eigen::VectorXd::Constant(24, levels[j]), 1.0);
        for (Eigen::Index t = 0; t < u.size(); ++t) u.samples[t] += 0.001 * rng.gaussian();
        const Signal y = nfir_apply(op, u);
        const Signal yl = fir_apply(gs[j], u);
        CHECK((y.samples - yl.samples).cwiseAbs().maxCoeff() <= 1e-3 * norm(u));
    }
}

TEST_CASE("serialization round trips bit exact") {
    Rng rng(9);
    NfirOperator op = random_operator(rng, 7, true);
    Eigen::VectorXd knots(3), values(3);
    knots << -1, 0, 1;
    values << 0.25, 1.0, 0.25;
    op.branches.push_back({TabulatedLifting{knots, values}, random_taps(rng, 7)});
    op.branches.push_back({ExternalGaussianLifting{2.5, 0.5}, random_taps(rng, 7)});

    std::stringstream buf;
    write_operator(buf, op);
    const NfirOperator back = read_operator(buf);
    REQUIRE(back.branches.size() == op.branches.size());
    CHECK(back.alpha == op.alpha);
    CHECK(back.ts == op.ts);
    for (std::size_t j = 0; j < op.branches.size(); ++j) {
        CHECK(back.branches[j].taps == op.branches[j].taps);
        CHECK(back.branches[j].lifting.index() == op.branches[j].lifting.index());
    }
    // the text form itself is stable: writing the reread operator changes nothing
    std::stringstream buf2;
    write_operator(buf2, back);
    CHECK(buf2.str() == buf.str());
}
