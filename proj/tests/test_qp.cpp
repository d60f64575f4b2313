#include <cmath>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "pnfir/qp.hpp"
#include "pnfir/rng.hpp"

using namespace pnfir;

namespace {

QuadraticProgram least_squares(Eigen::MatrixXd a, Eigen::VectorXd b) {
    QuadraticProgram qp;
    qp.regressor = std::move(a);
    qp.target = std::move(b);
    qp.ridge = Eigen::VectorXd::Zero(qp.regressor.cols());
    qp.constraints = LinearConstraintSet(qp.regressor.cols());
    return qp;
}

double objective(const QuadraticProgram& qp, const Eigen::VectorXd& x) {
    return (qp.regressor * x - qp.target).squaredNorm() + x.cwiseAbs2().dot(qp.ridge);
}

}  // namespace

TEST_CASE("active scalar bound") {
    // minimize (theta - 1)^2 subject to theta >= 2
    QuadraticProgram qp = least_squares(Eigen::MatrixXd::Identity(1, 1),
                                        Eigen::VectorXd::Ones(1));
    qp.constraints.add_bound(0, 2.0, kInf);
    const SolverReport rep = solve(qp);
    REQUIRE(rep.status == SolveStatus::optimal);
    CHECK(rep.solution[0] == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("one active one inactive bound") {
    QuadraticProgram qp = least_squares(Eigen::MatrixXd::Identity(2, 2),
                                        Eigen::VectorXd::Zero(2));
    qp.constraints.add_bound(0, 1.0, kInf);
    qp.constraints.add_bound(1, -1.0, kInf);
    const SolverReport rep = solve(qp);
    REQUIRE(rep.status == SolveStatus::optimal);
    CHECK(rep.solution[0] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(rep.solution[1] == doctest::Approx(0.0).epsilon(1e-7));
}

TEST_CASE("infeasible rows are certified") {
    // 2 theta >= 10 conflicts with |theta| <= 1
    QuadraticProgram qp = least_squares(Eigen::MatrixXd::Identity(1, 1),
                                        Eigen::VectorXd::Zero(1));
    auto block = LinearConstraintSet::Block{};
    block.col_start = 0;
    block.coeffs = std::make_shared<Eigen::MatrixXd>(Eigen::MatrixXd::Constant(1, 1, 2.0));
    block.lower = Eigen::VectorXd::Constant(1, 10.0);
    block.upper = Eigen::VectorXd::Constant(1, kInf);
    qp.constraints.add_block(block);
    qp.constraints.add_bound(0, -1.0, 1.0);
    const SolverReport rep = solve(qp);
    CHECK(rep.status == SolveStatus::infeasible);
}

TEST_CASE("random boxes match a refined grid search") {
    Rng rng(21);
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.uniform(0, 2.999));
        Eigen::MatrixXd a(6, n);
        Eigen::VectorXd b(6);
        for (Eigen::Index i = 0; i < 6; ++i) {
            b[i] = rng.uniform(-2.0, 2.0);
            for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
        }
        QuadraticProgram qp = least_squares(a, b);
        Eigen::VectorXd lo(n), hi(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            lo[j] = rng.uniform(-1.0, 0.0);
            hi[j] = lo[j] + rng.uniform(0.2, 1.5);
            qp.constraints.add_bound(j, lo[j], hi[j]);
        }
        SolverOptions opts;
        opts.tol = 1e-9;
        const SolverReport sol = solve(qp, opts);
        REQUIRE(sol.status == SolveStatus::optimal);

        // coordinate-refined grid: 3 passes of 21 points end at step < 1e-3
        Eigen::VectorXd best = (lo + hi) / 2.0;
        Eigen::VectorXd span = hi - lo;
        for (int pass = 0; pass < 6; ++pass) {
            for (Eigen::Index j = 0; j < n; ++j) {
                double cand = best[j];
                double fbest = objective(qp, best);
                for (int s = 0; s <= 20; ++s) {
                    Eigen::VectorXd x = best;
                    x[j] = std::clamp(best[j] - span[j] / 2 + span[j] * s / 20.0, lo[j], hi[j]);
                    const double f = objective(qp, x);
                    if (f < fbest) {
                        fbest = f;
                        cand = x[j];
                    }
                }
                best[j] = cand;
            }
            span /= 10.0;
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            CHECK(std::abs(sol.solution[j] - best[j]) <= 5e-3);
        }
    }
}

TEST_CASE("optimal status implies feasibility") {
    Rng rng(22);
    QuadraticProgram qp = least_squares(Eigen::MatrixXd::NullaryExpr(8, 4, [&](Eigen::Index,
                                                                               Eigen::Index) {
                                            return rng.uniform(-1.0, 1.0);
                                        }),
                                        Eigen::VectorXd::NullaryExpr(8, [&](Eigen::Index) {
                                            return rng.uniform(-3.0, 3.0);
                                        }));
    auto block = LinearConstraintSet::Block{};
    block.col_start = 0;
    block.coeffs = std::make_shared<Eigen::MatrixXd>(
        Eigen::MatrixXd::NullaryExpr(3, 4, [&](Eigen::Index, Eigen::Index) {
            return rng.uniform(-1.0, 1.0);
        }));
    block.lower = Eigen::VectorXd::Constant(3, -0.5);
    block.upper = Eigen::VectorXd::Constant(3, 0.5);
    qp.constraints.add_block(block);
    const SolverReport rep = solve(qp);
    REQUIRE(rep.status == SolveStatus::optimal);
    Eigen::VectorXd cx;
    qp.constraints.multiply(rep.solution, cx);
    Eigen::VectorXd lower, upper;
    qp.constraints.row_bounds(lower, upper);
    for (Eigen::Index r = 0; r < cx.size(); ++r) {
        CHECK(cx[r] >= lower[r] - 1e-7);
        CHECK(cx[r] <= upper[r] + 1e-7);
    }
}

TEST_CASE("solution beats random feasible points") {
    Rng rng(23);
    QuadraticProgram qp = least_squares(Eigen::MatrixXd::NullaryExpr(10, 3, [&](Eigen::Index,
                                                                               Eigen::Index) {
                                            return rng.uniform(-1.0, 1.0);
                                        }),
                                        Eigen::VectorXd::NullaryExpr(10, [&](Eigen::Index) {
                                            return rng.uniform(-2.0, 2.0);
                                        }));
    for (Eigen::Index j = 0; j < 3; ++j) qp.constraints.add_bound(j, -1.0, 1.0);
    const SolverReport rep = solve(qp);
    REQUIRE(rep.status == SolveStatus::optimal);
    const double fstar = objective(qp, rep.solution);
    for (int i = 0; i < 1000; ++i) {
        Eigen::VectorXd x(3);
        for (Eigen::Index j = 0; j < 3; ++j) x[j] = rng.uniform(-1.0, 1.0);
        CHECK(objective(qp, x) >= fstar - 1e-9);
    }
}

TEST_CASE("uniform ridge shrinks the solution") {
    Rng rng(24);
    Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(12, 5, [&](Eigen::Index, Eigen::Index) {
        return rng.uniform(-1.0, 1.0);
    });
    Eigen::VectorXd b = Eigen::VectorXd::NullaryExpr(12, [&](Eigen::Index) {
        return rng.uniform(-2.0, 2.0);
    });
    double prev = -1.0;
    for (const double gamma : {0.0, 0.1, 1.0, 10.0, 100.0}) {
        QuadraticProgram qp = least_squares(a, b);
        qp.ridge = Eigen::VectorXd::Constant(5, gamma);
        const SolverReport rep = solve_unconstrained(qp);
        const double nrm = rep.solution.norm();
        if (prev >= 0.0) CHECK(nrm <= prev + 1e-10);
        prev = nrm;
    }
}

TEST_CASE("unconstrained pinned examples") {
    QuadraticProgram qp = least_squares(Eigen::MatrixXd::Identity(2, 2),
                                        (Eigen::VectorXd(2) << 3, 4).finished());
    SolverReport rep = solve_unconstrained(qp);
    CHECK(rep.solution.isApprox((Eigen::VectorXd(2) << 3, 4).finished(), 1e-12));
    CHECK_FALSE(rep.min_norm);

    qp.ridge = Eigen::VectorXd::Ones(2);
    rep = solve_unconstrained(qp);
    CHECK(rep.solution.isApprox((Eigen::VectorXd(2) << 1.5, 2).finished(), 1e-12));

    QuadraticProgram mean = least_squares(Eigen::MatrixXd::Ones(2, 1),
                                          (Eigen::VectorXd(2) << 1, 3).finished());
    rep = solve_unconstrained(mean);
    CHECK(rep.solution[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("rank deficiency falls back to the minimum norm solution") {
    QuadraticProgram qp = least_squares(Eigen::MatrixXd::Ones(1, 2),
                                        Eigen::VectorXd::Constant(1, 2.0));
    const SolverReport rep = solve_unconstrained(qp);
    CHECK(rep.min_norm);
    CHECK(rep.solution.isApprox(Eigen::VectorXd::Ones(2), 1e-10));
}

TEST_CASE("identical problems solve identically") {
    Rng rng(25);
    QuadraticProgram qp = least_squares(Eigen::MatrixXd::NullaryExpr(9, 4, [&](Eigen::Index,
                                                                               Eigen::Index) {
                                            return rng.gaussian();
                                        }),
                                        Eigen::VectorXd::NullaryExpr(9, [&](Eigen::Index) {
                                            return rng.gaussian();
                                        }));
    for (Eigen::Index j = 0; j < 4; ++j) qp.constraints.add_bound(j, -0.8, 0.8);
    const SolverReport a = solve(qp);
    const SolverReport b = solve(qp);
    REQUIRE(a.status == SolveStatus::optimal);
    CHECK(a.solution == b.solution);  // bit identical, not approximately equal
    CHECK(a.iterations == b.iterations);
    CHECK(a.dual == b.dual);
}

TEST_CASE("failed solves can dump the problem") {
    QuadraticProgram qp = least_squares(Eigen::MatrixXd::Identity(1, 1),
                                        Eigen::VectorXd::Zero(1));
    const auto path = std::filesystem::temp_directory_path() / "pnfir_qp_dump_test.txt";
    std::filesystem::remove(path);
    dump_problem(qp, path);
    CHECK(std::filesystem::exists(path));
    std::filesystem::remove(path);
}
