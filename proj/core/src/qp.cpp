#include "pnfir/qp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <vector>

#include "pnfir/errors.hpp"

namespace pnfir {

namespace {

constexpr double kPinfTol = 1e-5;

struct Workspace {
    // Scaled problem data. x = d .* xbar, y = (e .* ybar) / cost_scale.
    Eigen::MatrixXd pbar;        // cD P D with P = 2(A^T A + diag(ridge))
    Eigen::VectorXd qbar;        // cD q with q = -2 A^T b
    Eigen::VectorXd d, e;
    double cost_scale = 1.0;
    Eigen::VectorXd lbar, ubar;  // scaled row bounds
    Eigen::VectorXd lower, upper;
    const LinearConstraintSet* cons = nullptr;
    Eigen::Index n = 0, m = 0;

    // iterates
    Eigen::VectorXd x, z, y;
    Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>>* llt = nullptr;

    void cbar_mul(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
        Eigen::VectorXd t = d.cwiseProduct(v);
        cons->multiply(t, out);
        out.array() *= e.array();
    }
    void cbar_tmul(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
        Eigen::VectorXd t = e.cwiseProduct(v);
        cons->multiply_transpose(t, out);
        out.array() *= d.array();
    }
};

double safe_mul(double bound, double scale) {
    return std::isfinite(bound) ? bound * scale : bound;
}

/// P = 2 (A^T A + diag(ridge)) and q = -2 A^T b.
void build_objective(const QuadraticProgram& qp, Eigen::MatrixXd& p, Eigen::VectorXd& q) {
    const Eigen::Index n = qp.num_vars();
    p = Eigen::MatrixXd::Zero(n, n);
    p.selfadjointView<Eigen::Lower>().rankUpdate(qp.regressor.transpose(), 2.0);
    if (qp.ridge.size()) p.diagonal() += 2.0 * qp.ridge;
    p.triangularView<Eigen::StrictlyUpper>() = p.transpose().triangularView<Eigen::StrictlyUpper>();
    q = -2.0 * (qp.regressor.transpose() * qp.target);
}

void validate_problem(const QuadraticProgram& qp) {
    if (qp.regressor.size() == 0) throw std::invalid_argument("qp: empty regressor");
    if (qp.target.size() != qp.regressor.rows()) throw std::invalid_argument("qp: target length mismatch");
    if (qp.ridge.size() != 0 && qp.ridge.size() != qp.num_vars()) {
        throw std::invalid_argument("qp: ridge length mismatch");
    }
    if (qp.ridge.size() && qp.ridge.minCoeff() < 0) throw std::invalid_argument("qp: negative ridge");
    if (!qp.constraints.empty() && qp.constraints.num_vars() != qp.num_vars()) {
        throw std::invalid_argument("qp: constraints cover a different decision vector");
    }
}

/// Modified Ruiz equilibration over [[P, C^T], [C, 0]] plus cost scaling.
void equilibrate(Workspace& ws, int iters) {
    const auto& cons = *ws.cons;
    Eigen::VectorXd colnorm(ws.n), rownorm(ws.m);
    for (int pass = 0; pass < iters; ++pass) {
        for (Eigen::Index j = 0; j < ws.n; ++j) colnorm[j] = ws.pbar.col(j).cwiseAbs().maxCoeff();
        Eigen::Index r = 0;
        for (const auto& blk : cons.blocks()) {
            const Eigen::MatrixXd& f = *blk.coeffs;
            for (Eigen::Index i = 0; i < f.rows(); ++i) {
                double rn = 0.0;
                for (Eigen::Index k = 0; k < f.cols(); ++k) {
                    const double v = std::abs(ws.e[r + i] * f(i, k) * ws.d[blk.col_start + k]);
                    rn = std::max(rn, v);
                    colnorm[blk.col_start + k] = std::max(colnorm[blk.col_start + k], v);
                }
                rownorm[r + i] = rn;
            }
            r += f.rows();
        }
        for (const auto& b : cons.bounds()) {
            const double v = std::abs(ws.e[r] * ws.d[b.var]);
            rownorm[r] = v;
            colnorm[b.var] = std::max(colnorm[b.var], v);
            ++r;
        }
        Eigen::VectorXd delta(ws.n), epsr(ws.m);
        for (Eigen::Index j = 0; j < ws.n; ++j) delta[j] = colnorm[j] > 0 ? 1.0 / std::sqrt(colnorm[j]) : 1.0;
        for (Eigen::Index i = 0; i < ws.m; ++i) epsr[i] = rownorm[i] > 0 ? 1.0 / std::sqrt(rownorm[i]) : 1.0;
        ws.pbar = delta.asDiagonal() * ws.pbar * delta.asDiagonal();
        ws.qbar.array() *= delta.array();
        ws.d.array() *= delta.array();
        ws.e.array() *= epsr.array();
        // cost normalization
        double mu = 0.0;
        for (Eigen::Index j = 0; j < ws.n; ++j) mu += ws.pbar.col(j).cwiseAbs().maxCoeff();
        mu /= static_cast<double>(ws.n);
        const double qn = ws.qbar.size() ? ws.qbar.cwiseAbs().maxCoeff() : 0.0;
        const double denom = std::max(mu, qn);
        if (denom > 0) {
            const double gamma = 1.0 / denom;
            ws.pbar *= gamma;
            ws.qbar *= gamma;
            ws.cost_scale *= gamma;
        }
    }
}

/// kkt = pbar + sigma I + rho Cbar^T Cbar, factorized in place.
void build_kkt(const Workspace& ws, double sigma, double rho, Eigen::MatrixXd& kkt) {
    kkt = ws.pbar;
    kkt.diagonal().array() += sigma;
    Eigen::Index r = 0;
    Eigen::MatrixXd scaled;
    for (const auto& blk : ws.cons->blocks()) {
        const Eigen::MatrixXd& f = *blk.coeffs;
        const Eigen::Index w = f.cols();
        scaled = f;
        scaled.array().colwise() *= ws.e.segment(r, f.rows()).array();
        scaled.array().rowwise() *= ws.d.segment(blk.col_start, w).transpose().array();
        kkt.block(blk.col_start, blk.col_start, w, w)
            .selfadjointView<Eigen::Lower>()
            .rankUpdate(scaled.transpose(), rho);
        r += f.rows();
    }
    for (const auto& b : ws.cons->bounds()) {
        const double v = ws.e[r++] * ws.d[b.var];
        kkt(b.var, b.var) += rho * v * v;
    }
    kkt.triangularView<Eigen::StrictlyUpper>() = kkt.transpose().triangularView<Eigen::StrictlyUpper>();
}

struct Residuals {
    double prim = 0.0, dual = 0.0;
    double prim_scale = 0.0, dual_scale = 0.0;
};

Residuals compute_residuals(const Workspace& ws) {
    Residuals res;
    Eigen::VectorXd cx;
    ws.cbar_mul(ws.x, cx);
    res.prim = ((cx - ws.z).cwiseQuotient(ws.e)).cwiseAbs().maxCoeff();
    res.prim_scale = std::max((cx.cwiseQuotient(ws.e)).cwiseAbs().maxCoeff(),
                              (ws.z.cwiseQuotient(ws.e)).cwiseAbs().maxCoeff());
    Eigen::VectorXd px = ws.pbar * ws.x;
    Eigen::VectorXd cty;
    ws.cbar_tmul(ws.y, cty);
    const double ic = 1.0 / ws.cost_scale;
    res.dual = ((px + ws.qbar + cty).cwiseQuotient(ws.d)).cwiseAbs().maxCoeff() * ic;
    res.dual_scale = std::max({(px.cwiseQuotient(ws.d)).cwiseAbs().maxCoeff() * ic,
                               (ws.qbar.cwiseQuotient(ws.d)).cwiseAbs().maxCoeff() * ic,
                               (cty.cwiseQuotient(ws.d)).cwiseAbs().maxCoeff() * ic});
    return res;
}

/// Strict unscaled KKT test at tolerance tol: primal and dual residuals,
/// complementary slackness and dual sign feasibility.
bool kkt_pass(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& p,
              const Eigen::VectorXd& q, const LinearConstraintSet& cons,
              const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, double tol,
              double* prim_out = nullptr, double* dual_out = nullptr) {
    Eigen::VectorXd cx;
    cons.multiply(x, cx);
    double prim = 0.0;
    for (Eigen::Index r = 0; r < cx.size(); ++r) {
        prim = std::max(prim, std::max(lower[r] - cx[r], cx[r] - upper[r]));
    }
    prim = std::max(prim, 0.0);
    Eigen::VectorXd cty;
    cons.multiply_transpose(y, cty);
    const Eigen::VectorXd px = p * x;
    const double dual = (px + q + cty).cwiseAbs().maxCoeff();
    if (prim_out) *prim_out = prim;
    if (dual_out) *dual_out = dual;
    const double xs = 1.0 + cx.cwiseAbs().maxCoeff();
    const double gs = 1.0 + std::max(px.cwiseAbs().maxCoeff(), q.cwiseAbs().maxCoeff());
    if (prim > tol * xs) return false;
    if (dual > tol * gs) return false;
    const double ynoise = tol * (1.0 + y.cwiseAbs().maxCoeff());
    for (Eigen::Index r = 0; r < cx.size(); ++r) {
        if (std::abs(y[r]) <= ynoise) continue;  // inactive at tolerance
        const double ys = 1.0 + std::abs(y[r]);
        if (y[r] > 0) {  // pushes toward upper bound
            if (!std::isfinite(upper[r])) return false;
            if (y[r] * std::abs(upper[r] - cx[r]) > tol * ys * xs) return false;
        } else if (y[r] < 0) {
            if (!std::isfinite(lower[r])) return false;
            if (-y[r] * std::abs(cx[r] - lower[r]) > tol * ys * xs) return false;
        }
    }
    return true;
}

/// Equality constrained polish via a small working-set iteration. The set
/// is seeded from rows whose ADMM dual clearly pushes on a bound the iterate
/// sits near, then refined: wrong-sign multipliers leave the set, rows the
/// candidate violates enter it. Returns a candidate for the caller to check
/// against strict KKT; pllt holds a factorization of p + delta I shared
/// across calls.
void materialize_row(const LinearConstraintSet& cons, Eigen::Index r, Eigen::VectorXd& out) {
    out.setZero();
    if (r < cons.num_block_rows()) {
        Eigen::Index base = 0;
        for (const auto& blk : cons.blocks()) {
            if (r < base + blk.coeffs->rows()) {
                out.segment(blk.col_start, blk.coeffs->cols()) = blk.coeffs->row(r - base);
                return;
            }
            base += blk.coeffs->rows();
        }
    }
    out[cons.bounds()[static_cast<std::size_t>(r - cons.num_block_rows())].var] = 1.0;
}

bool polish_candidate(const QuadraticProgram& qp, const Eigen::MatrixXd& p, const Eigen::VectorXd& q,
                      const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                      const Eigen::VectorXd& x_admm, const Eigen::VectorXd& y_admm,
                      const Eigen::LLT<Eigen::MatrixXd>& pllt, double delta,
                      Eigen::VectorXd& x_out, Eigen::VectorXd& y_out) {
    const Eigen::Index n = qp.num_vars();
    const Eigen::Index mr = qp.constraints.num_rows();

    // ADMM duals of inactive rows decay toward zero but never reach it
    // exactly, so the seed requires both a clear dual and a near-tight row.
    const double ythr = 1e-6 * std::max(1.0, y_admm.cwiseAbs().maxCoeff());
    Eigen::VectorXd cx;
    qp.constraints.multiply(x_admm, cx);
    std::vector<int> state(static_cast<std::size_t>(mr), 0);  // -1 lower, +1 upper, 0 out
    Eigen::Index active = 0;
    for (Eigen::Index r = 0; r < mr; ++r) {
        if (y_admm[r] < -ythr && std::isfinite(lower[r]) &&
            cx[r] - lower[r] <= 1e-2 * (1.0 + std::abs(lower[r]))) {
            state[static_cast<std::size_t>(r)] = -1;
            ++active;
        } else if (y_admm[r] > ythr && std::isfinite(upper[r]) &&
                   upper[r] - cx[r] <= 1e-2 * (1.0 + std::abs(upper[r]))) {
            state[static_cast<std::size_t>(r)] = 1;
            ++active;
        }
    }
    // More equalities than variables cannot all be independent; keep the
    // strongest duals so the Schur system stays square at worst.
    if (active > n) {
        std::vector<Eigen::Index> act;
        for (Eigen::Index r = 0; r < mr; ++r) {
            if (state[static_cast<std::size_t>(r)] != 0) act.push_back(r);
        }
        std::stable_sort(act.begin(), act.end(), [&](Eigen::Index a, Eigen::Index b) {
            return std::abs(y_admm[a]) > std::abs(y_admm[b]);
        });
        for (std::size_t i = static_cast<std::size_t>(n); i < act.size(); ++i) {
            state[static_cast<std::size_t>(act[i])] = 0;
        }
    }

    Eigen::VectorXd x, nu, row(n);
    std::vector<Eigen::Index> rows;
    // the working set can cycle on degenerate problems, so keep the best
    // candidate seen rather than whatever the last attempt produced
    Eigen::VectorXd best_x, best_nu;
    std::vector<Eigen::Index> best_rows;
    std::vector<int> sides, best_sides;
    double best_score = std::numeric_limits<double>::infinity();
    int stalled = 0;
    for (int attempt = 0; attempt < 8; ++attempt) {
        rows.clear();
        sides.clear();
        for (Eigen::Index r = 0; r < mr; ++r) {
            if (state[static_cast<std::size_t>(r)] != 0) {
                rows.push_back(r);
                sides.push_back(state[static_cast<std::size_t>(r)]);
            }
        }
        const Eigen::Index na = static_cast<Eigen::Index>(rows.size());
        if (na == 0) {
            x = pllt.solve(-q);
            nu.resize(0);
        } else {
            Eigen::MatrixXd g(na, n);
            Eigen::VectorXd bact(na);
            for (Eigen::Index i = 0; i < na; ++i) {
                materialize_row(qp.constraints, rows[static_cast<std::size_t>(i)], row);
                g.row(i) = row;
                bact[i] = state[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])] < 0
                              ? lower[rows[static_cast<std::size_t>(i)]]
                              : upper[rows[static_cast<std::size_t>(i)]];
            }
            const Eigen::MatrixXd pinv_gt = pllt.solve(g.transpose());
            Eigen::MatrixXd schur = g * pinv_gt;
            schur.diagonal().array() += delta;
            Eigen::LDLT<Eigen::MatrixXd> sldlt(schur);
            if (sldlt.info() != Eigen::Success) return false;
            const Eigen::VectorXd pinv_q = pllt.solve(-q);
            nu = sldlt.solve(g * pinv_q - bact);
            x = pinv_q - pinv_gt * nu;
            // refinement on the unregularized KKT system; stop once the
            // residual stalls, which happens when P is too ill conditioned
            // for the regularized factorization to act as a preconditioner
            double last_res = std::numeric_limits<double>::infinity();
            for (int pass = 0; pass < 12; ++pass) {
                const Eigen::VectorXd rx = -q - p * x - g.transpose() * nu;
                const Eigen::VectorXd rb = bact - g * x;
                const double res =
                    std::max(rx.cwiseAbs().maxCoeff(), rb.cwiseAbs().maxCoeff());
                if (!(res < 0.9 * last_res)) break;
                last_res = res;
                const Eigen::VectorXd dnu = sldlt.solve(g * pllt.solve(rx) - rb);
                const Eigen::VectorXd dx = pllt.solve(rx - g.transpose() * dnu);
                x += dx;
                nu += dnu;
            }
        }

        bool changed = false;
        bool wrong_sign = false;
        // multipliers with the wrong sign mark rows that are not active
        const double nthr = nu.size() ? 1e-8 * (1.0 + nu.cwiseAbs().maxCoeff()) : 0.0;
        for (Eigen::Index i = 0; i < na; ++i) {
            const Eigen::Index r = rows[static_cast<std::size_t>(i)];
            const int s = state[static_cast<std::size_t>(r)];
            if ((s < 0 && nu[i] > nthr) || (s > 0 && nu[i] < -nthr)) {
                state[static_cast<std::size_t>(r)] = 0;
                changed = true;
                wrong_sign = true;
            }
        }
        // rows the candidate violates are missing from the set; admit the
        // worst offenders while keeping the set at most n rows
        qp.constraints.multiply(x, cx);
        std::vector<std::pair<double, Eigen::Index>> violated;
        for (Eigen::Index r = 0; r < mr; ++r) {
            if (state[static_cast<std::size_t>(r)] != 0) continue;
            if (std::isfinite(lower[r]) && lower[r] - cx[r] > 1e-10 * (1.0 + std::abs(lower[r]))) {
                violated.push_back({(lower[r] - cx[r]) / (1.0 + std::abs(lower[r])), ~r});
            } else if (std::isfinite(upper[r]) &&
                       cx[r] - upper[r] > 1e-10 * (1.0 + std::abs(upper[r]))) {
                violated.push_back({(cx[r] - upper[r]) / (1.0 + std::abs(upper[r])), r});
            }
        }
        std::stable_sort(violated.begin(), violated.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });

        // a wrong-sign multiplier disqualifies a candidate unless nothing
        // better turns up; among the rest prefer the smallest worst violation
        const double viol = violated.empty() ? 0.0 : violated.front().first;
        const double score = viol + (wrong_sign ? 1.0 : 0.0);
        if (score < best_score) {
            best_score = score;
            best_x = x;
            best_nu = nu;
            best_rows = rows;
            best_sides = sides;
            stalled = 0;
        } else if (++stalled >= 2) {
            break;  // working set is cycling without progress
        }

        Eigen::Index room = n - static_cast<Eigen::Index>(rows.size());
        for (const auto& v : violated) {
            if (room <= 0) break;
            const bool is_lower = v.second < 0;
            const Eigen::Index r = is_lower ? ~v.second : v.second;
            state[static_cast<std::size_t>(r)] = is_lower ? -1 : 1;
            --room;
            changed = true;
        }

        if (!changed) break;
    }
    if (!std::isfinite(best_score)) return false;
    x_out = best_x;
    y_out = Eigen::VectorXd::Zero(mr);
    // degenerate rows come back with dust or slightly wrong-signed
    // multipliers; report those as inactive instead of poisoning the duals
    const double bthr =
        best_nu.size() ? 1e-8 * (1.0 + best_nu.cwiseAbs().maxCoeff()) : 0.0;
    for (std::size_t i = 0; i < best_rows.size(); ++i) {
        const double v = best_nu[static_cast<Eigen::Index>(i)];
        if (std::abs(v) <= bthr) continue;
        if (best_sides[i] < 0 ? v < 0 : v > 0) y_out[best_rows[i]] = v;
    }
    return true;
}

bool detect_primal_infeasible(const Workspace& ws, const Eigen::VectorXd& dy_bar) {
    // dy in unscaled row space
    const Eigen::VectorXd dy = ws.e.cwiseProduct(dy_bar) / ws.cost_scale;
    const double nrm = dy.cwiseAbs().maxCoeff();
    if (!(nrm > 1e-12)) return false;
    Eigen::VectorXd ct_dy;
    ws.cons->multiply_transpose(dy, ct_dy);
    if (ct_dy.cwiseAbs().maxCoeff() > kPinfTol * nrm) return false;
    double support = 0.0;
    for (Eigen::Index r = 0; r < dy.size(); ++r) {
        if (dy[r] > 0) {
            if (!std::isfinite(ws.upper[r])) return false;
            support += ws.upper[r] * dy[r];
        } else if (dy[r] < 0) {
            if (!std::isfinite(ws.lower[r])) return false;
            support += ws.lower[r] * dy[r];
        }
    }
    return support <= -kPinfTol * nrm;
}

}  // namespace

SolverReport solve_unconstrained(const QuadraticProgram& qp) {
    validate_problem(qp);
    const auto t0 = std::chrono::steady_clock::now();
    const Eigen::Index n = qp.num_vars();
    Eigen::MatrixXd nm = Eigen::MatrixXd::Zero(n, n);
    nm.selfadjointView<Eigen::Lower>().rankUpdate(qp.regressor.transpose(), 1.0);
    if (qp.ridge.size()) nm.diagonal() += qp.ridge;
    nm.triangularView<Eigen::StrictlyUpper>() = nm.transpose().triangularView<Eigen::StrictlyUpper>();
    const Eigen::VectorXd rhs = qp.regressor.transpose() * qp.target;

    SolverReport rep;
    rep.status = SolveStatus::optimal;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(nm);
    bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive();
    if (ok) {
        const Eigen::VectorXd dvec = ldlt.vectorD();
        const double dmax = dvec.maxCoeff();
        if (!(dvec.minCoeff() > dmax * n * 1e-14)) ok = false;
    }
    if (ok) {
        rep.solution = ldlt.solve(rhs);
    } else {
        // rank deficient: minimum norm solution of the augmented system
        Eigen::MatrixXd aug(qp.regressor.rows() + n, n);
        aug.topRows(qp.regressor.rows()) = qp.regressor;
        aug.bottomRows(n).setZero();
        if (qp.ridge.size()) aug.bottomRows(n).diagonal() = qp.ridge.cwiseSqrt();
        Eigen::VectorXd tgt = Eigen::VectorXd::Zero(aug.rows());
        tgt.head(qp.target.size()) = qp.target;
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(aug);
        rep.solution = cod.solve(tgt);
        rep.min_norm = cod.rank() < n;
    }
    rep.dual_residual =
        (nm * rep.solution - rhs).cwiseAbs().maxCoeff() * 2.0;
    rep.iterations = 1;
    rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

SolverReport solve(const QuadraticProgram& qp, const SolverOptions& opts) {
    validate_problem(qp);
    if (qp.constraints.empty()) return solve_unconstrained(qp);
    const auto t0 = std::chrono::steady_clock::now();

    Workspace ws;
    ws.cons = &qp.constraints;
    ws.n = qp.num_vars();
    ws.m = qp.constraints.num_rows();
    build_objective(qp, ws.pbar, ws.qbar);
    const Eigen::MatrixXd p_unscaled = ws.pbar;  // kept for strict checks and polish
    const Eigen::VectorXd q_unscaled = ws.qbar;
    qp.constraints.row_bounds(ws.lower, ws.upper);
    ws.d = Eigen::VectorXd::Ones(ws.n);
    ws.e = Eigen::VectorXd::Ones(ws.m);
    if (opts.scaling) equilibrate(ws, 5);
    ws.lbar.resize(ws.m);
    ws.ubar.resize(ws.m);
    for (Eigen::Index r = 0; r < ws.m; ++r) {
        ws.lbar[r] = safe_mul(ws.lower[r], ws.e[r]);
        ws.ubar[r] = safe_mul(ws.upper[r], ws.e[r]);
    }

    double rho = opts.admm_rho;
    Eigen::MatrixXd kkt;
    build_kkt(ws, opts.sigma, rho, kkt);
    auto llt = std::make_unique<Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>>>(kkt);
    if (llt->info() != Eigen::Success) {
        throw std::runtime_error("qp: KKT factorization failed");
    }

    ws.x = Eigen::VectorXd::Zero(ws.n);
    ws.z = Eigen::VectorXd::Zero(ws.m).cwiseMax(ws.lbar).cwiseMin(ws.ubar);
    ws.y = Eigen::VectorXd::Zero(ws.m);

    SolverReport rep;
    Eigen::VectorXd y_prev_check = ws.y;
    Eigen::VectorXd rhs(ws.n), xt(ws.n), zt(ws.m), w(ws.m), ct(ws.n);
    double phase_tol = std::max(opts.tol, 1e-6);
    int next_rho_update = 150;
    int next_polish_iter = 0;

    const auto unscale_x = [&](const Eigen::VectorXd& xb) { return ws.d.cwiseProduct(xb).eval(); };
    const auto unscale_y = [&](const Eigen::VectorXd& yb) {
        return (ws.e.cwiseProduct(yb) / ws.cost_scale).eval();
    };

    // The polish system p + delta I is constant; factor it lazily, once.
    const double polish_delta = 1e-8 * (1.0 + p_unscaled.diagonal().cwiseAbs().maxCoeff());
    std::unique_ptr<Eigen::LLT<Eigen::MatrixXd>> polish_llt;
    bool polish_llt_failed = false;
    int polish_rejects = 0;
    const auto polish_factor = [&]() -> const Eigen::LLT<Eigen::MatrixXd>* {
        if (polish_llt_failed) return nullptr;
        if (!polish_llt) {
            Eigen::MatrixXd preg = p_unscaled;
            preg.diagonal().array() += polish_delta;
            polish_llt = std::make_unique<Eigen::LLT<Eigen::MatrixXd>>(preg);
            if (polish_llt->info() != Eigen::Success) {
                polish_llt.reset();
                polish_llt_failed = true;
                return nullptr;
            }
        }
        return polish_llt.get();
    };

    const auto try_finish = [&](int iter, bool allow_polish) -> bool {
        Eigen::VectorXd x_u = unscale_x(ws.x);
        Eigen::VectorXd y_u = unscale_y(ws.y);
        double prim = 0.0, dual = 0.0;
        bool pass = kkt_pass(x_u, y_u, p_unscaled, q_unscaled, qp.constraints, ws.lower, ws.upper,
                             opts.tol, &prim, &dual);
        bool polished = false;
        const Eigen::LLT<Eigen::MatrixXd>* pllt = nullptr;
        if (!pass && opts.polish && allow_polish) pllt = polish_factor();
        if (pllt) {
            Eigen::VectorXd xp, yp;
            if (polish_candidate(qp, p_unscaled, q_unscaled, ws.lower, ws.upper, x_u, y_u, *pllt,
                                 polish_delta, xp, yp)) {
                double pprim = 0.0, pdual = 0.0;
                if (kkt_pass(xp, yp, p_unscaled, q_unscaled, qp.constraints, ws.lower, ws.upper,
                             opts.tol, &pprim, &pdual)) {
                    x_u = xp;
                    y_u = yp;
                    prim = pprim;
                    dual = pdual;
                    pass = true;
                    polished = true;
                } else if (++polish_rejects >= 3) {
                    // the working set never stabilizes on degenerate problems;
                    // fall back to plain ADMM convergence for this solve
                    polish_llt_failed = true;
                    polish_llt.reset();
                }
            }
        }
        if (pass) {
            rep.solution = x_u;
            rep.dual = y_u;
            rep.status = SolveStatus::optimal;
            rep.primal_residual = prim;
            rep.dual_residual = dual;
            rep.iterations = iter;
            rep.polished = polished;
            return true;
        }
        return false;
    };

    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        // x update
        ws.cbar_tmul(rho * ws.z - ws.y, ct);
        rhs = opts.sigma * ws.x - ws.qbar + ct;
        xt = llt->solve(rhs);
        ws.cbar_mul(xt, zt);
        const double a = opts.over_relaxation;
        ws.x = a * xt + (1.0 - a) * ws.x;
        w = a * zt + (1.0 - a) * ws.z;
        const Eigen::VectorXd znew = (w + ws.y / rho).cwiseMax(ws.lbar).cwiseMin(ws.ubar);
        ws.y += rho * (w - znew);
        ws.z = znew;

        if ((iter + 1) % opts.check_every != 0) continue;

        const Residuals res = compute_residuals(ws);
        const Eigen::VectorXd dy_bar = ws.y - y_prev_check;
        y_prev_check = ws.y;
        if (detect_primal_infeasible(ws, dy_bar)) {
            rep.solution = unscale_x(ws.x);
            rep.dual = unscale_y(ws.y);
            rep.status = SolveStatus::infeasible;
            rep.primal_residual = res.prim;
            rep.dual_residual = res.dual;
            rep.iterations = iter + 1;
            rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            return rep;
        }
        const bool phase_done = res.prim <= phase_tol * (1.0 + res.prim_scale) &&
                                res.dual <= phase_tol * (1.0 + res.dual_scale);
        if (phase_done) {
            const bool allow_polish = iter + 1 >= next_polish_iter;
            if (try_finish(iter + 1, allow_polish)) {
                rep.wall_time_s =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                return rep;
            }
            if (allow_polish) {
                // polish is a full factorization; back off before retrying
                next_polish_iter = 2 * (iter + 1) + 50;
                phase_tol = std::max(opts.tol, phase_tol * 1e-2);
            }
        }
        if (iter + 1 >= next_rho_update) {
            next_rho_update *= 4;
            const double pr = res.prim / std::max(1e-30, 1.0 + res.prim_scale);
            const double dr = res.dual / std::max(1e-30, 1.0 + res.dual_scale);
            if (pr > 0 && dr > 0) {
                const double ratio = std::sqrt(pr / dr);
                if (ratio > 5.0 || ratio < 0.2) {
                    rho = std::clamp(rho * ratio, 1e-6, 1e6);
                    llt.reset();
                    build_kkt(ws, opts.sigma, rho, kkt);
                    llt = std::make_unique<Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>>>(kkt);
                    if (llt->info() != Eigen::Success) {
                        throw std::runtime_error("qp: KKT refactorization failed");
                    }
                }
            }
        }
    }

    // out of iterations: one last polish attempt, then report the best we have
    if (try_finish(iter, true)) {
        rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return rep;
    }
    const Residuals res = compute_residuals(ws);
    rep.solution = unscale_x(ws.x);
    rep.dual = unscale_y(ws.y);
    rep.status = SolveStatus::max_iter;
    rep.primal_residual = res.prim;
    rep.dual_residual = res.dual;
    rep.iterations = iter;
    rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (opts.dump_on_failure) dump_problem(qp, *opts.dump_on_failure);
    return rep;
}

void dump_problem(const QuadraticProgram& qp, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw ConfigError("cannot open " + file.string() + " for writing");
    out.precision(17);
    out << "pnfir qp dump\n";
    out << "rows " << qp.regressor.rows() << " vars " << qp.num_vars() << " constraint_rows "
        << qp.constraints.num_rows() << "\n";
    out << "regressor\n" << qp.regressor << "\n";
    out << "target\n" << qp.target.transpose() << "\n";
    out << "ridge\n";
    if (qp.ridge.size()) {
        out << qp.ridge.transpose() << "\n";
    } else {
        out << "none\n";
    }
    if (qp.constraints.num_rows() > 0 && qp.constraints.num_rows() <= 4096) {
        const auto dense = qp.constraints.materialize_dense();
        out << "constraints\n" << dense.coeffs << "\n";
        out << "lower\n" << dense.lower.transpose() << "\n";
        out << "upper\n" << dense.upper.transpose() << "\n";
    } else {
        out << "constraints structured blocks " << qp.constraints.blocks().size() << " bounds "
            << qp.constraints.bounds().size() << "\n";
    }
}

}  // namespace pnfir
