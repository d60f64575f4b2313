#include "pnfir/nfir.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "pnfir/errors.hpp"

namespace pnfir {

namespace {

void validate_operator(const NfirOperator& op) {
    if (op.branches.empty()) throw std::invalid_argument("operator has no branches");
    if (!(op.ts > 0)) throw std::invalid_argument("operator sample time must be > 0");
    if (op.alpha < 0) throw std::invalid_argument("integrator gain must be >= 0");
    for (const auto& b : op.branches) {
        validate_lifting(b.lifting);
        if (b.taps.size() < 1) throw std::invalid_argument("branch has no taps");
    }
}

Signal apply_impl(const NfirOperator& op, const Signal& u, const Signal* q) {
    validate_operator(op);
    if (std::abs(u.ts - op.ts) > 1e-9 * op.ts) {
        throw std::invalid_argument("nfir_apply: signal sample time does not match operator");
    }
    const Eigen::Index n = u.size();
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    for (const auto& branch : op.branches) {
        if (external_window(branch.lifting) > 0 && q == nullptr) {
            throw std::invalid_argument("nfir_apply: operator is externally driven, use nfir_apply_external");
        }
        const Eigen::VectorXd phi = lifting_profile(branch.lifting, u, q);
        const Signal lifted(phi.cwiseProduct(u.samples), u.ts);
        const Signal fir = fir_apply(branch.taps, lifted);
        y += phi.cwiseProduct(fir.samples);
    }
    if (op.alpha != 0.0) {
        double acc = 0.0;
        for (Eigen::Index t = 0; t < n; ++t) {
            acc += u.samples[t];
            y[t] += op.alpha * op.ts * acc;
        }
    }
    return Signal(std::move(y), u.ts);
}

std::string hexdouble(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

class TokenReader {
public:
    explicit TokenReader(std::istream& in) : in_(in) {}

    std::string word(const char* what) {
        std::string tok;
        if (!(in_ >> tok)) throw ConfigError(std::string("operator file: missing ") + what);
        return tok;
    }

    void expect(const char* literal) {
        const std::string tok = word(literal);
        if (tok != literal) {
            throw ConfigError(std::string("operator file: expected '") + literal + "', got '" + tok + "'");
        }
    }

    double number(const char* what) {
        const std::string tok = word(what);
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end == nullptr || *end != '\0') {
            throw ConfigError(std::string("operator file: bad number for ") + what + ": '" + tok + "'");
        }
        return v;
    }

    Eigen::Index count(const char* what) {
        const double v = number(what);
        if (!(v >= 0) || v != std::floor(v) || v > 1e9) {
            throw ConfigError(std::string("operator file: bad count for ") + what);
        }
        return static_cast<Eigen::Index>(v);
    }

    Eigen::VectorXd vector(Eigen::Index n, const char* what) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = number(what);
        return v;
    }

private:
    std::istream& in_;
};

}  // namespace

Eigen::Index NfirOperator::max_input_window() const {
    Eigen::Index r = 1;
    for (const auto& b : branches) r = std::max(r, input_window(b.lifting));
    return r;
}

bool NfirOperator::externally_driven() const {
    for (const auto& b : branches) {
        if (external_window(b.lifting) > 0) return true;
    }
    return false;
}

Eigen::Index NfirOperator::memory() const {
    Eigen::Index mem = 0;
    for (const auto& b : branches) {
        mem = std::max(mem, b.taps.size() + input_window(b.lifting) - 1);
    }
    return mem;
}

Eigen::VectorXd lifting_profile(const LiftingFunction& f, const Signal& u, const Signal* q) {
    const Eigen::Index n = u.size();
    const Eigen::Index r1 = input_window(f);
    const Eigen::Index r2 = external_window(f);
    if (r2 > 0 && q == nullptr) {
        throw std::invalid_argument("lifting_profile: lifting needs an external signal");
    }
    Eigen::VectorXd phi(n);
    Eigen::VectorXd qw;
    for (Eigen::Index t = 0; t < n; ++t) {
        const Eigen::VectorXd uw = truncate_window(u, t, r1);
        if (r2 > 0) qw = truncate_window(*q, t, r2);
        phi[t] = lifting_eval(f, uw, qw);
    }
    return phi;
}

Signal fir_apply(const Eigen::VectorXd& taps, const Signal& u) {
    const Eigen::Index n = u.size();
    const Eigen::Index m = taps.size();
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    for (Eigen::Index t = 0; t < n; ++t) {
        const Eigen::Index kmax = std::min(m - 1, t);
        double acc = 0.0;
        for (Eigen::Index k = 0; k <= kmax; ++k) acc += taps[k] * u.samples[t - k];
        y[t] = acc;
    }
    return Signal(std::move(y), u.ts);
}

Signal nfir_apply(const NfirOperator& op, const Signal& u) {
    return apply_impl(op, u, nullptr);
}

Signal nfir_apply_external(const NfirOperator& op, const Signal& u, const Signal& q) {
    if (q.size() != u.size() || std::abs(q.ts - u.ts) > 1e-9 * u.ts) {
        throw std::invalid_argument("nfir_apply_external: q must match u in length and sample time");
    }
    return apply_impl(op, u, &q);
}

void write_operator(std::ostream& out, const NfirOperator& op) {
    validate_operator(op);
    out << "pnfir operator 1\n";
    out << "ts " << hexdouble(op.ts) << "\n";
    out << "alpha " << hexdouble(op.alpha) << "\n";
    out << "branches " << op.branches.size() << "\n";
    for (const auto& b : op.branches) {
        if (std::holds_alternative<IdentityLifting>(b.lifting)) {
            out << "lifting identity\n";
        } else if (const auto* v = std::get_if<VolcanoLifting>(&b.lifting)) {
            out << "lifting volcano\n";
            out << "center " << hexdouble(v->center) << "\n";
            out << "radius " << hexdouble(v->radius) << "\n";
        } else if (const auto* g = std::get_if<GaussianWindowLifting>(&b.lifting)) {
            out << "lifting gaussian_window\n";
            out << "sigma " << hexdouble(g->sigma) << "\n";
            out << "reference " << g->reference.size() << "\n";
            for (Eigen::Index i = 0; i < g->reference.size(); ++i) {
                out << hexdouble(g->reference[i]) << "\n";
            }
        } else if (const auto* e = std::get_if<ExternalGaussianLifting>(&b.lifting)) {
            out << "lifting external_gaussian\n";
            out << "setpoint " << hexdouble(e->setpoint) << "\n";
            out << "sigma " << hexdouble(e->sigma) << "\n";
        } else if (const auto* t = std::get_if<TabulatedLifting>(&b.lifting)) {
            out << "lifting tabulated\n";
            out << "knots " << t->knots.size() << "\n";
            for (Eigen::Index i = 0; i < t->knots.size(); ++i) out << hexdouble(t->knots[i]) << "\n";
            out << "values " << t->values.size() << "\n";
            for (Eigen::Index i = 0; i < t->values.size(); ++i) out << hexdouble(t->values[i]) << "\n";
        }
        out << "taps " << b.taps.size() << "\n";
        for (Eigen::Index i = 0; i < b.taps.size(); ++i) out << hexdouble(b.taps[i]) << "\n";
    }
}

NfirOperator read_operator(std::istream& in) {
    TokenReader tok(in);
    tok.expect("pnfir");
    tok.expect("operator");
    const std::string version = tok.word("format version");
    if (version != "1") throw ConfigError("operator file: unsupported format version " + version);
    NfirOperator op;
    tok.expect("ts");
    op.ts = tok.number("ts");
    tok.expect("alpha");
    op.alpha = tok.number("alpha");
    tok.expect("branches");
    const Eigen::Index nb = tok.count("branch count");
    op.branches.reserve(static_cast<std::size_t>(nb));
    for (Eigen::Index j = 0; j < nb; ++j) {
        tok.expect("lifting");
        const std::string kind = tok.word("lifting kind");
        NfirBranch branch;
        if (kind == "identity") {
            branch.lifting = IdentityLifting{};
        } else if (kind == "volcano") {
            VolcanoLifting v;
            tok.expect("center");
            v.center = tok.number("center");
            tok.expect("radius");
            v.radius = tok.number("radius");
            branch.lifting = v;
        } else if (kind == "gaussian_window") {
            GaussianWindowLifting g;
            tok.expect("sigma");
            g.sigma = tok.number("sigma");
            tok.expect("reference");
            g.reference = tok.vector(tok.count("reference length"), "reference");
            branch.lifting = g;
        } else if (kind == "external_gaussian") {
            ExternalGaussianLifting e;
            tok.expect("setpoint");
            e.setpoint = tok.number("setpoint");
            tok.expect("sigma");
            e.sigma = tok.number("sigma");
            branch.lifting = e;
        } else if (kind == "tabulated") {
            TabulatedLifting t;
            tok.expect("knots");
            t.knots = tok.vector(tok.count("knot count"), "knots");
            tok.expect("values");
            t.values = tok.vector(tok.count("value count"), "values");
            branch.lifting = t;
        } else {
            throw ConfigError("operator file: unknown lifting kind '" + kind + "'");
        }
        tok.expect("taps");
        branch.taps = tok.vector(tok.count("tap count"), "taps");
        op.branches.push_back(std::move(branch));
    }
    validate_operator(op);
    return op;
}

void save_operator(const NfirOperator& op, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw ConfigError("cannot open " + file.string() + " for writing");
    write_operator(out, op);
    if (!out) throw ConfigError("write failed for " + file.string());
}

NfirOperator load_operator(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open " + file.string());
    return read_operator(in);
}

}  // namespace pnfir
