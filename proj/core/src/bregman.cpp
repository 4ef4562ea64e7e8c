#include "pmdlab/bregman.hpp"
#include "pmdlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

namespace pmdlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kInputSimplexTolerance = 1e-9;

void require_finite(const RowRef &x, const char *what) {
    if (!x.allFinite()) throw InputError(std::string(what) + " must be finite");
}

void require_simplex(const RowRef &p, const char *what) {
    require_finite(p, what);
    if ((p.array() < 0.0).any() || std::abs(p.sum() - 1.0) > kInputSimplexTolerance)
        throw InputError(std::string(what) + " is not a probability vector");
}

void require_same_size(const RowRef &a, const RowRef &b) {
    if (a.size() != b.size()) throw InputError("row length mismatch");
}

// ⟨c1, p⟩ is constant on the simplex, so shifting g leaves every step unchanged
// while keeping the arithmetic near the optimal actions exact.
Vector shifted(const RowRef &g) { return g.array() - g.minCoeff(); }

Vector softmax_log(const Vector &logits) {
    const double m = logits.maxCoeff();
    const double lse = m + std::log((logits.array() - m).exp().sum());
    return logits.array() - lse;
}

double tsallis_gradient(double q, double p) {
    if (p == 0.0) return q > 1.0 ? 0.0 : -kInf;
    return q * std::pow(p, q - 1.0) / (q - 1.0);
}

double tsallis_inverse_gradient(double q, double y) {
    const double base = (q - 1.0) * y / q;
    if (base <= 0.0) return q > 1.0 ? 0.0 : kInf;
    return std::pow(base, 1.0 / (q - 1.0));
}

double tsallis_h(double q, const RowRef &p) {
    return (p.array().pow(q).sum() - 1.0) / (q - 1.0);
}

// Stationary point of ⟨g,p⟩ + D_q(p, pi): ∇h(p_a) = u_a + λ on the support,
// with u = ∇h(pi) - g and λ fixed by Σ p = 1. The row sum is increasing in λ.
Vector tsallis_step(double q, const RowRef &pi_row, const Vector &g) {
    const Index n = pi_row.size();
    Vector u(n);
    for (Index a = 0; a < n; ++a) u(a) = tsallis_gradient(q, pi_row(a)) - g(a);
    if (!u.allFinite())
        throw DomainError("tsallis step with q < 1 needs an interior policy row");

    const double u_max = u.maxCoeff();
    auto row_at = [&](double lambda) {
        Vector p(n);
        for (Index a = 0; a < n; ++a) p(a) = tsallis_inverse_gradient(q, u(a) + lambda);
        return p;
    };
    double lo = tsallis_gradient(q, 1.0 / static_cast<double>(n)) - u_max;
    double hi = tsallis_gradient(q, 1.0) - u_max;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (row_at(mid).sum() < 1.0 ? lo : hi) = mid;
    }
    Vector p_lo = row_at(lo), p_hi = row_at(hi);
    const double s_lo = p_lo.sum(), s_hi = p_hi.sum();
    Vector &p = std::abs(s_lo - 1.0) <= std::abs(s_hi - 1.0) ? p_lo : p_hi;
    const double total = p.sum();
    if (!std::isfinite(total) || std::abs(total - 1.0) > 1e-9) {
        std::ostringstream msg;
        msg << "tsallis normalization did not converge (row sum " << total << ")";
        throw NumericalError(msg.str());
    }
    return p / total;
}

KktReport normal_cone_report(const Vector &w, const std::vector<bool> &support, double scale) {
    KktReport report;
    if (!w.allFinite()) {
        report.residual = report.multiplier_spread = report.offsupport_violation = kInf;
        return report;
    }
    double lo = kInf, hi = -kInf, off = -kInf;
    for (Index a = 0; a < w.size(); ++a) {
        if (support[static_cast<std::size_t>(a)]) {
            lo = std::min(lo, w(a));
            hi = std::max(hi, w(a));
        } else {
            off = std::max(off, w(a));
        }
    }
    if (lo == kInf) {
        report.residual = report.multiplier_spread = report.offsupport_violation = kInf;
        return report;
    }
    report.multiplier_spread = (hi - lo) / scale;
    report.offsupport_violation = off == -kInf ? 0.0 : std::max(0.0, off - lo) / scale;
    report.residual = std::max(report.multiplier_spread, report.offsupport_violation);
    return report;
}

double finite_max_abs(const Vector &v) {
    double m = 0.0;
    for (Index a = 0; a < v.size(); ++a)
        if (std::isfinite(v(a))) m = std::max(m, std::abs(v(a)));
    return m;
}

} // namespace

DivergenceSpec DivergenceSpec::euclidean() {
    DivergenceSpec spec;
    spec.kind = DivergenceKind::euclidean;
    spec.gradient_bound_M = 1.0;
    spec.boundary_blowup = false;
    spec.cocoercivity_L = 1.0;
    return spec;
}

DivergenceSpec DivergenceSpec::kl() {
    DivergenceSpec spec;
    spec.kind = DivergenceKind::kl;
    spec.boundary_blowup = true;
    return spec;
}

DivergenceSpec DivergenceSpec::tsallis(double q) {
    if (!(q > 0.0) || q == 1.0 || !std::isfinite(q))
        throw InputError("tsallis index q must be positive and different from 1");
    DivergenceSpec spec;
    spec.kind = DivergenceKind::tsallis;
    spec.q = q;
    if (q > 1.0) {
        spec.gradient_bound_M = q / (q - 1.0);
        spec.boundary_blowup = false;
        // Hessian q·p^{q-2} is bounded on the simplex only for q >= 2.
        if (q >= 2.0) spec.cocoercivity_L = q;
    } else {
        spec.boundary_blowup = true;
    }
    return spec;
}

std::string DivergenceSpec::name() const {
    switch (kind) {
    case DivergenceKind::euclidean: return "euclidean";
    case DivergenceKind::kl: return "kl";
    case DivergenceKind::tsallis: {
        std::ostringstream out;
        out << "tsallis:q=" << q;
        return out.str();
    }
    }
    return "unknown";
}

Vector project_simplex(const RowRef &x) {
    if (x.size() == 0) throw InputError("cannot project an empty vector");
    require_finite(x, "projection input");
    const Vector y = x.array() - x.maxCoeff();
    std::vector<double> sorted(y.data(), y.data() + y.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0, theta = 0.0;
    for (std::size_t j = 0; j < sorted.size(); ++j) {
        cumulative += sorted[j];
        const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
        if (sorted[j] - candidate > 0.0) theta = candidate;
    }
    return (y.array() - theta).max(0.0);
}

Vector generator_gradient(const DivergenceSpec &spec, const RowRef &p) {
    switch (spec.kind) {
    case DivergenceKind::euclidean: return p;
    case DivergenceKind::kl: {
        Vector out(p.size());
        for (Index a = 0; a < p.size(); ++a) out(a) = p(a) > 0.0 ? std::log(p(a)) + 1.0 : -kInf;
        return out;
    }
    case DivergenceKind::tsallis: {
        Vector out(p.size());
        for (Index a = 0; a < p.size(); ++a) out(a) = tsallis_gradient(spec.q, p(a));
        return out;
    }
    }
    throw UnsupportedError("unknown divergence kind");
}

double divergence_value(const DivergenceSpec &spec, const RowRef &p, const RowRef &p_ref) {
    require_same_size(p, p_ref);
    require_simplex(p, "p");
    require_simplex(p_ref, "p_ref");
    if (spec.boundary_blowup && (p_ref.array() <= 0.0).any())
        throw DomainError("reference point must be interior for " + spec.name());

    switch (spec.kind) {
    case DivergenceKind::euclidean: return 0.5 * (p - p_ref).squaredNorm();
    case DivergenceKind::kl: {
        double d = 0.0;
        for (Index a = 0; a < p.size(); ++a)
            if (p(a) > 0.0) d += p(a) * std::log(p(a) / p_ref(a));
        return d;
    }
    case DivergenceKind::tsallis: {
        const Vector grad = generator_gradient(spec, p_ref);
        return tsallis_h(spec.q, p) - tsallis_h(spec.q, p_ref) - grad.dot(p - p_ref);
    }
    }
    throw UnsupportedError("unknown divergence kind");
}

Vector mirror_step(const DivergenceSpec &spec, const RowRef &pi_row, const RowRef &g) {
    require_same_size(pi_row, g);
    require_simplex(pi_row, "policy row");
    require_finite(g, "step direction");
    const Vector gs = shifted(g);
    switch (spec.kind) {
    case DivergenceKind::euclidean: return project_simplex(pi_row - gs);
    case DivergenceKind::kl: {
        if ((pi_row.array() <= 0.0).any())
            throw DomainError("kl step needs an interior policy row");
        return kl_log_step(pi_row.array().log().matrix(), gs).array().exp();
    }
    case DivergenceKind::tsallis: return tsallis_step(spec.q, pi_row, gs);
    }
    throw UnsupportedError("unknown divergence kind");
}

Vector regularized_mirror_step(const DivergenceSpec &spec, const RowRef &pi_row, const RowRef &g,
                               double eta_tau, const RowRef &pi0_row) {
    if (spec.kind == DivergenceKind::tsallis)
        throw UnsupportedError("regularized step is not available for tsallis divergences");
    if (!(eta_tau >= 0.0) || !std::isfinite(eta_tau))
        throw InputError("eta_tau must be finite and nonnegative");
    require_same_size(pi_row, g);
    require_same_size(pi_row, pi0_row);
    require_simplex(pi_row, "policy row");
    require_simplex(pi0_row, "anchor row");
    require_finite(g, "step direction");
    if (eta_tau == 0.0) return mirror_step(spec, pi_row, g);

    const Vector gs = shifted(g);
    if (spec.kind == DivergenceKind::euclidean)
        return project_simplex((pi_row - gs + eta_tau * pi0_row) / (1.0 + eta_tau));

    if ((pi_row.array() <= 0.0).any() || (pi0_row.array() <= 0.0).any())
        throw DomainError("kl step needs interior policy and anchor rows");
    return kl_log_regularized_step(pi_row.array().log().matrix(), gs, eta_tau,
                                   pi0_row.array().log().matrix())
        .array()
        .exp();
}

KktReport kkt_check(const DivergenceSpec &spec, const RowRef &pi_prev, const RowRef &pi_next,
                    const RowRef &g) {
    const Vector none = Vector::Zero(pi_prev.size());
    return kkt_check(spec, pi_prev, pi_next, g, 0.0, none);
}

KktReport kkt_check(const DivergenceSpec &spec, const RowRef &pi_prev, const RowRef &pi_next,
                    const RowRef &g, double eta_tau, const RowRef &pi0_row) {
    require_same_size(pi_prev, pi_next);
    require_same_size(pi_prev, g);
    require_same_size(pi_prev, pi0_row);
    const Vector gs = shifted(g);
    const Vector grad_prev = generator_gradient(spec, pi_prev);
    const Vector grad_next = generator_gradient(spec, pi_next);
    Vector w = grad_prev - (1.0 + eta_tau) * grad_next - gs;
    double scale = std::max({1.0, finite_max_abs(gs), finite_max_abs(grad_prev)});
    if (eta_tau > 0.0) {
        const Vector grad_anchor = generator_gradient(spec, pi0_row);
        w += eta_tau * grad_anchor;
        scale = std::max(scale, eta_tau * finite_max_abs(grad_anchor));
    }
    std::vector<bool> support(static_cast<std::size_t>(pi_next.size()));
    for (Index a = 0; a < pi_next.size(); ++a) support[static_cast<std::size_t>(a)] = pi_next(a) > 0.0;
    return normal_cone_report(w, support, scale);
}

Vector kl_log_step(const RowRef &log_row, const RowRef &g) {
    require_same_size(log_row, g);
    require_finite(log_row, "log-policy row");
    require_finite(g, "step direction");
    return softmax_log(log_row - shifted(g));
}

Vector kl_log_regularized_step(const RowRef &log_row, const RowRef &g, double eta_tau,
                               const RowRef &log_pi0_row) {
    require_same_size(log_row, g);
    require_same_size(log_row, log_pi0_row);
    require_finite(log_row, "log-policy row");
    require_finite(log_pi0_row, "log-anchor row");
    require_finite(g, "step direction");
    if (!(eta_tau >= 0.0) || !std::isfinite(eta_tau))
        throw InputError("eta_tau must be finite and nonnegative");
    if (eta_tau == 0.0) return kl_log_step(log_row, g);
    const double keep = 1.0 / (1.0 + eta_tau);
    return softmax_log(keep * (log_row - shifted(g)) + (eta_tau * keep) * log_pi0_row);
}

KktReport kl_log_kkt_check(const RowRef &log_prev, const RowRef &log_next, const RowRef &g,
                           double eta_tau, const std::optional<Vector> &log_pi0) {
    require_same_size(log_prev, log_next);
    require_same_size(log_prev, g);
    const Vector gs = shifted(g);
    // The +1 in ∇h(p) = log p + 1 cancels between the three gradient terms.
    Vector w = log_prev - (1.0 + eta_tau) * log_next - gs;
    double scale = std::max({1.0, finite_max_abs(gs), finite_max_abs(log_prev)});
    if (eta_tau > 0.0) {
        if (!log_pi0 || log_pi0->size() != log_prev.size())
            throw InputError("regularized kkt check needs an anchor row");
        w += eta_tau * *log_pi0;
        scale = std::max(scale, eta_tau * finite_max_abs(*log_pi0));
    }
    const std::vector<bool> support(static_cast<std::size_t>(w.size()), true);
    return normal_cone_report(w, support, scale);
}

double kl_divergence_log(const RowRef &p, const RowRef &log_ref) {
    require_same_size(p, log_ref);
    double d = 0.0;
    for (Index a = 0; a < p.size(); ++a)
        if (p(a) > 0.0) d += p(a) * (std::log(p(a)) - log_ref(a));
    return d;
}

} // namespace pmdlab
