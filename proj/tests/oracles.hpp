#pragma once

// Reference computations used only by the tests. They deliberately avoid the
// library's solvers: plain loops, series expansions and exhaustive search.

#include "pmdlab/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

using pmdlab::Index;
using pmdlab::Matrix;
using pmdlab::Mdp;
using pmdlab::Vector;

inline std::vector<std::vector<double>> policy_matrix(const Mdp &mdp, const Matrix &pi) {
    const Index n = mdp.n_states();
    std::vector<std::vector<double>> p(n, std::vector<double>(n, 0.0));
    for (Index s = 0; s < n; ++s)
        for (Index a = 0; a < mdp.n_actions(); ++a)
            for (Index t = 0; t < n; ++t) p[s][t] += pi(s, a) * mdp.transition(s, a, t);
    return p;
}

inline std::vector<double> policy_cost(const Mdp &mdp, const Matrix &pi) {
    std::vector<double> r(mdp.n_states(), 0.0);
    for (Index s = 0; s < mdp.n_states(); ++s)
        for (Index a = 0; a < mdp.n_actions(); ++a) r[s] += pi(s, a) * mdp.cost()(s, a);
    return r;
}

/// Σ_{t≤T} γ^t P^t r.
inline Vector series_values(const Mdp &mdp, const Matrix &pi, int T) {
    const auto p = policy_matrix(mdp, pi);
    auto term = policy_cost(mdp, pi);
    const std::size_t n = term.size();
    std::vector<double> sum = term;
    for (int t = 1; t <= T; ++t) {
        std::vector<double> next(n, 0.0);
        for (std::size_t s = 0; s < n; ++s)
            for (std::size_t u = 0; u < n; ++u) next[s] += mdp.gamma() * p[s][u] * term[u];
        term = next;
        for (std::size_t s = 0; s < n; ++s) sum[s] += term[s];
    }
    return Eigen::Map<Vector>(sum.data(), static_cast<Index>(n));
}

/// (1-γ) Σ_{t≤T} γ^t ρᵀ P^t.
inline Vector series_visitation(const Mdp &mdp, const Matrix &pi, const Vector &rho, int T) {
    const auto p = policy_matrix(mdp, pi);
    const std::size_t n = p.size();
    std::vector<double> row(rho.data(), rho.data() + rho.size());
    std::vector<double> sum = row;
    for (int t = 1; t <= T; ++t) {
        std::vector<double> next(n, 0.0);
        for (std::size_t s = 0; s < n; ++s)
            for (std::size_t u = 0; u < n; ++u) next[u] += mdp.gamma() * row[s] * p[s][u];
        row = next;
        for (std::size_t s = 0; s < n; ++s) sum[s] += row[s];
    }
    Vector out = Eigen::Map<Vector>(sum.data(), static_cast<Index>(n));
    return (1.0 - mdp.gamma()) * out;
}

/// Gaussian elimination with partial pivoting on (I - γP)V = r.
inline std::vector<double> solve_values(const Mdp &mdp, const Matrix &pi) {
    auto a = policy_matrix(mdp, pi);
    auto b = policy_cost(mdp, pi);
    const std::size_t n = b.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a[i][j] = (i == j ? 1.0 : 0.0) - mdp.gamma() * a[i][j];
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t j = c; j < n; ++j) a[r][j] -= f * a[c][j];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> v(n);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t j = i + 1; j < n; ++j) acc -= a[i][j] * v[j];
        v[i] = acc / a[i][i];
    }
    return v;
}

struct Exhaustive {
    Vector v_star;
    Matrix q_star;
};

/// Componentwise minimum over every deterministic policy.
inline Exhaustive exhaustive_optimum(const Mdp &mdp) {
    const Index n = mdp.n_states();
    const Index m = mdp.n_actions();
    std::vector<Index> choice(n, 0);
    Vector best = Vector::Constant(n, std::numeric_limits<double>::infinity());
    while (true) {
        Matrix pi = Matrix::Zero(n, m);
        for (Index s = 0; s < n; ++s) pi(s, choice[s]) = 1.0;
        const auto v = solve_values(mdp, pi);
        for (Index s = 0; s < n; ++s) best(s) = std::min(best(s), v[s]);
        Index s = 0;
        while (s < n && ++choice[s] == m) choice[s++] = 0;
        if (s == n) break;
    }
    Matrix q(n, m);
    for (Index s = 0; s < n; ++s)
        for (Index a = 0; a < m; ++a) {
            double acc = 0.0;
            for (Index t = 0; t < n; ++t) acc += mdp.transition(s, a, t) * best(t);
            q(s, a) = mdp.cost()(s, a) + mdp.gamma() * acc;
        }
    return {best, q};
}

/// Smallest positive margin above the row minimum, ignoring margins within tol.
inline double advantage_gap(const Matrix &q, double tol) {
    double gap = std::numeric_limits<double>::infinity();
    for (Index s = 0; s < q.rows(); ++s) {
        const double lo = q.row(s).minCoeff();
        for (Index a = 0; a < q.cols(); ++a) {
            const double d = q(s, a) - lo;
            if (d > tol) gap = std::min(gap, d);
        }
    }
    return gap;
}

/// Closest point of the simplex by dense search; n ∈ {2, 3}.
inline Vector grid_projection(const Vector &x, int steps) {
    Vector best;
    double best_d = std::numeric_limits<double>::infinity();
    auto consider = [&](const Vector &p) {
        const double d = (p - x).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = p;
        }
    };
    for (int i = 0; i <= steps; ++i) {
        const double a = static_cast<double>(i) / steps;
        if (x.size() == 2) {
            consider(Vector{{a, 1.0 - a}});
            continue;
        }
        for (int j = 0; i + j <= steps; ++j) {
            const double b = static_cast<double>(j) / steps;
            consider(Vector{{a, b, std::max(0.0, 1.0 - a - b)}});
        }
    }
    return best;
}

/// min over π* supported on the optimal sets of max_s ‖π_s - π*_s‖₁, by grid
/// search over each state's optimal sub-simplex (at most two optimal actions).
inline double grid_policy_distance(const Matrix &pi, const std::vector<std::vector<Index>> &sets,
                                   int steps) {
    double worst = 0.0;
    for (Index s = 0; s < pi.rows(); ++s) {
        const auto &set = sets[static_cast<std::size_t>(s)];
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= steps; ++i) {
            const double t = set.size() == 1 ? 1.0 : static_cast<double>(i) / steps;
            Vector target = Vector::Zero(pi.cols());
            target(set[0]) = t;
            if (set.size() == 2) target(set[1]) = 1.0 - t;
            best = std::min(best, (pi.row(s).transpose() - target).lpNorm<1>());
            if (set.size() == 1) break;
        }
        worst = std::max(worst, best);
    }
    return worst;
}

} // namespace oracle
