#pragma once

#include "pmdlab/mdp.hpp"

#include <initializer_list>
#include <random>
#include <vector>

namespace fixture {

using pmdlab::Index;
using pmdlab::Matrix;
using pmdlab::Vector;

/// transitions[s][a] is the next-state distribution, costs[s][a] the cost.
inline pmdlab::Mdp make_mdp(const std::vector<std::vector<std::vector<double>>> &transitions,
                            const std::vector<std::vector<double>> &costs, double gamma) {
    const auto n = static_cast<Index>(transitions.size());
    const auto m = static_cast<Index>(transitions.front().size());
    Matrix p(n * m, n);
    Matrix r(n, m);
    for (Index s = 0; s < n; ++s)
        for (Index a = 0; a < m; ++a) {
            r(s, a) = costs[s][a];
            for (Index t = 0; t < n; ++t) p(s * m + a, t) = transitions[s][a][t];
        }
    return pmdlab::Mdp(n, m, p, r, gamma);
}

inline pmdlab::Mdp single_state(std::vector<double> costs, double gamma) {
    std::vector<std::vector<double>> row{costs};
    std::vector<std::vector<std::vector<double>>> p{
        std::vector<std::vector<double>>(costs.size(), std::vector<double>{1.0})};
    return make_mdp(p, row, gamma);
}

inline Vector vec(std::initializer_list<double> values) {
    Vector v(static_cast<Index>(values.size()));
    Index i = 0;
    for (double x : values) v(i++) = x;
    return v;
}

inline Vector random_simplex_point(std::mt19937_64 &gen, Index n, double floor = 0.0) {
    std::exponential_distribution<double> e(1.0);
    Vector p(n);
    for (Index i = 0; i < n; ++i) p(i) = e(gen) + floor;
    return p / p.sum();
}

/// Simplex point with roughly half of its coordinates set to zero.
inline Vector random_sparse_simplex_point(std::mt19937_64 &gen, Index n) {
    std::bernoulli_distribution keep(0.5);
    Vector p = random_simplex_point(gen, n);
    for (Index i = 0; i < n; ++i)
        if (!keep(gen)) p(i) = 0.0;
    if (p.sum() == 0.0) p(0) = 1.0;
    return p / p.sum();
}

inline pmdlab::Policy random_policy(std::mt19937_64 &gen, Index n_states, Index n_actions) {
    Matrix probs(n_states, n_actions);
    for (Index s = 0; s < n_states; ++s)
        probs.row(s) = random_simplex_point(gen, n_actions).transpose();
    return pmdlab::Policy::from_probabilities(probs);
}

} // namespace fixture
