#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace pmdlab {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Tolerance on row sums of stochastic vectors and matrices.
inline constexpr double kProbabilityTolerance = 1e-12;

/**
 * Finite discounted MDP with costs.
 *
 * The transition tensor is stored as a (|S|·|A|) × |S| matrix whose row
 * `s * n_actions + a` is the next-state distribution P(·|s,a). Costs live in
 * [0,1] and every quantity in the library is minimized.
 */
class Mdp {
public:
    Mdp(Index n_states, Index n_actions, Matrix transition, Matrix cost, double gamma);

    Index n_states() const noexcept { return n_states_; }
    Index n_actions() const noexcept { return n_actions_; }
    double gamma() const noexcept { return gamma_; }

    const Matrix &transition() const noexcept { return transition_; }
    const Matrix &cost() const noexcept { return cost_; }

    double transition(Index s, Index a, Index next) const { return transition_(row(s, a), next); }
    auto next_distribution(Index s, Index a) const { return transition_.row(row(s, a)); }

    Index row(Index s, Index a) const noexcept { return s * n_actions_ + a; }

    friend bool operator==(const Mdp &, const Mdp &) = default;

private:
    Index n_states_;
    Index n_actions_;
    Matrix transition_;
    Matrix cost_;
    double gamma_;
};

enum class PolicyRepresentation { direct, log_domain };

/**
 * Row-stochastic |S| × |A| policy.
 *
 * The log-domain representation keeps log-probabilities normalized so that
 * each row has log-sum-exp zero. Probabilities are derived from it and may
 * underflow to exactly zero while the log-probabilities stay finite.
 */
class Policy {
public:
    static Policy from_probabilities(Matrix probs);
    /// Rows are shifted to log-sum-exp zero; any finite input is accepted.
    static Policy from_log_probabilities(Matrix logits);
    static Policy uniform(Index n_states, Index n_actions,
                          PolicyRepresentation rep = PolicyRepresentation::direct);
    static Policy deterministic(const std::vector<Index> &actions, Index n_actions);

    PolicyRepresentation representation() const noexcept { return rep_; }
    Index n_states() const noexcept { return probs_.rows(); }
    Index n_actions() const noexcept { return probs_.cols(); }

    const Matrix &probabilities() const noexcept { return probs_; }
    /// Throws UnsupportedError for the direct representation.
    const Matrix &log_probabilities() const;

    /// Requires every entry to be strictly positive.
    Policy to_log_domain() const;
    bool is_interior() const;

private:
    Policy(PolicyRepresentation rep, Matrix probs, Matrix logp);

    PolicyRepresentation rep_;
    Matrix probs_;
    Matrix logp_;
};

class StateDistribution {
public:
    explicit StateDistribution(Vector weights);
    static StateDistribution uniform(Index n_states);

    const Vector &weights() const noexcept { return weights_; }
    Index size() const noexcept { return weights_.size(); }
    double operator[](Index s) const { return weights_(s); }

private:
    Vector weights_;
};

/// Optimal values, optimal action sets, dummy states and the advantage gap.
struct OptimalStructure {
    Vector v_star;
    Matrix q_star;
    /// Sorted action indices per state.
    std::vector<std::vector<Index>> optimal_actions;
    std::vector<Index> dummy_states;
    /// +infinity when every state is dummy.
    double delta_gap = 0.0;
    double tie_tolerance = 0.0;

    bool is_optimal_action(Index s, Index a) const;
    bool is_dummy(Index s) const;
    /// False when the measured gap is too small for the tie tolerance to be trusted.
    bool gap_reliable() const;
    /// Deterministic policy choosing the smallest optimal action in each state.
    Policy reference_policy() const;
};

struct MismatchCoefficients {
    /// max over s,a,s' of P(s'|s,a)/rho(s'); +infinity when rho lacks support.
    double r_rho = 0.0;
    double theta_rho = 0.0;
    StateDistribution d_rho_pi_star{Vector::Ones(1)};
};

struct OptimalSolution {
    Vector v_star;
    Matrix q_star;
};

/// Exact solution of (I - γP(π))V = r(π) by LU.
Vector evaluate_values(const Mdp &mdp, const Policy &policy);

/// Q = R + γ P V.
Matrix evaluate_q(const Mdp &mdp, const Vector &v);

/// d_ρ(π) = (1-γ) ρᵀ (I - γP(π))⁻¹.
StateDistribution visitation_distribution(const Mdp &mdp, const Policy &policy,
                                          const StateDistribution &rho);

OptimalSolution solve_optimal(const Mdp &mdp, double tol = 1e-12);

/// Enumerates every deterministic policy; refuses instances with more than 10^6 of them.
Vector brute_force_optimal(const Mdp &mdp);

OptimalStructure optimal_structure(const Vector &v_star, const Matrix &q_star,
                                   double tie_tol = 1e-9);

MismatchCoefficients mismatch_coefficients(const Mdp &mdp, const StateDistribution &rho,
                                           const Policy &pi_star,
                                           const OptimalStructure &structure);

/// Costs and transition weights drawn from Unif(0,1); transition rows normalized.
Mdp random_mdp(std::uint64_t seed, Index n_states, Index n_actions, double gamma = 0.9);

/// Everything about an instance that the engine and diagnostics need once.
struct ReferenceSolution {
    OptimalStructure structure;
    Policy pi_star;
    StateDistribution rho;
    MismatchCoefficients mismatch;
    double v_star_rho = 0.0;
};

ReferenceSolution analyze(const Mdp &mdp, const StateDistribution &rho, double tie_tol = 1e-9,
                          double solve_tol = 1e-12);

} // namespace pmdlab
