#include "pmdlab/mdp.hpp"
#include "pmdlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace pmdlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLogSmallestNormal = std::log(std::numeric_limits<double>::min());

void require(bool condition, const std::string &message) {
    if (!condition) throw InputError(message);
}

bool is_distribution(const Eigen::Ref<const Vector> &row) {
    if (!row.allFinite() || (row.array() < 0.0).any()) return false;
    return std::abs(row.sum() - 1.0) <= kProbabilityTolerance;
}

Vector normalized_log_row(const Eigen::Ref<const Vector> &logits) {
    const double m = logits.maxCoeff();
    const double lse = m + std::log((logits.array() - m).exp().sum());
    return logits.array() - lse;
}

void check_dimensions(const Mdp &mdp, const Policy &policy) {
    if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions())
        throw InputError("policy is " + std::to_string(policy.n_states()) + "x" +
                         std::to_string(policy.n_actions()) + " but MDP is " +
                         std::to_string(mdp.n_states()) + "x" + std::to_string(mdp.n_actions()));
}

Matrix policy_transition(const Mdp &mdp, const Matrix &probs) {
    Matrix p_pi = Matrix::Zero(mdp.n_states(), mdp.n_states());
    for (Index s = 0; s < mdp.n_states(); ++s)
        for (Index a = 0; a < mdp.n_actions(); ++a)
            if (probs(s, a) != 0.0) p_pi.row(s) += probs(s, a) * mdp.next_distribution(s, a);
    return p_pi;
}

Vector policy_cost(const Mdp &mdp, const Matrix &probs) {
    return mdp.cost().cwiseProduct(probs).rowwise().sum();
}

Matrix resolvent_system(const Mdp &mdp, const Matrix &probs) {
    const Index n = mdp.n_states();
    return Matrix::Identity(n, n) - mdp.gamma() * policy_transition(mdp, probs);
}

Vector evaluate_deterministic(const Mdp &mdp, const std::vector<Index> &actions) {
    return evaluate_values(mdp, Policy::deterministic(actions, mdp.n_actions()));
}

std::vector<Index> greedy_actions(const Matrix &q) {
    std::vector<Index> actions(static_cast<std::size_t>(q.rows()));
    for (Index s = 0; s < q.rows(); ++s) {
        Index best = 0;
        q.row(s).minCoeff(&best);
        actions[static_cast<std::size_t>(s)] = best;
    }
    return actions;
}

double uniform01(std::mt19937_64 &gen) {
    // 53 random mantissa bits; stable across standard library implementations.
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

} // namespace

Mdp::Mdp(Index n_states, Index n_actions, Matrix transition, Matrix cost, double gamma)
    : n_states_(n_states), n_actions_(n_actions), transition_(std::move(transition)),
      cost_(std::move(cost)), gamma_(gamma) {
    require(n_states_ >= 1 && n_actions_ >= 1, "MDP needs at least one state and one action");
    require(transition_.rows() == n_states_ * n_actions_ && transition_.cols() == n_states_,
            "transition must be (|S|*|A|) x |S|");
    require(cost_.rows() == n_states_ && cost_.cols() == n_actions_, "cost must be |S| x |A|");
    require(gamma_ >= 0.0 && gamma_ < 1.0, "gamma must lie in [0,1)");
    require(cost_.allFinite() && (cost_.array() >= 0.0).all() && (cost_.array() <= 1.0).all(),
            "costs must lie in [0,1]");
    for (Index r = 0; r < transition_.rows(); ++r)
        require(is_distribution(transition_.row(r).transpose()),
                "transition row (s=" + std::to_string(r / n_actions_) +
                    ", a=" + std::to_string(r % n_actions_) + ") is not a distribution");
}

Policy::Policy(PolicyRepresentation rep, Matrix probs, Matrix logp)
    : rep_(rep), probs_(std::move(probs)), logp_(std::move(logp)) {}

Policy Policy::from_probabilities(Matrix probs) {
    require(probs.rows() >= 1 && probs.cols() >= 1, "policy must be non-empty");
    for (Index s = 0; s < probs.rows(); ++s)
        require(is_distribution(probs.row(s).transpose()),
                "policy row " + std::to_string(s) + " is not a distribution");
    return Policy(PolicyRepresentation::direct, std::move(probs), Matrix());
}

Policy Policy::from_log_probabilities(Matrix logits) {
    require(logits.rows() >= 1 && logits.cols() >= 1, "policy must be non-empty");
    require(logits.allFinite(), "log-probabilities must be finite");
    for (Index s = 0; s < logits.rows(); ++s)
        logits.row(s) = normalized_log_row(logits.row(s).transpose()).transpose();
    // Entries below the normal range are flushed to zero; subnormal
    // probabilities carry no information and slow every later product.
    Matrix probs = (logits.array() < kLogSmallestNormal).select(0.0, logits.array().exp());
    return Policy(PolicyRepresentation::log_domain, std::move(probs), std::move(logits));
}

Policy Policy::uniform(Index n_states, Index n_actions, PolicyRepresentation rep) {
    require(n_states >= 1 && n_actions >= 1, "policy must be non-empty");
    if (rep == PolicyRepresentation::log_domain)
        return from_log_probabilities(Matrix::Zero(n_states, n_actions));
    return Policy(rep, Matrix::Constant(n_states, n_actions, 1.0 / static_cast<double>(n_actions)),
                  Matrix());
}

Policy Policy::deterministic(const std::vector<Index> &actions, Index n_actions) {
    require(!actions.empty() && n_actions >= 1, "policy must be non-empty");
    Matrix probs = Matrix::Zero(static_cast<Index>(actions.size()), n_actions);
    for (std::size_t s = 0; s < actions.size(); ++s) {
        require(actions[s] >= 0 && actions[s] < n_actions, "action index out of range");
        probs(static_cast<Index>(s), actions[s]) = 1.0;
    }
    return Policy(PolicyRepresentation::direct, std::move(probs), Matrix());
}

const Matrix &Policy::log_probabilities() const {
    if (rep_ != PolicyRepresentation::log_domain)
        throw UnsupportedError("policy is not in log-domain representation");
    return logp_;
}

Policy Policy::to_log_domain() const {
    if (rep_ == PolicyRepresentation::log_domain) return *this;
    if (!is_interior()) throw DomainError("log-domain policy requires strictly positive entries");
    return from_log_probabilities(probs_.array().log());
}

bool Policy::is_interior() const {
    if (rep_ == PolicyRepresentation::log_domain) return true;
    return (probs_.array() > 0.0).all();
}

StateDistribution::StateDistribution(Vector weights) : weights_(std::move(weights)) {
    require(weights_.size() >= 1, "state distribution must be non-empty");
    require(is_distribution(weights_), "state distribution must be nonnegative and sum to 1");
}

StateDistribution StateDistribution::uniform(Index n_states) {
    require(n_states >= 1, "state distribution must be non-empty");
    return StateDistribution(Vector::Constant(n_states, 1.0 / static_cast<double>(n_states)));
}

bool OptimalStructure::is_optimal_action(Index s, Index a) const {
    const auto &set = optimal_actions.at(static_cast<std::size_t>(s));
    return std::binary_search(set.begin(), set.end(), a);
}

bool OptimalStructure::is_dummy(Index s) const {
    return std::binary_search(dummy_states.begin(), dummy_states.end(), s);
}

bool OptimalStructure::gap_reliable() const { return delta_gap >= 1e-6; }

Policy OptimalStructure::reference_policy() const {
    std::vector<Index> actions;
    actions.reserve(optimal_actions.size());
    for (const auto &set : optimal_actions) actions.push_back(set.front());
    return Policy::deterministic(actions, q_star.cols());
}

Vector evaluate_values(const Mdp &mdp, const Policy &policy) {
    check_dimensions(mdp, policy);
    const Matrix &probs = policy.probabilities();
    const Matrix system = resolvent_system(mdp, probs);
    const Vector r = policy_cost(mdp, probs);
    Vector v = system.partialPivLu().solve(r);
    const double residual = (system * v - r).lpNorm<Eigen::Infinity>();
    if (!(residual <= 1e-9))
        throw NumericalError("policy evaluation residual " + std::to_string(residual));
    return v;
}

Matrix evaluate_q(const Mdp &mdp, const Vector &v) {
    if (v.size() != mdp.n_states()) throw InputError("value vector has wrong length");
    const Vector next = mdp.transition() * v;
    return mdp.cost() + mdp.gamma() * next.reshaped<Eigen::RowMajor>(mdp.n_states(), mdp.n_actions());
}

StateDistribution visitation_distribution(const Mdp &mdp, const Policy &policy,
                                          const StateDistribution &rho) {
    check_dimensions(mdp, policy);
    if (rho.size() != mdp.n_states()) throw InputError("rho has wrong length");
    const Matrix system = resolvent_system(mdp, policy.probabilities());
    Vector d = (1.0 - mdp.gamma()) * system.transpose().partialPivLu().solve(rho.weights());
    // Clean rounding so the result is an exact distribution.
    d = d.cwiseMax(0.0);
    d /= d.sum();
    return StateDistribution(std::move(d));
}

OptimalSolution solve_optimal(const Mdp &mdp, double tol) {
    if (!(tol > 0.0)) throw InputError("solve_optimal tolerance must be positive");

    // Howard policy iteration; a switch needs a strict improvement above
    // rounding so that ties cannot cycle.
    std::vector<Index> actions = greedy_actions(mdp.cost());
    Vector v = evaluate_deterministic(mdp, actions);
    Matrix q = evaluate_q(mdp, v);
    constexpr int kMaxPolicyIterations = 100000;
    for (int it = 0;; ++it) {
        if (it == kMaxPolicyIterations) throw NumericalError("policy iteration did not stabilize");
        bool changed = false;
        for (Index s = 0; s < mdp.n_states(); ++s) {
            Index best = 0;
            const double best_q = q.row(s).minCoeff(&best);
            auto &current = actions[static_cast<std::size_t>(s)];
            const double slack = 1e-13 * std::max(1.0, std::abs(q(s, current)));
            if (best_q < q(s, current) - slack) {
                current = best;
                changed = true;
            }
        }
        if (!changed) break;
        v = evaluate_deterministic(mdp, actions);
        q = evaluate_q(mdp, v);
    }

    // Certify with the min-Bellman residual. The floor keeps the certificate
    // meaningful when tol·(1-γ)/(2γ) drops below double rounding of V.
    auto bellman_residual = [&](const Vector &values, const Matrix &qv) {
        return (qv.rowwise().minCoeff() - values).lpNorm<Eigen::Infinity>();
    };
    const double eps = std::numeric_limits<double>::epsilon();
    const double target =
        mdp.gamma() == 0.0
            ? kInf
            : std::max(tol * (1.0 - mdp.gamma()) / (2.0 * mdp.gamma()),
                       256.0 * eps * std::max(1.0, v.lpNorm<Eigen::Infinity>()));
    int sweeps = 0;
    while (bellman_residual(v, q) > target) {
        if (++sweeps > 1000000) throw NumericalError("value iteration did not reach tolerance");
        v = q.rowwise().minCoeff();
        q = evaluate_q(mdp, v);
    }
    if (sweeps > 0) {
        v = evaluate_deterministic(mdp, greedy_actions(q));
        q = evaluate_q(mdp, v);
    }
    return {std::move(v), std::move(q)};
}

Vector brute_force_optimal(const Mdp &mdp) {
    const double count = std::pow(static_cast<double>(mdp.n_actions()),
                                  static_cast<double>(mdp.n_states()));
    if (count > 1e6)
        throw InputError("brute force enumeration refuses more than 10^6 deterministic policies");

    const auto n = static_cast<std::size_t>(mdp.n_states());
    std::vector<Index> actions(n, 0);
    std::vector<Vector> values;
    values.reserve(static_cast<std::size_t>(count));
    Vector best = Vector::Constant(mdp.n_states(), kInf);
    while (true) {
        values.push_back(evaluate_deterministic(mdp, actions));
        best = best.cwiseMin(values.back());
        std::size_t digit = 0;
        while (digit < n && ++actions[digit] == mdp.n_actions()) actions[digit++] = 0;
        if (digit == n) break;
    }
    const bool attained = std::any_of(values.begin(), values.end(), [&](const Vector &v) {
        return (v - best).lpNorm<Eigen::Infinity>() <= 1e-9 * std::max(1.0, best.lpNorm<Eigen::Infinity>());
    });
    if (!attained)
        throw NumericalError("no deterministic policy attains the componentwise minimum");
    return best;
}

OptimalStructure optimal_structure(const Vector &v_star, const Matrix &q_star, double tie_tol) {
    if (!(tie_tol > 0.0)) throw InputError("tie tolerance must be positive");
    if (v_star.size() != q_star.rows()) throw InputError("V* and Q* disagree on |S|");

    OptimalStructure out;
    out.v_star = v_star;
    out.q_star = q_star;
    out.tie_tolerance = tie_tol;
    out.delta_gap = kInf;
    const Index n_actions = q_star.cols();
    for (Index s = 0; s < q_star.rows(); ++s) {
        const double q_min = q_star.row(s).minCoeff();
        const double threshold = q_min + tie_tol * std::max(1.0, std::abs(q_min));
        std::vector<Index> optimal;
        for (Index a = 0; a < n_actions; ++a)
            if (q_star(s, a) <= threshold) optimal.push_back(a);
        if (static_cast<Index>(optimal.size()) == n_actions) {
            out.dummy_states.push_back(s);
        } else {
            for (Index a = 0; a < n_actions; ++a)
                if (q_star(s, a) > threshold) out.delta_gap = std::min(out.delta_gap, q_star(s, a) - q_min);
        }
        out.optimal_actions.push_back(std::move(optimal));
    }
    return out;
}

MismatchCoefficients mismatch_coefficients(const Mdp &mdp, const StateDistribution &rho,
                                           const Policy &pi_star,
                                           const OptimalStructure &structure) {
    check_dimensions(mdp, pi_star);
    if (rho.size() != mdp.n_states()) throw InputError("rho has wrong length");
    const Matrix &probs = pi_star.probabilities();
    for (Index s = 0; s < mdp.n_states(); ++s)
        for (Index a = 0; a < mdp.n_actions(); ++a)
            if (probs(s, a) > 0.0 && !structure.is_optimal_action(s, a))
                throw InputError("pi_star puts mass on a non-optimal action in state " +
                                 std::to_string(s));

    MismatchCoefficients out;
    out.r_rho = 0.0;
    for (Index r = 0; r < mdp.transition().rows(); ++r) {
        for (Index next = 0; next < mdp.n_states(); ++next) {
            const double p = mdp.transition()(r, next);
            if (p <= 0.0) continue;
            out.r_rho = rho[next] > 0.0 ? std::max(out.r_rho, p / rho[next]) : kInf;
        }
    }
    out.d_rho_pi_star = visitation_distribution(mdp, pi_star, rho);
    double ratio = 0.0;
    for (Index s = 0; s < mdp.n_states(); ++s) {
        const double d = out.d_rho_pi_star[s];
        if (rho[s] > 0.0)
            ratio = std::max(ratio, d / rho[s]);
        else if (d > 0.0)
            ratio = kInf;
    }
    out.theta_rho = ratio / (1.0 - mdp.gamma());
    return out;
}

Mdp random_mdp(std::uint64_t seed, Index n_states, Index n_actions, double gamma) {
    require(n_states >= 1 && n_actions >= 1, "random_mdp needs at least one state and action");
    std::mt19937_64 gen(seed);
    Matrix cost(n_states, n_actions);
    for (Index s = 0; s < n_states; ++s)
        for (Index a = 0; a < n_actions; ++a) cost(s, a) = uniform01(gen);
    Matrix transition(n_states * n_actions, n_states);
    for (Index r = 0; r < transition.rows(); ++r) {
        for (Index next = 0; next < n_states; ++next) transition(r, next) = uniform01(gen);
        double total = transition.row(r).sum();
        if (total == 0.0) {
            transition.row(r).setConstant(1.0);
            total = static_cast<double>(n_states);
        }
        transition.row(r) /= total;
    }
    return Mdp(n_states, n_actions, std::move(transition), std::move(cost), gamma);
}

ReferenceSolution analyze(const Mdp &mdp, const StateDistribution &rho, double tie_tol,
                          double solve_tol) {
    OptimalSolution solution = solve_optimal(mdp, solve_tol);
    OptimalStructure structure = optimal_structure(solution.v_star, solution.q_star, tie_tol);
    Policy pi_star = structure.reference_policy();
    MismatchCoefficients mismatch = mismatch_coefficients(mdp, rho, pi_star, structure);
    const double v_star_rho = rho.weights().dot(structure.v_star);
    return {std::move(structure), std::move(pi_star), rho, std::move(mismatch), v_star_rho};
}

} // namespace pmdlab
