#include "pmdlab/pmd.hpp"
#include "pmdlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pmdlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Clock = std::chrono::steady_clock;

Policy as_direct(const Policy &policy) {
    if (policy.representation() == PolicyRepresentation::direct) return policy;
    return Policy::from_probabilities(policy.probabilities());
}

// Removes rounding drift from the step so the row-sum invariant holds.
Policy direct_from_rows(Matrix rows) {
    for (Index s = 0; s < rows.rows(); ++s) rows.row(s) /= rows.row(s).sum();
    return Policy::from_probabilities(std::move(rows));
}

IterateRecord measure(const ReferenceSolution &reference, const Policy &policy, const Vector &v,
                      const Matrix &q) {
    const OptimalStructure &structure = reference.structure;
    IterateRecord record;
    record.value_gap = reference.rho.weights().dot(v) - reference.v_star_rho;
    record.q_gap_max = (q - structure.q_star).maxCoeff();
    record.state_gap_max = (v - structure.v_star).maxCoeff();
    record.policy_distance = policy_distance(policy, structure);
    record.support_match = support_matches(policy, structure);
    record.iterate_error = kNaN;
    return record;
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

} // namespace

Schedule Schedule::constant(double eta0) {
    if (!(eta0 > 0.0) || !std::isfinite(eta0)) throw InputError("eta0 must be positive");
    return Schedule{ScheduleKind::constant, eta0, 1.0, 1e12};
}

Schedule Schedule::exponential(double eta0, double growth, double eta_cap) {
    if (!(eta0 > 0.0) || !std::isfinite(eta0)) throw InputError("eta0 must be positive");
    if (!(growth >= 1.0) || !std::isfinite(growth)) throw InputError("growth must be >= 1");
    if (!(eta_cap >= eta0)) throw InputError("eta_cap must be at least eta0");
    return Schedule{ScheduleKind::exponential, eta0, growth, eta_cap};
}

double schedule_eta(const Schedule &schedule, long k) {
    if (k < 0) throw InputError("iteration index must be nonnegative");
    if (schedule.kind == ScheduleKind::constant) return schedule.eta0;
    const double eta = schedule.eta0 * std::pow(schedule.growth, static_cast<double>(k));
    return std::min(eta, schedule.eta_cap);
}

StepResult pmd_step_certified(const Policy &policy, const Matrix &q, const DivergenceSpec &spec,
                              double eta, const std::optional<StepRegularization> &reg) {
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw InputError("step size must be finite and >= 0");
    if (q.rows() != policy.n_states() || q.cols() != policy.n_actions())
        throw InputError("Q has the wrong shape for this policy");
    const double eta_tau = reg ? eta * reg->tau : 0.0;
    if (reg && (reg->anchor.n_states() != policy.n_states() ||
                reg->anchor.n_actions() != policy.n_actions()))
        throw InputError("regularization anchor has the wrong shape");

    const Index n_states = policy.n_states();
    double worst = 0.0;

    if (spec.kind == DivergenceKind::kl && policy.representation() == PolicyRepresentation::log_domain) {
        const Matrix &logp = policy.log_probabilities();
        std::optional<Matrix> anchor_log;
        if (eta_tau > 0.0) anchor_log = reg->anchor.to_log_domain().log_probabilities();
        Matrix next(n_states, policy.n_actions());
        for (Index s = 0; s < n_states; ++s) {
            const Vector prev = logp.row(s).transpose();
            const Vector g = eta * q.row(s).transpose();
            Vector row;
            KktReport report;
            if (anchor_log) {
                const Vector anchor = anchor_log->row(s).transpose();
                row = kl_log_regularized_step(prev, g, eta_tau, anchor);
                report = kl_log_kkt_check(prev, row, g, eta_tau, anchor);
            } else {
                row = kl_log_step(prev, g);
                report = kl_log_kkt_check(prev, row, g);
            }
            worst = std::max(worst, report.residual);
            next.row(s) = row.transpose();
        }
        return {Policy::from_log_probabilities(std::move(next)), worst};
    }

    const Policy current = as_direct(policy);
    const Matrix &probs = current.probabilities();
    Matrix next(n_states, policy.n_actions());
    for (Index s = 0; s < n_states; ++s) {
        const Vector prev = probs.row(s).transpose();
        const Vector g = eta * q.row(s).transpose();
        Vector row;
        KktReport report;
        if (eta_tau > 0.0) {
            const Vector anchor = reg->anchor.probabilities().row(s).transpose();
            row = regularized_mirror_step(spec, prev, g, eta_tau, anchor);
            report = kkt_check(spec, prev, row, g, eta_tau, anchor);
        } else {
            row = mirror_step(spec, prev, g);
            report = kkt_check(spec, prev, row, g);
        }
        worst = std::max(worst, report.residual);
        next.row(s) = row.transpose();
    }
    return {direct_from_rows(std::move(next)), worst};
}

Policy pmd_step(const Mdp &mdp, const Policy &policy, const DivergenceSpec &spec, double eta,
                const std::optional<StepRegularization> &reg) {
    const Matrix q = evaluate_q(mdp, evaluate_values(mdp, policy));
    return pmd_step_certified(policy, q, spec, eta, reg).policy;
}

std::vector<IterateRecord> run_pmd(const Mdp &mdp, const RunConfig &config,
                                   const IterateObserver &observer) {
    const StateDistribution rho =
        config.rho ? *config.rho : StateDistribution::uniform(mdp.n_states());
    return run_pmd(mdp, analyze(mdp, rho, config.tie_tol), config, observer);
}

std::vector<IterateRecord> run_pmd(const Mdp &mdp, const ReferenceSolution &reference,
                                   const RunConfig &config, const IterateObserver &observer) {
    if (config.max_iter < 0) throw InputError("max_iter must be nonnegative");
    if (config.rho && config.rho->weights() != reference.rho.weights())
        throw InputError("run configuration and reference solution disagree on rho");
    const auto start = Clock::now();
    const DivergenceSpec &spec = config.divergence;

    Policy policy = config.init_policy ? *config.init_policy
                                       : Policy::uniform(mdp.n_states(), mdp.n_actions());
    if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions())
        throw InputError("initial policy has the wrong shape");
    if (spec.boundary_blowup && !policy.is_interior())
        throw DomainError("initial policy must be interior for " + spec.name());
    if (spec.kind == DivergenceKind::kl) policy = policy.to_log_domain();

    std::optional<StepRegularization> reg;
    if (config.regularization == Regularization::adaptive) {
        if (spec.kind == DivergenceKind::tsallis)
            throw UnsupportedError("adaptive regularization is not available for tsallis divergences");
        if (!(mdp.gamma() > 0.0)) throw InputError("adaptive regularization needs gamma > 0");
        reg = StepRegularization{0.0, policy};
    }

    std::vector<IterateRecord> records;
    double last_residual = 0.0;
    for (long k = 0;; ++k) {
        const Vector v = evaluate_values(mdp, policy);
        const Matrix q = evaluate_q(mdp, v);
        const double eta = schedule_eta(config.schedule, k);

        IterateRecord record = measure(reference, policy, v, q);
        record.k = k;
        record.eta_k = eta;
        record.max_kkt_residual = last_residual;
        record.d_star = weighted_reference_divergence(spec, reference, policy);
        record.wall_time = Clock::now() - start;
        records.push_back(record);
        if (observer) observer(record, policy);

        if (k >= config.max_iter) break;
        if (config.value_gap_tol >= 0.0 && record.value_gap <= config.value_gap_tol) break;
        if (config.stop_on_support_match && record.support_match) break;

        if (reg) reg->tau = (1.0 / mdp.gamma() - 1.0) / eta;
        StepResult step = pmd_step_certified(policy, q, spec, eta, reg);
        policy = std::move(step.policy);
        last_residual = step.max_kkt_residual;
    }
    return records;
}

std::vector<IterateRecord> run_value_iteration(const Mdp &mdp, const StateDistribution &rho,
                                               long max_iter) {
    return run_value_iteration(mdp, analyze(mdp, rho), max_iter);
}

std::vector<IterateRecord> run_value_iteration(const Mdp &mdp, const ReferenceSolution &reference,
                                               long max_iter, const IterateObserver &observer) {
    if (max_iter < 0) throw InputError("max_iter must be nonnegative");
    const auto start = Clock::now();
    std::vector<IterateRecord> records;
    Vector iterate = Vector::Zero(mdp.n_states());
    for (long k = 0;; ++k) {
        const Matrix q_iterate = evaluate_q(mdp, iterate);
        const Policy greedy = Policy::deterministic(greedy_actions(q_iterate), mdp.n_actions());
        const Vector v = evaluate_values(mdp, greedy);
        const Matrix q = evaluate_q(mdp, v);

        IterateRecord record = measure(reference, greedy, v, q);
        record.k = k;
        record.eta_k = kNaN;
        record.d_star = kNaN;
        record.iterate_error = (iterate - reference.structure.v_star).lpNorm<Eigen::Infinity>();
        record.wall_time = Clock::now() - start;
        records.push_back(record);
        if (observer) observer(record, greedy);

        if (k >= max_iter) break;
        iterate = q_iterate.rowwise().minCoeff();
    }
    return records;
}

double weighted_reference_divergence(const DivergenceSpec &spec, const ReferenceSolution &reference,
                                     const Policy &policy) {
    const Matrix &star = reference.pi_star.probabilities();
    const Vector &weights = reference.mismatch.d_rho_pi_star.weights();
    double total = 0.0;
    for (Index s = 0; s < policy.n_states(); ++s) {
        if (weights(s) == 0.0) continue;
        const Vector target = star.row(s).transpose();
        double d = 0.0;
        if (spec.kind == DivergenceKind::kl &&
            policy.representation() == PolicyRepresentation::log_domain) {
            d = kl_divergence_log(target, policy.log_probabilities().row(s).transpose());
        } else {
            const Vector row = policy.probabilities().row(s).transpose();
            if (spec.boundary_blowup && (row.array() <= 0.0).any()) return kNaN;
            d = divergence_value(spec, target, row);
        }
        total += weights(s) * d;
    }
    return total;
}

double policy_distance(const Policy &policy, const OptimalStructure &structure) {
    const Matrix &probs = policy.probabilities();
    double worst = 0.0;
    for (Index s = 0; s < probs.rows(); ++s) {
        double off = 0.0;
        for (Index a = 0; a < probs.cols(); ++a)
            if (!structure.is_optimal_action(s, a)) off += probs(s, a);
        worst = std::max(worst, 2.0 * off);
    }
    return worst;
}

bool support_matches(const Policy &policy, const OptimalStructure &structure) {
    const bool full_support = policy.representation() == PolicyRepresentation::log_domain;
    const Matrix &probs = policy.probabilities();
    for (Index s = 0; s < probs.rows(); ++s)
        for (Index a = 0; a < probs.cols(); ++a)
            if ((full_support || probs(s, a) > 0.0) != structure.is_optimal_action(s, a))
                return false;
    return true;
}

} // namespace pmdlab
