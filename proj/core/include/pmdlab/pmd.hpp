#pragma once

#include "pmdlab/bregman.hpp"
#include "pmdlab/mdp.hpp"

#include <chrono>
#include <functional>
#include <optional>
#include <vector>

namespace pmdlab {

enum class ScheduleKind { constant, exponential };

/// Step sizes η_k = eta0 (constant) or min(eta0·growth^k, eta_cap) (exponential).
struct Schedule {
    ScheduleKind kind = ScheduleKind::constant;
    double eta0 = 1.0;
    double growth = 1.0;
    double eta_cap = 1e12;

    static Schedule constant(double eta0);
    static Schedule exponential(double eta0, double growth, double eta_cap = 1e12);
};

double schedule_eta(const Schedule &schedule, long k);

enum class Regularization {
    off,
    /// τ_k chosen each step so that 1 + η_k τ_k = 1/γ, anchored at the initial policy.
    adaptive,
};

struct RunConfig {
    DivergenceSpec divergence = DivergenceSpec::euclidean();
    Schedule schedule;
    /// Uniform when absent.
    std::optional<StateDistribution> rho;
    /// Uniform when absent.
    std::optional<Policy> init_policy;
    Regularization regularization = Regularization::off;
    long max_iter = 1000;
    bool stop_on_support_match = false;
    /// Stop once V_ρ(π) - V*_ρ drops to this value; negative disables.
    double value_gap_tol = 1e-10;
    double tie_tol = 1e-9;
};

/// One row of a trajectory. Quantities that do not apply are NaN.
struct IterateRecord {
    long k = 0;
    double eta_k = 0.0;
    /// V_ρ(π_k) - V*_ρ.
    double value_gap = 0.0;
    /// max over (s,a) of Q(π_k) - Q*.
    double q_gap_max = 0.0;
    /// max over s of V_s(π_k) - V*_s.
    double state_gap_max = 0.0;
    /// ‖π_k - Π*‖_∞.
    double policy_distance = 0.0;
    bool support_match = false;
    /// Residual of the step that produced π_k; zero for k = 0.
    double max_kkt_residual = 0.0;
    /// Σ_s d_ρ(π*)_s D(π*_s, π_k,s); NaN when undefined (underflow at the boundary).
    double d_star = 0.0;
    /// Value iteration only: ‖V_k - V*‖_∞ of the value iterate.
    double iterate_error = 0.0;
    /// Elapsed since the start of the run.
    std::chrono::duration<double, std::milli> wall_time{0};
};

using IterateObserver = std::function<void(const IterateRecord &, const Policy &)>;

struct StepRegularization {
    double tau = 0.0;
    Policy anchor;
};

struct StepResult {
    Policy policy;
    double max_kkt_residual = 0.0;
};

/// Synchronous PMD update: every row uses Q(π) of the current policy.
Policy pmd_step(const Mdp &mdp, const Policy &policy, const DivergenceSpec &spec, double eta,
                const std::optional<StepRegularization> &reg = std::nullopt);

/// Same update given a precomputed Q(π), also reporting the worst row KKT residual.
StepResult pmd_step_certified(const Policy &policy, const Matrix &q, const DivergenceSpec &spec,
                              double eta, const std::optional<StepRegularization> &reg = std::nullopt);

std::vector<IterateRecord> run_pmd(const Mdp &mdp, const RunConfig &config,
                                   const IterateObserver &observer = {});
std::vector<IterateRecord> run_pmd(const Mdp &mdp, const ReferenceSolution &reference,
                                   const RunConfig &config, const IterateObserver &observer = {});

/// Synchronous min-Bellman sweeps from V = 0, recording the greedy policy each sweep.
std::vector<IterateRecord> run_value_iteration(const Mdp &mdp, const StateDistribution &rho,
                                               long max_iter);
std::vector<IterateRecord> run_value_iteration(const Mdp &mdp, const ReferenceSolution &reference,
                                               long max_iter,
                                               const IterateObserver &observer = {});

/// D_{d_ρ(π*)}(π*, π) = Σ_s d_ρ(π*)_s D(π*_s, π_s) for the reference optimal policy.
/// NaN when the policy touches the boundary of a divergence that blows up there.
double weighted_reference_divergence(const DivergenceSpec &spec, const ReferenceSolution &reference,
                                     const Policy &policy);

/// max_s 2·Σ_{a∉A_s*} π_{s,a}: the L1 cost of moving off-support mass onto A_s*.
double policy_distance(const Policy &policy, const OptimalStructure &structure);

/// supp(π_s) = A_s* in every state. Log-domain policies have full support.
bool support_matches(const Policy &policy, const OptimalStructure &structure);

} // namespace pmdlab
