#pragma once

#include "pmdlab/pmd.hpp"

#include <optional>
#include <span>
#include <vector>

namespace pmdlab {

/// Constants that the convergence bounds are evaluated with.
struct BoundContext {
    double gamma = 0.0;
    double eta0 = 1.0;
    double growth = 1.0;
    /// Σ_s d_ρ(π*)_s D(π*_s, π0_s), computed rather than assumed.
    double D0_star = 0.0;
    double r_rho = 0.0;
    double theta_rho = 0.0;
    double delta_gap = 0.0;
    /// Gradient bound of the generator; NaN when unbounded.
    double M = 0.0;
    double log_A = 0.0;
};

BoundContext make_bound_context(const Mdp &mdp, const ReferenceSolution &reference,
                                const DivergenceSpec &spec, const Schedule &schedule,
                                const Policy &init_policy);

/// Constant steps: (1/(k+1))·(D0*/(η(1-γ)) + 1/(1-γ)²).
double sublinear_value_bound(const BoundContext &ctx, double eta, long k);

/// Exponential steps with growth ≥ ϑ/(ϑ-1): (1 - 1/ϑ)^k·(1/(1-γ) + D0*/(η0·γ)).
double linear_value_bound(const BoundContext &ctx, long k);

/// Growth rate that the linear bound requires, ϑ/(ϑ-1).
double required_growth(const BoundContext &ctx);

/// γ·r_ρ·value_gap, a bound on max (Q(π) - Q*).
double q_gap_from_value_gap(const BoundContext &ctx, double value_gap);

/// Applicable value-gap bound for the schedule at iteration k, if any.
std::optional<double> value_gap_bound(const BoundContext &ctx, const Schedule &schedule, long k);

/// A_0..A_{n-1}: value-gap bound pushed through the Q conversion.
std::vector<double> q_gap_envelope(const BoundContext &ctx, const Schedule &schedule, long n);

/**
 * Iteration after which euclidean PMD is guaranteed to have the optimal support.
 *
 * Constant steps need η ≥ 8M/Δ and give ⌈(2r_ρ/Δ)(1/(η(1-γ)) + 1/(1-γ)²)⌉.
 * Exponential steps need growth ≥ ϑ/(ϑ-1) and give
 * ⌈ϑ·ln((4M + η0·γ·r_ρ(1/(1-γ) + 1/(η0γ))) / (η0·Δ))⌉, clamped at zero.
 * Returns 0 when every state is dummy and nullopt when no guarantee applies.
 */
std::optional<long> predicted_stop_K_euclidean(const BoundContext &ctx, const Schedule &schedule);

/// -(Σ_{i<k} η_i·Δ - Σ_{i<k} η_i·A_i): upper bound on ln(π_a/π_b) for a ∉ A_s*, b ∈ A_s*
/// after k KL steps from a uniform start. `envelope` must hold at least k entries.
double kl_logratio_bound(const BoundContext &ctx, const Schedule &schedule, long k,
                         std::span<const double> envelope);

/// distance/(1-γ)²: bounds max_s (V_s(π) - V*_s).
double policy_to_value_bound(double gamma, double policy_distance);

/// Slack for bound comparisons: 1e-6 absolute plus 1e-9 relative.
double bound_tolerance(double bound);
bool exceeds_bound(double measured, double bound);

} // namespace pmdlab
