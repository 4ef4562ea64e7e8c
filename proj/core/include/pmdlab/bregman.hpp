#pragma once

#include "pmdlab/mdp.hpp"

#include <optional>
#include <string>

namespace pmdlab {

enum class DivergenceKind { euclidean, kl, tsallis };

/**
 * Choice of mirror map h on the simplex.
 *
 *  - euclidean: h(p) = ½‖p‖², gradient bounded by M = 1, cocoercive with L = 1.
 *  - kl: negative entropy, gradient blows up on the relative boundary.
 *  - tsallis: h(p) = (Σ p_a^q - 1)/(q - 1). For q > 1 the gradient
 *    q p^{q-1}/(q-1) is bounded by M = q/(q-1); for q < 1 it blows up at 0.
 */
struct DivergenceSpec {
    DivergenceKind kind = DivergenceKind::euclidean;
    double q = 0.0;
    std::optional<double> gradient_bound_M;
    bool boundary_blowup = false;
    std::optional<double> cocoercivity_L;

    static DivergenceSpec euclidean();
    static DivergenceSpec kl();
    static DivergenceSpec tsallis(double q);

    /// "euclidean", "kl" or "tsallis:q=<q>".
    std::string name() const;
};

/// Normal-cone certificate of a computed mirror step.
struct KktReport {
    double residual = 0.0;
    double multiplier_spread = 0.0;
    double offsupport_violation = 0.0;
};

using RowRef = Eigen::Ref<const Vector>;

/// Euclidean projection onto the probability simplex, p = (x + α1)₊ with ⟨p,1⟩ = 1.
/// Coordinates landing exactly on the threshold receive weight zero.
Vector project_simplex(const RowRef &x);

/// ∇h(p). Entries are -inf where the gradient blows up at p_a = 0.
Vector generator_gradient(const DivergenceSpec &spec, const RowRef &p);

/// D(p, p_ref) = h(p) - h(p_ref) - ⟨∇h(p_ref), p - p_ref⟩.
double divergence_value(const DivergenceSpec &spec, const RowRef &p, const RowRef &p_ref);

/// argmin over the simplex of ⟨g, p⟩ + D(p, pi_row).
Vector mirror_step(const DivergenceSpec &spec, const RowRef &pi_row, const RowRef &g);

/// argmin of ⟨g, p⟩ + eta_tau·D(p, pi0_row) + D(p, pi_row). Euclidean and KL only.
Vector regularized_mirror_step(const DivergenceSpec &spec, const RowRef &pi_row, const RowRef &g,
                               double eta_tau, const RowRef &pi0_row);

/**
 * Checks that pi_next solves the (optionally regularized) mirror step from pi_prev.
 *
 * Forms w = ∇h(pi_prev) + eta_tau·∇h(pi0) - (1 + eta_tau)·∇h(pi_next) - g, which
 * must lie in the normal cone of the simplex at pi_next: constant on the support,
 * not larger off it. Both measures are divided by max(1, magnitude of the terms
 * forming w), so the residual is comparable across step sizes. Undefined
 * gradients yield an infinite residual.
 */
KktReport kkt_check(const DivergenceSpec &spec, const RowRef &pi_prev, const RowRef &pi_next,
                    const RowRef &g);
KktReport kkt_check(const DivergenceSpec &spec, const RowRef &pi_prev, const RowRef &pi_next,
                    const RowRef &g, double eta_tau, const RowRef &pi0_row);

// KL steps carried out on log-probability rows (log-sum-exp normalized).

Vector kl_log_step(const RowRef &log_row, const RowRef &g);
Vector kl_log_regularized_step(const RowRef &log_row, const RowRef &g, double eta_tau,
                               const RowRef &log_pi0_row);
KktReport kl_log_kkt_check(const RowRef &log_prev, const RowRef &log_next, const RowRef &g,
                           double eta_tau = 0.0, const std::optional<Vector> &log_pi0 = {});

/// D(p, exp(log_ref)) for KL without leaving the log domain.
double kl_divergence_log(const RowRef &p, const RowRef &log_ref);

} // namespace pmdlab
