#include "pmdlab/diagnostics.hpp"
#include "pmdlab/errors.hpp"

#include <cmath>
#include <limits>

namespace pmdlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_k(long k) {
    if (k < 0) throw InputError("iteration index must be nonnegative");
}

// Rounding noise must not push an exact integer up to the next one.
long ceil_to_long(double x) { return static_cast<long>(std::ceil(x - 1e-12 * std::abs(x))); }

} // namespace

BoundContext make_bound_context(const Mdp &mdp, const ReferenceSolution &reference,
                                const DivergenceSpec &spec, const Schedule &schedule,
                                const Policy &init_policy) {
    BoundContext ctx;
    ctx.gamma = mdp.gamma();
    ctx.eta0 = schedule.eta0;
    ctx.growth = schedule.kind == ScheduleKind::exponential ? schedule.growth : 1.0;
    ctx.D0_star = weighted_reference_divergence(spec, reference, init_policy);
    ctx.r_rho = reference.mismatch.r_rho;
    ctx.theta_rho = reference.mismatch.theta_rho;
    ctx.delta_gap = reference.structure.delta_gap;
    ctx.M = spec.gradient_bound_M.value_or(kNaN);
    ctx.log_A = std::log(static_cast<double>(mdp.n_actions()));
    return ctx;
}

double sublinear_value_bound(const BoundContext &ctx, double eta, long k) {
    require_k(k);
    if (!(eta > 0.0)) throw InputError("step size must be positive");
    const double horizon = 1.0 / (1.0 - ctx.gamma);
    return (ctx.D0_star * horizon / eta + horizon * horizon) / static_cast<double>(k + 1);
}

double required_growth(const BoundContext &ctx) { return ctx.theta_rho / (ctx.theta_rho - 1.0); }

double linear_value_bound(const BoundContext &ctx, long k) {
    require_k(k);
    if (!(ctx.theta_rho > 1.0)) throw InputError("linear bound needs theta_rho > 1");
    if (ctx.growth < required_growth(ctx) * (1.0 - 1e-12))
        throw InputError("step growth is below theta/(theta-1)");
    const double contraction = 1.0 - 1.0 / ctx.theta_rho;
    return std::pow(contraction, static_cast<double>(k)) *
           (1.0 / (1.0 - ctx.gamma) + ctx.D0_star / (ctx.eta0 * ctx.gamma));
}

double q_gap_from_value_gap(const BoundContext &ctx, double value_gap) {
    if (value_gap == 0.0) return 0.0;
    return ctx.gamma * ctx.r_rho * value_gap;
}

std::optional<double> value_gap_bound(const BoundContext &ctx, const Schedule &schedule, long k) {
    if (schedule.kind == ScheduleKind::constant) return sublinear_value_bound(ctx, schedule.eta0, k);
    if (ctx.theta_rho > 1.0 && ctx.gamma > 0.0 &&
        schedule.growth >= required_growth(ctx) * (1.0 - 1e-12))
        return linear_value_bound(ctx, k);
    return std::nullopt;
}

std::vector<double> q_gap_envelope(const BoundContext &ctx, const Schedule &schedule, long n) {
    if (n < 0) throw InputError("envelope length must be nonnegative");
    std::vector<double> envelope;
    envelope.reserve(static_cast<std::size_t>(n));
    for (long k = 0; k < n; ++k) {
        const auto bound = value_gap_bound(ctx, schedule, k);
        if (!bound) throw InputError("no value-gap bound applies to this schedule");
        envelope.push_back(q_gap_from_value_gap(ctx, *bound));
    }
    return envelope;
}

std::optional<long> predicted_stop_K_euclidean(const BoundContext &ctx, const Schedule &schedule) {
    if (std::isinf(ctx.delta_gap)) return 0L;
    if (!(ctx.delta_gap > 0.0)) throw InputError("advantage gap must be positive");
    const double M = std::isnan(ctx.M) ? 1.0 : ctx.M;
    const double horizon = 1.0 / (1.0 - ctx.gamma);

    if (schedule.kind == ScheduleKind::constant) {
        const double eta = schedule.eta0;
        if (eta < 8.0 * M / ctx.delta_gap) return std::nullopt;
        return ceil_to_long(2.0 * ctx.r_rho / ctx.delta_gap * (horizon / eta + horizon * horizon));
    }

    if (!(ctx.theta_rho > 1.0) || schedule.growth < required_growth(ctx) * (1.0 - 1e-12))
        return std::nullopt;
    const double eta0 = schedule.eta0;
    // η_k·A_k stays at η0·γ·r_ρ·(1/(1-γ) + 1/(η0γ)) when growth·(1 - 1/ϑ) = 1.
    const double numerator = 4.0 * M + eta0 * ctx.gamma * ctx.r_rho * (horizon + 1.0 / (eta0 * ctx.gamma));
    const double ratio = numerator / (eta0 * ctx.delta_gap);
    if (ratio <= 1.0) return 0L;
    return ceil_to_long(ctx.theta_rho * std::log(ratio));
}

double kl_logratio_bound(const BoundContext &ctx, const Schedule &schedule, long k,
                         std::span<const double> envelope) {
    require_k(k);
    if (static_cast<long>(envelope.size()) < k) throw InputError("envelope shorter than k");
    double progress = 0.0;
    for (long i = 0; i < k; ++i) {
        const double eta = schedule_eta(schedule, i);
        progress += eta * ctx.delta_gap - eta * envelope[static_cast<std::size_t>(i)];
    }
    return -progress;
}

double policy_to_value_bound(double gamma, double policy_distance) {
    if (policy_distance == 0.0) return 0.0;
    return policy_distance / ((1.0 - gamma) * (1.0 - gamma));
}

double bound_tolerance(double bound) { return 1e-6 + 1e-9 * std::abs(bound); }

bool exceeds_bound(double measured, double bound) {
    return measured > bound + bound_tolerance(bound);
}

} // namespace pmdlab
