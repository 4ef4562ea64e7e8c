#pragma once

#include "pmdlab/diagnostics.hpp"
#include "pmdlab/pmd.hpp"
#include "pmdlab/trajectory_csv.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace pmdlab {

enum class GrowthRule {
    /// Use MethodConfig::growth as given.
    fixed,
    /// 1/γ.
    inverse_gamma,
    /// ϑ_ρ/(ϑ_ρ - 1), the smallest growth covered by the linear bound.
    theta,
};

struct MethodConfig {
    std::string id;
    DivergenceSpec divergence = DivergenceSpec::euclidean();
    ScheduleKind schedule = ScheduleKind::exponential;
    double eta0 = 1.0;
    GrowthRule growth_rule = GrowthRule::inverse_gamma;
    double growth = 1.0;
    bool regularized = false;
    bool stop_on_support_match = true;
};

/**
 * Experiment description, read from a line-oriented text file:
 *
 *     # comment
 *     seed = 7
 *     n_states = 20
 *     [method]
 *     id = L2
 *     divergence = euclidean
 *
 * Global keys: seed, n_states, n_actions, gamma, rho_mode (uniform), max_iter,
 * value_gap_tol, tie_tol, eta_cap, value_iteration (true/false), output_path.
 * Method keys: id, divergence (euclidean|kl|tsallis), q, schedule
 * (constant|exponential), eta0, growth (number|inv_gamma|theta), regularized,
 * stop_on_support_match.
 */
struct ExperimentConfig {
    std::uint64_t seed = 0;
    Index n_states = 20;
    Index n_actions = 100;
    double gamma = 0.999;
    std::string rho_mode = "uniform";
    std::vector<MethodConfig> methods;
    long max_iter = 1000;
    double value_gap_tol = 1e-10;
    double tie_tol = 1e-9;
    double eta_cap = 1e12;
    bool value_iteration = true;
    std::filesystem::path output_path = "pmd_out";
};

ExperimentConfig parse_experiment_config(std::istream &in, const std::string &source);
ExperimentConfig load_experiment_config(const std::filesystem::path &path);

/// Throws InputError describing the first invalid field.
void validate(const ExperimentConfig &config);

struct RunOptions {
    /// Record wall times; otherwise the wall_time_ms column is written as 0 so
    /// that repeated runs produce identical bytes.
    bool record_timing = false;
    bool write_files = true;
};

struct MethodResult {
    std::string id;
    std::vector<TrajectoryRow> rows;
    std::filesystem::path csv_path;
};

struct ExperimentResult {
    ReferenceSolution reference;
    std::vector<MethodResult> methods;
    Summary summary;
    /// Instance header followed by the per-method summary.
    std::string summary_text;
};

ExperimentResult run_experiment(const ExperimentConfig &config, const RunOptions &options = {});

} // namespace pmdlab
