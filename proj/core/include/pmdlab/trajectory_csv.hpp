#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pmdlab {

/// One trajectory row. Numbers are written with 17 significant digits, booleans as 0/1,
/// missing values as "nan".
struct TrajectoryRow {
    std::uint64_t seed = 0;
    std::string method_id;
    std::string divergence;
    std::string schedule;
    bool regularized = false;
    long k = 0;
    double eta_k = 0.0;
    double value_gap = 0.0;
    double q_gap_max = 0.0;
    double policy_distance = 0.0;
    bool support_match = false;
    double max_kkt_residual = 0.0;
    double d_star = 0.0;
    double bound_value = 0.0;
    double wall_time_ms = 0.0;
};

inline constexpr std::array<std::string_view, 15> kTrajectoryColumns = {
    "seed",      "method_id",     "divergence",    "schedule",         "regularized",
    "k",         "eta_k",         "value_gap",     "q_gap_max",        "policy_distance",
    "support_match", "max_kkt_residual", "d_star", "bound_value", "wall_time_ms"};

std::string format_number(double value);

void write_trajectory_csv(std::ostream &out, std::span<const TrajectoryRow> rows);
void write_trajectory_csv(const std::filesystem::path &path, std::span<const TrajectoryRow> rows);

/// Throws InputError naming the line and column on malformed input.
std::vector<TrajectoryRow> read_trajectory_csv(std::istream &in, const std::string &source);
std::vector<TrajectoryRow> read_trajectory_csv(const std::filesystem::path &path);

struct MethodSummary {
    std::string method_id;
    long last_k = 0;
    double final_gap = 0.0;
    std::optional<long> stop_iteration;
    /// max over rows with a bound of value_gap - bound_value; NaN when no row has a bound.
    double max_bound_excess = 0.0;
    long violation_count = 0;
    double wall_time_ms = 0.0;
};

struct Summary {
    std::vector<MethodSummary> methods;
    long violations = 0;
    std::string text;
};

/// Per method, in order of first appearance.
Summary summarize_rows(std::span<const TrajectoryRow> rows);

/// Throws InputError for an empty list or unreadable/malformed files.
Summary summarize(const std::vector<std::filesystem::path> &csv_paths);

} // namespace pmdlab
