#include "pmdlab/trajectory_csv.hpp"
#include "pmdlab/diagnostics.hpp"
#include "pmdlab/errors.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

namespace pmdlab {

namespace {

std::vector<std::string> split(const std::string &line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

class FieldReader {
public:
    FieldReader(const std::vector<std::string> &fields, const std::string &source, long line)
        : fields_(fields), source_(source), line_(line) {}

    const std::string &text(std::size_t column) const { return fields_[column]; }

    double number(std::size_t column) const {
        const std::string &s = fields_[column];
        errno = 0;
        char *end = nullptr;
        const double value = std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size()) fail(column, "not a number");
        return value;
    }

    long integer(std::size_t column) const {
        const std::string &s = fields_[column];
        char *end = nullptr;
        const long value = std::strtol(s.c_str(), &end, 10);
        if (s.empty() || end != s.c_str() + s.size()) fail(column, "not an integer");
        return value;
    }

    std::uint64_t unsigned_integer(std::size_t column) const {
        const std::string &s = fields_[column];
        char *end = nullptr;
        const unsigned long long value = std::strtoull(s.c_str(), &end, 10);
        if (s.empty() || s.front() == '-' || end != s.c_str() + s.size())
            fail(column, "not an unsigned integer");
        return value;
    }

    bool flag(std::size_t column) const {
        const std::string &s = fields_[column];
        if (s == "0") return false;
        if (s == "1") return true;
        fail(column, "expected 0 or 1");
    }

    [[noreturn]] void fail(std::size_t column, const std::string &what) const {
        throw InputError(source_ + ":" + std::to_string(line_) + ": column '" +
                         std::string(kTrajectoryColumns[column]) + "': " + what + " ('" +
                         fields_[column] + "')");
    }

private:
    const std::vector<std::string> &fields_;
    const std::string &source_;
    long line_;
};

std::string header_line() {
    std::string header;
    for (std::size_t i = 0; i < kTrajectoryColumns.size(); ++i) {
        if (i) header += ',';
        header += kTrajectoryColumns[i];
    }
    return header;
}

std::string format_optional(const std::optional<long> &value) {
    return value ? std::to_string(*value) : std::string("none");
}

} // namespace

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

void write_trajectory_csv(std::ostream &out, std::span<const TrajectoryRow> rows) {
    out << header_line() << '\n';
    for (const auto &row : rows) {
        out << row.seed << ',' << row.method_id << ',' << row.divergence << ',' << row.schedule
            << ',' << (row.regularized ? 1 : 0) << ',' << row.k << ',' << format_number(row.eta_k)
            << ',' << format_number(row.value_gap) << ',' << format_number(row.q_gap_max) << ','
            << format_number(row.policy_distance) << ',' << (row.support_match ? 1 : 0) << ','
            << format_number(row.max_kkt_residual) << ',' << format_number(row.d_star) << ','
            << format_number(row.bound_value) << ',' << format_number(row.wall_time_ms) << '\n';
    }
}

void write_trajectory_csv(const std::filesystem::path &path, std::span<const TrajectoryRow> rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    write_trajectory_csv(out, rows);
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<TrajectoryRow> read_trajectory_csv(std::istream &in, const std::string &source) {
    std::string line;
    if (!std::getline(in, line)) throw InputError(source + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header_line()) throw InputError(source + ":1: header does not match the trajectory schema");

    std::vector<TrajectoryRow> rows;
    long line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split(line);
        if (fields.size() != kTrajectoryColumns.size())
            throw InputError(source + ":" + std::to_string(line_number) + ": expected " +
                             std::to_string(kTrajectoryColumns.size()) + " columns, found " +
                             std::to_string(fields.size()));
        const FieldReader f(fields, source, line_number);
        TrajectoryRow row;
        row.seed = f.unsigned_integer(0);
        row.method_id = f.text(1);
        row.divergence = f.text(2);
        row.schedule = f.text(3);
        row.regularized = f.flag(4);
        row.k = f.integer(5);
        row.eta_k = f.number(6);
        row.value_gap = f.number(7);
        row.q_gap_max = f.number(8);
        row.policy_distance = f.number(9);
        row.support_match = f.flag(10);
        row.max_kkt_residual = f.number(11);
        row.d_star = f.number(12);
        row.bound_value = f.number(13);
        row.wall_time_ms = f.number(14);
        if (row.method_id.empty()) f.fail(1, "empty method id");
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<TrajectoryRow> read_trajectory_csv(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    return read_trajectory_csv(in, path.string());
}

Summary summarize_rows(std::span<const TrajectoryRow> rows) {
    Summary summary;
    for (const auto &row : rows) {
        auto it = std::find_if(summary.methods.begin(), summary.methods.end(),
                               [&](const MethodSummary &m) { return m.method_id == row.method_id; });
        if (it == summary.methods.end()) {
            MethodSummary fresh;
            fresh.method_id = row.method_id;
            fresh.max_bound_excess = std::numeric_limits<double>::quiet_NaN();
            summary.methods.push_back(fresh);
            it = std::prev(summary.methods.end());
        }
        MethodSummary &m = *it;
        m.last_k = row.k;
        m.final_gap = row.value_gap;
        m.wall_time_ms = std::max(m.wall_time_ms, row.wall_time_ms);
        if (row.support_match && !m.stop_iteration) m.stop_iteration = row.k;
        if (!std::isnan(row.bound_value)) {
            const double excess = row.value_gap - row.bound_value;
            if (std::isnan(m.max_bound_excess) || excess > m.max_bound_excess) m.max_bound_excess = excess;
            // A NaN gap against a finite bound counts as a violation.
            if (std::isnan(row.value_gap) || exceeds_bound(row.value_gap, row.bound_value)) ++m.violation_count;
        }
    }

    std::ostringstream text;
    for (const auto &m : summary.methods) {
        summary.violations += m.violation_count;
        text << "method " << m.method_id << '\n'
             << "  last iteration: " << m.last_k << '\n'
             << "  final value_gap: " << format_number(m.final_gap) << '\n'
             << "  support_match iteration: " << format_optional(m.stop_iteration) << '\n'
             << "  max bound excess: "
             << (std::isnan(m.max_bound_excess) ? std::string("n/a") : format_number(m.max_bound_excess))
             << '\n'
             << "  bound violations: " << m.violation_count << '\n'
             << "  wall time ms: " << format_number(m.wall_time_ms) << '\n';
    }
    text << "total bound violations: " << summary.violations << '\n';
    summary.text = text.str();
    return summary;
}

Summary summarize(const std::vector<std::filesystem::path> &csv_paths) {
    if (csv_paths.empty()) throw InputError("summarize needs at least one CSV file");
    std::vector<TrajectoryRow> rows;
    for (const auto &path : csv_paths) {
        auto part = read_trajectory_csv(path);
        if (part.empty()) throw InputError(path.string() + ": no trajectory rows");
        rows.insert(rows.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    return summarize_rows(rows);
}

} // namespace pmdlab
