#include "pmdlab/experiment.hpp"
#include "pmdlab/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace pmdlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string &s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

class LineContext {
public:
    LineContext(const std::string &source, long line) : source_(source), line_(line) {}

    [[noreturn]] void fail(const std::string &key, const std::string &what) const {
        throw InputError(source_ + ":" + std::to_string(line_) + ": field '" + key + "': " + what);
    }

    double number(const std::string &key, const std::string &value) const {
        char *end = nullptr;
        const double x = std::strtod(value.c_str(), &end);
        if (value.empty() || end != value.c_str() + value.size() || !std::isfinite(x))
            fail(key, "expected a finite number, got '" + value + "'");
        return x;
    }

    long integer(const std::string &key, const std::string &value) const {
        char *end = nullptr;
        const long x = std::strtol(value.c_str(), &end, 10);
        if (value.empty() || end != value.c_str() + value.size())
            fail(key, "expected an integer, got '" + value + "'");
        return x;
    }

    std::uint64_t unsigned_integer(const std::string &key, const std::string &value) const {
        char *end = nullptr;
        const unsigned long long x = std::strtoull(value.c_str(), &end, 10);
        if (value.empty() || value.front() == '-' || end != value.c_str() + value.size())
            fail(key, "expected an unsigned integer, got '" + value + "'");
        return x;
    }

    bool boolean(const std::string &key, const std::string &value) const {
        if (value == "true" || value == "1" || value == "yes") return true;
        if (value == "false" || value == "0" || value == "no") return false;
        fail(key, "expected true or false, got '" + value + "'");
    }

private:
    const std::string &source_;
    long line_;
};

// Parsed method block before the divergence parameters are combined.
struct MethodDraft {
    MethodConfig method;
    std::string divergence = "euclidean";
    double q = 2.0;
    bool q_given = false;
    long line = 0;
};

void apply_method_key(MethodDraft &draft, const std::string &key, const std::string &value,
                      const LineContext &ctx) {
    MethodConfig &m = draft.method;
    if (key == "id") {
        const bool safe = !value.empty() && std::all_of(value.begin(), value.end(), [](char c) {
            return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
        });
        if (!safe) ctx.fail(key, "method ids may only contain letters, digits, '-', '_' and '.'");
        m.id = value;
    } else if (key == "divergence") {
        if (value != "euclidean" && value != "kl" && value != "tsallis")
            ctx.fail(key, "expected euclidean, kl or tsallis, got '" + value + "'");
        draft.divergence = value;
    } else if (key == "q") {
        draft.q = ctx.number(key, value);
        draft.q_given = true;
    } else if (key == "schedule") {
        if (value == "constant")
            m.schedule = ScheduleKind::constant;
        else if (value == "exponential")
            m.schedule = ScheduleKind::exponential;
        else
            ctx.fail(key, "expected constant or exponential, got '" + value + "'");
    } else if (key == "eta0") {
        m.eta0 = ctx.number(key, value);
        if (!(m.eta0 > 0.0)) ctx.fail(key, "must be positive");
    } else if (key == "growth") {
        if (value == "inv_gamma") {
            m.growth_rule = GrowthRule::inverse_gamma;
        } else if (value == "theta") {
            m.growth_rule = GrowthRule::theta;
        } else {
            m.growth_rule = GrowthRule::fixed;
            m.growth = ctx.number(key, value);
            if (!(m.growth >= 1.0)) ctx.fail(key, "must be at least 1");
        }
    } else if (key == "regularized") {
        m.regularized = ctx.boolean(key, value);
    } else if (key == "stop_on_support_match") {
        m.stop_on_support_match = ctx.boolean(key, value);
    } else {
        ctx.fail(key, "unknown method key");
    }
}

void apply_global_key(ExperimentConfig &config, const std::string &key, const std::string &value,
                      const LineContext &ctx) {
    if (key == "seed") {
        config.seed = ctx.unsigned_integer(key, value);
    } else if (key == "n_states") {
        config.n_states = ctx.integer(key, value);
    } else if (key == "n_actions") {
        config.n_actions = ctx.integer(key, value);
    } else if (key == "gamma") {
        config.gamma = ctx.number(key, value);
    } else if (key == "rho_mode") {
        if (value != "uniform") ctx.fail(key, "only 'uniform' is supported");
        config.rho_mode = value;
    } else if (key == "max_iter") {
        config.max_iter = ctx.integer(key, value);
    } else if (key == "value_gap_tol") {
        config.value_gap_tol = ctx.number(key, value);
    } else if (key == "tie_tol") {
        config.tie_tol = ctx.number(key, value);
    } else if (key == "eta_cap") {
        config.eta_cap = ctx.number(key, value);
    } else if (key == "value_iteration") {
        config.value_iteration = ctx.boolean(key, value);
    } else if (key == "output_path") {
        if (value.empty()) ctx.fail(key, "must not be empty");
        config.output_path = value;
    } else {
        ctx.fail(key, "unknown key");
    }
}

MethodConfig finish_method(MethodDraft draft, const std::string &source) {
    const LineContext ctx(source, draft.line);
    if (draft.method.id.empty()) ctx.fail("id", "every [method] block needs an id");
    if (draft.divergence == "euclidean") {
        draft.method.divergence = DivergenceSpec::euclidean();
    } else if (draft.divergence == "kl") {
        draft.method.divergence = DivergenceSpec::kl();
    } else {
        if (!draft.q_given) ctx.fail("q", "tsallis divergence needs q");
        if (!(draft.q > 0.0) || draft.q == 1.0) ctx.fail("q", "must be positive and different from 1");
        draft.method.divergence = DivergenceSpec::tsallis(draft.q);
    }
    if (draft.method.regularized && draft.method.divergence.kind == DivergenceKind::tsallis)
        ctx.fail("regularized", "tsallis divergences have no regularized update");
    return draft.method;
}

Schedule method_schedule(const MethodConfig &method, const ExperimentConfig &config,
                         const ReferenceSolution &reference) {
    if (method.schedule == ScheduleKind::constant) return Schedule::constant(method.eta0);
    double growth = method.growth;
    switch (method.growth_rule) {
    case GrowthRule::fixed: break;
    case GrowthRule::inverse_gamma:
        if (!(config.gamma > 0.0)) throw InputError("growth = inv_gamma needs gamma > 0");
        growth = 1.0 / config.gamma;
        break;
    case GrowthRule::theta: {
        const double theta = reference.mismatch.theta_rho;
        if (!(theta > 1.0) || !std::isfinite(theta))
            throw InputError("growth = theta needs a finite theta_rho > 1");
        growth = theta / (theta - 1.0);
        break;
    }
    }
    return Schedule::exponential(method.eta0, growth, std::max(config.eta_cap, method.eta0));
}

TrajectoryRow base_row(const ExperimentConfig &config, const std::string &id,
                       const std::string &divergence, const std::string &schedule, bool regularized,
                       const IterateRecord &record, const RunOptions &options) {
    TrajectoryRow row;
    row.seed = config.seed;
    row.method_id = id;
    row.divergence = divergence;
    row.schedule = schedule;
    row.regularized = regularized;
    row.k = record.k;
    row.eta_k = record.eta_k;
    row.value_gap = record.value_gap;
    row.q_gap_max = record.q_gap_max;
    row.policy_distance = record.policy_distance;
    row.support_match = record.support_match;
    row.max_kkt_residual = record.max_kkt_residual;
    row.d_star = record.d_star;
    row.bound_value = kNaN;
    row.wall_time_ms = options.record_timing ? record.wall_time.count() : 0.0;
    return row;
}

std::string instance_header(const ExperimentConfig &config, const ReferenceSolution &reference) {
    std::ostringstream out;
    const auto &structure = reference.structure;
    out << "seed: " << config.seed << '\n'
        << "geometry: " << config.n_states << " states x " << config.n_actions
        << " actions, gamma " << config.gamma << '\n'
        << "rho: uniform (an all-ones state weighting is normalized to the uniform distribution)\n"
        << "delta_gap: " << format_number(structure.delta_gap)
        << (structure.gap_reliable() ? "" : "  [WARNING: below 1e-6, optimal action sets may be unreliable]")
        << '\n'
        << "ln(1/gamma): " << format_number(config.gamma > 0.0 ? std::log(1.0 / config.gamma) : kNaN) << '\n'
        << "r_rho: " << format_number(reference.mismatch.r_rho) << '\n'
        << "theta_rho: " << format_number(reference.mismatch.theta_rho) << '\n'
        << "dummy states: " << structure.dummy_states.size() << '\n'
        << "V*_rho: " << format_number(reference.v_star_rho) << '\n'
        << '\n';
    return out.str();
}

} // namespace

ExperimentConfig parse_experiment_config(std::istream &in, const std::string &source) {
    ExperimentConfig config;
    std::vector<MethodDraft> drafts;
    std::string raw;
    long line_number = 0;
    while (std::getline(in, raw)) {
        ++line_number;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const LineContext ctx(source, line_number);
        if (line.front() == '[') {
            if (line != "[method]")
                throw InputError(source + ":" + std::to_string(line_number) +
                                 ": unknown section '" + line + "'");
            drafts.emplace_back();
            drafts.back().line = line_number;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError(source + ":" + std::to_string(line_number) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (drafts.empty())
            apply_global_key(config, key, value, ctx);
        else
            apply_method_key(drafts.back(), key, value, ctx);
    }
    for (auto &draft : drafts) config.methods.push_back(finish_method(std::move(draft), source));
    try {
        validate(config);
    } catch (const InputError &e) {
        throw InputError(source + ": " + e.what());
    }
    return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config '" + path.string() + "'");
    return parse_experiment_config(in, path.string());
}

void validate(const ExperimentConfig &config) {
    auto fail = [](const std::string &field, const std::string &what) {
        throw InputError("field '" + field + "': " + what);
    };
    if (config.methods.empty()) fail("methods", "at least one [method] block is required");
    if (config.n_states < 1) fail("n_states", "must be at least 1");
    if (config.n_actions < 1) fail("n_actions", "must be at least 1");
    if (!(config.gamma >= 0.0 && config.gamma < 1.0)) fail("gamma", "must lie in [0,1)");
    if (config.rho_mode != "uniform") fail("rho_mode", "only 'uniform' is supported");
    if (config.max_iter < 0) fail("max_iter", "must be nonnegative");
    if (!(config.tie_tol > 0.0)) fail("tie_tol", "must be positive");
    if (!(config.eta_cap > 0.0)) fail("eta_cap", "must be positive");
    std::vector<std::string> ids;
    if (config.value_iteration) ids.push_back("VI");
    for (const auto &m : config.methods) {
        if (m.id.empty()) fail("id", "every method needs an id");
        if (std::find(ids.begin(), ids.end(), m.id) != ids.end())
            fail("id", "duplicate method id '" + m.id + "'");
        ids.push_back(m.id);
        if (!(m.eta0 > 0.0)) fail("eta0", "must be positive");
        if (m.regularized && m.divergence.kind == DivergenceKind::tsallis)
            fail("regularized", "tsallis divergences have no regularized update");
        if (m.regularized && !(config.gamma > 0.0)) fail("regularized", "needs gamma > 0");
    }
}

ExperimentResult run_experiment(const ExperimentConfig &config, const RunOptions &options) {
    validate(config);
    const Mdp mdp = random_mdp(config.seed, config.n_states, config.n_actions, config.gamma);
    const StateDistribution rho = StateDistribution::uniform(config.n_states);
    ReferenceSolution reference = analyze(mdp, rho, config.tie_tol);

    if (options.write_files) {
        std::error_code ec;
        std::filesystem::create_directories(config.output_path, ec);
        if (ec || !std::filesystem::is_directory(config.output_path))
            throw IoError("cannot create output directory '" + config.output_path.string() + "'");
    }

    std::vector<MethodResult> results;
    for (const auto &method : config.methods) {
        RunConfig run;
        run.divergence = method.divergence;
        run.schedule = method_schedule(method, config, reference);
        run.rho = rho;
        run.init_policy = Policy::uniform(mdp.n_states(), mdp.n_actions());
        run.regularization = method.regularized ? Regularization::adaptive : Regularization::off;
        run.max_iter = config.max_iter;
        run.stop_on_support_match = method.stop_on_support_match;
        run.value_gap_tol = config.value_gap_tol;
        run.tie_tol = config.tie_tol;

        const BoundContext ctx =
            make_bound_context(mdp, reference, run.divergence, run.schedule, *run.init_policy);
        const std::string schedule_name =
            method.schedule == ScheduleKind::constant ? "constant" : "exponential";

        MethodResult result;
        result.id = method.id;
        for (const auto &record : run_pmd(mdp, reference, run)) {
            TrajectoryRow row = base_row(config, method.id, method.divergence.name(), schedule_name,
                                         method.regularized, record, options);
            if (!method.regularized)
                row.bound_value = value_gap_bound(ctx, run.schedule, record.k).value_or(kNaN);
            result.rows.push_back(std::move(row));
        }
        results.push_back(std::move(result));
    }
    if (config.value_iteration) {
        MethodResult result;
        result.id = "VI";
        for (const auto &record : run_value_iteration(mdp, reference, config.max_iter))
            result.rows.push_back(base_row(config, "VI", "none", "none", false, record, options));
        results.push_back(std::move(result));
    }

    std::vector<TrajectoryRow> all_rows;
    for (auto &result : results) {
        all_rows.insert(all_rows.end(), result.rows.begin(), result.rows.end());
        if (options.write_files) {
            result.csv_path = config.output_path / (result.id + ".csv");
            write_trajectory_csv(result.csv_path, result.rows);
        }
    }

    Summary summary = summarize_rows(all_rows);
    std::string text = instance_header(config, reference) + summary.text;
    if (options.write_files) {
        const auto path = config.output_path / "summary.txt";
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
        out << text;
        if (!out) throw IoError("failed writing '" + path.string() + "'");
    }
    return {std::move(reference), std::move(results), std::move(summary), std::move(text)};
}

} // namespace pmdlab
