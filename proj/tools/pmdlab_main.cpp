// pmdlab: run policy mirror descent experiments and summarize trajectories.
//
//   pmdlab run <config> [--out DIR] [--seed N] [--quiet] [--timing]
//   pmdlab summarize <csv>...
//
// Exit status: 0 success, 1 bound violation, 2 invalid input.

#include "pmdlab/errors.hpp"
#include "pmdlab/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitInvalid = 2;

int run_command(const std::string &config_path, const std::optional<std::string> &out_dir,
                const std::optional<std::uint64_t> &seed, bool quiet, bool timing) {
    pmdlab::ExperimentConfig config = pmdlab::load_experiment_config(config_path);
    if (out_dir) config.output_path = *out_dir;
    if (seed) config.seed = *seed;

    pmdlab::RunOptions options;
    options.record_timing = timing;
    const auto result = pmdlab::run_experiment(config, options);
    if (!quiet) {
        std::cout << result.summary_text;
        for (const auto &method : result.methods) std::cout << "wrote " << method.csv_path.string() << '\n';
    }
    return result.summary.violations > 0 ? kExitViolation : kExitOk;
}

int summarize_command(const std::vector<std::string> &files, bool quiet) {
    std::vector<std::filesystem::path> paths(files.begin(), files.end());
    const auto summary = pmdlab::summarize(paths);
    if (!quiet) std::cout << summary.text;
    return summary.violations > 0 ? kExitViolation : kExitOk;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Exact tabular policy mirror descent experiments"};
    app.require_subcommand(1);

    bool quiet = false;
    app.add_flag("--quiet", quiet, "Suppress the printed summary");

    auto *run = app.add_subcommand("run", "Run an experiment configuration");
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    bool timing = false;
    run->add_option("config", config_path, "Experiment configuration file")->required();
    run->add_option("--out", out_dir, "Output directory (overrides output_path)");
    run->add_option("--seed", seed, "Random instance seed (overrides seed)");
    run->add_flag("--quiet", quiet, "Suppress the printed summary");
    run->add_flag("--timing", timing, "Record wall-clock times in the CSV output");

    auto *summarize = app.add_subcommand("summarize", "Summarize trajectory CSV files");
    std::vector<std::string> files;
    summarize->add_option("csv", files, "Trajectory CSV files")->required();
    summarize->add_flag("--quiet", quiet, "Only set the exit status");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    try {
        if (*run) return run_command(config_path, out_dir, seed, quiet, timing);
        return summarize_command(files, quiet);
    } catch (const pmdlab::InputError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const pmdlab::IoError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    }
}
