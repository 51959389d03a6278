#pragma once

#include <latentbo/algorithms.hpp>
#include <latentbo/eval.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace latentbo::harness {

/// One (problem, algorithm, seed) job.
struct Job {
    algorithms::RunConfig config;
    /// When false the problem seed follows the run seed.
    bool fixed_problem_seed = false;

    /// `{problem}_{algorithm}_{seed}.csv`
    std::string file_name() const;
};

/// Parsed experiment file. See README for the schema.
struct ExperimentConfig {
    std::string name;
    /// One entry per (problem, algorithm) pair; seeds are added by jobs().
    std::vector<Job> runs;
    int repeats = 1;
    std::uint64_t seed_base = 0;
    std::optional<std::filesystem::path> output_dir;
    std::optional<std::filesystem::path> checkpoint_dir;
    bool plot_convergence = false;
    bool plot_profile = false;
    double plot_tau = 0.1;
    std::string source_json; // normalised echo of the input

    /// Every job, with seeds seed_base + offset + r for r < repeats.
    std::vector<Job> jobs(std::uint64_t seed_offset = 0) const;
};

/// Parses a JSON experiment. Errors are ConfigError with messages of the
/// form `<origin>:<line>: <key path>: <reason>`.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Value of LATENTBO_SEED_OFFSET, or 0 when unset.
std::uint64_t seed_offset_from_env();

struct RunOptions {
    std::filesystem::path out_dir;
    bool resume = false;
    int workers = 1;
    std::uint64_t seed_offset = 0;
};

struct RunSummary {
    int completed = 0;
    int skipped = 0;
    int failed = 0; // exceptions; partial traces count as completed
};

/// Runs every job on a pool of `workers` threads, writing one trace CSV per
/// job and a manifest.json that is rewritten after each job.
RunSummary run_experiment(const ExperimentConfig& config, const RunOptions& options,
                          std::ostream& log);

/// Splits `{problem}_{algorithm}_{seed}.csv`; empty if the name does not fit.
struct TraceName {
    std::string problem;
    std::string algorithm;
    std::uint64_t seed = 0;
};
std::optional<TraceName> parse_trace_name(const std::string& file_name);

struct ProfileData {
    double tau = 0.1;
    std::vector<eval::SolveRecord> records;
    std::vector<double> performance_alphas;
    eval::Curves performance;
    std::vector<double> data_alphas;
    eval::Curves data;
    std::map<std::string, double> solved;
    int problem_count = 0;
};

/// Builds solve records from every trace in `dir`. Problem instances are
/// keyed by (problem, seed). Unusable files are reported on `warn` and skipped.
ProfileData profile_directory(const std::filesystem::path& dir, double tau, std::ostream& warn);

/// Writes `out` (the percent-solved summary) and its siblings
/// `<stem>_performance.csv` and `<stem>_data.csv`.
void write_profile(const ProfileData& data, const std::filesystem::path& out);

/// Per-algorithm mean and std of best-so-far, indexed by evaluation.
struct ConvergenceSeries {
    std::string problem;
    std::string algorithm;
    std::vector<double> mean;
    std::vector<double> std;
    int runs = 0;
};
std::vector<ConvergenceSeries> convergence_series(const std::vector<TraceName>& names,
                                                  const std::vector<Trace>& traces);

std::string convergence_svg(const std::vector<ConvergenceSeries>& series);
/// `csv` has columns alpha,<solver>...; lines starting with '#' are ignored.
std::string profile_svg(const std::string& csv, const std::string& title);

// Subcommands. Each returns the process exit status: 0 on success, 2 on bad
// input, 1 when some job failed.
int cmd_run(const std::filesystem::path& config, const std::optional<std::filesystem::path>& out,
            bool resume, int workers, std::ostream& out_log, std::ostream& err);
int cmd_profile(const std::filesystem::path& traces, double tau, const std::filesystem::path& out,
                std::ostream& out_log, std::ostream& err);
int cmd_plot(const std::filesystem::path& in, const std::string& kind,
             const std::filesystem::path& out, std::ostream& err);

} // namespace latentbo::harness
