#pragma once

#include "ellopt/ellipsoid_solver.hpp"
#include "ellopt/problems.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ellopt {

/// Flat key=value configuration shared by the config file, the CLI and the
/// run manifest. Unset optionals print as "auto".
struct ExperimentConfig {
    std::string problem = "synthetic";  // synthetic | csv
    std::size_t m = 50000;
    std::size_t n = 20;
    std::uint64_t data_seed = 1;
    std::string csv;
    bool intercept = true;

    std::string solver = "both";  // ellipsoid | sgd | both
    double eps = 0.01;
    double beta = 0.1;
    std::optional<double> sigma;
    std::optional<std::size_t> batch_size;
    /// Upper limit on the automatically derived ellipsoid batch size.
    std::size_t batch_cap = 8192;
    std::optional<std::size_t> max_iters;

    std::size_t sgd_batch_size = 1;
    /// Step sizes in units of D/B.
    std::vector<double> sgd_grid{0.001, 0.01, 0.1, 0.5, 1.0};
    std::string sgd_schedule = "constant";  // constant | inverse-sqrt
    std::optional<std::size_t> sgd_iters;
    std::size_t pilot_iters = 500;

    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::size_t workers = 1;
    bool parallel_seeds = false;
    std::filesystem::path out_dir = "bench_out";

    double radius = 10.0;
    double erm_tol = 1e-4;
    double test_fraction = 0.2;
    std::size_t selection_rows = 5000;
    std::vector<double> thresholds{0.1, 0.01, 0.001};
    double order_threshold = 0.01;

    /// Throws std::invalid_argument naming the first bad field.
    void validate() const;
};

using KeyValues = std::map<std::string, std::string>;

/// Parses key=value lines; blank lines and lines starting with '#' are
/// skipped. Throws ParseError with the line number on malformed lines.
KeyValues read_key_values(std::istream& in);
KeyValues read_key_values(const std::filesystem::path& path);

/// Overlays the given keys on base. Keys prefixed "derived." are ignored;
/// any other unknown key or unparsable value throws std::invalid_argument.
ExperimentConfig apply_key_values(ExperimentConfig base, const KeyValues& kv);

/// Every config key in canonical form, so apply_key_values(·, to_key_values(c))
/// reproduces c.
KeyValues to_key_values(const ExperimentConfig& config);

/// Train/test split of the configured data with everything the solvers need.
struct PreparedProblem {
    std::shared_ptr<const Dataset> train;
    std::shared_ptr<const Dataset> test;
    LogisticProblem problem;
};

PreparedProblem prepare_problem(const ExperimentConfig& config);

/// Ellipsoid settings implied by the config: ρ = R = radius, D = 2·radius,
/// batch = min(theory, cap) unless given.
SolverConfig ellipsoid_config(const ExperimentConfig& config, const LogisticProblem& problem,
                              std::uint64_t seed);

struct RunSummary {
    std::uint64_t seed = 0;
    std::string solver;   // ellipsoid | sgd
    std::string label;    // "ellipsoid" or "step=<α>"
    double step = 0.0;
    bool selected = false;
    bool diverged = false;
    std::size_t batch_size = 0;
    std::size_t iterations = 0;
    /// First iteration whose tracked test loss is within each threshold.
    std::vector<std::optional<std::size_t>> iterations_to;
    /// Same, at order_threshold.
    std::optional<std::size_t> order_hit;
    std::size_t oracle_calls = 0;
    std::size_t evaluation_calls = 0;
    double final_test_loss = 0.0;
    std::optional<double> wall_seconds;
};

struct ExperimentResult {
    std::vector<RunSummary> runs;
    double f_star_train = 0.0;
    double f_star_test = 0.0;
    std::size_t ellipsoid_iterations = 0;
    std::size_t ellipsoid_batch = 0;
    std::size_t ellipsoid_batch_theory = 0;
    /// Ellipsoid strictly ahead of every SGD run at order_threshold, per seed.
    bool ordering_holds = true;
    std::vector<std::string> messages;

    /// 0 on success, 1 when solver = both and the ordering fails.
    int exit_code(const ExperimentConfig& config) const;
};

/// Runs the benchmark and writes trace_<solver>_seed<S>.csv, summary.csv,
/// curves.csv and manifest.txt under config.out_dir. Configuration errors are
/// raised before any file is written.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace ellopt
