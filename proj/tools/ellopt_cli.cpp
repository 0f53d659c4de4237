#include "ellopt/experiment.hpp"
#include "ellopt/sgd.hpp"
#include "ellopt/trace_csv.hpp"
#include "ellopt/validation.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

using namespace ellopt;

namespace {

// Flags shared by solve and bench; each maps onto one config key and is
// only applied when given, so it overrides --config.
struct SharedFlags {
    std::optional<std::string> config;
    std::optional<std::string> seed;
    std::optional<std::string> seeds;
    std::optional<std::string> workers;
    std::optional<std::string> out_dir;
    std::optional<std::string> eps;
    std::optional<std::string> beta;
    std::optional<std::string> sigma;
    std::optional<std::string> batch_size;
    std::optional<std::string> max_iters;
    std::optional<std::string> csv;
    std::optional<std::string> m;
    std::optional<std::string> n;
    std::optional<std::string> data_seed;
    std::optional<std::string> solver;
    bool no_intercept = false;
    std::vector<std::string> overrides;

    void attach(CLI::App& app) {
        app.add_option("--config", config, "key=value config file (flags win)");
        app.add_option("--seed", seed, "single solver seed");
        app.add_option("--workers", workers, "minibatch worker threads");
        app.add_option("--out-dir", out_dir, "output directory");
        app.add_option("--eps", eps, "target accuracy");
        app.add_option("--beta", beta, "failure probability");
        app.add_option("--sigma", sigma, "noise level override, or auto");
        app.add_option("--batch-size", batch_size, "ellipsoid batch size, or auto");
        app.add_option("--max-iters", max_iters, "iteration cap, or auto");
        app.add_option("--csv", csv, "dataset CSV with a header and label column y");
        app.add_option("--m", m, "synthetic rows");
        app.add_option("--n", n, "synthetic dimension including the intercept");
        app.add_option("--data-seed", data_seed, "seed for data generation and the split");
        app.add_flag("--no-intercept", no_intercept, "do not append the constant column");
        app.add_option("--set", overrides, "extra key=value overrides")->take_all();
    }

    ExperimentConfig resolve() const {
        ExperimentConfig c;
        if (config) {
            c = apply_key_values(c, read_key_values(std::filesystem::path(*config)));
        }
        KeyValues kv;
        auto put = [&](const char* key, const std::optional<std::string>& v) {
            if (v) kv[key] = *v;
        };
        put("seeds", seeds);
        put("seeds", seed);
        put("workers", workers);
        put("out_dir", out_dir);
        put("eps", eps);
        put("beta", beta);
        put("sigma", sigma);
        put("batch_size", batch_size);
        put("max_iters", max_iters);
        put("m", m);
        put("n", n);
        put("data_seed", data_seed);
        put("solver", solver);
        if (csv) {
            kv["problem"] = "csv";
            kv["csv"] = *csv;
        }
        if (no_intercept) {
            kv["intercept"] = "false";
        }
        for (const auto& item : overrides) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) {
                throw std::invalid_argument("--set expects key=value, got '" + item + "'");
            }
            kv[item.substr(0, eq)] = item.substr(eq + 1);
        }
        return apply_key_values(c, kv);
    }
};

void print_report(std::ostream& out, const std::string& solver, const SolverReport& rep,
                  const PreparedProblem& prep) {
    out << "solver=" << solver << '\n'
        << "termination=" << to_string(rep.termination) << '\n'
        << "iterations=" << rep.iterations << '\n'
        << "batch_size=" << rep.batch_size << '\n'
        << "best_estimate=" << format_double(rep.best_estimate) << '\n'
        << "train_loss=" << format_double(mean_logistic_loss(*prep.train, rep.best_point)) << '\n'
        << "test_loss=" << format_double(mean_logistic_loss(*prep.test, rep.best_point)) << '\n';
    std::size_t calls = 0;
    for (const auto& rec : rep.trace) {
        calls += rec.samples;
    }
    out << "oracle_calls=" << calls << '\n' << "eval_calls=" << rep.evaluation_calls << '\n';
    out << "best_point=";
    for (Eigen::Index i = 0; i < rep.best_point.size(); ++i) {
        out << (i ? "," : "") << format_double(rep.best_point[i]);
    }
    out << '\n';
}

int cmd_gen_data(SharedFlags flags, const std::string& output) {
    // Here --seed means the data seed.
    if (!flags.data_seed) {
        flags.data_seed = flags.seed;
    }
    flags.seed.reset();
    const ExperimentConfig c = flags.resolve();
    const Dataset data = generate_synthetic(c.m, c.n, c.data_seed);
    std::filesystem::path path = output.empty() ? c.out_dir / "data.csv" : std::filesystem::path(output);
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    write_dataset_csv(path, data);
    std::cout << "wrote " << data.rows() << " rows to " << path.string() << '\n';
    return 0;
}

int cmd_solve(const SharedFlags& flags, const std::string& solver, double step) {
    ExperimentConfig c = flags.resolve();
    c.validate();
    const PreparedProblem prep = prepare_problem(c);
    const LogisticProblem& lp = prep.problem;
    const std::uint64_t seed = c.seeds.front();
    SolverReport rep;
    if (solver == "ellipsoid") {
        rep = solve(*lp.oracle, *lp.set, ellipsoid_config(c, lp, seed));
    } else if (solver == "sgd") {
        const SolverConfig probe = ellipsoid_config(c, lp, seed);
        SgdConfig sc;
        sc.step = step > 0.0 ? step : 0.01 * lp.diameter / lp.objective_range;
        sc.batch_size = c.sgd_batch_size;
        sc.iterations =
            c.sgd_iters.value_or(resolve_parameters(*lp.oracle, *lp.set, probe).iterations);
        sc.seed = seed;
        sc.workers = c.workers;
        rep = sgd_run(*lp.oracle, *lp.set, sc);
    } else {
        throw std::invalid_argument("solve: --solver must be ellipsoid or sgd");
    }
    std::filesystem::create_directories(c.out_dir);
    write_trace_csv(c.out_dir / ("trace_" + solver + "_seed" + std::to_string(seed) + ".csv"),
                    rep.trace);
    std::ofstream report(c.out_dir / "report.txt");
    print_report(report, solver, rep, prep);
    print_report(std::cout, solver, rep, prep);
    return 0;
}

int cmd_bench(const SharedFlags& flags) {
    const ExperimentConfig c = flags.resolve();
    const ExperimentResult r = run_experiment(c);
    std::cout << "f*_train=" << format_double(r.f_star_train)
              << " f*_test=" << format_double(r.f_star_test) << " N=" << r.ellipsoid_iterations
              << " r=" << r.ellipsoid_batch << " (theory " << r.ellipsoid_batch_theory << ")\n";
    for (const auto& run : r.runs) {
        std::cout << "seed " << run.seed << ' ' << run.label << (run.selected ? " *" : "")
                  << (run.diverged ? " diverged" : "") << " iters_to_"
                  << format_double(c.order_threshold) << '='
                  << (run.order_hit ? std::to_string(*run.order_hit) : "NA")
                  << " test_loss=" << format_double(run.final_test_loss) << '\n';
    }
    for (const auto& msg : r.messages) {
        std::cout << msg << '\n';
    }
    if (c.solver == "both") {
        std::cout << "ordering " << (r.ordering_holds ? "holds" : "FAILS") << '\n';
    }
    std::cout << "artifacts in " << c.out_dir.string() << '\n';
    return r.exit_code(c);
}

int cmd_validate(const std::string& suite, const std::string& out_dir, std::size_t workers) {
    std::vector<std::string> names;
    if (suite == "all") {
        names = validation_suites();
    } else {
        names.push_back(suite);
    }
    const std::filesystem::path dir = out_dir.empty() ? "." : out_dir;
    std::filesystem::create_directories(dir);
    bool ok = true;
    for (const auto& name : names) {
        const SuiteResult r = run_validation(name, workers);
        write_validation_report(dir / ("validate_" + name + ".txt"), r);
        std::cout << (r.passed ? "PASS " : "FAIL ") << name << ": " << r.summary << " ("
                  << format_double(r.seconds) << " s)\n";
        ok = ok && r.passed;
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ellipsoid method with minibatched stochastic subgradients"};
    app.require_subcommand(1);

    SharedFlags gen_flags;
    std::string gen_output;
    auto* gen = app.add_subcommand("gen-data", "write a synthetic logistic dataset as CSV");
    gen_flags.attach(*gen);
    gen->add_option("-o,--output", gen_output, "CSV path (default <out-dir>/data.csv)");

    SharedFlags solve_flags;
    std::string solve_solver = "ellipsoid";
    double solve_step = 0.0;
    auto* solve_cmd = app.add_subcommand("solve", "run one solver on a logistic problem");
    solve_flags.attach(*solve_cmd);
    solve_cmd->add_option("--solver", solve_solver, "ellipsoid or sgd");
    solve_cmd->add_option("--step", solve_step, "SGD step size (default 0.01·D/B)");

    SharedFlags bench_flags;
    auto* bench = app.add_subcommand("bench", "ellipsoid vs SGD benchmark with traces and summary");
    bench_flags.attach(*bench);
    bench->add_option("--solver", bench_flags.solver, "ellipsoid, sgd or both");
    bench->add_option("--seeds", bench_flags.seeds, "comma-separated solver seeds");

    std::string suite;
    std::string validate_dir;
    std::size_t validate_workers = 1;
    auto* validate = app.add_subcommand("validate", "run a property suite and write its report");
    validate->add_option("suite", suite, "volume, containment, concentration, delta, theorem1, "
                                         "theorem2, budget, gradcheck or all")
        ->required();
    validate->add_option("--out-dir", validate_dir, "report directory");
    validate->add_option("--workers", validate_workers, "minibatch worker threads");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*gen) return cmd_gen_data(gen_flags, gen_output);
        if (*solve_cmd) return cmd_solve(solve_flags, solve_solver, solve_step);
        if (*bench) return cmd_bench(bench_flags);
        if (*validate) return cmd_validate(suite, validate_dir, validate_workers);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
