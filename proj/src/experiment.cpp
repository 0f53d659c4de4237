#include "ellopt/experiment.hpp"

#include "ellopt/sgd.hpp"
#include "ellopt/trace_csv.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ellopt {

namespace {

// Budgets beyond this are treated as a misconfiguration, not a long run.
constexpr std::size_t kMaxIterations = 10'000'000;

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw std::invalid_argument("config: bad value '" + value + "' for key '" + key + "'");
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        bad_value(key, value);
    }
    return out;
}

double parse_real(const std::string& key, const std::string& value) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        bad_value(key, value);
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") {
        return true;
    }
    if (value == "false" || value == "0" || value == "no") {
        return false;
    }
    bad_value(key, value);
}

template <class T, class F>
std::optional<T> parse_auto(const std::string& value, F parse) {
    if (value == "auto") {
        return std::nullopt;
    }
    return parse(value);
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F fmt) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out += (i ? "," : "") + fmt(xs[i]);
    }
    return out;
}

std::string threshold_label(double t) { return "iters_to_" + format_double(t); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("config: " + what); };
    if (problem != "synthetic" && problem != "csv") fail("problem must be synthetic or csv");
    if (problem == "csv" && csv.empty()) fail("problem=csv needs a csv path");
    if (problem == "synthetic" && (m < 2 || n < 2)) fail("synthetic data needs m >= 2 and n >= 2");
    if (solver != "ellipsoid" && solver != "sgd" && solver != "both") {
        fail("solver must be ellipsoid, sgd or both");
    }
    if (!(eps > 0.0) || !std::isfinite(eps)) fail("eps must be positive");
    if (!(beta > 0.0 && beta < 1.0)) fail("beta must lie in (0, 1)");
    if (sigma && !(*sigma >= 0.0 && std::isfinite(*sigma))) fail("sigma must be nonnegative");
    if (batch_size && *batch_size == 0) fail("batch_size must be at least 1");
    if (batch_cap == 0) fail("batch_cap must be at least 1");
    if (max_iters && *max_iters == 0) fail("max_iters must be at least 1");
    if (sgd_batch_size == 0) fail("sgd_batch_size must be at least 1");
    if (sgd_grid.empty()) fail("sgd_grid is empty");
    for (double a : sgd_grid) {
        if (!(a > 0.0) || !std::isfinite(a)) fail("sgd_grid entries must be positive");
    }
    if (sgd_schedule != "constant" && sgd_schedule != "inverse-sqrt") {
        fail("sgd_schedule must be constant or inverse-sqrt");
    }
    if (sgd_iters && *sgd_iters == 0) fail("sgd_iters must be at least 1");
    if (pilot_iters == 0) fail("pilot_iters must be at least 1");
    if (seeds.empty()) fail("seeds list is empty");
    if (workers == 0) fail("workers must be at least 1");
    if (!(radius > 0.0) || !std::isfinite(radius)) fail("radius must be positive");
    if (!(erm_tol > 0.0)) fail("erm_tol must be positive");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) fail("test_fraction must lie in (0, 1)");
    if (selection_rows == 0) fail("selection_rows must be at least 1");
    if (thresholds.empty()) fail("thresholds list is empty");
    for (double t : thresholds) {
        if (!(t > 0.0)) fail("thresholds must be positive");
    }
    if (!(order_threshold > 0.0)) fail("order_threshold must be positive");
}

KeyValues read_key_values(std::istream& in) {
    KeyValues out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ParseError("expected key=value", line_no);
        }
        const std::string key = trim(std::string_view(t).substr(0, eq));
        if (key.empty()) {
            throw ParseError("empty key", line_no);
        }
        out[key] = trim(std::string_view(t).substr(eq + 1));
    }
    return out;
}

KeyValues read_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return read_key_values(in);
}

ExperimentConfig apply_key_values(ExperimentConfig c, const KeyValues& kv) {
    for (const auto& [key, value] : kv) {
        auto size = [&](const std::string& v) { return static_cast<std::size_t>(parse_u64(key, v)); };
        auto real = [&](const std::string& v) { return parse_real(key, v); };
        if (key.rfind("derived.", 0) == 0) continue;
        if (key == "problem") c.problem = value;
        else if (key == "m") c.m = size(value);
        else if (key == "n") c.n = size(value);
        else if (key == "data_seed") c.data_seed = parse_u64(key, value);
        else if (key == "csv") c.csv = value;
        else if (key == "intercept") c.intercept = parse_bool(key, value);
        else if (key == "solver") c.solver = value;
        else if (key == "eps") c.eps = real(value);
        else if (key == "beta") c.beta = real(value);
        else if (key == "sigma") c.sigma = parse_auto<double>(value, real);
        else if (key == "batch_size") c.batch_size = parse_auto<std::size_t>(value, size);
        else if (key == "batch_cap") c.batch_cap = size(value);
        else if (key == "max_iters") c.max_iters = parse_auto<std::size_t>(value, size);
        else if (key == "sgd_batch_size") c.sgd_batch_size = size(value);
        else if (key == "sgd_grid") {
            c.sgd_grid.clear();
            for (const auto& item : split_list(value)) c.sgd_grid.push_back(real(item));
        }
        else if (key == "sgd_schedule") c.sgd_schedule = value;
        else if (key == "sgd_iters") c.sgd_iters = parse_auto<std::size_t>(value, size);
        else if (key == "pilot_iters") c.pilot_iters = size(value);
        else if (key == "seeds") {
            c.seeds.clear();
            for (const auto& item : split_list(value)) c.seeds.push_back(parse_u64(key, item));
        }
        else if (key == "workers") c.workers = size(value);
        else if (key == "parallel_seeds") c.parallel_seeds = parse_bool(key, value);
        else if (key == "out_dir") c.out_dir = value;
        else if (key == "radius") c.radius = real(value);
        else if (key == "erm_tol") c.erm_tol = real(value);
        else if (key == "test_fraction") c.test_fraction = real(value);
        else if (key == "selection_rows") c.selection_rows = size(value);
        else if (key == "thresholds") {
            c.thresholds.clear();
            for (const auto& item : split_list(value)) c.thresholds.push_back(real(item));
        }
        else if (key == "order_threshold") c.order_threshold = real(value);
        else throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    return c;
}

KeyValues to_key_values(const ExperimentConfig& c) {
    auto opt_size = [](const std::optional<std::size_t>& v) {
        return v ? std::to_string(*v) : std::string("auto");
    };
    auto real = [](double v) { return format_double(v); };
    KeyValues kv;
    kv["problem"] = c.problem;
    kv["m"] = std::to_string(c.m);
    kv["n"] = std::to_string(c.n);
    kv["data_seed"] = std::to_string(c.data_seed);
    kv["csv"] = c.csv;
    kv["intercept"] = c.intercept ? "true" : "false";
    kv["solver"] = c.solver;
    kv["eps"] = real(c.eps);
    kv["beta"] = real(c.beta);
    kv["sigma"] = c.sigma ? real(*c.sigma) : "auto";
    kv["batch_size"] = opt_size(c.batch_size);
    kv["batch_cap"] = std::to_string(c.batch_cap);
    kv["max_iters"] = opt_size(c.max_iters);
    kv["sgd_batch_size"] = std::to_string(c.sgd_batch_size);
    kv["sgd_grid"] = join(c.sgd_grid, real);
    kv["sgd_schedule"] = c.sgd_schedule;
    kv["sgd_iters"] = opt_size(c.sgd_iters);
    kv["pilot_iters"] = std::to_string(c.pilot_iters);
    kv["seeds"] = join(c.seeds, [](std::uint64_t s) { return std::to_string(s); });
    kv["workers"] = std::to_string(c.workers);
    kv["parallel_seeds"] = c.parallel_seeds ? "true" : "false";
    kv["out_dir"] = c.out_dir.string();
    kv["radius"] = real(c.radius);
    kv["erm_tol"] = real(c.erm_tol);
    kv["test_fraction"] = real(c.test_fraction);
    kv["selection_rows"] = std::to_string(c.selection_rows);
    kv["thresholds"] = join(c.thresholds, real);
    kv["order_threshold"] = real(c.order_threshold);
    return kv;
}

PreparedProblem prepare_problem(const ExperimentConfig& config) {
    config.validate();
    const Dataset all = config.problem == "csv"
                            ? read_dataset_csv(std::filesystem::path(config.csv), config.intercept)
                            : generate_synthetic(config.m, config.n, config.data_seed);
    auto [train, test] = split_train_test(all, config.test_fraction, config.data_seed);
    PreparedProblem p;
    p.train = std::make_shared<const Dataset>(std::move(train));
    p.test = std::make_shared<const Dataset>(std::move(test));
    p.problem = LogisticProblem::build(p.train, config.radius, config.data_seed, config.sigma);
    return p;
}

SolverConfig ellipsoid_config(const ExperimentConfig& config, const LogisticProblem& problem,
                              std::uint64_t seed) {
    SolverConfig s;
    s.eps = config.eps;
    s.beta = config.beta;
    s.sigma = problem.sigma;
    s.diameter = problem.diameter;
    s.objective_range = problem.objective_range;
    s.inner_radius = config.radius;
    s.radius = config.radius;
    s.max_iterations = config.max_iters;
    s.seed = seed;
    s.workers = config.workers;
    if (config.batch_size) {
        s.batch_size = config.batch_size;
    } else {
        const ResolvedParameters theory = resolve_parameters(*problem.oracle, *problem.set, s);
        s.batch_size = std::min(theory.batch_size, config.batch_cap);
    }
    s.eval_batch_size = s.batch_size;
    return s;
}

int ExperimentResult::exit_code(const ExperimentConfig& config) const {
    return config.solver == "both" && !ordering_holds ? 1 : 0;
}

namespace {

struct CurvePoint {
    std::size_t k;
    double test_loss;
};

// Best-so-far tracking shared by both solvers: candidates are ranked by the
// loss on a fixed training subsample, the curve reports the test loss of the
// current leader.
class Tracker {
  public:
    Tracker(const ExperimentConfig& config, const PreparedProblem& prep, double f_star_test)
        : thresholds_(config.thresholds),
          order_threshold_(config.order_threshold),
          f_star_test_(f_star_test),
          test_(prep.test) {
        const std::size_t rows = std::min(config.selection_rows, prep.train->rows());
        std::vector<std::size_t> idx(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            idx[i] = i;
        }
        selection_ = prep.train->subset(idx);
    }

    // Subsample losses of every feasible record, NaN elsewhere; centers are
    // stacked so the products run as matrix-matrix multiplies.
    std::vector<double> selection_losses(const std::vector<IterationRecord>& trace) const {
        constexpr std::size_t kChunk = 64;
        std::vector<double> out(trace.size(), std::numeric_limits<double>::quiet_NaN());
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < trace.size(); ++i) {
            if (trace[i].feasible) {
                idx.push_back(i);
            }
        }
        const auto n = selection_.features.cols();
        const auto rows = selection_.features.rows();
        for (std::size_t start = 0; start < idx.size(); start += kChunk) {
            const std::size_t count = std::min(kChunk, idx.size() - start);
            Matrix centers(n, static_cast<Eigen::Index>(count));
            for (std::size_t j = 0; j < count; ++j) {
                centers.col(static_cast<Eigen::Index>(j)) = trace[idx[start + j]].center;
            }
            const Matrix z = selection_.features * centers;
            for (std::size_t j = 0; j < count; ++j) {
                const auto col = static_cast<Eigen::Index>(j);
                double total = 0.0;
                for (Eigen::Index r = 0; r < rows; ++r) {
                    total += softplus(-z(r, col)) + (1.0 - selection_.labels[r]) * z(r, col);
                }
                out[idx[start + j]] = total / static_cast<double>(rows);
            }
        }
        return out;
    }

    std::vector<CurvePoint> curve(const std::vector<IterationRecord>& trace,
                                  const std::vector<double>& losses) const {
        std::vector<CurvePoint> out;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < trace.size(); ++i) {
            if (losses[i] < best) {
                best = losses[i];
                out.push_back({trace[i].index, mean_logistic_loss(*test_, trace[i].center)});
            }
        }
        return out;
    }

    std::optional<std::size_t> first_within(const std::vector<CurvePoint>& c, double t) const {
        for (const auto& p : c) {
            if (p.test_loss <= f_star_test_ + t) {
                return p.k;
            }
        }
        return std::nullopt;
    }

    void fill_hits(RunSummary& run, const std::vector<CurvePoint>& c) const {
        run.iterations_to.clear();
        for (double t : thresholds_) {
            run.iterations_to.push_back(first_within(c, t));
        }
        run.order_hit = first_within(c, order_threshold_);
    }

    // Pilot score: best subsample loss among the first `count` iterates.
    static double pilot_score(const std::vector<IterationRecord>& trace,
                              const std::vector<double>& losses, std::size_t count) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < trace.size() && trace[i].index < count; ++i) {
            if (losses[i] < best) {
                best = losses[i];
            }
        }
        return best;
    }

  private:
    std::vector<double> thresholds_;
    double order_threshold_;
    double f_star_test_;
    std::shared_ptr<const Dataset> test_;
    Dataset selection_;
};

struct SeedOutcome {
    std::vector<RunSummary> runs;
    std::vector<std::string> curve_rows;
    std::optional<double> selected_step;
};

SeedOutcome run_seed(const ExperimentConfig& config, const PreparedProblem& prep,
                     const Tracker& tracker, std::uint64_t seed, std::size_t sgd_iters,
                     bool timed) {
    SeedOutcome out;
    const LogisticProblem& lp = prep.problem;
    const std::string tag = std::to_string(seed);
    auto add_curve = [&](const RunSummary& run, const std::vector<CurvePoint>& curve) {
        for (const auto& p : curve) {
            out.curve_rows.push_back(tag + "," + run.solver + "," + run.label + "," +
                                     std::to_string(p.k) + "," + format_double(p.test_loss));
        }
    };

    if (config.solver != "sgd") {
        const auto t0 = std::chrono::steady_clock::now();
        const SolverReport rep = solve(*lp.oracle, *lp.set, ellipsoid_config(config, lp, seed));
        RunSummary run;
        run.wall_seconds = timed ? std::optional<double>(seconds_since(t0)) : std::nullopt;
        run.seed = seed;
        run.solver = "ellipsoid";
        run.label = "ellipsoid";
        run.selected = true;
        run.batch_size = rep.batch_size;
        run.iterations = rep.iterations;
        for (const auto& rec : rep.trace) {
            run.oracle_calls += rec.samples;
        }
        run.evaluation_calls = rep.evaluation_calls;
        run.final_test_loss = mean_logistic_loss(*prep.test, rep.best_point);
        const auto curve = tracker.curve(rep.trace, tracker.selection_losses(rep.trace));
        tracker.fill_hits(run, curve);
        write_trace_csv(config.out_dir / ("trace_ellipsoid_seed" + tag + ".csv"), rep.trace);
        add_curve(run, curve);
        out.runs.push_back(std::move(run));
    }

    if (config.solver != "ellipsoid") {
        const double unit = lp.diameter / lp.objective_range;
        std::vector<SolverReport> reports;
        std::size_t selected = 0;
        double best_score = std::numeric_limits<double>::infinity();
        const std::size_t first = out.runs.size();
        for (std::size_t i = 0; i < config.sgd_grid.size(); ++i) {
            SgdConfig sc;
            sc.step = config.sgd_grid[i] * unit;
            sc.schedule = config.sgd_schedule == "inverse-sqrt" ? StepSchedule::InverseSqrt
                                                                : StepSchedule::Constant;
            sc.batch_size = config.sgd_batch_size;
            sc.iterations = sgd_iters;
            sc.seed = seed;
            sc.workers = config.workers;
            RunSummary run;
            run.seed = seed;
            run.solver = "sgd";
            run.label = "step=" + format_double(sc.step);
            run.step = sc.step;
            run.batch_size = sc.batch_size;
            run.iterations_to.assign(config.thresholds.size(), std::nullopt);
            const auto t0 = std::chrono::steady_clock::now();
            try {
                SolverReport rep = sgd_run(*lp.oracle, *lp.set, sc);
                run.wall_seconds = timed ? std::optional<double>(seconds_since(t0)) : std::nullopt;
                run.iterations = rep.iterations;
                for (const auto& rec : rep.trace) {
                    run.oracle_calls += rec.samples;
                }
                run.evaluation_calls = rep.evaluation_calls;
                run.final_test_loss = mean_logistic_loss(*prep.test, rep.best_point);
                const std::vector<double> losses = tracker.selection_losses(rep.trace);
                const auto curve = tracker.curve(rep.trace, losses);
                tracker.fill_hits(run, curve);
                add_curve(run, curve);
                const double score = Tracker::pilot_score(rep.trace, losses, config.pilot_iters);
                if (score < best_score) {
                    best_score = score;
                    selected = i;
                }
                reports.push_back(std::move(rep));
            } catch (const Diverged&) {
                run.diverged = true;
                run.final_test_loss = std::numeric_limits<double>::quiet_NaN();
                reports.emplace_back();
            }
            out.runs.push_back(std::move(run));
        }
        if (std::isfinite(best_score)) {
            out.runs[first + selected].selected = true;
            out.selected_step = out.runs[first + selected].step;
            write_trace_csv(config.out_dir / ("trace_sgd_seed" + tag + ".csv"),
                            reports[selected].trace);
        }
    }
    return out;
}

void write_summary(const std::filesystem::path& path, const ExperimentConfig& config,
                   const std::vector<RunSummary>& runs) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << "seed,solver,config,step,selected,diverged,batch_size,iterations";
    for (double t : config.thresholds) {
        out << ',' << threshold_label(t);
    }
    out << ",oracle_calls,eval_calls,final_test_loss,wall_seconds\n";
    for (const auto& r : runs) {
        out << r.seed << ',' << r.solver << ',' << r.label << ','
            << (r.solver == "sgd" ? format_double(r.step) : "") << ',' << (r.selected ? 1 : 0)
            << ',' << (r.diverged ? 1 : 0) << ',' << r.batch_size << ',' << r.iterations;
        for (const auto& hit : r.iterations_to) {
            out << ',' << (hit ? std::to_string(*hit) : "NA");
        }
        out << ',' << r.oracle_calls << ',' << r.evaluation_calls << ','
            << format_double(r.final_test_loss) << ','
            << (r.wall_seconds ? format_double(*r.wall_seconds) : "NA") << '\n';
    }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    const PreparedProblem prep = prepare_problem(config);
    const LogisticProblem& lp = prep.problem;

    // Budget feasibility is settled before any solver runs or files appear.
    const std::size_t budget =
        iteration_budget(lp.set->dimension(), lp.diameter, lp.objective_range, config.radius, config.eps);
    if (budget > kMaxIterations && !config.max_iters) {
        throw std::invalid_argument("config: eps too small, iteration budget " +
                                    std::to_string(budget) + " exceeds " +
                                    std::to_string(kMaxIterations));
    }
    SolverConfig probe;
    ResolvedParameters params;
    ResolvedParameters theory;
    try {
        probe = ellipsoid_config(config, lp, config.seeds.front());
        params = resolve_parameters(*lp.oracle, *lp.set, probe);
        SolverConfig theory_cfg = probe;
        theory_cfg.batch_size.reset();
        theory_cfg.eval_batch_size.reset();
        theory = resolve_parameters(*lp.oracle, *lp.set, theory_cfg);
    } catch (const std::overflow_error& e) {
        throw std::invalid_argument(std::string("config: eps too small: ") + e.what());
    }
    if (params.iterations > kMaxIterations) {
        throw std::invalid_argument("config: max_iters exceeds " + std::to_string(kMaxIterations));
    }
    const std::size_t sgd_iters = config.sgd_iters.value_or(params.iterations);
    if (sgd_iters > kMaxIterations) {
        throw std::invalid_argument("config: sgd_iters exceeds " + std::to_string(kMaxIterations));
    }

    ExperimentResult result;
    const ErmResult erm = erm_reference(lp.objective, *lp.set, config.erm_tol,
                                        lp.objective_range, config.workers);
    result.f_star_train = erm.value;
    result.f_star_test = mean_logistic_loss(*prep.test, erm.point);
    result.ellipsoid_iterations = params.iterations;
    result.ellipsoid_batch = params.batch_size;
    result.ellipsoid_batch_theory = theory.batch_size;

    std::filesystem::create_directories(config.out_dir);
    const Tracker tracker(config, prep, result.f_star_test);

    std::vector<SeedOutcome> outcomes;
    if (config.parallel_seeds && config.seeds.size() > 1) {
        std::vector<std::future<SeedOutcome>> jobs;
        for (std::uint64_t seed : config.seeds) {
            jobs.push_back(std::async(std::launch::async, [&, seed] {
                return run_seed(config, prep, tracker, seed, sgd_iters, false);
            }));
        }
        for (auto& job : jobs) {
            outcomes.push_back(job.get());
        }
    } else {
        for (std::uint64_t seed : config.seeds) {
            outcomes.push_back(run_seed(config, prep, tracker, seed, sgd_iters, true));
        }
    }

    std::vector<std::string> curve_rows;
    KeyValues derived;
    for (std::size_t s = 0; s < outcomes.size(); ++s) {
        const std::uint64_t seed = config.seeds[s];
        const SeedOutcome& o = outcomes[s];
        result.runs.insert(result.runs.end(), o.runs.begin(), o.runs.end());
        curve_rows.insert(curve_rows.end(), o.curve_rows.begin(), o.curve_rows.end());
        if (o.selected_step) {
            derived["derived.selected_step.seed" + std::to_string(seed)] =
                format_double(*o.selected_step);
        }
        if (config.solver != "both") {
            continue;
        }
        const auto ell_hit = o.runs.front().order_hit;
        bool ok = ell_hit.has_value();
        for (std::size_t i = 1; i < o.runs.size(); ++i) {
            const auto sgd_hit = o.runs[i].order_hit;
            if (ok && sgd_hit && *sgd_hit <= *ell_hit) {
                ok = false;
                result.messages.push_back("seed " + std::to_string(seed) + ": sgd " +
                                          o.runs[i].label + " reached the threshold at " +
                                          std::to_string(*sgd_hit) + ", ellipsoid at " +
                                          std::to_string(*ell_hit));
            }
        }
        if (!ell_hit) {
            result.messages.push_back("seed " + std::to_string(seed) +
                                      ": ellipsoid never reached the ordering threshold");
        }
        result.ordering_holds = result.ordering_holds && ok;
    }

    write_summary(config.out_dir / "summary.csv", config, result.runs);
    {
        std::ofstream out(config.out_dir / "curves.csv");
        out << "seed,solver,config,k,test_loss\n";
        for (const auto& row : curve_rows) {
            out << row << '\n';
        }
    }

    derived["derived.N"] = std::to_string(params.iterations);
    derived["derived.iteration_budget"] = std::to_string(params.iteration_budget);
    derived["derived.r"] = std::to_string(params.batch_size);
    derived["derived.r_theory"] = std::to_string(theory.batch_size);
    derived["derived.beta_per_call"] = format_double(params.beta_per_call);
    derived["derived.delta"] = format_double(params.delta);
    derived["derived.sigma"] = format_double(lp.sigma);
    derived["derived.D"] = format_double(lp.diameter);
    derived["derived.B"] = format_double(lp.objective_range);
    derived["derived.rho"] = format_double(params.inner_radius);
    derived["derived.R"] = format_double(params.radius);
    derived["derived.sgd_iters"] = std::to_string(sgd_iters);
    derived["derived.sgd_step_unit"] = format_double(lp.diameter / lp.objective_range);
    derived["derived.train_rows"] = std::to_string(prep.train->rows());
    derived["derived.test_rows"] = std::to_string(prep.test->rows());
    derived["derived.f_star_train"] = format_double(result.f_star_train);
    derived["derived.f_star_test"] = format_double(result.f_star_test);
    derived["derived.erm_iterations"] = std::to_string(erm.iterations);
    derived["derived.ordering_holds"] = result.ordering_holds ? "true" : "false";

    std::ofstream manifest(config.out_dir / "manifest.txt");
    for (const auto& [key, value] : to_key_values(config)) {
        manifest << key << '=' << value << '\n';
    }
    for (const auto& [key, value] : derived) {
        manifest << key << '=' << value << '\n';
    }
    return result;
}

}  // namespace ellopt
