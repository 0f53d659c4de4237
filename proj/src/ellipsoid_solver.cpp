#include "ellopt/ellipsoid_solver.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ellopt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kRangeSamplePoints = 100;
constexpr double kRangeSafetyFactor = 2.0;
constexpr double kZeroGradientScale = 1e-12;

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string("solver config: ") + what +
                                    " must be positive and finite");
    }
}

}  // namespace

std::string to_string(CutKind kind) {
    switch (kind) {
        case CutKind::Subgradient:
            return "subgradient";
        case CutKind::Separation:
            return "separation";
        case CutKind::ZeroGradExit:
            return "zero-grad-exit";
        case CutKind::SgdStep:
            return "sgd-step";
        case CutKind::Terminal:
            return "terminal";
    }
    return "unknown";
}

std::string to_string(Termination reason) {
    switch (reason) {
        case Termination::Budget:
            return "budget";
        case Termination::ZeroGradient:
            return "zero-gradient";
        case Termination::Degenerate:
            return "degenerate";
        case Termination::Certified:
            return "certified";
    }
    return "unknown";
}

std::size_t SolverReport::oracle_calls() const {
    std::size_t total = evaluation_calls;
    for (const auto& rec : trace) {
        total += rec.samples;
    }
    return total;
}

std::size_t iteration_budget(std::size_t n, double diameter, double objective_range,
                             double inner_radius, double eps) {
    require_positive(diameter, "D");
    require_positive(objective_range, "B");
    require_positive(inner_radius, "rho");
    require_positive(eps, "eps");
    const double ratio = diameter * objective_range / (inner_radius * eps);
    if (ratio <= 1.0) {
        return 0;
    }
    const double nd = static_cast<double>(n);
    const double budget = std::ceil(2.0 * nd * nd * std::log(ratio));
    if (!(budget < 1e15)) {
        throw std::overflow_error("iteration_budget: budget is not representable");
    }
    return static_cast<std::size_t>(budget);
}

double theoretical_gap(std::size_t n, std::size_t iterations, double objective_range,
                       double radius, double inner_radius, double delta) {
    const double nd = static_cast<double>(n);
    return objective_range * radius / inner_radius *
               std::exp(-static_cast<double>(iterations) / (2.0 * nd * nd)) +
           delta;
}

double estimate_objective_range(const StochasticGradOracle& oracle, const FeasibleSet& set,
                                std::uint64_t seed, std::size_t batch_size, std::size_t workers) {
    const BatchSpec batch{oracle.sigma() == 0.0 ? 1 : batch_size, seed, workers};
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    auto visit = [&](const Vector& x, std::uint64_t key) {
        const double v = minibatch_value(oracle, x, batch, key, StreamPurpose::Evaluation);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    };
    visit(set.bounding_ball().center, 0);
    for (std::size_t i = 0; i < kRangeSamplePoints; ++i) {
        RandomStream stream({seed, StreamPurpose::Sampling, 1, static_cast<std::uint32_t>(i)});
        visit(set.sample_uniform(stream), i + 1);
    }
    const double spread = kRangeSafetyFactor * (hi - lo);
    // A constant objective still needs a positive B for the budget formula.
    return spread > 0.0 ? spread : 1.0;
}

ResolvedParameters resolve_parameters(const StochasticGradOracle& oracle, const FeasibleSet& set,
                                      const SolverConfig& config) {
    ResolvedParameters p;
    p.n = set.dimension();
    require_dimension(p.n, static_cast<Eigen::Index>(oracle.dimension()), "solve: oracle");
    if (p.n < 2) {
        throw std::invalid_argument("solve: the ellipsoid method needs dimension n >= 2");
    }
    require_positive(config.eps, "eps");
    if (!(config.beta > 0.0 && config.beta < 1.0)) {
        throw std::invalid_argument("solver config: beta must lie in (0, 1)");
    }
    p.eps = config.eps;
    p.beta = config.beta;
    p.sigma = config.sigma.value_or(oracle.sigma());
    if (!(p.sigma >= 0.0)) {
        throw std::invalid_argument("solver config: sigma must be nonnegative");
    }
    p.radius = config.radius.value_or(set.bounding_ball().radius);
    p.inner_radius = config.inner_radius.value_or(set.inner_radius());
    p.diameter = config.diameter.value_or(2.0 * p.radius);
    require_positive(p.radius, "R");
    require_positive(p.inner_radius, "rho");
    require_positive(p.diameter, "D");
    if (p.inner_radius > p.radius) {
        throw std::invalid_argument("solver config: rho must not exceed R");
    }
    p.objective_range = config.objective_range
                            ? *config.objective_range
                            : estimate_objective_range(oracle, set, config.seed, 256,
                                                       config.workers);
    require_positive(p.objective_range, "B");

    p.iteration_budget = iteration_budget(p.n, p.diameter, p.objective_range, p.inner_radius,
                                          p.eps);
    p.iterations = config.max_iterations.value_or(p.iteration_budget);
    // Half of β covers the N gradient batches, half the final evaluation.
    p.beta_per_call = p.beta / (2.0 * static_cast<double>(std::max<std::size_t>(p.iterations, 1)));
    p.batch_size = config.batch_size.value_or(
        required_batch_size(p.sigma, p.diameter, p.eps, p.beta_per_call));
    p.eval_batch_size = config.eval_batch_size.value_or(p.batch_size);
    if (p.batch_size == 0 || p.eval_batch_size == 0) {
        throw std::invalid_argument("solver config: batch sizes must be at least 1");
    }
    p.delta = 0.5 * p.eps;
    p.zero_gradient_tolerance = kZeroGradientScale * p.objective_range / p.diameter;
    return p;
}

Selection best_point_selection(const std::vector<IterationRecord>& trace,
                               const StochasticGradOracle& oracle, const BatchSpec& eval_batch,
                               bool reuse_trace_values) {
    Selection best;
    bool found = false;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& rec = trace[i];
        if (!rec.feasible) {
            continue;
        }
        double estimate = rec.f_estimate;
        if (!reuse_trace_values || !std::isfinite(estimate)) {
            // Same iteration key for every candidate: common random numbers.
            estimate = minibatch_value(oracle, rec.center, eval_batch, 0, StreamPurpose::Evaluation);
            ++best.evaluated;
        }
        best.estimates.emplace_back(i, estimate);
        if (!found || estimate < best.estimate) {
            found = true;
            best.estimate = estimate;
            best.point = rec.center;
            best.record = i;
        }
    }
    if (!found) {
        throw NoFeasiblePoint("best_point_selection: no feasible center was visited");
    }
    return best;
}

SolverReport solve(const StochasticGradOracle& oracle, const FeasibleSet& set,
                   const SolverConfig& config) {
    SolverReport report;
    report.params = resolve_parameters(oracle, set, config);
    const ResolvedParameters& p = report.params;
    report.batch_size = p.batch_size;

    const BatchSpec batch{p.batch_size, config.seed, config.workers};
    const BatchSpec eval_batch{p.eval_batch_size, config.seed, config.workers};
    const BoundingBall ball = config.radius
                                  ? BoundingBall(set.bounding_ball().center, *config.radius)
                                  : set.bounding_ball();
    Ellipsoid ellipsoid = Ellipsoid::from_ball(ball);
    report.trace.reserve(p.iterations + 1);

    const bool certify = config.stop_gap.has_value() && oracle.sigma() == 0.0;
    if (config.stop_gap && !(*config.stop_gap > 0.0)) {
        throw std::invalid_argument("solve: stop_gap must be positive");
    }
    double upper = std::numeric_limits<double>::infinity();
    double lower = -std::numeric_limits<double>::infinity();

    bool stopped = false;
    for (std::size_t k = 0; k < p.iterations; ++k) {
        IterationRecord rec;
        rec.index = k;
        rec.center = ellipsoid.center();
        rec.log_det = ellipsoid.log_det();
        rec.feasible = set.contains(rec.center);
        rec.f_estimate = kNaN;
        report.iterations = k + 1;
        if (rec.feasible) {
            GradSample g = minibatch_gradient(oracle, rec.center, batch, k);
            rec.samples = p.batch_size;
            rec.f_estimate = g.value.value_or(kNaN);
            rec.cut = CutKind::Subgradient;
            rec.cut_vector = std::move(g.gradient);
            if (rec.cut_vector.norm() <= p.zero_gradient_tolerance) {
                rec.cut = CutKind::ZeroGradExit;
                report.best_point = rec.center;
                report.best_estimate = rec.f_estimate;
                report.candidate_estimates = {{report.trace.size(), rec.f_estimate}};
                report.termination = Termination::ZeroGradient;
                report.trace.push_back(std::move(rec));
                return report;
            }
        } else {
            rec.cut = CutKind::Separation;
            rec.cut_vector = set.separation_hyperplane(rec.center);
        }
        const Vector w = rec.cut_vector;
        bool certified = false;
        if (certify && rec.cut == CutKind::Subgradient && std::isfinite(rec.f_estimate)) {
            // The minimizer stays in E_k, so f* ≥ f(c_k) + min_{x∈E_k} ⟨g, x − c_k⟩.
            const double width = (ellipsoid.cholesky_factor().transpose() * w).norm();
            lower = std::max(lower, rec.f_estimate - width);
            upper = std::min(upper, rec.f_estimate);
            report.lower_bound = lower;
            certified = upper - lower <= *config.stop_gap;
        }
        report.trace.push_back(std::move(rec));
        if (certified) {
            report.termination = Termination::Certified;
            stopped = true;
            break;
        }
        try {
            ellipsoid = ellipsoid_step(ellipsoid, w);
        } catch (const DegenerateEllipsoid&) {
            report.termination = Termination::Degenerate;
            stopped = true;
            break;
        }
    }
    if (!stopped) {
        IterationRecord last;
        last.index = p.iterations;
        last.center = ellipsoid.center();
        last.log_det = ellipsoid.log_det();
        last.feasible = set.contains(last.center);
        last.cut = CutKind::Terminal;
        last.f_estimate = kNaN;
        report.trace.push_back(std::move(last));
    }

    // Under certification the oracle is noise-free and the trace values exact.
    Selection chosen = best_point_selection(report.trace, oracle, eval_batch, certify);
    report.best_point = std::move(chosen.point);
    report.best_estimate = chosen.estimate;
    report.candidate_estimates = std::move(chosen.estimates);
    report.evaluation_calls = chosen.evaluated * p.eval_batch_size;
    return report;
}

}  // namespace ellopt
