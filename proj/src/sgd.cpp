#include "ellopt/sgd.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ellopt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kDivergenceFactor = 1e3;

double step_at(const SgdConfig& config, std::size_t k) {
    if (config.schedule == StepSchedule::InverseSqrt) {
        return config.step / std::sqrt(static_cast<double>(k + 1));
    }
    return config.step;
}

}  // namespace

SolverReport sgd_run(const StochasticGradOracle& oracle, const FeasibleSet& set,
                     const SgdConfig& config) {
    const std::size_t n = set.dimension();
    require_dimension(n, static_cast<Eigen::Index>(oracle.dimension()), "sgd_run: oracle");
    if (!(config.step >= 0.0) || !std::isfinite(config.step)) {
        throw std::invalid_argument("sgd_run: step size must be finite and nonnegative");
    }
    if (config.batch_size == 0) {
        throw std::invalid_argument("sgd_run: batch size must be at least 1");
    }
    const BoundingBall ball = set.bounding_ball();
    Vector theta = config.initial_point.value_or(ball.center);
    require_dimension(n, theta.size(), "sgd_run: initial point");

    const BatchSpec batch{config.batch_size, config.seed, config.workers};
    SolverReport report;
    report.batch_size = config.batch_size;
    report.params.n = n;
    report.params.radius = ball.radius;
    report.params.iterations = config.iterations;
    report.params.batch_size = config.batch_size;
    report.params.eval_batch_size = config.batch_size;
    report.trace.reserve(config.iterations + 1);

    Vector sum = Vector::Zero(theta.size());
    for (std::size_t k = 0; k < config.iterations; ++k) {
        IterationRecord rec;
        rec.index = k;
        rec.center = theta;
        rec.feasible = set.contains(theta);
        rec.cut = CutKind::SgdStep;
        rec.log_det = kNaN;
        GradSample g = minibatch_gradient(oracle, theta, batch, k);
        rec.samples = config.batch_size;
        rec.f_estimate = g.value.value_or(kNaN);
        sum += theta;
        theta = set.project(theta - step_at(config, k) * g.gradient);
        rec.cut_vector = std::move(g.gradient);
        report.trace.push_back(std::move(rec));
        report.iterations = k + 1;
        if (!theta.allFinite() || (theta - ball.center).norm() > kDivergenceFactor * ball.radius) {
            throw Diverged("sgd_run: iterate left the 1e3·R envelope at iteration " +
                           std::to_string(k + 1));
        }
    }
    IterationRecord last;
    last.index = config.iterations;
    last.center = theta;
    last.feasible = set.contains(theta);
    last.cut = CutKind::Terminal;
    last.f_estimate = kNaN;
    last.log_det = kNaN;
    report.trace.push_back(last);
    sum += theta;

    auto evaluate = [&](const Vector& x) {
        const double v = minibatch_value(oracle, x, batch, 0, StreamPurpose::Evaluation);
        report.evaluation_calls += config.batch_size;
        return v;
    };

    switch (config.report) {
        case ReportedPoint::Best: {
            bool found = false;
            for (std::size_t i = 0; i < report.trace.size(); ++i) {
                const auto& rec = report.trace[i];
                if (!rec.feasible || std::isnan(rec.f_estimate)) {
                    continue;
                }
                report.candidate_estimates.emplace_back(i, rec.f_estimate);
                if (!found || rec.f_estimate < report.best_estimate) {
                    found = true;
                    report.best_estimate = rec.f_estimate;
                    report.best_point = rec.center;
                }
            }
            if (!found) {
                report.best_point = theta;
                report.best_estimate = evaluate(theta);
            }
            break;
        }
        case ReportedPoint::Last:
            report.best_point = theta;
            report.best_estimate = evaluate(theta);
            break;
        case ReportedPoint::Average:
            report.best_point = sum / static_cast<double>(report.trace.size());
            report.best_estimate = evaluate(report.best_point);
            break;
    }
    return report;
}

}  // namespace ellopt
