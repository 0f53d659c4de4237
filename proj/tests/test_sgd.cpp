#include "doctest.h"

#include "ellopt/sgd.hpp"
#include "ellopt/trace_csv.hpp"

#include <memory>
#include <sstream>

using namespace ellopt;

namespace {

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) {
        v[i++] = x;
    }
    return v;
}

}  // namespace

TEST_SUITE("sgd") {
    TEST_CASE("one hand-computed step") {
        const ExactOracle oracle(std::make_shared<QuadraticFunction>(vec({0, 0})));
        SgdConfig config;
        config.step = 0.4;
        config.iterations = 1;
        config.initial_point = vec({1, 1});
        config.report = ReportedPoint::Last;
        const SolverReport rep = sgd_run(oracle, Box::cube(2, 2.0), config);
        CHECK(rep.best_point[0] == doctest::Approx(0.2).epsilon(1e-15));
        CHECK(rep.best_point[1] == doctest::Approx(0.2).epsilon(1e-15));
        CHECK(rep.trace.size() == 2);
        CHECK(rep.trace[0].cut == CutKind::SgdStep);
    }

    TEST_CASE("zero step leaves the iterate alone") {
        const GaussianNoiseOracle oracle(std::make_shared<QuadraticFunction>(vec({0, 0})), 1.0);
        SgdConfig config;
        config.step = 0.0;
        config.iterations = 20;
        config.initial_point = vec({0.3, -0.2});
        const SolverReport rep = sgd_run(oracle, Box::cube(2, 1.0), config);
        for (const auto& rec : rep.trace) {
            CHECK(rec.center == vec({0.3, -0.2}));
        }
    }

    TEST_CASE("large steps are clamped to the box") {
        const ExactOracle oracle(std::make_shared<LinearFunction>(vec({-1, 0.5})));
        SgdConfig config;
        config.step = 50.0;
        config.iterations = 3;
        config.report = ReportedPoint::Last;
        const SolverReport rep = sgd_run(oracle, Box::cube(2, 1.0), config);
        CHECK(rep.best_point == vec({1, -1}));
    }

    TEST_CASE("noiseless descent on a smooth quadratic is monotone") {
        const auto f = std::make_shared<QuadraticFunction>(vec({0.4, -0.3, 0.1}), 2.0);
        const ExactOracle oracle(f);
        SgdConfig config;
        config.step = 0.2;  // L = 4
        config.iterations = 60;
        config.initial_point = vec({-1, 1, 1});
        const SolverReport rep = sgd_run(oracle, Box::cube(3, 1.0), config);
        for (std::size_t k = 1; k < rep.trace.size(); ++k) {
            CHECK(f->value(rep.trace[k].center) <= f->value(rep.trace[k - 1].center));
        }
        CHECK(f->value(rep.best_point) < 1e-10);
    }

    TEST_CASE("replay, shared stream keys and trace schema") {
        const auto f = std::make_shared<QuadraticFunction>(vec({0.2, 0.1}));
        const GaussianNoiseOracle oracle(f, 1.0);
        SgdConfig config;
        config.step = 0.05;
        config.schedule = StepSchedule::InverseSqrt;
        config.batch_size = 8;
        config.iterations = 40;
        config.seed = 5;
        const SolverReport a = sgd_run(oracle, Box::cube(2, 1.0), config);
        config.workers = 4;
        const SolverReport b = sgd_run(oracle, Box::cube(2, 1.0), config);
        std::ostringstream ta;
        std::ostringstream tb;
        write_trace_csv(ta, a.trace);
        write_trace_csv(tb, b.trace);
        CHECK(ta.str() == tb.str());
        CHECK(ta.str().rfind("k,feasible,cut_kind,f_estimate,logdet_H,c0,c1\n0,1,sgd-step,", 0) == 0);
        // Step 3 draws exactly the batch the ellipsoid solver would draw at iteration 3.
        const GradSample g = minibatch_gradient(oracle, a.trace[3].center, {8, 5, 1}, 3);
        CHECK(a.trace[3].cut_vector == g.gradient);
        CHECK(a.oracle_calls() == 40 * 8);
    }

    TEST_CASE("reported point options") {
        const auto f = std::make_shared<QuadraticFunction>(vec({0.5, 0.5}));
        const ExactOracle oracle(f);
        SgdConfig config;
        config.step = 0.1;
        config.iterations = 10;
        config.initial_point = vec({-1, -1});
        config.report = ReportedPoint::Average;
        const SolverReport avg = sgd_run(oracle, Box::cube(2, 1.0), config);
        Vector mean = Vector::Zero(2);
        for (const auto& rec : avg.trace) {
            mean += rec.center;
        }
        mean /= static_cast<double>(avg.trace.size());
        CHECK((avg.best_point - mean).norm() < 1e-15);
        config.report = ReportedPoint::Best;
        const SolverReport best = sgd_run(oracle, Box::cube(2, 1.0), config);
        CHECK(best.best_estimate == doctest::Approx(f->value(best.trace[9].center)));
    }

    TEST_CASE("divergence guard and argument checks") {
        // A set claiming a tiny bounding ball makes the envelope easy to leave.
        class Loose final : public FeasibleSet {
          public:
            std::size_t dimension() const override { return 2; }
            BoundingBall bounding_ball() const override { return {Vector::Zero(2), 1e-3}; }
            double inner_radius() const override { return 1e-3; }
            double diameter() const override { return 2e-3; }
            bool contains(const Vector&) const override { return true; }
            Vector separation_hyperplane(const Vector&) const override { return Vector::Ones(2); }
            Vector project(const Vector& x) const override { return x; }
            Vector sample_uniform(RandomStream&) const override { return Vector::Zero(2); }
            Vector support_point(const Vector&) const override { return Vector::Zero(2); }
        } loose;
        const ExactOracle oracle(std::make_shared<LinearFunction>(vec({1, 0})));
        SgdConfig config;
        config.step = 10.0;
        config.iterations = 5;
        CHECK_THROWS_AS(sgd_run(oracle, loose, config), Diverged);
        config.step = -1.0;
        CHECK_THROWS_AS(sgd_run(oracle, Box::cube(2, 1.0), config), std::invalid_argument);
        config.step = 0.1;
        config.batch_size = 0;
        CHECK_THROWS_AS(sgd_run(oracle, Box::cube(2, 1.0), config), std::invalid_argument);
    }
}
