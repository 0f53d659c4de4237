#include "doctest.h"

#include "ellopt/oracles.hpp"

#include <cmath>
#include <memory>
#include <numbers>

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

std::shared_ptr<const QuadraticFunction> quadratic(Vector minimizer) {
    return std::make_shared<QuadraticFunction>(std::move(minimizer));
}

}  // namespace

TEST_SUITE("oracles") {
    TEST_CASE("a batch of one is a single draw") {
        const GaussianNoiseOracle oracle(quadratic(vec({0.2, -0.1})), 1.0);
        const Vector x = vec({0.5, 0.5});
        const GradSample batch = minibatch_gradient(oracle, x, {1, 42, 1}, 3);
        RandomStream stream({42, StreamPurpose::Gradient, 3, 0});
        const GradSample single = oracle.draw(x, stream);
        CHECK(batch.gradient == single.gradient);
        CHECK(*batch.value == *single.value);
    }

    TEST_CASE("noiseless oracles average to the exact subgradient") {
        const auto f = quadratic(vec({0.2, -0.1}));
        const ExactOracle exact(f);
        const GaussianNoiseOracle silent(f, 0.0);
        const Vector x = vec({0.5, 0.5});
        for (std::size_t r : {1, 7, 300}) {
            CHECK((minibatch_gradient(exact, x, {r, 1, 1}, 0).gradient - f->subgradient(x)).norm() <
                  1e-15);
            const GradSample s = minibatch_gradient(silent, x, {r, 1, 1}, 0);
            CHECK((s.gradient - f->subgradient(x)).norm() < 1e-15);
            CHECK(*s.value == doctest::Approx(f->value(x)).epsilon(1e-15));
        }
    }

    TEST_CASE("minibatch means concentrate") {
        const auto f = quadratic(vec({0.0, 0.0}));
        const GaussianNoiseOracle oracle(f, 1.0);
        const Vector x = vec({0.3, -0.4});
        const Vector g = f->subgradient(x);
        int inside = 0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            const GradSample s = minibatch_gradient(oracle, x, {10000, seed, 1}, 0);
            inside += (s.gradient - g).norm() < 0.1 ? 1 : 0;
        }
        CHECK(inside >= 99);
    }

    TEST_CASE("results do not depend on the worker count") {
        const GaussianNoiseOracle oracle(quadratic(vec({0.1, 0.2, 0.3})), 2.0);
        const Vector x = vec({1, -1, 0.5});
        const GradSample one = minibatch_gradient(oracle, x, {5000, 9, 1}, 17);
        for (std::size_t workers : {2, 3, 4}) {
            const GradSample many = minibatch_gradient(oracle, x, {5000, 9, workers}, 17);
            CHECK(many.gradient == one.gradient);
            CHECK(*many.value == *one.value);
            CHECK(minibatch_value(oracle, x, {5000, 9, workers}, 2) ==
                  minibatch_value(oracle, x, {5000, 9, 1}, 2));
        }
    }

    TEST_CASE("minibatch means are unbiased") {
        const auto f = quadratic(vec({0.0, 0.0}));
        const double sigma = 1.0;
        const GaussianNoiseOracle oracle(f, sigma);
        const Vector x = vec({0.3, -0.4});
        const std::size_t r = 10;
        const int seeds = 10000;
        Vector total = Vector::Zero(2);
        for (int seed = 0; seed < seeds; ++seed) {
            total += minibatch_gradient(oracle, x, {r, static_cast<std::uint64_t>(seed), 1}, 0).gradient;
        }
        const double bias = (total / seeds - f->subgradient(x)).norm();
        CHECK(bias <= 3.0 * sigma / std::sqrt(static_cast<double>(seeds * r)));
    }

    TEST_CASE("gaussian noise meets the subgaussian moment condition") {
        for (std::size_t n : {2, 5, 10}) {
            const auto f = quadratic(Vector::Zero(static_cast<Eigen::Index>(n)));
            const double sigma = 1.7;
            const GaussianNoiseOracle oracle(f, sigma);
            const Vector x = Vector::Constant(static_cast<Eigen::Index>(n), 0.1);
            const Vector g = f->subgradient(x);
            const int draws = 100000;
            double total = 0.0;
            for (int i = 0; i < draws; ++i) {
                RandomStream s({3, StreamPurpose::Gradient, n, static_cast<std::uint32_t>(i)});
                const GradSample d = oracle.draw(x, s);
                total += std::exp((d.gradient - g).squaredNorm() / (sigma * sigma));
            }
            const double nd = static_cast<double>(n);
            const double closed_form = std::pow(1.0 - 1.0 / nd, -nd / 2.0);
            CHECK(total / draws <= std::numbers::e);
            CHECK(total / draws == doctest::Approx(closed_form).epsilon(0.1));
        }
    }

    TEST_CASE("concentration radius") {
        CHECK(concentration_radius(0.0, 5, 0.3) == 0.0);
        CHECK(concentration_radius(1.0, 1, std::exp(-1.0)) == doctest::Approx(3.863703).epsilon(1e-6));
        CHECK(concentration_radius(2.0, 4, std::exp(-1.0)) ==
              doctest::Approx(std::sqrt(2.0) + std::sqrt(6.0)).epsilon(1e-14));
        CHECK_THROWS_AS(concentration_radius(1.0, 1, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(concentration_radius(1.0, 1, 0.0), std::invalid_argument);
    }

    TEST_CASE("required batch size") {
        // Brute force: first r with radius·D ≤ ε/2, evaluated from the formula directly.
        auto brute = [](double sigma, double d, double eps, double beta) {
            const double c = std::sqrt(2.0) + std::sqrt(6.0 * std::log(1.0 / beta));
            std::size_t r = 1;
            while (c * sigma / std::sqrt(static_cast<double>(r)) * d > eps / 2) {
                ++r;
            }
            return r;
        };
        CHECK(brute(1.0, 1.0, 0.1, 1e-4) == 31316);
        CHECK(required_batch_size(1.0, 1.0, 0.1, 1e-4) == 31316);
        CHECK(required_batch_size(0.7, 2.5, 0.3, 0.01) == brute(0.7, 2.5, 0.3, 0.01));
        CHECK(required_batch_size(0.0, 1.0, 0.1, 1e-4) == 1);
        CHECK_THROWS_AS(required_batch_size(1.0, 1.0, 0.1, 1.5), std::invalid_argument);

        // ε^{-2} scaling: ⌈4x⌉ sits within 3 of 4⌈x⌉.
        for (double eps : {0.1, 0.037, 0.5}) {
            const auto r1 = required_batch_size(1.3, 2.0, eps, 0.01);
            const auto r2 = required_batch_size(1.3, 2.0, eps / 2, 0.01);
            CHECK(r2 <= 4 * r1);
            CHECK(r2 + 3 >= 4 * r1);
        }
    }

    TEST_CASE("delta-subgradient verification") {
        const auto f = quadratic(vec({0.0, 0.0}));
        const Box box = Box::cube(2, 1.0);
        const Vector x = vec({0.5, 0.0});
        const Vector g = f->subgradient(x);

        const DeltaCertificate exact = verify_delta_subgradient(*f, box, x, g, 0.0, 2000);
        CHECK(exact.passed);
        CHECK(exact.max_violation == 0.0);

        // ‖g̃ − g‖ = 0.1 is a 0.1·D subgradient.
        const Vector perturbed = g + vec({0.06, -0.08});
        CHECK(verify_delta_subgradient(*f, box, x, perturbed, 0.1 * box.diameter(), 2000).passed);

        const Vector spiked = g + vec({0.0, 1.0});
        const DeltaCertificate bad = verify_delta_subgradient(*f, box, x, spiked, 0.0, 2000);
        CHECK_FALSE(bad.passed);
        CHECK(bad.max_violation > 0.1);
        REQUIRE(bad.witness_direction.has_value());
        // Worst point lies in the spike's direction.
        CHECK((*bad.witness_direction)[1] > 0.0);
    }

    TEST_CASE("perturbations within eta pass at delta = eta·D") {
        const Box box = Box::cube(3, 1.0);
        for (std::uint64_t trial = 0; trial < 50; ++trial) {
            RandomStream s({21, StreamPurpose::Sampling, trial, 0});
            const Vector center = box.sample_uniform(s);
            const auto f = quadratic(center);
            const Vector x = box.sample_uniform(s);
            const double eta = 0.5 * s.uniform();
            const PerturbedOracle oracle(f, eta, trial);
            Vector g(3);
            RandomStream unused({0, StreamPurpose::Gradient, 0, 0});
            oracle.sample(x, unused, g);
            REQUIRE((g - f->subgradient(x)).norm() == doctest::Approx(eta).epsilon(1e-12));
            CHECK(verify_delta_subgradient(*f, box, x, g, eta * box.diameter(), 500, trial).passed);
        }
    }

    TEST_CASE("minibatch deviation exceedance stays below beta") {
        const auto f = quadratic(vec({0.0, 0.0}));
        const double sigma = 1.0;
        const GaussianNoiseOracle oracle(f, sigma);
        const Vector x = vec({0.1, 0.2});
        const Vector g = f->subgradient(x);
        const std::size_t r = 10;
        for (double beta : {0.1, 0.01}) {
            const double radius = concentration_radius(sigma, r, beta);
            int exceed = 0;
            const int trials = 2000;
            for (int t = 0; t < trials; ++t) {
                const GradSample s = minibatch_gradient(oracle, x, {r, static_cast<std::uint64_t>(t), 1}, 0);
                exceed += (s.gradient - g).norm() >= radius ? 1 : 0;
            }
            CHECK(static_cast<double>(exceed) / trials <= beta);
        }
    }

    TEST_CASE("union bound over N calls") {
        const auto f = quadratic(vec({0.0, 0.0}));
        const GaussianNoiseOracle oracle(f, 1.0);
        const std::size_t n_calls = 20;
        const double beta = 0.01;
        const std::size_t r = 10;
        const double radius = concentration_radius(1.0, r, beta);
        int all_inside = 0;
        const int meta = 500;
        for (int m = 0; m < meta; ++m) {
            bool ok = true;
            for (std::size_t i = 0; i < n_calls; ++i) {
                const Vector x = vec({0.1 * static_cast<double>(i), -0.05});
                const GradSample s = minibatch_gradient(oracle, x, {r, static_cast<std::uint64_t>(m), 1}, i);
                ok = ok && (s.gradient - f->subgradient(x)).norm() < radius;
            }
            all_inside += ok ? 1 : 0;
        }
        CHECK(static_cast<double>(all_inside) / meta >= 1.0 - beta * static_cast<double>(n_calls));
    }

    TEST_CASE("argument checks") {
        const ExactOracle oracle(quadratic(vec({0, 0})));
        CHECK_THROWS_AS(minibatch_gradient(oracle, vec({0, 0}), {0, 1, 1}, 0), std::invalid_argument);
        CHECK_THROWS_AS(minibatch_gradient(oracle, vec({0, 0, 0}), {1, 1, 1}, 0), std::invalid_argument);
        CHECK_THROWS_AS(GaussianNoiseOracle(quadratic(vec({0, 0})), -1.0), std::invalid_argument);
    }
}
