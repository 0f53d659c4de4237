#include "doctest.h"

#include "ellopt/problems.hpp"

#include <cmath>
#include <memory>
#include <numbers>
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

Vector normal_vector(RandomStream& s, std::size_t n, double scale) {
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v[i] = scale * s.normal();
    }
    return v;
}

// Direct, unguarded evaluation of −[y ln p + (1−y) ln(1−p)].
double naive_loss(const Vector& w, const Vector& x, double y) {
    const double p = 1.0 / (1.0 + std::exp(-w.dot(x)));
    return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

ParseError parse_failure(const std::string& text) {
    std::istringstream in(text);
    try {
        read_dataset_csv(in);
    } catch (const ParseError& e) {
        return e;
    }
    FAIL("expected a parse error");
    return ParseError("", 0);
}

}  // namespace

TEST_SUITE("problems") {
    TEST_CASE("logistic loss examples") {
        const LossGrad zero = logistic_value_grad(vec({0, 0, 0}), vec({1, -2, 3}), 1.0);
        CHECK(zero.loss == doctest::Approx(std::numbers::ln2).epsilon(1e-15));
        CHECK((zero.gradient - (-0.5) * vec({1, -2, 3})).norm() < 1e-15);

        const LossGrad sat = logistic_value_grad(vec({40, 0}), vec({1, 0}), 1.0);
        CHECK(sat.loss < 1e-15);
        CHECK(sat.gradient.norm() < 1e-15);
        const LossGrad far = logistic_value_grad(vec({1000, 0}), vec({1, 0}), 0.0);
        CHECK(far.loss == doctest::Approx(1000.0));
        CHECK(std::isfinite(far.gradient[0]));

        const LossGrad hand = logistic_value_grad(vec({1, 0}), vec({1, 1}), 0.0);
        CHECK(hand.loss == doctest::Approx(1.313262).epsilon(1e-6));
        CHECK(hand.gradient[0] == doctest::Approx(0.731059).epsilon(1e-6));
        CHECK(hand.gradient[1] == doctest::Approx(0.731059).epsilon(1e-6));
    }

    TEST_CASE("loss agrees with the direct formula where that is safe") {
        RandomStream s({1, StreamPurpose::Sampling, 0, 0});
        for (int t = 0; t < 200; ++t) {
            const Vector w = normal_vector(s, 4, 1.0);
            const Vector x = normal_vector(s, 4, 1.0);
            const double y = s.uniform() < 0.5 ? 0.0 : 1.0;
            CHECK(logistic_value_grad(w, x, y).loss == doctest::Approx(naive_loss(w, x, y)).epsilon(1e-12));
        }
    }

    TEST_CASE("gradient matches central differences") {
        RandomStream s({2, StreamPurpose::Sampling, 0, 0});
        const double h = 1e-6;
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            const Vector w = normal_vector(s, 5, 1.0);
            const Vector x = normal_vector(s, 5, 1.0);
            const double y = s.uniform() < 0.5 ? 0.0 : 1.0;
            const Vector g = logistic_value_grad(w, x, y).gradient;
            Vector fd(5);
            for (Eigen::Index i = 0; i < 5; ++i) {
                Vector wp = w;
                Vector wm = w;
                wp[i] += h;
                wm[i] -= h;
                fd[i] = (logistic_value_grad(wp, x, y).loss - logistic_value_grad(wm, x, y).loss) / (2 * h);
            }
            worst = std::max(worst, (g - fd).norm() / std::max(g.norm(), 1e-8));
        }
        CHECK(worst <= 1e-5);
    }

    TEST_CASE("loss is convex along random segments") {
        RandomStream s({3, StreamPurpose::Sampling, 0, 0});
        for (int t = 0; t < 500; ++t) {
            const Vector w1 = normal_vector(s, 3, 3.0);
            const Vector w2 = normal_vector(s, 3, 3.0);
            const Vector x = normal_vector(s, 3, 1.0);
            const double y = s.uniform() < 0.5 ? 0.0 : 1.0;
            const double lam = s.uniform();
            const double mid = logistic_value_grad(lam * w1 + (1 - lam) * w2, x, y).loss;
            const double chord = lam * logistic_value_grad(w1, x, y).loss +
                                 (1 - lam) * logistic_value_grad(w2, x, y).loss;
            CHECK(mid <= chord + 1e-12);
        }
    }

    TEST_CASE("sample oracle against the full objective") {
        auto data = std::make_shared<Dataset>(generate_synthetic(37, 4, 9));
        const LogisticObjective f(data);
        const Vector w = vec({0.3, -0.1, 0.7, 0.2});

        Vector mean = Vector::Zero(4);
        for (std::size_t i = 0; i < data->rows(); ++i) {
            const auto idx = static_cast<Eigen::Index>(i);
            mean += logistic_value_grad(w, data->features.row(idx).transpose(), data->labels[idx]).gradient;
        }
        mean /= static_cast<double>(data->rows());
        Vector grad;
        const double value = f.value_and_subgradient(w, grad);
        CHECK((grad - mean).norm() < 1e-14);
        CHECK(value == doctest::Approx(mean_logistic_loss(*data, w)).epsilon(1e-14));
        CHECK((f.subgradient(w) - grad).norm() == 0.0);

        const LogisticSampleOracle enumerate(data, 1.0, SamplingMode::Enumerate);
        const GradSample full = minibatch_gradient(enumerate, w, {data->rows(), 4, 1}, 0);
        CHECK((full.gradient - grad).norm() < 1e-14);
        REQUIRE(full.value);
        CHECK(*full.value == doctest::Approx(value).epsilon(1e-14));

        auto one = std::make_shared<Dataset>(data->subset({5}));
        const LogisticSampleOracle single(one, 1.0);
        const LossGrad expect = logistic_value_grad(w, one->features.row(0).transpose(), one->labels[0]);
        for (std::uint32_t l = 0; l < 5; ++l) {
            RandomStream s({l, StreamPurpose::Gradient, 0, l});
            Vector g;
            CHECK(single.sample(w, s, g) == expect.loss);
            CHECK(g == expect.gradient);
        }
        CHECK_THROWS_AS(LogisticSampleOracle(std::make_shared<Dataset>(), 1.0), std::invalid_argument);
    }

    TEST_CASE("synthetic data") {
        const Dataset a = generate_synthetic(500, 6, 42);
        const Dataset b = generate_synthetic(500, 6, 42);
        std::ostringstream sa;
        std::ostringstream sb;
        write_dataset_csv(sa, a);
        write_dataset_csv(sb, b);
        CHECK(sa.str() == sb.str());
        CHECK(a.features.col(5) == Vector::Ones(500));
        CHECK(a.dimension() == 6);
        CHECK(synthetic_true_weights(6, 42).norm() == doctest::Approx(2.0));

        const Dataset c = generate_synthetic(500, 6, 43);
        CHECK(c.features != a.features);

        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const Dataset big = generate_synthetic(10000, 5, seed);
            const double mean = big.labels.mean();
            CHECK(mean >= 0.05);
            CHECK(mean <= 0.95);
        }
        CHECK_THROWS_AS(generate_synthetic(10, 1, 0), std::invalid_argument);
    }

    TEST_CASE("csv round trip") {
        const Dataset a = generate_synthetic(50, 4, 8);
        std::stringstream io;
        write_dataset_csv(io, a);
        const Dataset back = read_dataset_csv(io, true);
        CHECK(back.features == a.features);
        CHECK(back.labels == a.labels);
        CHECK(back.feature_names == a.feature_names);

        std::istringstream plain("y,a,b\n1,0.5,2\n0,-1,3\n");
        const Dataset raw = read_dataset_csv(plain, false);
        CHECK(raw.dimension() == 2);
        CHECK_FALSE(raw.has_intercept);
        CHECK(raw.features(1, 0) == -1.0);
        CHECK(raw.labels[0] == 1.0);

        std::istringstream messy("\xEF\xBB\xBF" "a, y\r\n\r\n 1.5 ,1\r\n");
        const Dataset tidy = read_dataset_csv(messy, true);
        CHECK(tidy.rows() == 1);
        CHECK(tidy.features(0, 0) == 1.5);
        CHECK(tidy.features(0, 1) == 1.0);
    }

    TEST_CASE("csv errors carry line numbers") {
        CHECK(parse_failure("a,y\n1,0\n2,1\nfoo,1\n").line() == 4);
        CHECK(parse_failure("a,y\n1,0\n1,2\n").line() == 3);
        CHECK(parse_failure("a,b\n1,0\n").line() == 1);
        CHECK(parse_failure("a,y\n1,0,3\n").line() == 2);
        CHECK(parse_failure("a,y\n").line() >= 1);
        CHECK(parse_failure("").line() == 1);
        CHECK(std::string(parse_failure("a,y\n1,0\nnan,1\n").what()).rfind("line 3: ", 0) == 0);
    }

    TEST_CASE("train/test split") {
        const Dataset data = generate_synthetic(200, 3, 1);
        const auto [train, test] = split_train_test(data, 0.2, 7);
        CHECK(train.rows() == 160);
        CHECK(test.rows() == 40);
        const auto [train2, test2] = split_train_test(data, 0.2, 7);
        CHECK(test2.features == test.features);
        CHECK(train.labels.sum() + test.labels.sum() == data.labels.sum());
        CHECK_THROWS_AS(split_train_test(data, 0.0, 7), std::invalid_argument);
    }

    TEST_CASE("fitted sigma satisfies the moment bound on held-out rows") {
        const Dataset data = generate_synthetic(20000, 5, 3);
        const auto [train, test] = split_train_test(data, 0.5, 1);
        const double sigma = fit_sigma(train);
        CHECK(sigma > 0.0);
        CHECK(subgaussian_moment(test, mean_gradient_at_zero(train), sigma) <= std::numbers::e);
        CHECK(subgaussian_moment(train, mean_gradient_at_zero(train), sigma / 1.5) <= std::numbers::e + 1e-9);

        // Deviations are bounded by 2·max‖x‖, and sigma covers the 0.99 quantile.
        const Vector center = mean_gradient_at_zero(train);
        std::vector<double> dev;
        double xmax = 0.0;
        for (std::size_t i = 0; i < train.rows(); ++i) {
            const auto idx = static_cast<Eigen::Index>(i);
            const Vector x = train.features.row(idx).transpose();
            xmax = std::max(xmax, x.norm());
            dev.push_back(((0.5 - train.labels[idx]) * x - center).norm());
        }
        std::sort(dev.begin(), dev.end());
        CHECK(dev.back() <= 2.0 * xmax);
        CHECK(sigma >= dev[static_cast<std::size_t>(std::ceil(0.99 * dev.size())) - 1]);
    }

    TEST_CASE("problem construction") {
        auto data = std::make_shared<Dataset>(generate_synthetic(300, 3, 5));
        const LogisticProblem p = LogisticProblem::build(data);
        CHECK(p.diameter == 20.0);
        CHECK(p.set->bounding_ball().radius == 10.0);
        CHECK(p.sigma == doctest::Approx(fit_sigma(*data)));
        CHECK(p.objective_range > 0.0);
        CHECK(LogisticProblem::build(data, 10.0, 0, 0.25).oracle->sigma() == 0.25);
    }

    TEST_CASE("reference optimum on a separable pair sits on the boundary") {
        auto data = std::make_shared<Dataset>();
        data->has_intercept = false;
        data->features.resize(2, 2);
        data->features << 1.0, 0.5, -1.0, 0.2;
        data->labels = vec({1, 0});
        const auto f = std::make_shared<LogisticObjective>(data);
        const Ball ball(Vector::Zero(2), 3.0);
        const ErmResult erm = erm_reference(f, ball, 1e-6);
        CHECK(erm.point.norm() == doctest::Approx(3.0).epsilon(1e-4));

        double best = INFINITY;
        const int steps = 4000;
        for (int i = 0; i < steps; ++i) {
            const double t = 2.0 * std::numbers::pi * i / steps;
            best = std::min(best, f->value(3.0 * vec({std::cos(t), std::sin(t)})));
        }
        CHECK(erm.value <= best + 1e-4);
        CHECK(erm.value >= best - 1e-4);
        // Gradient points outward at the boundary optimum.
        CHECK(f->subgradient(erm.point).dot(erm.point) < 0.0);
    }

    TEST_CASE("reference optimum: interior stationarity, determinism, quadratic") {
        auto data = std::make_shared<Dataset>(generate_synthetic(100, 2, 4));
        const auto f = std::make_shared<LogisticObjective>(data);
        const Ball ball(Vector::Zero(2), 10.0);
        const ErmResult a = erm_reference(f, ball, 1e-8);
        const ErmResult b = erm_reference(f, ball, 1e-8);
        CHECK(a.point == b.point);
        CHECK(std::abs(a.value - b.value) <= 1e-7);
        if (a.point.norm() < 9.9) {
            CHECK(f->subgradient(a.point).norm() < 1e-3);
        }

        const Vector target = vec({0.25, -0.5, 0.125});
        const auto q = std::make_shared<QuadraticFunction>(target);
        const ErmResult r = erm_reference(q, Box::cube(3, 1.0), 1e-6, 4.0);
        CHECK(r.value <= 1e-6);
        CHECK((r.point - target).norm() <= 1e-3);
        CHECK_THROWS_AS(erm_reference(q, Box::cube(3, 1.0), 0.0), std::invalid_argument);
    }
}
