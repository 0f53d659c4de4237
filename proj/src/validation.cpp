#include "ellopt/validation.hpp"

#include "ellopt/ellipsoid_solver.hpp"
#include "ellopt/geometry.hpp"
#include "ellopt/oracles.hpp"
#include "ellopt/problems.hpp"
#include "ellopt/random.hpp"
#include "ellopt/trace_csv.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace ellopt {

namespace {

class Stopwatch {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string num(double v) { return format_double(v); }
std::string num(std::size_t v) { return std::to_string(v); }

Vector normal_vector(RandomStream& s, std::size_t n) {
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v[i] = s.normal();
    }
    return v;
}

// Well-conditioned random ellipsoid: H = AAᵀ/n + I/2.
Ellipsoid random_ellipsoid(std::size_t n, RandomStream& s) {
    const auto k = static_cast<Eigen::Index>(n);
    Matrix a(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            a(i, j) = s.normal();
        }
    }
    Matrix h = a * a.transpose() / static_cast<double>(n) + 0.5 * Matrix::Identity(k, k);
    return Ellipsoid(normal_vector(s, n), SymmetricMatrix(h));
}

// ln|det| by partial-pivot LU.
double lu_log_abs_det(const Matrix& m) {
    const Eigen::PartialPivLU<Matrix> lu(m);
    const Matrix& u = lu.matrixLU();
    double total = 0.0;
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        total += std::log(std::abs(u(i, i)));
    }
    return total;
}

double vertex_range(const Box& box, const Vector& target) {
    double worst = 0.0;
    for (const Vector& v : box.extreme_points()) {
        worst = std::max(worst, (v - target).squaredNorm());
    }
    return worst;
}

SuiteResult finish(SuiteResult r, const Stopwatch& clock) {
    r.seconds = clock.seconds();
    return r;
}

}  // namespace

SuiteResult validate_volume(const VolumeParams& p) {
    const Stopwatch clock;
    RandomStream s({p.seed, StreamPurpose::Sampling, 0, 0});
    double worst = 0.0;
    std::size_t worst_n = 0;
    const std::size_t span = p.max_n - p.min_n + 1;
    for (std::size_t step = 0; step < p.steps; ++step) {
        const std::size_t n = p.min_n + s.uniform_index(span);
        const double nd = static_cast<double>(n);
        const double expected = std::pow(nd * nd / (nd * nd - 1.0), nd) * (nd - 1.0) / (nd + 1.0);
        const Ellipsoid e = random_ellipsoid(n, s);
        const Ellipsoid next = ellipsoid_step(e, normal_vector(s, n));
        const double ratio =
            std::exp(lu_log_abs_det(next.shape().matrix()) - lu_log_abs_det(e.shape().matrix()));
        const double err = std::abs(ratio - expected) / expected;
        if (err > worst) {
            worst = err;
            worst_n = n;
        }
    }
    SuiteResult r;
    r.suite = "volume";
    r.passed = worst <= p.tolerance;
    r.summary = "max relative error " + num(worst) + " vs " + num(p.tolerance);
    r.stats = {{"steps", num(p.steps)},
               {"dimensions", num(p.min_n) + ".." + num(p.max_n)},
               {"max_relative_error", num(worst)},
               {"worst_n", num(worst_n)},
               {"threshold", num(p.tolerance)}};
    return finish(r, clock);
}

SuiteResult validate_containment(const ContainmentParams& p) {
    const Stopwatch clock;
    RandomStream s({p.seed, StreamPurpose::Sampling, 0, 0});
    std::size_t violations = 0;
    std::size_t checked = 0;
    double worst = 0.0;
    for (std::size_t step = 0; step < p.steps; ++step) {
        const std::size_t n = 2 + s.uniform_index(p.max_n - 1);
        const Ellipsoid e = random_ellipsoid(n, s);
        const Vector w = normal_vector(s, n);
        const Ellipsoid next = ellipsoid_step(e, w);
        const Eigen::LLT<Matrix> llt(next.shape().matrix());
        std::size_t kept = 0;
        while (kept < p.points) {
            Vector u = normal_vector(s, n);
            // Alternate boundary points (the tight case) and interior points.
            const double radius = kept % 2 == 0 ? 1.0 : std::pow(s.uniform(), 1.0 / static_cast<double>(n));
            u *= radius / u.norm();
            const Vector x = e.center() + e.cholesky_factor() * u;
            if (w.dot(x - e.center()) > 0.0) {
                continue;
            }
            ++kept;
            const Vector d = x - next.center();
            const double q = d.dot(llt.solve(d));
            worst = std::max(worst, q - 1.0);
            violations += q > 1.0 + p.tolerance ? 1 : 0;
        }
        checked += kept;
    }
    SuiteResult r;
    r.suite = "containment";
    r.passed = violations == 0;
    r.summary = num(violations) + " violations in " + num(checked) + " points";
    r.stats = {{"steps", num(p.steps)},
               {"points", num(checked)},
               {"violations", num(violations)},
               {"max_excess", num(worst)},
               {"threshold", num(p.tolerance)}};
    return finish(r, clock);
}

SuiteResult validate_concentration(const ConcentrationParams& p) {
    const Stopwatch clock;
    const auto n = static_cast<Eigen::Index>(p.n);
    const auto f = std::make_shared<QuadraticFunction>(Vector::Zero(n));
    const GaussianNoiseOracle oracle(f, p.sigma);
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x[i] = 0.1 * static_cast<double>(i + 1);
    }
    const Vector g = f->subgradient(x);
    SuiteResult r;
    r.suite = "concentration";
    r.passed = true;
    double worst_margin = -1.0;
    for (std::size_t batch : p.batch_sizes) {
        std::vector<double> dist(p.trials);
        for (std::size_t t = 0; t < p.trials; ++t) {
            const GradSample m = minibatch_gradient(oracle, x, {batch, p.seed, 1}, t);
            dist[t] = (m.gradient - g).norm();
        }
        for (double beta : p.betas) {
            const double radius = concentration_radius(p.sigma, batch, beta);
            std::size_t exceed = 0;
            for (double d : dist) {
                exceed += d >= radius ? 1 : 0;
            }
            const double freq = static_cast<double>(exceed) / static_cast<double>(p.trials);
            r.passed = r.passed && freq <= beta;
            worst_margin = std::max(worst_margin, freq - beta);
            r.stats.emplace_back("r=" + num(batch) + ",beta=" + num(beta),
                                 "exceedance " + num(freq) + " radius " + num(radius));
        }
    }
    r.summary = "max exceedance minus beta " + num(worst_margin);
    r.stats.emplace_back("trials_per_cell", num(p.trials));
    return finish(r, clock);
}

SuiteResult validate_delta(const DeltaParams& p) {
    const Stopwatch clock;
    std::size_t failures = 0;
    double worst = 0.0;
    for (std::size_t t = 0; t < p.trials; ++t) {
        RandomStream s({p.seed, StreamPurpose::Perturbation, t, 0});
        const std::size_t n = 2 + s.uniform_index(4);
        const Box box = Box::cube(n, 0.5 + s.uniform());
        std::shared_ptr<const DeterministicFunction> f;
        if (t % 2 == 0) {
            f = std::make_shared<QuadraticFunction>(box.sample_uniform(s), 0.5 + s.uniform());
        } else {
            f = std::make_shared<LinearFunction>(normal_vector(s, n));
        }
        const Vector x = box.sample_uniform(s);
        const double eta = s.uniform();
        Vector e = normal_vector(s, n);
        e *= eta / e.norm();
        const DeltaCertificate cert = verify_delta_subgradient(*f, box, x, f->subgradient(x) + e,
                                                               eta * box.diameter(), p.points, t);
        failures += cert.passed ? 0 : 1;
        worst = std::max(worst, cert.max_violation);
    }
    SuiteResult r;
    r.suite = "delta";
    r.passed = failures == 0;
    r.summary = num(failures) + " failures in " + num(p.trials) + " perturbations";
    r.stats = {{"trials", num(p.trials)},
               {"points_per_trial", num(p.points)},
               {"failures", num(failures)},
               {"max_violation", num(worst)}};
    return finish(r, clock);
}

SuiteResult validate_theorem1(const Theorem1Params& p) {
    const Stopwatch clock;
    double worst = -INFINITY;
    std::size_t runs = 0;
    std::size_t failures = 0;
    for (std::size_t n = p.min_n; n <= p.max_n; ++n) {
        const Box box = Box::cube(n, 1.0);
        const double radius = box.bounding_ball().radius;
        const double rho = box.inner_radius();
        const double threshold = 2.0 * static_cast<double>(n * n) * std::log(radius / rho);
        for (int kind = 0; kind < 2; ++kind) {
            for (std::size_t inst = 0; inst < p.instances; ++inst) {
                RandomStream s({p.seed, StreamPurpose::Sampling, inst, static_cast<std::uint32_t>(n * 2 + kind)});
                std::shared_ptr<const DeterministicFunction> f;
                double f_star = 0.0;
                double range = 0.0;
                if (kind == 0) {
                    const Vector target = box.sample_uniform(s);
                    f = std::make_shared<QuadraticFunction>(target);
                    range = vertex_range(box, target);
                } else {
                    const Vector cost = normal_vector(s, n);
                    f = std::make_shared<LinearFunction>(cost);
                    f_star = -cost.lpNorm<1>();
                    range = 2.0 * cost.lpNorm<1>();
                }
                const double eta = p.max_eta * s.uniform();
                const PerturbedOracle oracle(f, eta, p.seed * 1000 + inst);
                for (std::size_t big_n : p.iterations) {
                    if (static_cast<double>(big_n) < threshold) {
                        continue;
                    }
                    SolverConfig config;
                    config.objective_range = range;
                    config.max_iterations = big_n;
                    config.sigma = 0.0;
                    const SolverReport rep = solve(oracle, box, config);
                    const double gap = f->value(rep.best_point) - f_star;
                    const double bound =
                        theoretical_gap(n, big_n, range, radius, rho, eta * box.diameter());
                    worst = std::max(worst, gap - bound);
                    failures += gap <= bound ? 0 : 1;
                    ++runs;
                }
            }
        }
    }
    SuiteResult r;
    r.suite = "theorem1";
    r.passed = failures == 0 && runs > 0;
    r.summary = "max gap minus bound " + num(worst) + " over " + num(runs) + " runs";
    r.stats = {{"runs", num(runs)}, {"failures", num(failures)}, {"max_gap_minus_bound", num(worst)}};
    return finish(r, clock);
}

SuiteResult validate_theorem2(const Theorem2Params& p) {
    const Stopwatch clock;
    const Box box = Box::cube(p.n, 1.0);
    std::size_t failures = 0;
    std::size_t batch = 0;
    std::size_t iterations = 0;
    double worst_gap = 0.0;
    for (std::size_t run = 0; run < p.runs; ++run) {
        RandomStream s({p.seed, StreamPurpose::Sampling, run, 0});
        const Vector target = box.sample_uniform(s);
        const auto f = std::make_shared<QuadraticFunction>(target);
        const GaussianNoiseOracle oracle(f, p.sigma);
        SolverConfig config;
        config.eps = p.eps;
        config.beta = p.beta;
        config.objective_range = vertex_range(box, target);
        config.seed = p.seed * 100000 + run;
        config.workers = p.workers;
        const SolverReport rep = solve(oracle, box, config);
        const double gap = f->value(rep.best_point);
        worst_gap = std::max(worst_gap, gap);
        failures += gap > p.eps ? 1 : 0;
        batch = std::max(batch, rep.batch_size);
        iterations = std::max(iterations, rep.iterations);
    }
    const double freq = static_cast<double>(failures) / static_cast<double>(p.runs);
    SuiteResult r;
    r.suite = "theorem2";
    r.passed = freq <= p.beta;
    r.summary = "failure frequency " + num(freq) + " vs beta " + num(p.beta);
    r.stats = {{"runs", num(p.runs)},
               {"eps", num(p.eps)},
               {"sigma", num(p.sigma)},
               {"batch_size", num(batch)},
               {"iterations", num(iterations)},
               {"failures", num(failures)},
               {"failure_frequency", num(freq)},
               {"max_gap", num(worst_gap)}};
    return finish(r, clock);
}

SuiteResult validate_budget(const BudgetParams& p) {
    const Stopwatch clock;
    SuiteResult r;
    r.suite = "budget";
    r.passed = true;
    for (std::size_t n : p.dims) {
        const auto base = iteration_budget(n, p.diameter, p.objective_range, p.inner_radius, p.eps);
        const auto doubled =
            iteration_budget(2 * n, p.diameter, p.objective_range, p.inner_radius, p.eps);
        const double ratio = static_cast<double>(doubled) / static_cast<double>(base);
        r.passed = r.passed && ratio >= p.low && ratio <= p.high;
        r.stats.emplace_back("n=" + num(n), num(base) + " -> " + num(doubled) + " ratio " + num(ratio));
    }
    r.summary = r.passed ? "all ratios in range" : "ratio out of range";
    return finish(r, clock);
}

SuiteResult validate_gradcheck(const GradcheckParams& p) {
    const Stopwatch clock;
    RandomStream s({p.seed, StreamPurpose::Sampling, 0, 0});
    double worst = 0.0;
    for (std::size_t t = 0; t < p.points; ++t) {
        const Vector w = normal_vector(s, p.n);
        const Vector x = normal_vector(s, p.n);
        const double y = s.uniform() < 0.5 ? 0.0 : 1.0;
        const Vector g = logistic_value_grad(w, x, y).gradient;
        Vector fd(g.size());
        for (Eigen::Index i = 0; i < g.size(); ++i) {
            Vector up = w;
            Vector down = w;
            up[i] += p.step;
            down[i] -= p.step;
            fd[i] = (logistic_value_grad(up, x, y).loss - logistic_value_grad(down, x, y).loss) /
                    (2.0 * p.step);
        }
        worst = std::max(worst, (g - fd).norm() / std::max(g.norm(), 1e-12));
    }
    SuiteResult r;
    r.suite = "gradcheck";
    r.passed = worst <= p.tolerance;
    r.summary = "max relative error " + num(worst) + " vs " + num(p.tolerance);
    r.stats = {{"points", num(p.points)}, {"max_relative_error", num(worst)}};
    return finish(r, clock);
}

const std::vector<std::string>& validation_suites() {
    static const std::vector<std::string> names{"volume",   "containment", "concentration",
                                                "delta",    "theorem1",    "theorem2",
                                                "budget",   "gradcheck"};
    return names;
}

SuiteResult run_validation(const std::string& suite, std::size_t workers) {
    if (suite == "volume") return validate_volume();
    if (suite == "containment") return validate_containment();
    if (suite == "concentration") return validate_concentration();
    if (suite == "delta") return validate_delta();
    if (suite == "theorem1") return validate_theorem1();
    if (suite == "theorem2") {
        Theorem2Params p;
        p.workers = workers;
        return validate_theorem2(p);
    }
    if (suite == "budget") return validate_budget();
    if (suite == "gradcheck") return validate_gradcheck();
    throw std::invalid_argument("unknown validation suite '" + suite + "'");
}

void write_validation_report(const std::filesystem::path& path, const SuiteResult& result) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << "suite=" << result.suite << '\n'
        << "passed=" << (result.passed ? "true" : "false") << '\n'
        << "summary=" << result.summary << '\n';
    for (const auto& [key, value] : result.stats) {
        out << key << '=' << value << '\n';
    }
    out << "seconds=" << format_double(result.seconds) << '\n';
}

}  // namespace ellopt
