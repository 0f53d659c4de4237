#include "ellopt/oracles.hpp"

#include "ellopt/worker_pool.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ellopt {

namespace {

// Leaves of the reduction tree; the tree shape depends on r only.
constexpr std::size_t kLeafSize = 64;
constexpr double kCertificateSlack = 1e-9;

using Range = std::pair<std::size_t, std::size_t>;

void collect_leaves(std::size_t lo, std::size_t hi, std::vector<Range>& leaves) {
    if (hi - lo <= kLeafSize) {
        leaves.emplace_back(lo, hi);
        return;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    collect_leaves(lo, mid, leaves);
    collect_leaves(mid, hi, leaves);
}

struct Partial {
    Vector grad;
    double value = 0.0;
};

Partial combine(std::size_t lo, std::size_t hi, std::size_t& cursor, std::vector<Partial>& leaves) {
    if (hi - lo <= kLeafSize) {
        return std::move(leaves[cursor++]);
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    Partial left = combine(lo, mid, cursor, leaves);
    Partial right = combine(mid, hi, cursor, leaves);
    left.grad += right.grad;
    left.value += right.value;
    return left;
}

template <typename LeafFn>
Partial reduce_batch(const BatchSpec& batch, LeafFn&& leaf_fn) {
    if (batch.r == 0) {
        throw std::invalid_argument("minibatch: batch size must be at least 1");
    }
    if (batch.r > std::numeric_limits<std::uint32_t>::max()) {
        throw std::invalid_argument("minibatch: batch size exceeds the stream index range");
    }
    std::vector<Range> ranges;
    collect_leaves(0, batch.r, ranges);
    std::vector<Partial> partials(ranges.size());
    auto task = [&](std::size_t i) { partials[i] = leaf_fn(ranges[i].first, ranges[i].second); };
    if (batch.workers > 1 && ranges.size() > 1) {
        WorkerPool::shared(batch.workers).run(ranges.size(), task);
    } else {
        for (std::size_t i = 0; i < ranges.size(); ++i) {
            task(i);
        }
    }
    std::size_t cursor = 0;
    return combine(0, batch.r, cursor, partials);
}

constexpr std::size_t kPrefetchDistance = 8;

StreamKey draw_key(const BatchSpec& batch, StreamPurpose purpose, std::uint64_t iteration,
                   std::size_t l) {
    return {batch.seed, purpose, iteration, static_cast<std::uint32_t>(l)};
}

void check_beta(double beta, const char* what) {
    if (!(beta > 0.0 && beta < 1.0)) {
        throw std::invalid_argument(std::string(what) + ": beta must lie in (0, 1)");
    }
}

}  // namespace

double StochasticGradOracle::sample_value(const Vector& x, RandomStream& stream) const {
    Vector grad(static_cast<Eigen::Index>(dimension()));
    return sample(x, stream, grad);
}

GradSample StochasticGradOracle::draw(const Vector& x, RandomStream& stream) const {
    GradSample out{Vector(static_cast<Eigen::Index>(dimension())), std::nullopt};
    const double v = sample(x, stream, out.gradient);
    if (provides_value()) {
        out.value = v;
    }
    return out;
}

QuadraticFunction::QuadraticFunction(Vector minimizer, double scale)
    : minimizer_(std::move(minimizer)), scale_(scale) {
    if (!(scale_ > 0.0)) {
        throw std::invalid_argument("QuadraticFunction: scale must be positive");
    }
}

double QuadraticFunction::value(const Vector& x) const {
    require_dimension(dimension(), x.size(), "QuadraticFunction::value");
    return scale_ * (x - minimizer_).squaredNorm();
}

Vector QuadraticFunction::subgradient(const Vector& x) const {
    require_dimension(dimension(), x.size(), "QuadraticFunction::subgradient");
    return 2.0 * scale_ * (x - minimizer_);
}

LinearFunction::LinearFunction(Vector cost) : cost_(std::move(cost)) {}

ExactOracle::ExactOracle(std::shared_ptr<const DeterministicFunction> f) : f_(std::move(f)) {
    if (!f_) {
        throw std::invalid_argument("ExactOracle: null function");
    }
}

double ExactOracle::sample(const Vector& x, RandomStream&, Vector& grad) const {
    return f_->value_and_subgradient(x, grad);
}

double ExactOracle::sample_value(const Vector& x, RandomStream&) const { return f_->value(x); }

GaussianNoiseOracle::GaussianNoiseOracle(std::shared_ptr<const DeterministicFunction> f,
                                         double sigma, std::optional<Vector> anchor)
    : f_(std::move(f)), sigma_(sigma) {
    if (!f_) {
        throw std::invalid_argument("GaussianNoiseOracle: null function");
    }
    if (!(sigma_ >= 0.0) || !std::isfinite(sigma_)) {
        throw std::invalid_argument("GaussianNoiseOracle: sigma must be finite and nonnegative");
    }
    const auto n = static_cast<double>(f_->dimension());
    coordinate_stddev_ = sigma_ / std::sqrt(2.0 * n);
    anchor_ = anchor ? std::move(*anchor) : Vector::Zero(static_cast<Eigen::Index>(f_->dimension()));
    require_dimension(f_->dimension(), anchor_.size(), "GaussianNoiseOracle anchor");
}

double GaussianNoiseOracle::sample(const Vector& x, RandomStream& stream, Vector& grad) const {
    grad = f_->subgradient(x);
    double value = f_->value(x);
    for (Eigen::Index i = 0; i < grad.size(); ++i) {
        const double noise = coordinate_stddev_ * stream.normal();
        grad[i] += noise;
        value += noise * (x[i] - anchor_[i]);
    }
    return value;
}

PerturbedOracle::PerturbedOracle(std::shared_ptr<const DeterministicFunction> f, double eta,
                                 std::uint64_t seed)
    : f_(std::move(f)), eta_(eta), seed_(seed) {
    if (!f_) {
        throw std::invalid_argument("PerturbedOracle: null function");
    }
    if (!(eta_ >= 0.0)) {
        throw std::invalid_argument("PerturbedOracle: eta must be nonnegative");
    }
}

Vector PerturbedOracle::perturbation(const Vector& x) const {
    std::uint64_t h = splitmix64(seed_);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        h = splitmix64(h ^ std::bit_cast<std::uint64_t>(x[i]));
    }
    RandomStream stream({h, StreamPurpose::Perturbation, 0, 0});
    Vector e(x.size());
    double norm = 0.0;
    do {
        for (Eigen::Index i = 0; i < e.size(); ++i) {
            e[i] = stream.normal();
        }
        norm = e.norm();
    } while (norm == 0.0);
    return e * (eta_ / norm);
}

double PerturbedOracle::sample(const Vector& x, RandomStream&, Vector& grad) const {
    grad = f_->subgradient(x) + perturbation(x);
    return f_->value(x);
}

double PerturbedOracle::sample_value(const Vector& x, RandomStream&) const { return f_->value(x); }

GradSample minibatch_gradient(const StochasticGradOracle& oracle, const Vector& x,
                              const BatchSpec& batch, std::uint64_t iteration,
                              StreamPurpose purpose) {
    const auto n = static_cast<Eigen::Index>(oracle.dimension());
    require_dimension(oracle.dimension(), x.size(), "minibatch_gradient");
    Partial total = reduce_batch(batch, [&](std::size_t lo, std::size_t hi) {
        Partial p{Vector::Zero(n), 0.0};
        Vector draw(n);
        for (std::size_t l = lo; l < hi; ++l) {
            if (l + kPrefetchDistance < hi) {
                oracle.prefetch(draw_key(batch, purpose, iteration, l + kPrefetchDistance));
            }
            RandomStream stream(draw_key(batch, purpose, iteration, l));
            p.value += oracle.sample(x, stream, draw);
            p.grad += draw;
        }
        return p;
    });
    const double inv_r = 1.0 / static_cast<double>(batch.r);
    GradSample out{total.grad * inv_r, std::nullopt};
    if (oracle.provides_value()) {
        out.value = total.value * inv_r;
    }
    if (!out.gradient.allFinite()) {
        throw std::runtime_error("minibatch_gradient: oracle produced a non-finite gradient");
    }
    return out;
}

double minibatch_value(const StochasticGradOracle& oracle, const Vector& x, const BatchSpec& batch,
                       std::uint64_t iteration, StreamPurpose purpose) {
    require_dimension(oracle.dimension(), x.size(), "minibatch_value");
    if (!oracle.provides_value()) {
        throw std::invalid_argument("minibatch_value: oracle does not provide function values");
    }
    Partial total = reduce_batch(batch, [&](std::size_t lo, std::size_t hi) {
        Partial p{Vector::Zero(1), 0.0};
        for (std::size_t l = lo; l < hi; ++l) {
            if (l + kPrefetchDistance < hi) {
                oracle.prefetch(draw_key(batch, purpose, iteration, l + kPrefetchDistance));
            }
            RandomStream stream(draw_key(batch, purpose, iteration, l));
            p.value += oracle.sample_value(x, stream);
        }
        return p;
    });
    return total.value / static_cast<double>(batch.r);
}

double concentration_radius(double sigma, std::size_t r, double beta) {
    if (!(sigma >= 0.0)) {
        throw std::invalid_argument("concentration_radius: sigma must be nonnegative");
    }
    if (r == 0) {
        throw std::invalid_argument("concentration_radius: r must be at least 1");
    }
    check_beta(beta, "concentration_radius");
    return (std::numbers::sqrt2 + std::sqrt(6.0 * std::log(1.0 / beta))) * sigma /
           std::sqrt(static_cast<double>(r));
}

std::size_t required_batch_size(double sigma, double diameter, double eps, double beta_per_call) {
    check_beta(beta_per_call, "required_batch_size");
    if (!(eps > 0.0) || !(diameter > 0.0) || !(sigma >= 0.0)) {
        throw std::invalid_argument(
            "required_batch_size: need eps > 0, diameter > 0 and sigma >= 0");
    }
    if (sigma == 0.0) {
        return 1;
    }
    const double factor = std::numbers::sqrt2 + std::sqrt(6.0 * std::log(1.0 / beta_per_call));
    const double scaled = 2.0 * sigma * diameter / eps * factor;
    const double estimate = scaled * scaled;
    if (!(estimate < 9.0e18)) {
        throw std::overflow_error("required_batch_size: batch size does not fit in 64 bits");
    }
    auto r = static_cast<std::size_t>(std::ceil(estimate));
    r = std::max<std::size_t>(r, 1);
    // Settle the ceiling against the defining inequality itself.
    auto fits = [&](std::size_t k) {
        return concentration_radius(sigma, k, beta_per_call) * diameter <= 0.5 * eps;
    };
    while (r > 1 && fits(r - 1)) {
        --r;
    }
    while (!fits(r)) {
        ++r;
    }
    return r;
}

DeltaCertificate verify_delta_subgradient(const DeterministicFunction& f, const FeasibleSet& set,
                                          const Vector& x, const Vector& g, double delta,
                                          std::size_t trial_points, std::uint64_t seed) {
    require_dimension(set.dimension(), x.size(), "verify_delta_subgradient point");
    require_dimension(set.dimension(), g.size(), "verify_delta_subgradient subgradient");
    if (!(delta >= 0.0)) {
        throw std::invalid_argument("verify_delta_subgradient: delta must be nonnegative");
    }
    const double fx = f.value(x);
    DeltaCertificate cert;
    cert.delta = delta;
    double worst = 0.0;
    Vector worst_y;
    auto check = [&](const Vector& y) {
        const double violation = fx + g.dot(y - x) - delta - f.value(y);
        if (violation > worst) {
            worst = violation;
            worst_y = y;
        }
    };
    check(set.support_point(g));
    check(set.support_point(-g));
    for (const Vector& v : set.extreme_points()) {
        check(v);
    }
    for (std::size_t i = 0; i < trial_points; ++i) {
        RandomStream stream({seed, StreamPurpose::Sampling, 0, static_cast<std::uint32_t>(i)});
        check(set.sample_uniform(stream));
    }
    cert.max_violation = worst;
    cert.passed = worst <= kCertificateSlack;
    if (!cert.passed) {
        cert.witness_direction = worst_y - x;
    }
    return cert;
}

}  // namespace ellopt
