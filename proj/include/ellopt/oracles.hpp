#pragma once

#include "ellopt/geometry.hpp"
#include "ellopt/random.hpp"
#include "ellopt/types.hpp"

#include <cstdint>
#include <memory>
#include <optional>

namespace ellopt {

struct GradSample {
    Vector gradient;
    std::optional<double> value;
};

/// Exact convex objective with a subgradient selector.
class DeterministicFunction {
  public:
    virtual ~DeterministicFunction() = default;
    virtual std::size_t dimension() const = 0;
    virtual double value(const Vector& x) const = 0;
    virtual Vector subgradient(const Vector& x) const = 0;
    /// One-pass evaluation; override when value and subgradient share work.
    virtual double value_and_subgradient(const Vector& x, Vector& grad) const {
        grad = subgradient(x);
        return value(x);
    }
};

/// Source of stochastic subgradients ∂ₓf(x, ξ). Implementations are immutable;
/// all randomness comes from the stream handed to each draw.
class StochasticGradOracle {
  public:
    virtual ~StochasticGradOracle() = default;

    virtual std::size_t dimension() const = 0;
    /// Subgaussian parameter of the gradient noise (0 for exact oracles).
    virtual double sigma() const = 0;
    virtual bool provides_value() const { return true; }

    /// Writes one draw of ∂ₓf(x, ξ) into grad (already sized n) and returns
    /// the matching draw of f(x, ξ), or NaN when values are not provided.
    virtual double sample(const Vector& x, RandomStream& stream, Vector& grad) const = 0;

    /// Value-only draw; must consume the stream exactly like sample().
    virtual double sample_value(const Vector& x, RandomStream& stream) const;

    /// Cache hint for a draw that is about to happen; must not affect results.
    virtual void prefetch(const StreamKey&) const {}

    GradSample draw(const Vector& x, RandomStream& stream) const;
};

/// f(x) = scale·‖x − minimizer‖².
class QuadraticFunction final : public DeterministicFunction {
  public:
    explicit QuadraticFunction(Vector minimizer, double scale = 1.0);

    std::size_t dimension() const override { return static_cast<std::size_t>(minimizer_.size()); }
    double value(const Vector& x) const override;
    Vector subgradient(const Vector& x) const override;
    const Vector& minimizer() const { return minimizer_; }

  private:
    Vector minimizer_;
    double scale_;
};

/// f(x) = ⟨cost, x⟩.
class LinearFunction final : public DeterministicFunction {
  public:
    explicit LinearFunction(Vector cost);

    std::size_t dimension() const override { return static_cast<std::size_t>(cost_.size()); }
    double value(const Vector& x) const override { return cost_.dot(x); }
    Vector subgradient(const Vector&) const override { return cost_; }
    const Vector& cost() const { return cost_; }

  private:
    Vector cost_;
};

/// Noiseless oracle: every draw returns f(x) and the exact subgradient.
class ExactOracle final : public StochasticGradOracle {
  public:
    explicit ExactOracle(std::shared_ptr<const DeterministicFunction> f);

    std::size_t dimension() const override { return f_->dimension(); }
    double sigma() const override { return 0.0; }
    double sample(const Vector& x, RandomStream& stream, Vector& grad) const override;
    double sample_value(const Vector& x, RandomStream& stream) const override;

  private:
    std::shared_ptr<const DeterministicFunction> f_;
};

/// Synthetic stochastic function f(x, ζ) = f(x) + ⟨ζ, x − anchor⟩ with
/// ζ ~ N(0, σ²/(2n)·I). Its gradient draws g + ζ satisfy
/// E exp(‖ζ‖²/σ²) = (1 − 1/n)^{−n/2} ≤ e for every n ≥ 2.
class GaussianNoiseOracle final : public StochasticGradOracle {
  public:
    GaussianNoiseOracle(std::shared_ptr<const DeterministicFunction> f, double sigma,
                        std::optional<Vector> anchor = std::nullopt);

    std::size_t dimension() const override { return f_->dimension(); }
    double sigma() const override { return sigma_; }
    double coordinate_stddev() const { return coordinate_stddev_; }
    double sample(const Vector& x, RandomStream& stream, Vector& grad) const override;

  private:
    std::shared_ptr<const DeterministicFunction> f_;
    double sigma_;
    double coordinate_stddev_;
    Vector anchor_;
};

/// Deterministic biased oracle: returns g(x) + e(x) with ‖e(x)‖ = η exactly,
/// the direction of e pseudo-random in x. Values are exact.
class PerturbedOracle final : public StochasticGradOracle {
  public:
    PerturbedOracle(std::shared_ptr<const DeterministicFunction> f, double eta,
                    std::uint64_t seed);

    std::size_t dimension() const override { return f_->dimension(); }
    double sigma() const override { return 0.0; }
    double eta() const { return eta_; }
    Vector perturbation(const Vector& x) const;
    double sample(const Vector& x, RandomStream& stream, Vector& grad) const override;
    double sample_value(const Vector& x, RandomStream& stream) const override;

  private:
    std::shared_ptr<const DeterministicFunction> f_;
    double eta_;
    std::uint64_t seed_;
};

struct BatchSpec {
    std::size_t r = 1;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
};

/// Mean of r independent oracle draws at x. Draw l uses the stream keyed by
/// (seed, purpose, iteration, l); the sum is a fixed pairwise tree over l, so
/// the result is bit-identical for every worker count.
GradSample minibatch_gradient(const StochasticGradOracle& oracle, const Vector& x,
                              const BatchSpec& batch, std::uint64_t iteration,
                              StreamPurpose purpose = StreamPurpose::Gradient);

/// Same streams and reduction as minibatch_gradient, values only.
double minibatch_value(const StochasticGradOracle& oracle, const Vector& x,
                       const BatchSpec& batch, std::uint64_t iteration,
                       StreamPurpose purpose = StreamPurpose::Evaluation);

/// (√2 + √(6 ln β⁻¹))·σ/√r: with probability at least 1 − β the minibatch
/// mean lies within this distance of the true subgradient.
double concentration_radius(double sigma, std::size_t r, double beta);

/// Smallest r with concentration_radius(σ, r, β)·D ≤ ε/2.
std::size_t required_batch_size(double sigma, double diameter, double eps, double beta_per_call);

struct DeltaCertificate {
    double delta = 0.0;
    bool passed = true;
    /// max over checked y of f(x) + ⟨g, y − x⟩ − δ − f(y), clipped at 0.
    double max_violation = 0.0;
    /// y − x at the worst point, set when the check fails.
    std::optional<Vector> witness_direction;
};

/// Sampling check of f(y) ≥ f(x) + ⟨g, y − x⟩ − δ over the set: uniform
/// samples plus the set's extreme points and its support points along ±g.
DeltaCertificate verify_delta_subgradient(const DeterministicFunction& f, const FeasibleSet& set,
                                          const Vector& x, const Vector& g, double delta,
                                          std::size_t trial_points = 10000,
                                          std::uint64_t seed = 0);

}  // namespace ellopt
