#pragma once

#include "ellopt/ellipsoid_solver.hpp"
#include "ellopt/geometry.hpp"
#include "ellopt/oracles.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ellopt {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Binary-labelled feature matrix. When has_intercept is set the last column
/// is the constant 1 and is not part of feature_names.
struct Dataset {
    RowMatrix features;
    Vector labels;
    bool has_intercept = true;
    std::vector<std::string> feature_names;

    std::size_t rows() const { return static_cast<std::size_t>(features.rows()); }
    std::size_t dimension() const { return static_cast<std::size_t>(features.cols()); }

    /// Throws std::invalid_argument on empty data, non-binary labels or
    /// non-finite features.
    void validate() const;
    Dataset subset(const std::vector<std::size_t>& rows) const;
};

struct LossGrad {
    double loss;
    Vector gradient;
};

/// log(1 + eᵗ) without overflow.
double softplus(double t);

/// Cross-entropy −[y ln p̂ + (1−y) ln(1−p̂)] of p̂ = 1/(1+e^{−⟨w,x⟩}) and its
/// gradient (p̂ − y)·x, via ℓ = softplus(−z) + (1−y)·z.
LossGrad logistic_value_grad(const Vector& w, const Vector& x, double y);

double mean_logistic_loss(const Dataset& data, const Vector& w);

/// Full-batch empirical risk (1/m) Σ ℓ(w; xᵢ, yᵢ).
class LogisticObjective final : public DeterministicFunction {
  public:
    explicit LogisticObjective(std::shared_ptr<const Dataset> data);

    std::size_t dimension() const override { return data_->dimension(); }
    double value(const Vector& w) const override;
    Vector subgradient(const Vector& w) const override;
    double value_and_subgradient(const Vector& w, Vector& grad) const override;

  private:
    std::shared_ptr<const Dataset> data_;
};

enum class SamplingMode {
    /// Index drawn uniformly with replacement.
    Uniform,
    /// Draw l of a batch reads row l mod m; a batch of r = m is the full pass.
    Enumerate,
};

/// One (xᵢ, yᵢ) per draw: returns ℓᵢ(w) and ∇ℓᵢ(w).
class LogisticSampleOracle final : public StochasticGradOracle {
  public:
    LogisticSampleOracle(std::shared_ptr<const Dataset> data, double sigma,
                         SamplingMode mode = SamplingMode::Uniform);

    std::size_t dimension() const override { return data_->dimension(); }
    double sigma() const override { return sigma_; }
    double sample(const Vector& w, RandomStream& stream, Vector& grad) const override;
    double sample_value(const Vector& w, RandomStream& stream) const override;
    void prefetch(const StreamKey& key) const override;

  private:
    std::size_t pick(RandomStream& stream) const;

    std::shared_ptr<const Dataset> data_;
    double sigma_;
    SamplingMode mode_;
};

/// Subgaussian parameter for the per-sample gradient noise at w = 0:
/// safety · max(q, σ_emp), where q is the `quantile` of ‖∇ℓᵢ(0) − ∇f(0)‖ and
/// σ_emp the smallest σ with mean exp(‖∇ℓᵢ(0) − ∇f(0)‖²/σ²) ≤ e.
double fit_sigma(const Dataset& data, double quantile = 0.99, double safety = 1.5);

/// Empirical E exp(‖∇ℓᵢ(0) − center‖²/σ²) over the rows of data.
double subgaussian_moment(const Dataset& data, const Vector& center, double sigma);

/// Mean per-sample gradient at w = 0.
Vector mean_gradient_at_zero(const Dataset& data);

struct LogisticProblem {
    std::shared_ptr<const Dataset> data;
    std::shared_ptr<const Ball> set;
    std::shared_ptr<const LogisticObjective> objective;
    std::shared_ptr<const LogisticSampleOracle> oracle;
    double diameter = 0.0;
    double objective_range = 0.0;
    double sigma = 0.0;

    /// Weight-space ball of the given radius around 0; D = 2R_w, B by
    /// sampling the exact objective, σ from fit_sigma unless overridden.
    static LogisticProblem build(std::shared_ptr<const Dataset> data, double radius = 10.0,
                                 std::uint64_t seed = 0,
                                 std::optional<double> sigma_override = std::nullopt);
};

/// n-dimensional data (n − 1 standard Gaussian features plus the constant
/// column), labels Bernoulli(p̂ₓ(w*)) with w* uniform on the sphere of radius 2.
/// Regenerates when m ≥ 100 and all labels agree; fails after 16 attempts.
Dataset generate_synthetic(std::size_t m, std::size_t n, std::uint64_t seed);

/// Vector w* used by generate_synthetic for a given attempt.
Vector synthetic_true_weights(std::size_t n, std::uint64_t seed, std::uint64_t attempt = 0);

/// Header row required, label column "y" ∈ {0, 1}, every other column a
/// numeric feature; the constant column is appended when intercept is set.
/// Throws ParseError carrying the 1-based line number.
Dataset read_dataset_csv(std::istream& in, bool intercept = true);
Dataset read_dataset_csv(const std::filesystem::path& path, bool intercept = true);

/// Writes raw features (no intercept column) and y; reading it back with the
/// same intercept setting reproduces the dataset exactly.
void write_dataset_csv(std::ostream& out, const Dataset& data);
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);

/// Seeded shuffle, then the first round(m·test_fraction) rows become the test set.
std::pair<Dataset, Dataset> split_train_test(const Dataset& data, double test_fraction,
                                             std::uint64_t seed);

struct ErmResult {
    Vector point;
    double value = 0.0;
    std::size_t iterations = 0;
};

/// Minimizer of an exact objective over the set, by the ellipsoid method
/// with exact subgradients run for the budget that guarantees gap ≤ tol.
ErmResult erm_reference(std::shared_ptr<const DeterministicFunction> f, const FeasibleSet& set,
                        double tol, std::optional<double> objective_range = std::nullopt,
                        std::size_t workers = 1);

}  // namespace ellopt
