#pragma once

#include "ellopt/geometry.hpp"
#include "ellopt/oracles.hpp"
#include "ellopt/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ellopt {

enum class CutKind {
    Subgradient,
    Separation,
    ZeroGradExit,
    SgdStep,
    /// Last center c_N: visited but never cut.
    Terminal,
};

std::string to_string(CutKind kind);

enum class Termination { Budget, ZeroGradient, Degenerate, Certified };

std::string to_string(Termination reason);

struct IterationRecord {
    std::size_t index = 0;
    Vector center;
    bool feasible = false;
    CutKind cut = CutKind::Subgradient;
    Vector cut_vector;
    /// Minibatch estimate of f at the center; NaN when none was drawn.
    double f_estimate = 0.0;
    /// ln det H_k; NaN for methods without a shape matrix.
    double log_det = 0.0;
    /// Oracle draws spent at this record.
    std::size_t samples = 0;
};

struct SolverConfig {
    double eps = 1e-2;
    double beta = 0.1;
    /// Defaults to the oracle's own σ.
    std::optional<double> sigma;
    std::optional<double> diameter;
    std::optional<double> objective_range;
    std::optional<double> inner_radius;
    std::optional<double> radius;
    std::optional<std::size_t> max_iterations;
    std::optional<std::size_t> batch_size;
    std::optional<std::size_t> eval_batch_size;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    /// Noise-free oracles only: stop once the best value minus the cut lower
    /// bound max_k f(c_k) − √(g_kᵀH_k g_k) is at most this.
    std::optional<double> stop_gap;
};

/// Constants the solver actually used after defaults and overrides.
struct ResolvedParameters {
    std::size_t n = 0;
    double diameter = 0.0;
    double objective_range = 0.0;
    double inner_radius = 0.0;
    double radius = 0.0;
    double sigma = 0.0;
    double eps = 0.0;
    double beta = 0.0;
    std::size_t iteration_budget = 0;
    std::size_t iterations = 0;
    double beta_per_call = 0.0;
    std::size_t batch_size = 0;
    std::size_t eval_batch_size = 0;
    double delta = 0.0;
    double zero_gradient_tolerance = 0.0;
};

struct SolverReport {
    Vector best_point;
    double best_estimate = 0.0;
    std::size_t iterations = 0;
    std::size_t batch_size = 0;
    std::vector<IterationRecord> trace;
    Termination termination = Termination::Budget;
    ResolvedParameters params;
    /// (trace position, fresh estimate) for every candidate compared at the end.
    std::vector<std::pair<std::size_t, double>> candidate_estimates;
    /// Cut lower bound on min f, tracked when stop_gap is set.
    std::optional<double> lower_bound;
    std::size_t evaluation_calls = 0;

    /// Σ samples over the trace plus the final evaluation batches.
    std::size_t oracle_calls() const;
};

/// ⌈2n² ln(DB/(ρε))⌉, or 0 when DB/(ρε) ≤ 1.
std::size_t iteration_budget(std::size_t n, double diameter, double objective_range,
                             double inner_radius, double eps);

/// (BR/ρ)·exp(−N/(2n²)) + δ.
double theoretical_gap(std::size_t n, std::size_t iterations, double objective_range,
                       double radius, double inner_radius, double delta);

/// Estimate of B = sup |f(x) − f(y)|: twice the spread of batch-mean values
/// at the set's bounding-ball center and 100 uniform feasible points.
double estimate_objective_range(const StochasticGradOracle& oracle, const FeasibleSet& set,
                                std::uint64_t seed, std::size_t batch_size = 256,
                                std::size_t workers = 1);

/// Fills in D, B, ρ, R, N, r and the failure-budget split from config and set.
ResolvedParameters resolve_parameters(const StochasticGradOracle& oracle, const FeasibleSet& set,
                                      const SolverConfig& config);

/// Re-evaluates every feasible record with one fresh evaluation batch shared
/// by all candidates (common random numbers) and returns the argmin; ties go
/// to the earliest record. Throws NoFeasiblePoint without candidates. With
/// reuse_trace_values, finite trace estimates stand in for fresh batches
/// (only sound for noise-free oracles).
struct Selection {
    Vector point;
    double estimate = 0.0;
    std::size_t record = 0;
    std::vector<std::pair<std::size_t, double>> estimates;
    /// Candidates that needed a fresh evaluation batch.
    std::size_t evaluated = 0;
};
Selection best_point_selection(const std::vector<IterationRecord>& trace,
                               const StochasticGradOracle& oracle, const BatchSpec& eval_batch,
                               bool reuse_trace_values = false);

/// Ellipsoid method with minibatched δ-subgradients.
SolverReport solve(const StochasticGradOracle& oracle, const FeasibleSet& set,
                   const SolverConfig& config);

}  // namespace ellopt
