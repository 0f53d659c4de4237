#pragma once

#include "ellopt/ellipsoid_solver.hpp"

#include <optional>

namespace ellopt {

enum class StepSchedule { Constant, InverseSqrt };
enum class ReportedPoint { Best, Last, Average };

struct SgdConfig {
    /// α for the constant schedule, α₀ for α_k = α₀/√(k+1).
    double step = 0.01;
    StepSchedule schedule = StepSchedule::Constant;
    std::size_t batch_size = 1;
    std::size_t iterations = 1000;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    ReportedPoint report = ReportedPoint::Best;
    /// Defaults to the center of the set's bounding ball.
    std::optional<Vector> initial_point;
};

/// Projected minibatch SGD: θ_{k+1} = Π_Q(θ_k − α_k·ḡ(θ_k)). Draws use the
/// same (seed, iteration, index) stream keys as the ellipsoid solver.
/// Throws Diverged once ‖θ_k‖ exceeds 10³·R.
SolverReport sgd_run(const StochasticGradOracle& oracle, const FeasibleSet& set,
                     const SgdConfig& config);

}  // namespace ellopt
