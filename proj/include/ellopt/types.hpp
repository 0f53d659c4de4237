#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ellopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when the ellipsoid update cannot proceed because wᵀHw collapsed
/// below the relative tolerance or the updated shape lost definiteness.
class DegenerateEllipsoid : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class NoFeasiblePoint : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Projected SGD left the 10³·R envelope; the step size is too large.
class Diverged : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

inline void require_dimension(std::size_t expected, Eigen::Index actual, const char* what) {
    if (actual < 0 || static_cast<std::size_t>(actual) != expected) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (expected " +
                                    std::to_string(expected) + ", got " + std::to_string(actual) +
                                    ")");
    }
}

}  // namespace ellopt
