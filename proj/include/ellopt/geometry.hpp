#pragma once

#include "ellopt/random.hpp"
#include "ellopt/types.hpp"

#include <Eigen/Cholesky>

#include <vector>

namespace ellopt {

/// Square matrix kept exactly symmetric: the constructor averages the input
/// with its transpose, so both triangles always agree bit for bit.
class SymmetricMatrix {
  public:
    explicit SymmetricMatrix(const Matrix& m);

    static SymmetricMatrix scaled_identity(std::size_t n, double scale);

    const Matrix& matrix() const { return m_; }
    std::size_t size() const { return static_cast<std::size_t>(m_.rows()); }
    double trace() const { return m_.trace(); }

  private:
    Matrix m_;
};

struct BoundingBall {
    BoundingBall(Vector center, double radius);

    Vector center;
    double radius;
};

/// E = {x : (x − c)ᵀ H⁻¹ (x − c) ≤ 1} with H symmetric positive definite.
class Ellipsoid {
  public:
    /// Throws std::invalid_argument for n < 2, mismatched sizes, or a shape
    /// that fails Cholesky factorization.
    Ellipsoid(Vector center, SymmetricMatrix shape);

    static Ellipsoid from_ball(const BoundingBall& ball);

    const Vector& center() const { return center_; }
    const SymmetricMatrix& shape() const { return shape_; }
    std::size_t dimension() const { return static_cast<std::size_t>(center_.size()); }

    double log_det() const;
    double quadratic_form(const Vector& x) const;
    const Matrix& cholesky_factor() const { return factor_; }

  private:
    Vector center_;
    SymmetricMatrix shape_;
    Matrix factor_;
};

/// Central-cut update: the smallest ellipsoid containing E ∩ {x : ⟨w, x − c⟩ ≤ 0}.
/// Throws DegenerateEllipsoid when wᵀHw ≤ 1e−14·‖w‖²·tr(H)/n or when the
/// updated shape is no longer positive definite.
Ellipsoid ellipsoid_step(const Ellipsoid& e, const Vector& w);

/// ln det(H_{k+1}) − ln det(H_k) = n·ln(n²/(n²−1)) + ln((n−1)/(n+1)).
double log_det_change(std::size_t n);

/// Convex body the ellipsoid method can work with.
class FeasibleSet {
  public:
    virtual ~FeasibleSet() = default;

    virtual std::size_t dimension() const = 0;
    virtual BoundingBall bounding_ball() const = 0;
    /// Radius ρ of a Euclidean ball contained in the set.
    virtual double inner_radius() const = 0;
    /// D = sup ‖x − y‖ over the set.
    virtual double diameter() const = 0;

    /// Closed-set membership; the boundary counts as inside.
    virtual bool contains(const Vector& x) const = 0;
    /// For c outside the set, a nonzero w with ⟨w, q − c⟩ ≤ 0 for all q in the set.
    virtual Vector separation_hyperplane(const Vector& c) const = 0;
    /// Euclidean projection onto the set.
    virtual Vector project(const Vector& x) const = 0;

    virtual Vector sample_uniform(RandomStream& stream) const = 0;
    /// A maximizer of ⟨direction, y⟩ over the set.
    virtual Vector support_point(const Vector& direction) const = 0;
    /// Finite set of extreme points worth checking exhaustively (may be empty).
    virtual std::vector<Vector> extreme_points() const { return {}; }
};

class Box final : public FeasibleSet {
  public:
    Box(Vector lower, Vector upper);

    static Box cube(std::size_t n, double half_width);

    const Vector& lower() const { return lower_; }
    const Vector& upper() const { return upper_; }

    std::size_t dimension() const override { return static_cast<std::size_t>(lower_.size()); }
    BoundingBall bounding_ball() const override;
    double inner_radius() const override;
    double diameter() const override;
    bool contains(const Vector& x) const override;
    /// Unit normal of the most violated bound; ties go to the lowest index.
    Vector separation_hyperplane(const Vector& c) const override;
    Vector project(const Vector& x) const override;
    Vector sample_uniform(RandomStream& stream) const override;
    Vector support_point(const Vector& direction) const override;
    /// All 2ⁿ vertices for n ≤ 12, nothing above that.
    std::vector<Vector> extreme_points() const override;

  private:
    Vector lower_;
    Vector upper_;
};

class Ball final : public FeasibleSet {
  public:
    Ball(Vector center, double radius);

    const Vector& center() const { return center_; }
    double radius() const { return radius_; }

    std::size_t dimension() const override { return static_cast<std::size_t>(center_.size()); }
    BoundingBall bounding_ball() const override { return {center_, radius_}; }
    double inner_radius() const override { return radius_; }
    double diameter() const override { return 2.0 * radius_; }
    bool contains(const Vector& x) const override;
    Vector separation_hyperplane(const Vector& c) const override;
    Vector project(const Vector& x) const override;
    Vector sample_uniform(RandomStream& stream) const override;
    Vector support_point(const Vector& direction) const override;

  private:
    Vector center_;
    double radius_;
};

}  // namespace ellopt
