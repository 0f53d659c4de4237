#include "ellopt/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ellopt {

namespace {

// Relative slack for the ball's closed-boundary test; radial projection can
// land a few ulps outside.
constexpr double kBallBoundarySlack = 1e-12;
constexpr double kDegeneracyTolerance = 1e-14;

bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

}  // namespace

SymmetricMatrix::SymmetricMatrix(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument("SymmetricMatrix: matrix must be square");
    }
    if (!all_finite(m)) {
        throw std::invalid_argument("SymmetricMatrix: non-finite entry");
    }
    m_ = 0.5 * (m + m.transpose());
}

SymmetricMatrix SymmetricMatrix::scaled_identity(std::size_t n, double scale) {
    const auto size = static_cast<Eigen::Index>(n);
    return SymmetricMatrix(scale * Matrix::Identity(size, size));
}

BoundingBall::BoundingBall(Vector c, double r) : center(std::move(c)), radius(r) {
    if (!(radius > 0.0) || !std::isfinite(radius)) {
        throw std::invalid_argument("BoundingBall: radius must be positive and finite");
    }
}

Ellipsoid::Ellipsoid(Vector center, SymmetricMatrix shape)
    : center_(std::move(center)), shape_(std::move(shape)) {
    const std::size_t n = dimension();
    if (n < 2) {
        throw std::invalid_argument(
            "Ellipsoid: dimension must be at least 2 (the update factor n²/(n²−1) is undefined at "
            "n = 1)");
    }
    require_dimension(n, static_cast<Eigen::Index>(shape_.size()), "Ellipsoid shape");
    if (!center_.allFinite()) {
        throw std::invalid_argument("Ellipsoid: non-finite center");
    }
    Eigen::LLT<Matrix> llt(shape_.matrix());
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("Ellipsoid: shape matrix is not positive definite");
    }
    factor_ = llt.matrixL();
    if (!(factor_.diagonal().array() > 0.0).all()) {
        throw std::invalid_argument("Ellipsoid: shape matrix is not positive definite");
    }
}

Ellipsoid Ellipsoid::from_ball(const BoundingBall& ball) {
    const auto n = static_cast<std::size_t>(ball.center.size());
    return {ball.center, SymmetricMatrix::scaled_identity(n, ball.radius * ball.radius)};
}

double Ellipsoid::log_det() const { return 2.0 * factor_.diagonal().array().log().sum(); }

double Ellipsoid::quadratic_form(const Vector& x) const {
    require_dimension(dimension(), x.size(), "Ellipsoid::quadratic_form");
    const Vector y = factor_.triangularView<Eigen::Lower>().solve(x - center_);
    return y.squaredNorm();
}

Ellipsoid ellipsoid_step(const Ellipsoid& e, const Vector& w) {
    const std::size_t n = e.dimension();
    require_dimension(n, w.size(), "ellipsoid_step");
    if (!w.allFinite()) {
        throw std::invalid_argument("ellipsoid_step: non-finite cut vector");
    }
    const Matrix& h = e.shape().matrix();
    const Vector hw = h * w;
    const double whw = w.dot(hw);
    const double nd = static_cast<double>(n);
    const double threshold = kDegeneracyTolerance * w.squaredNorm() * h.trace() / nd;
    if (!(whw > threshold)) {
        throw DegenerateEllipsoid("ellipsoid_step: wᵀHw = " + std::to_string(whw) +
                                  " is below the degeneracy threshold");
    }
    const Vector b = hw / std::sqrt(whw);
    Vector center = e.center() - b / (nd + 1.0);
    const double stretch = nd * nd / (nd * nd - 1.0);
    Matrix shape = stretch * (h - (2.0 / (nd + 1.0)) * (b * b.transpose()));
    try {
        return {std::move(center), SymmetricMatrix(shape)};
    } catch (const std::invalid_argument& err) {
        throw DegenerateEllipsoid(std::string("ellipsoid_step: ") + err.what());
    }
}

double log_det_change(std::size_t n) {
    const double nd = static_cast<double>(n);
    return nd * std::log(nd * nd / (nd * nd - 1.0)) + std::log((nd - 1.0) / (nd + 1.0));
}

// ---------------------------------------------------------------------------
// Box

Box::Box(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() == 0) {
        throw std::invalid_argument("Box: empty dimension");
    }
    require_dimension(static_cast<std::size_t>(lower_.size()), upper_.size(), "Box bounds");
    if (!lower_.allFinite() || !upper_.allFinite()) {
        throw std::invalid_argument("Box: bounds must be finite");
    }
    if (!(lower_.array() < upper_.array()).all()) {
        throw std::invalid_argument("Box: every lower bound must be below its upper bound");
    }
}

Box Box::cube(std::size_t n, double half_width) {
    const auto size = static_cast<Eigen::Index>(n);
    return {Vector::Constant(size, -half_width), Vector::Constant(size, half_width)};
}

BoundingBall Box::bounding_ball() const {
    return {0.5 * (lower_ + upper_), 0.5 * (upper_ - lower_).norm()};
}

double Box::inner_radius() const { return 0.5 * (upper_ - lower_).minCoeff(); }

double Box::diameter() const { return (upper_ - lower_).norm(); }

bool Box::contains(const Vector& x) const {
    require_dimension(dimension(), x.size(), "Box::contains");
    return (x.array() >= lower_.array()).all() && (x.array() <= upper_.array()).all();
}

Vector Box::separation_hyperplane(const Vector& c) const {
    require_dimension(dimension(), c.size(), "Box::separation_hyperplane");
    Eigen::Index worst = -1;
    double worst_violation = 0.0;
    double sign = 0.0;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        const double below = lower_[i] - c[i];
        const double above = c[i] - upper_[i];
        if (above > worst_violation) {
            worst = i;
            worst_violation = above;
            sign = 1.0;
        }
        if (below > worst_violation) {
            worst = i;
            worst_violation = below;
            sign = -1.0;
        }
    }
    if (worst < 0) {
        throw std::invalid_argument("Box::separation_hyperplane: point is feasible");
    }
    Vector w = Vector::Zero(c.size());
    w[worst] = sign;
    return w;
}

Vector Box::project(const Vector& x) const {
    require_dimension(dimension(), x.size(), "Box::project");
    return x.cwiseMax(lower_).cwiseMin(upper_);
}

Vector Box::sample_uniform(RandomStream& stream) const {
    Vector y(lower_.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        y[i] = lower_[i] + (upper_[i] - lower_[i]) * stream.uniform();
    }
    return y;
}

Vector Box::support_point(const Vector& direction) const {
    require_dimension(dimension(), direction.size(), "Box::support_point");
    Vector y(lower_.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        y[i] = direction[i] >= 0.0 ? upper_[i] : lower_[i];
    }
    return y;
}

std::vector<Vector> Box::extreme_points() const {
    const std::size_t n = dimension();
    if (n > 12) {
        return {};
    }
    std::vector<Vector> vertices;
    vertices.reserve(std::size_t{1} << n);
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        Vector v(lower_.size());
        for (std::size_t i = 0; i < n; ++i) {
            const auto idx = static_cast<Eigen::Index>(i);
            v[idx] = (mask >> i) & 1U ? upper_[idx] : lower_[idx];
        }
        vertices.push_back(std::move(v));
    }
    return vertices;
}

// ---------------------------------------------------------------------------
// Ball

Ball::Ball(Vector center, double radius) : center_(std::move(center)), radius_(radius) {
    if (center_.size() == 0) {
        throw std::invalid_argument("Ball: empty dimension");
    }
    if (!center_.allFinite()) {
        throw std::invalid_argument("Ball: non-finite center");
    }
    if (!(radius_ > 0.0) || !std::isfinite(radius_)) {
        throw std::invalid_argument("Ball: radius must be positive and finite");
    }
}

bool Ball::contains(const Vector& x) const {
    require_dimension(dimension(), x.size(), "Ball::contains");
    return (x - center_).norm() <= radius_ * (1.0 + kBallBoundarySlack);
}

Vector Ball::separation_hyperplane(const Vector& c) const {
    if (contains(c)) {
        throw std::invalid_argument("Ball::separation_hyperplane: point is feasible");
    }
    const Vector offset = c - center_;
    return offset / offset.norm();
}

Vector Ball::project(const Vector& x) const {
    require_dimension(dimension(), x.size(), "Ball::project");
    const Vector offset = x - center_;
    const double dist = offset.norm();
    if (dist <= radius_) {
        return x;
    }
    return center_ + offset * (radius_ / dist);
}

Vector Ball::sample_uniform(RandomStream& stream) const {
    const auto n = center_.size();
    Vector direction(n);
    double norm = 0.0;
    do {
        for (Eigen::Index i = 0; i < n; ++i) {
            direction[i] = stream.normal();
        }
        norm = direction.norm();
    } while (norm == 0.0);
    const double scale = radius_ * std::pow(stream.uniform(), 1.0 / static_cast<double>(n));
    return center_ + direction * (scale / norm);
}

Vector Ball::support_point(const Vector& direction) const {
    require_dimension(dimension(), direction.size(), "Ball::support_point");
    const double norm = direction.norm();
    if (norm == 0.0) {
        return center_;
    }
    return center_ + direction * (radius_ / norm);
}

}  // namespace ellopt
