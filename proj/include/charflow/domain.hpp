#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "charflow/point.hpp"

namespace charflow {

enum class DomainKind { rectangle, stadium, disk, half_space, product };

const char* to_string(DomainKind kind) noexcept;

/// A straight segment or circular arc of a planar boundary, parametrized by
/// arc length t in [0, length()].
struct BoundaryPiece {
    enum class Shape { segment, arc } shape = Shape::segment;
    Point start;  // segment endpoints
    Point end;
    Point center;  // arc data; angles in radians, theta0 < theta1
    double radius = 0.0;
    double theta0 = 0.0;
    double theta1 = 0.0;

    double length() const noexcept;
    Point point_at(double t) const noexcept;
    /// Arc-length parameter of the closest point, clamped to [0, length()].
    double parameter_of(const Point& y) const noexcept;
    double distance_to(const Point& y) const noexcept;
    /// Bounding box of the sub-piece [t0, t1].
    Box bounds(double t0, double t1) const noexcept;
};

/// Open phase-space region with a signed distance (negative inside).
///
/// contains(x) is defined as signed_distance(x) < 0, so the two never
/// disagree. The signed distance is exact inside; outside, the stadium uses
/// the max of its two constraints, which has the right sign but is not the
/// Euclidean distance near the junction points.
class Domain {
public:
    /// (-a, a) x (-xi, xi)
    static Domain rectangle(double a, double xi);
    /// {x^2 + v^2 < R^2, |v| < vmax}; the defaults give {x^2+v^2<2, -1<v<1}.
    static Domain stadium(double radius = 1.4142135623730951, double vmax = 1.0);
    static Domain disk(double radius, std::size_t dimension = 2);
    /// {x : x[axis] < bound}
    static Domain half_space(std::size_t axis, double bound, std::size_t dimension);
    static Domain product(std::vector<std::pair<double, double>> intervals);

    DomainKind kind() const noexcept { return kind_; }
    std::size_t dimension() const noexcept { return dim_; }

    double signed_distance(const Point& x) const noexcept;
    bool contains(const Point& x) const noexcept { return signed_distance(x) < 0.0; }

    /// Unit outward normal at (or next to) a boundary point; nullopt at corners
    /// and junctions where it is undefined.
    std::optional<Point> outward_normal(const Point& y) const;

    /// nullopt for unbounded domains.
    std::optional<Box> bounding_box() const;

    /// Closed boundary curve as segments and arcs, split at corners and
    /// junctions. Only planar bounded domains are supported.
    std::vector<BoundaryPiece> boundary_pieces() const;

    // Parameters (meaning depends on kind).
    double half_width() const noexcept { return a_; }   // rectangle a
    double half_height() const noexcept { return xi_; } // rectangle xi
    double radius() const noexcept { return radius_; }  // stadium/disk
    double vmax() const noexcept { return vmax_; }      // stadium
    std::size_t axis() const noexcept { return axis_; } // half_space
    double bound() const noexcept { return bound_; }    // half_space
    const std::vector<std::pair<double, double>>& intervals() const noexcept { return intervals_; }

private:
    DomainKind kind_ = DomainKind::rectangle;
    std::size_t dim_ = 2;
    double a_ = 1.0, xi_ = 1.0, radius_ = 1.0, vmax_ = 1.0, bound_ = 0.0;
    std::size_t axis_ = 0;
    std::vector<std::pair<double, double>> intervals_;  // rectangle/product
};

}  // namespace charflow
