#include "charflow/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "charflow/error.hpp"

namespace charflow {

namespace {

constexpr double kCornerTol = 1e-8;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double box_sdf(const std::vector<std::pair<double, double>>& iv, const Point& x) noexcept {
    double outside2 = 0.0;
    double inside = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < iv.size(); ++i) {
        const double c = 0.5 * (iv[i].first + iv[i].second);
        const double h = 0.5 * (iv[i].second - iv[i].first);
        const double q = std::abs(x[i] - c) - h;
        if (q > 0.0) outside2 += q * q;
        inside = std::max(inside, q);
    }
    return std::sqrt(outside2) + std::min(inside, 0.0);
}

std::optional<Point> box_normal(const std::vector<std::pair<double, double>>& iv, const Point& y) {
    const std::size_t n = iv.size();
    std::size_t best = 0;
    double best_q = -std::numeric_limits<double>::infinity();
    std::vector<double> q(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double c = 0.5 * (iv[i].first + iv[i].second);
        const double h = 0.5 * (iv[i].second - iv[i].first);
        q[i] = std::abs(y[i] - c) - h;
        if (q[i] > best_q) {
            best_q = q[i];
            best = i;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (i != best && q[i] > best_q - kCornerTol) return std::nullopt;
    }
    Point nrm(n);
    const double c = 0.5 * (iv[best].first + iv[best].second);
    nrm[best] = y[best] >= c ? 1.0 : -1.0;
    return nrm;
}

// Angle of `d` shifted into [theta0, theta0 + 2 pi).
double unwrap_angle(double angle, double theta0) {
    double a = angle;
    while (a < theta0) a += kTwoPi;
    while (a >= theta0 + kTwoPi) a -= kTwoPi;
    return a;
}

}  // namespace

const char* to_string(DomainKind kind) noexcept {
    switch (kind) {
        case DomainKind::rectangle: return "rectangle";
        case DomainKind::stadium: return "stadium";
        case DomainKind::disk: return "disk";
        case DomainKind::half_space: return "half_space";
        case DomainKind::product: return "product";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// BoundaryPiece

double BoundaryPiece::length() const noexcept {
    if (shape == Shape::segment) return distance(start, end);
    return radius * (theta1 - theta0);
}

Point BoundaryPiece::point_at(double t) const noexcept {
    if (shape == Shape::segment) {
        const double len = length();
        const double s = len > 0.0 ? t / len : 0.0;
        return start + s * (end - start);
    }
    const double th = theta0 + t / radius;
    return Point{center[0] + radius * std::cos(th), center[1] + radius * std::sin(th)};
}

double BoundaryPiece::parameter_of(const Point& y) const noexcept {
    if (shape == Shape::segment) {
        const Point d = end - start;
        const double len2 = dot(d, d);
        if (len2 == 0.0) return 0.0;
        const double s = std::clamp(dot(y - start, d) / len2, 0.0, 1.0);
        return s * std::sqrt(len2);
    }
    const double ang = unwrap_angle(std::atan2(y[1] - center[1], y[0] - center[0]), theta0);
    if (ang <= theta1) return radius * (ang - theta0);
    // Outside the arc's angular range: snap to the nearer end.
    const double to_end = ang - theta1;
    const double to_start = theta0 + kTwoPi - ang;
    return to_end <= to_start ? length() : 0.0;
}

double BoundaryPiece::distance_to(const Point& y) const noexcept {
    return distance(y, point_at(parameter_of(y)));
}

Box BoundaryPiece::bounds(double t0, double t1) const noexcept {
    const Point a = point_at(t0), b = point_at(t1);
    Box box{a, a};
    for (std::size_t i = 0; i < 2; ++i) {
        box.lo[i] = std::min(a[i], b[i]);
        box.hi[i] = std::max(a[i], b[i]);
    }
    if (shape == Shape::arc) {
        const double th0 = theta0 + t0 / radius, th1 = theta0 + t1 / radius;
        // Axis-extreme angles k * pi/2 inside [th0, th1].
        const double quarter = 0.5 * std::numbers::pi;
        for (double k = std::ceil(th0 / quarter); k * quarter <= th1; k += 1.0) {
            const Point p{center[0] + radius * std::cos(k * quarter),
                          center[1] + radius * std::sin(k * quarter)};
            for (std::size_t i = 0; i < 2; ++i) {
                box.lo[i] = std::min(box.lo[i], p[i]);
                box.hi[i] = std::max(box.hi[i], p[i]);
            }
        }
    }
    return box;
}

// ---------------------------------------------------------------------------
// Domain

Domain Domain::rectangle(double a, double xi) {
    if (!(a > 0.0) || !(xi > 0.0) || !std::isfinite(a) || !std::isfinite(xi)) {
        throw Error(ErrorKind::invalid_argument, "rectangle needs positive finite a and xi");
    }
    Domain d;
    d.kind_ = DomainKind::rectangle;
    d.dim_ = 2;
    d.a_ = a;
    d.xi_ = xi;
    d.intervals_ = {{-a, a}, {-xi, xi}};
    return d;
}

Domain Domain::stadium(double radius, double vmax) {
    if (!(radius > 0.0) || !(vmax > 0.0) || !std::isfinite(radius) || !std::isfinite(vmax)) {
        throw Error(ErrorKind::invalid_argument, "stadium needs positive finite R and vmax");
    }
    Domain d;
    d.kind_ = DomainKind::stadium;
    d.dim_ = 2;
    d.radius_ = radius;
    d.vmax_ = vmax;
    return d;
}

Domain Domain::disk(double radius, std::size_t dimension) {
    if (!(radius > 0.0) || !std::isfinite(radius)) {
        throw Error(ErrorKind::invalid_argument, "disk needs a positive finite radius");
    }
    if (dimension == 0 || dimension > kMaxDim) {
        throw Error(ErrorKind::dimension_mismatch, "disk dimension out of range");
    }
    Domain d;
    d.kind_ = DomainKind::disk;
    d.dim_ = dimension;
    d.radius_ = radius;
    return d;
}

Domain Domain::half_space(std::size_t axis, double bound, std::size_t dimension) {
    if (dimension == 0 || dimension > kMaxDim || axis >= dimension) {
        throw Error(ErrorKind::dimension_mismatch, "half_space axis/dimension out of range");
    }
    if (!std::isfinite(bound)) throw Error(ErrorKind::invalid_argument, "half_space bound must be finite");
    Domain d;
    d.kind_ = DomainKind::half_space;
    d.dim_ = dimension;
    d.axis_ = axis;
    d.bound_ = bound;
    return d;
}

Domain Domain::product(std::vector<std::pair<double, double>> intervals) {
    if (intervals.empty() || intervals.size() > kMaxDim) {
        throw Error(ErrorKind::dimension_mismatch, "product domain needs 1.." +
                                                       std::to_string(kMaxDim) + " intervals");
    }
    for (const auto& [lo, hi] : intervals) {
        if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
            throw Error(ErrorKind::invalid_argument, "product domain intervals must satisfy lo < hi");
        }
    }
    Domain d;
    d.kind_ = DomainKind::product;
    d.dim_ = intervals.size();
    d.intervals_ = std::move(intervals);
    return d;
}

double Domain::signed_distance(const Point& x) const noexcept {
    switch (kind_) {
        case DomainKind::rectangle:
        case DomainKind::product: return box_sdf(intervals_, x);
        case DomainKind::stadium: {
            const double r = std::hypot(x[0], x[1]);
            return std::max(r - radius_, std::abs(x[1]) - vmax_);
        }
        case DomainKind::disk: return norm(x) - radius_;
        case DomainKind::half_space: return x[axis_] - bound_;
    }
    return 0.0;
}

std::optional<Point> Domain::outward_normal(const Point& y) const {
    if (y.size() != dim_) throw Error(ErrorKind::dimension_mismatch, "outward_normal: dimension mismatch");
    switch (kind_) {
        case DomainKind::rectangle:
        case DomainKind::product: return box_normal(intervals_, y);
        case DomainKind::stadium: {
            const double r = std::hypot(y[0], y[1]);
            const double d_arc = r - radius_;
            const double d_flat = std::abs(y[1]) - vmax_;
            if (std::abs(d_arc - d_flat) < kCornerTol) return std::nullopt;
            if (d_flat > d_arc) return Point{0.0, y[1] >= 0.0 ? 1.0 : -1.0};
            if (r == 0.0) return std::nullopt;
            return Point{y[0] / r, y[1] / r};
        }
        case DomainKind::disk: {
            const double r = norm(y);
            if (r == 0.0) return std::nullopt;
            return (1.0 / r) * y;
        }
        case DomainKind::half_space: {
            Point n(dim_);
            n[axis_] = 1.0;
            return n;
        }
    }
    return std::nullopt;
}

std::optional<Box> Domain::bounding_box() const {
    Box b{Point(dim_), Point(dim_)};
    switch (kind_) {
        case DomainKind::rectangle:
        case DomainKind::product:
            for (std::size_t i = 0; i < dim_; ++i) {
                b.lo[i] = intervals_[i].first;
                b.hi[i] = intervals_[i].second;
            }
            return b;
        case DomainKind::stadium: {
            const double v = std::min(vmax_, radius_);
            b.lo = Point{-radius_, -v};
            b.hi = Point{radius_, v};
            return b;
        }
        case DomainKind::disk:
            for (std::size_t i = 0; i < dim_; ++i) {
                b.lo[i] = -radius_;
                b.hi[i] = radius_;
            }
            return b;
        case DomainKind::half_space: return std::nullopt;
    }
    return std::nullopt;
}

std::vector<BoundaryPiece> Domain::boundary_pieces() const {
    using Shape = BoundaryPiece::Shape;
    auto segment = [](Point a, Point b) {
        BoundaryPiece p;
        p.shape = Shape::segment;
        p.start = a;
        p.end = b;
        return p;
    };
    auto arc = [](double r, double th0, double th1) {
        BoundaryPiece p;
        p.shape = Shape::arc;
        p.center = Point{0.0, 0.0};
        p.radius = r;
        p.theta0 = th0;
        p.theta1 = th1;
        p.start = p.point_at(0.0);
        p.end = p.point_at(p.length());
        return p;
    };

    if (dim_ != 2) {
        throw Error(ErrorKind::unsupported, "boundary parametrization is only available for planar domains");
    }
    switch (kind_) {
        case DomainKind::rectangle:
        case DomainKind::product: {
            const double x0 = intervals_[0].first, x1 = intervals_[0].second;
            const double v0 = intervals_[1].first, v1 = intervals_[1].second;
            return {segment({x0, v0}, {x1, v0}), segment({x1, v0}, {x1, v1}),
                    segment({x1, v1}, {x0, v1}), segment({x0, v1}, {x0, v0})};
        }
        case DomainKind::stadium: {
            if (vmax_ >= radius_) return {arc(radius_, 0.0, kTwoPi)};
            const double c = std::sqrt(radius_ * radius_ - vmax_ * vmax_);
            const double alpha = std::asin(vmax_ / radius_);
            return {segment({-c, -vmax_}, {c, -vmax_}), arc(radius_, -alpha, alpha),
                    segment({c, vmax_}, {-c, vmax_}),
                    arc(radius_, std::numbers::pi - alpha, std::numbers::pi + alpha)};
        }
        case DomainKind::disk: return {arc(radius_, 0.0, kTwoPi)};
        case DomainKind::half_space: break;
    }
    throw Error(ErrorKind::unsupported, "unbounded domains have no finite boundary parametrization");
}

}  // namespace charflow
