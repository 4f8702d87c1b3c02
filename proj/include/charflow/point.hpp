#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>

namespace charflow {

/// Largest supported phase-space dimension (three positions plus three velocities).
inline constexpr std::size_t kMaxDim = 6;

/// A point (or vector) in R^N with N <= kMaxDim, stored inline.
///
/// Trajectory integration creates millions of these, so the storage is a
/// fixed-capacity array rather than a heap vector.
class Point {
public:
    Point() = default;
    explicit Point(std::size_t n) : n_(n) {
        if (n > kMaxDim) throw_too_large(n);
    }
    Point(std::initializer_list<double> values);
    explicit Point(std::span<const double> values);

    std::size_t size() const noexcept { return n_; }
    double& operator[](std::size_t i) noexcept { return v_[i]; }
    double operator[](std::size_t i) const noexcept { return v_[i]; }

    const double* begin() const noexcept { return v_.data(); }
    const double* end() const noexcept { return v_.data() + n_; }
    double* begin() noexcept { return v_.data(); }
    double* end() noexcept { return v_.data() + n_; }
    std::span<const double> values() const noexcept { return {v_.data(), n_}; }

    Point& operator+=(const Point& o) noexcept {
        for (std::size_t i = 0; i < n_; ++i) v_[i] += o.v_[i];
        return *this;
    }
    Point& operator-=(const Point& o) noexcept {
        for (std::size_t i = 0; i < n_; ++i) v_[i] -= o.v_[i];
        return *this;
    }
    Point& operator*=(double s) noexcept {
        for (std::size_t i = 0; i < n_; ++i) v_[i] *= s;
        return *this;
    }

    /// this += s * o
    Point& axpy(double s, const Point& o) noexcept {
        for (std::size_t i = 0; i < n_; ++i) v_[i] += s * o.v_[i];
        return *this;
    }

    bool operator==(const Point& o) const noexcept {
        return n_ == o.n_ && std::equal(begin(), end(), o.begin());
    }

    bool all_finite() const noexcept {
        return std::all_of(begin(), end(), [](double x) { return std::isfinite(x); });
    }

    std::string to_string() const;

private:
    [[noreturn]] static void throw_too_large(std::size_t n);

    std::array<double, kMaxDim> v_{};
    std::size_t n_ = 0;
};

inline Point operator+(Point a, const Point& b) noexcept { return a += b; }
inline Point operator-(Point a, const Point& b) noexcept { return a -= b; }
inline Point operator*(double s, Point a) noexcept { return a *= s; }
inline Point operator*(Point a, double s) noexcept { return a *= s; }

inline double dot(const Point& a, const Point& b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const Point& a) noexcept { return std::sqrt(dot(a, a)); }

inline double distance(const Point& a, const Point& b) noexcept { return norm(a - b); }

/// Axis-aligned box [lo, hi] in R^N.
struct Box {
    Point lo;
    Point hi;

    std::size_t dimension() const noexcept { return lo.size(); }
    double volume() const noexcept;
    bool contains(const Point& x) const noexcept;
    Point center() const noexcept { return 0.5 * (lo + hi); }
    double extent(std::size_t i) const noexcept { return hi[i] - lo[i]; }

    /// Grow every side by `margin` (absolute, per coordinate).
    Box inflated(const Point& margin) const noexcept;
    Box intersect(const Box& other) const noexcept;
};

}  // namespace charflow
