#pragma once

// Characteristic curves s -> Phi(x, s) of dX/ds = F(X): fixed-step RK4,
// exit-time detection with terminal bisection, and boundary classification.

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "charflow/domain.hpp"
#include "charflow/error.hpp"
#include "charflow/field.hpp"
#include "charflow/point.hpp"

namespace charflow {

struct FlowConfig {
    double step = 1e-3;             ///< RK4 step h
    double horizon = 1e3;           ///< stay times beyond this are ExceedsHorizon
    double exit_tolerance = 1e-10;  ///< |signed distance| at reported hit points
    double probe_window = 0.0;      ///< classification probe length; 0 means 10 * step
    bool periodic_shortcut = true;  ///< stop early when an interior orbit closes
    double return_tolerance = 1e-7; ///< closing distance for the periodic shortcut (relative to 1+|x|)

    /// Throws invalid_argument unless h > 0, horizon > h and exit_tolerance > 0.
    void validate() const;
    double probe() const noexcept { return probe_window > 0.0 ? probe_window : 10.0 * step; }
};

enum class Direction : int { backward = -1, forward = 1 };

inline double sign(Direction d) noexcept { return static_cast<double>(static_cast<int>(d)); }

/// tau_plus / tau_minus: a finite exit time or "exceeds horizon".
class StayTime {
public:
    static StayTime finite(double t) noexcept { return StayTime(t); }
    static StayTime exceeds_horizon() noexcept { return StayTime(); }

    bool is_finite() const noexcept { return finite_; }
    bool exceeds() const noexcept { return !finite_; }
    /// Throws if the stay time exceeds the horizon.
    double value() const;
    double value_or(double fallback) const noexcept { return finite_ ? t_ : fallback; }
    std::string to_string() const;

    bool operator==(const StayTime&) const = default;

private:
    StayTime() = default;
    explicit StayTime(double t) : finite_(true), t_(t) {}
    bool finite_ = false;
    double t_ = 0.0;
};

/// Outcome of following one characteristic until it leaves the domain.
struct ExitResult {
    StayTime time = StayTime::exceeds_horizon();
    std::optional<Point> hit;       ///< boundary point reached at `time`
    std::optional<double> period;   ///< set when the periodic shortcut fired
    bool stationary = false;        ///< F(start) == 0: the curve never moves
};

inline Point rk4_step(const VectorField& field, const Point& x, double dt) noexcept {
    const std::size_t n = x.size();
    if (n == 2 && field.kind() != FieldKind::custom) {
        // Planar builtin fields are linear, F(x) = A x.
        const double w = field.omega();
        double a01 = 0.0, a10 = 0.0;
        switch (field.kind()) {
            case FieldKind::free_transport: a01 = 1.0; break;
            case FieldKind::harmonic: a01 = 1.0; a10 = -w * w; break;
            default: a01 = -w; a10 = w; break;
        }
        const double x0 = x[0], x1 = x[1], half = 0.5 * dt;
        const double k10 = a01 * x1, k11 = a10 * x0;
        const double k20 = a01 * (x1 + half * k11), k21 = a10 * (x0 + half * k10);
        const double k30 = a01 * (x1 + half * k21), k31 = a10 * (x0 + half * k20);
        const double k40 = a01 * (x1 + dt * k31), k41 = a10 * (x0 + dt * k30);
        const double c = dt / 6.0;
        Point y(2);
        y[0] = x0 + c * (k10 + 2.0 * (k20 + k30) + k40);
        y[1] = x1 + c * (k11 + 2.0 * (k21 + k31) + k41);
        return y;
    }
    Point k1(n), k2(n), k3(n), k4(n), y(n);
    const double half = 0.5 * dt;
    field.eval_into(x, k1);
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + half * k1[i];
    field.eval_into(y, k2);
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + half * k2[i];
    field.eval_into(y, k3);
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + dt * k3[i];
    field.eval_into(y, k4);
    const double c = dt / 6.0;
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + c * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    return y;
}

/// RK4 approximation of Phi(x, t) using ceil(|t|/h) equal steps; t = 0 returns x.
/// Throws NonFiniteState if the state blows up.
Point advance(const VectorField& field, const Point& x, double t, const FlowConfig& config);

namespace detail {
[[noreturn]] void throw_non_finite(const Point& x, double s);
Point bisect_return(const VectorField& field, const Point& x, const Point& start, const Point& f0,
                    double dir, double dt, double& r);
}  // namespace detail

/// Follows s -> Phi(start, dir * s) for s in [0, horizon] with steps of at
/// most `max_step` (and at most config.step), calling
///   on_segment(s0, x0, s1, x1)
/// for each consecutive pair of states inside the closure of the domain.
/// The last segment ends exactly at the exit point, the periodic return
/// point, or the horizon.
///
/// A start on the boundary counts as entering if the first step lands
/// inside; otherwise the exit time is 0 and the hit is the start itself.
template <class OnSegment>
ExitResult march(const VectorField& field, const Domain& domain, const Point& start, Direction dir,
                 double horizon, double max_step, const FlowConfig& config, OnSegment&& on_segment) {
    ExitResult out;
    const double sg = sign(dir);
    const double h = std::min(config.step, max_step);
    const double eps = config.exit_tolerance;
    const Point f0 = field(start);
    const bool interior = domain.contains(start);

    if (norm(f0) == 0.0) {
        out.stationary = true;
        if (!interior) {
            out.time = StayTime::finite(0.0);
            out.hit = start;
        }
        return out;
    }
    if (horizon <= 0.0) return out;

    double s = 0.0;
    Point x = start;

    if (!interior) {
        const double dt = std::min(h, horizon);
        Point x1 = rk4_step(field, start, sg * dt);
        if (!x1.all_finite()) detail::throw_non_finite(start, dt);
        if (!domain.contains(x1)) {
            out.time = StayTime::finite(0.0);
            out.hit = start;
            return out;
        }
        on_segment(0.0, start, dt, x1);
        s = dt;
        x = x1;
    }

    const bool try_return = interior && config.periodic_shortcut;
    const double f0_norm = norm(f0);
    const double return_tol = config.return_tolerance * (1.0 + norm(start));
    double g_prev = 1.0;

    while (s < horizon) {
        const double dt = std::min(h, horizon - s);
        Point xn = rk4_step(field, x, sg * dt);
        if (!xn.all_finite()) detail::throw_non_finite(x, s + dt);
        const double dn = domain.signed_distance(xn);
        if (dn >= 0.0) {
            // Exit inside this step: bisect on the signed distance along a
            // dense RK4 sub-step from x.
            double lo = 0.0, hi = dt;
            Point y_hi = xn, y_lo = x;
            double d_hi = dn, d_lo = domain.signed_distance(x);
            for (int it = 0; it < 200 && d_hi > eps; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) break;
                Point ym = rk4_step(field, x, sg * mid);
                const double dm = domain.signed_distance(ym);
                if (dm >= 0.0) {
                    hi = mid;
                    y_hi = ym;
                    d_hi = dm;
                } else {
                    lo = mid;
                    y_lo = ym;
                    d_lo = dm;
                }
            }
            double t_hit = hi;
            Point hit = y_hi;
            if (d_hi > eps && -d_lo < d_hi) {
                t_hit = lo;
                hit = y_lo;
            }
            on_segment(s, x, s + t_hit, hit);
            out.time = StayTime::finite(s + t_hit);
            out.hit = hit;
            return out;
        }
        if (try_return) {
            const double g = sg * dot(xn - start, f0);
            if (g_prev < 0.0 && g >= 0.0 &&
                distance(xn, start) <= 4.0 * dt * f0_norm + return_tol) {
                double r = dt;
                Point xp = detail::bisect_return(field, x, start, f0, sg, dt, r);
                if (distance(xp, start) <= return_tol) {
                    on_segment(s, x, s + r, xp);
                    out.period = s + r;
                    return out;
                }
            }
            g_prev = g;
        }
        on_segment(s, x, s + dt, xn);
        s += dt;
        x = xn;
    }
    return out;
}

/// Exit search without per-segment work.
ExitResult find_exit(const VectorField& field, const Domain& domain, const Point& start,
                     Direction dir, double horizon, const FlowConfig& config);

struct StayTimes {
    StayTime tau_minus = StayTime::exceeds_horizon();
    StayTime tau_plus = StayTime::exceeds_horizon();
    std::optional<Point> hit_minus;
    std::optional<Point> hit_plus;
    std::optional<double> period;  ///< closed orbit detected (both directions then exceed)
    bool stationary = false;
};

/// Backward and forward stay times of an interior point. Throws NotInterior.
StayTimes stay_times(const VectorField& field, const Domain& domain, const Point& x,
                     const FlowConfig& config);

enum class BoundaryTag { incoming_only, outgoing_only, both, neither };

const char* to_string(BoundaryTag tag) noexcept;

struct BoundaryClass {
    BoundaryTag tag = BoundaryTag::neither;
    bool is_gamma_minus_infinity = false;  ///< in Gamma_- and tau_+ exceeds the horizon
    bool is_gamma_plus_infinity = false;   ///< in Gamma_+ and tau_- exceeds the horizon
    /// Extended stay times (0 on the point's own side); filled when the
    /// infinity flags were requested.
    std::optional<StayTime> tau_minus;
    std::optional<StayTime> tau_plus;

    bool in_gamma_minus() const noexcept {
        return tag == BoundaryTag::incoming_only || tag == BoundaryTag::both;
    }
    bool in_gamma_plus() const noexcept {
        return tag == BoundaryTag::outgoing_only || tag == BoundaryTag::both;
    }
};

/// Probe classification of a boundary point: y is incoming if the forward
/// curve is strictly inside on (0, probe], outgoing if the backward curve is.
/// Throws NotOnBoundary when |signed distance(y)| > exit_tolerance.
BoundaryClass classify_boundary_point(const VectorField& field, const Domain& domain,
                                      const Point& y, const FlowConfig& config,
                                      bool with_infinity_flags = true);

struct CharacteristicRecord {
    Point seed;
    StayTime tau_minus = StayTime::exceeds_horizon();
    StayTime tau_plus = StayTime::exceeds_horizon();
    std::optional<Point> hit_minus;
    std::optional<Point> hit_plus;
    std::optional<double> period;
    std::vector<std::pair<double, Point>> samples;  ///< (s, Phi(seed, s)), s increasing
};

/// Stay times plus `n_samples` states spread uniformly (endpoints included)
/// over [-min(tau_-, T), min(tau_+, T)].
CharacteristicRecord trace(const VectorField& field, const Domain& domain, const Point& x,
                           const FlowConfig& config, std::size_t n_samples);

/// Lazily extended trajectory s -> Phi(seed, dir * s), s >= 0, for
/// evaluation at arbitrary s: states are cached on the grid k*h and
/// off-grid values use one RK4 sub-step from the preceding node.
class CurveSampler {
public:
    CurveSampler(const VectorField& field, Point seed, Direction dir, const FlowConfig& config);

    Point at(double s);

private:
    const VectorField* field_;
    Direction dir_;
    double h_;
    std::vector<Point> nodes_;
};

}  // namespace charflow
