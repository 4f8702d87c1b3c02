#include "charflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace charflow {

void FlowConfig::validate() const {
    if (!(step > 0.0) || !std::isfinite(step)) {
        throw Error(ErrorKind::invalid_argument, "flow step h must be positive");
    }
    if (!(horizon > step) || !std::isfinite(horizon)) {
        throw Error(ErrorKind::invalid_argument, "flow horizon must be finite and exceed the step");
    }
    if (!(exit_tolerance > 0.0)) {
        throw Error(ErrorKind::invalid_argument, "exit tolerance must be positive");
    }
    if (probe_window < 0.0) throw Error(ErrorKind::invalid_argument, "probe window must be nonnegative");
}

double StayTime::value() const {
    if (!finite_) throw Error(ErrorKind::invalid_argument, "stay time exceeds the horizon");
    return t_;
}

std::string StayTime::to_string() const {
    if (!finite_) return "ExceedsHorizon";
    std::ostringstream os;
    os.precision(17);
    os << t_;
    return os.str();
}

namespace detail {

void throw_non_finite(const Point& x, double s) {
    std::ostringstream os;
    os << "non-finite state while integrating from " << x.to_string() << " at |s| = " << s;
    throw Error(ErrorKind::non_finite_state, os.str());
}

Point bisect_return(const VectorField& field, const Point& x, const Point& start, const Point& f0,
                    double dir, double dt, double& r) {
    // g(s) = dir * (Phi(x, dir*s) - start) . F(start) changes sign from - to + on [0, dt].
    double lo = 0.0, hi = dt;
    Point y_hi = rk4_step(field, x, dir * dt);
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        Point ym = rk4_step(field, x, dir * mid);
        if (dir * dot(ym - start, f0) >= 0.0) {
            hi = mid;
            y_hi = ym;
        } else {
            lo = mid;
        }
    }
    r = hi;
    return y_hi;
}

}  // namespace detail

Point advance(const VectorField& field, const Point& x, double t, const FlowConfig& config) {
    if (x.size() != field.dimension()) {
        throw Error(ErrorKind::dimension_mismatch, "advance: point dimension does not match the field");
    }
    if (!x.all_finite()) throw Error(ErrorKind::non_finite_state, "advance: non-finite start " + x.to_string());
    if (t == 0.0) return x;
    const double span = std::abs(t);
    const auto steps = static_cast<std::size_t>(std::ceil(span / config.step - 1e-9));
    const double dt = t / static_cast<double>(std::max<std::size_t>(steps, 1));
    Point y = x;
    for (std::size_t k = 0; k < std::max<std::size_t>(steps, 1); ++k) {
        y = rk4_step(field, y, dt);
        if (!y.all_finite()) detail::throw_non_finite(x, std::abs(dt) * static_cast<double>(k + 1));
    }
    return y;
}

ExitResult find_exit(const VectorField& field, const Domain& domain, const Point& start,
                     Direction dir, double horizon, const FlowConfig& config) {
    return march(field, domain, start, dir, horizon, config.step, config,
                 [](double, const Point&, double, const Point&) {});
}

StayTimes stay_times(const VectorField& field, const Domain& domain, const Point& x,
                     const FlowConfig& config) {
    if (x.size() != domain.dimension() || x.size() != field.dimension()) {
        throw Error(ErrorKind::dimension_mismatch, "stay_times: dimension mismatch");
    }
    if (!domain.contains(x)) {
        throw Error(ErrorKind::not_interior, "stay_times: " + x.to_string() + " is not inside the domain");
    }
    StayTimes st;
    const ExitResult fwd = find_exit(field, domain, x, Direction::forward, config.horizon, config);
    st.stationary = fwd.stationary;
    st.tau_plus = fwd.time;
    st.hit_plus = fwd.hit;
    if (fwd.period) {
        // A closed interior orbit never leaves in either direction.
        st.period = fwd.period;
        return st;
    }
    if (fwd.stationary) return st;
    const ExitResult bwd = find_exit(field, domain, x, Direction::backward, config.horizon, config);
    st.tau_minus = bwd.time;
    st.hit_minus = bwd.hit;
    if (bwd.period) st.period = bwd.period;
    return st;
}

const char* to_string(BoundaryTag tag) noexcept {
    switch (tag) {
        case BoundaryTag::incoming_only: return "IncomingOnly";
        case BoundaryTag::outgoing_only: return "OutgoingOnly";
        case BoundaryTag::both: return "Both";
        case BoundaryTag::neither: return "Neither";
    }
    return "Neither";
}

namespace {

// True if s -> Phi(y, dir*s) stays strictly inside (sdf < -eta) at 16
// evenly spaced times in (0, delta].
bool probe_inside(const VectorField& field, const Domain& domain, const Point& y, double dir,
                  double delta, double eta) {
    constexpr int kSub = 16;
    const double dt = delta / kSub;
    Point x = y;
    for (int k = 0; k < kSub; ++k) {
        x = rk4_step(field, x, dir * dt);
        if (!x.all_finite()) detail::throw_non_finite(y, dt * (k + 1));
        if (!(domain.signed_distance(x) < -eta)) return false;
    }
    return true;
}

}  // namespace

BoundaryClass classify_boundary_point(const VectorField& field, const Domain& domain,
                                      const Point& y, const FlowConfig& config,
                                      bool with_infinity_flags) {
    if (y.size() != domain.dimension() || y.size() != field.dimension()) {
        throw Error(ErrorKind::dimension_mismatch, "classify_boundary_point: dimension mismatch");
    }
    const double d = domain.signed_distance(y);
    if (!(std::abs(d) <= config.exit_tolerance)) {
        std::ostringstream os;
        os << "classify_boundary_point: " << y.to_string() << " is at signed distance " << d
           << " from the boundary";
        throw Error(ErrorKind::not_on_boundary, os.str());
    }
    const double delta = config.probe();
    const double eta = config.exit_tolerance;
    const bool incoming = probe_inside(field, domain, y, 1.0, delta, eta);
    const bool outgoing = probe_inside(field, domain, y, -1.0, delta, eta);

    BoundaryClass bc;
    if (incoming && outgoing) {
        bc.tag = BoundaryTag::both;
    } else if (incoming) {
        bc.tag = BoundaryTag::incoming_only;
    } else if (outgoing) {
        bc.tag = BoundaryTag::outgoing_only;
    } else {
        bc.tag = BoundaryTag::neither;
    }
    if (!with_infinity_flags) return bc;

    // Extended stay times: tau_-(y) = 0 on Gamma_-, tau_+(y) = 0 on Gamma_+.
    if (bc.in_gamma_minus()) {
        bc.tau_minus = StayTime::finite(0.0);
        const ExitResult fwd = find_exit(field, domain, y, Direction::forward, config.horizon, config);
        bc.tau_plus = fwd.time;
        bc.is_gamma_minus_infinity = fwd.time.exceeds();
    }
    if (bc.in_gamma_plus()) {
        bc.tau_plus = StayTime::finite(0.0);
        const ExitResult bwd = find_exit(field, domain, y, Direction::backward, config.horizon, config);
        bc.tau_minus = bwd.time;
        bc.is_gamma_plus_infinity = bwd.time.exceeds();
    }
    if (bc.tag == BoundaryTag::both) {
        // Both one-sided conventions apply; report the traversal times.
        bc.tau_minus = StayTime::finite(0.0);
        bc.tau_plus = StayTime::finite(0.0);
    }
    return bc;
}

namespace {

// States at sorted nonnegative times s_k along dir, reusing one sweep.
void sweep(const VectorField& field, const Point& x, Direction dir, const std::vector<double>& times,
           std::optional<double> period, const FlowConfig& config, std::vector<Point>& out) {
    out.clear();
    double s = 0.0;
    Point y = x;
    for (double target : times) {
        if (period && *period > 0.0) {
            // Restart from the seed for the reduced time; the orbit is closed.
            const double r = std::fmod(target, *period);
            out.push_back(advance(field, x, sign(dir) * r, config));
            continue;
        }
        const double gap = target - s;
        if (gap > 0.0) {
            y = advance(field, y, sign(dir) * gap, config);
            s = target;
        }
        out.push_back(y);
    }
}

}  // namespace

CharacteristicRecord trace(const VectorField& field, const Domain& domain, const Point& x,
                           const FlowConfig& config, std::size_t n_samples) {
    const StayTimes st = stay_times(field, domain, x, config);
    CharacteristicRecord rec;
    rec.seed = x;
    rec.tau_minus = st.tau_minus;
    rec.tau_plus = st.tau_plus;
    rec.hit_minus = st.hit_minus;
    rec.hit_plus = st.hit_plus;
    rec.period = st.period;
    if (n_samples == 0) return rec;

    const double lo = -std::min(st.tau_minus.value_or(config.horizon), config.horizon);
    const double hi = std::min(st.tau_plus.value_or(config.horizon), config.horizon);
    std::vector<double> s_all(n_samples);
    if (n_samples == 1) {
        s_all[0] = 0.0;
    } else {
        for (std::size_t k = 0; k < n_samples; ++k) {
            s_all[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n_samples - 1);
        }
        s_all.back() = hi;
    }
    if (st.stationary) {
        for (double s : s_all) rec.samples.emplace_back(s, x);
        return rec;
    }

    std::vector<double> neg, pos;  // magnitudes, increasing
    for (double s : s_all) (s < 0.0 ? neg : pos).push_back(std::abs(s));
    std::reverse(neg.begin(), neg.end());
    std::vector<Point> neg_pts, pos_pts;
    sweep(field, x, Direction::backward, neg, st.period, config, neg_pts);
    sweep(field, x, Direction::forward, pos, st.period, config, pos_pts);

    // Snap the endpoint samples onto the detected hit points.
    if (!neg_pts.empty() && st.hit_minus && neg.back() == -lo) neg_pts.back() = *st.hit_minus;
    if (!pos_pts.empty() && st.hit_plus && pos.back() == hi) pos_pts.back() = *st.hit_plus;

    for (std::size_t k = neg.size(); k-- > 0;) rec.samples.emplace_back(-neg[k], neg_pts[k]);
    for (std::size_t k = 0; k < pos.size(); ++k) rec.samples.emplace_back(pos[k], pos_pts[k]);
    return rec;
}

CurveSampler::CurveSampler(const VectorField& field, Point seed, Direction dir, const FlowConfig& config)
    : field_(&field), dir_(dir), h_(config.step) {
    nodes_.push_back(std::move(seed));
}

Point CurveSampler::at(double s) {
    if (s <= 0.0) return nodes_.front();
    const double q = s / h_;
    auto k = static_cast<std::size_t>(q);
    while (nodes_.size() <= k) {
        Point next = rk4_step(*field_, nodes_.back(), sign(dir_) * h_);
        if (!next.all_finite()) detail::throw_non_finite(nodes_.front(), h_ * static_cast<double>(nodes_.size()));
        nodes_.push_back(next);
    }
    const double rem = s - static_cast<double>(k) * h_;
    if (rem <= 0.0) return nodes_[k];
    return rk4_step(*field_, nodes_[k], sign(dir_) * rem);
}

}  // namespace charflow
