#include "charflow/transport.hpp"

#include <algorithm>
#include <cmath>

#include "charflow/error.hpp"
#include "charflow/quadrature.hpp"

namespace charflow {

namespace {

constexpr double kCurveTol = 1e-11;

double bump(double u) noexcept {
    const double q = 1.0 - u * u;
    return q > 0.0 ? std::exp(-1.0 / q) : 0.0;
}

double bump_derivative(double u) noexcept {
    const double q = 1.0 - u * u;
    return q > 0.0 ? std::exp(-1.0 / q) * (-2.0 * u / (q * q)) : 0.0;
}

void require_interior(const Domain& domain, const Point& x, const char* what) {
    if (!domain.contains(x)) {
        throw Error(ErrorKind::not_interior, std::string(what) + ": " + x.to_string() + " is not inside the domain");
    }
}

// min(tau_-(x), cap) for an interior x.
double backward_reach(const VectorField& field, const Domain& domain, const Point& x, double cap,
                      const FlowConfig& config) {
    const ExitResult ex = find_exit(field, domain, x, Direction::backward, cap, config);
    return ex.time.is_finite() ? std::min(ex.time.value(), cap) : cap;
}

// int_0^len weight(s) f(Phi(x, dir s)) ds by adaptive Simpson on a cached curve.
double curve_integral(const std::function<double(double)>& weight, const PhaseFunction& f,
                      const VectorField& field, const Point& x, Direction dir, double len, double quad_step,
                      const FlowConfig& config) {
    if (len <= 0.0) return 0.0;
    CurveSampler curve(field, x, dir, config);
    const double panel = std::min(quad_step, len / 8.0);
    return adaptive_simpson([&](double s) { return weight(s) * f(curve.at(s)); }, 0.0, len, kCurveTol, panel);
}

}  // namespace

MollifierSpec::MollifierSpec(unsigned n) : n_(n) {
    if (n == 0) throw Error(ErrorKind::invalid_argument, "mollifier index n must be positive");
}

double MollifierSpec::normalization() noexcept {
    static const double c = [] {
        const GaussLegendre gl(20);
        const double mass = gl.integrate(bump, -1.0, 1.0, 64);
        return 2.0 / mass;
    }();
    return c;
}

double MollifierSpec::operator()(double s) const noexcept {
    const double nn = static_cast<double>(n_);
    return nn * normalization() * bump(2.0 * nn * s - 1.0);
}

double MollifierSpec::derivative(double s) const noexcept {
    const double nn = static_cast<double>(n_);
    return 2.0 * nn * nn * normalization() * bump_derivative(2.0 * nn * s - 1.0);
}

double mollify(const PhaseFunction& f, const MollifierSpec& moll, const VectorField& field,
               const Domain& domain, const Point& x, double quad_step, const FlowConfig& config) {
    require_interior(domain, x, "mollify");
    const double len = backward_reach(field, domain, x, moll.support(), config);
    return curve_integral([&](double s) { return moll(s); }, f, field, x, Direction::backward, len, quad_step,
                          config);
}

PhaseFunction mollified(const PhaseFunction& f, const MollifierSpec& moll, const VectorField& field,
                        const Domain& domain, double quad_step, const FlowConfig& config) {
    return PhaseFunction(
        [=](const Point& x) {
            if (!domain.contains(x)) return 0.0;
            return mollify(f, moll, field, domain, x, quad_step, config);
        },
        "mollified(n=" + std::to_string(moll.n()) + ", " + f.description() + ")");
}

double mollified_transport(const PhaseFunction& f, const MollifierSpec& moll, const VectorField& field,
                           const Domain& domain, const Point& x, double quad_step, const FlowConfig& config) {
    require_interior(domain, x, "mollified_transport");
    const double len = backward_reach(field, domain, x, moll.support(), config);
    return -curve_integral([&](double s) { return moll.derivative(s); }, f, field, x, Direction::backward, len,
                           quad_step, config);
}

double apply_transport(const PhaseFunction& f, const VectorField& field, const Point& x, double delta,
                       const FlowConfig& config) {
    if (!(delta > 0.0)) throw Error(ErrorKind::invalid_argument, "apply_transport: delta must be positive");
    auto central = [&](double d) {
        return (f(advance(field, x, -d, config)) - f(advance(field, x, d, config))) / (2.0 * d);
    };
    const double coarse = central(delta);
    const double fine = central(0.5 * delta);
    return (4.0 * fine - coarse) / 3.0;
}

double apply_transport(const PhaseFunction& f, const VectorField& field, const Domain& domain, const Point& x,
                       double delta, const FlowConfig& config) {
    require_interior(domain, x, "apply_transport");
    for (Direction dir : {Direction::backward, Direction::forward}) {
        const ExitResult ex = find_exit(field, domain, x, dir, delta, config);
        if (ex.time.is_finite()) {
            throw Error(ErrorKind::stay_time_too_short,
                        "apply_transport: the curve through " + x.to_string() + " leaves the domain within delta = " +
                            std::to_string(delta));
        }
    }
    return apply_transport(f, field, x, delta, config);
}

PhaseFunction transported(const PhaseFunction& f, const VectorField& field, double delta,
                          const FlowConfig& config) {
    return PhaseFunction([=](const Point& x) { return apply_transport(f, field, x, delta, config); },
                         "transport(" + f.description() + ")");
}

CommuteReport commute_check(const PhaseFunction& f, const MollifierSpec& moll, const VectorField& field,
                            const Domain& domain, const std::vector<Point>& points, double quad_step,
                            const FlowConfig& config, double delta) {
    CommuteReport rep;
    const PhaseFunction smooth = mollified(f, moll, field, domain, quad_step, config);
    const PhaseFunction tf = transported(f, field, delta, config);
    for (const Point& x : points) {
        if (!domain.contains(x)) continue;
        // The differenced points must also see the full mollifier support.
        if (backward_reach(field, domain, x, moll.support() + 2.0 * delta, config) < moll.support() + 2.0 * delta) {
            continue;
        }
        const double a = apply_transport(smooth, field, domain, x, delta, config);
        // Panels finer than delta so that difference quotients of jumps are resolved.
        const double b = mollify(tf, moll, field, domain, x, std::min(quad_step, delta / 4.0), config);
        const double c = mollified_transport(f, moll, field, domain, x, quad_step, config);
        rep.transport_vs_mollify = std::max(rep.transport_vs_mollify, std::abs(a - b));
        rep.transport_vs_kernel = std::max(rep.transport_vs_kernel, std::abs(a - c));
        rep.mollify_vs_kernel = std::max(rep.mollify_vs_kernel, std::abs(b - c));
    }
    rep.max_residual = std::max({rep.transport_vs_mollify, rep.transport_vs_kernel, rep.mollify_vs_kernel});
    return rep;
}

const char* to_string(TraceVia via) noexcept {
    return via == TraceVia::limit_probe ? "limit_probe" : "mild_formula";
}

namespace {

TraceSample one_sided_trace(const PhaseFunction& f, const std::optional<PhaseFunction>& transport,
                            const VectorField& field, const Domain& domain, const Point& y, double t_probe,
                            const FlowConfig& config, BoundarySide side) {
    if (!(t_probe > 0.0)) throw Error(ErrorKind::invalid_argument, "trace: t_probe must be positive");
    const BoundaryClass bc = classify_boundary_point(field, domain, y, config, false);
    const bool ok = side == BoundarySide::gamma_minus ? bc.in_gamma_minus() : bc.in_gamma_plus();
    if (!ok) {
        throw Error(ErrorKind::wrong_side, std::string("trace: ") + y.to_string() + " is " + to_string(bc.tag) +
                                               ", not on " + to_string(side));
    }
    // Into the domain: forward from Gamma_-, backward from Gamma_+.
    const Direction dir = side == BoundarySide::gamma_minus ? Direction::forward : Direction::backward;
    const ExitResult ex = find_exit(field, domain, y, dir, t_probe, config);
    if (ex.time.is_finite()) {
        throw Error(ErrorKind::stay_time_too_short,
                    "trace: the curve from " + y.to_string() + " leaves the domain before t_probe");
    }
    const double sg = sign(dir);
    const double v1 = f(advance(field, y, sg * t_probe, config));
    const double v2 = f(advance(field, y, sg * 0.5 * t_probe, config));
    const double v3 = f(advance(field, y, sg * 0.25 * t_probe, config));
    const double r1 = 2.0 * v2 - v1, r2 = 2.0 * v3 - v2;

    TraceSample out;
    out.y = y;
    out.side = side;
    out.limit_value = (4.0 * r2 - r1) / 3.0;
    out.value = out.limit_value;
    out.via = TraceVia::limit_probe;
    if (transport) {
        // f(y) = f(Phi(y, t)) + int_0^t Tf(Phi(y, s)) ds, and mirrored.
        const double integral =
            curve_integral([](double) { return 1.0; }, *transport, field, y, dir, t_probe, t_probe / 4.0, config);
        out.mild_value = v1 + sg * integral;
        out.value = *out.mild_value;
        out.via = TraceVia::mild_formula;
    }
    return out;
}

}  // namespace

TraceSample trace_minus(const PhaseFunction& f, const std::optional<PhaseFunction>& transport,
                        const VectorField& field, const Domain& domain, const Point& y, double t_probe,
                        const FlowConfig& config) {
    return one_sided_trace(f, transport, field, domain, y, t_probe, config, BoundarySide::gamma_minus);
}

TraceSample trace_plus(const PhaseFunction& f, const std::optional<PhaseFunction>& transport,
                       const VectorField& field, const Domain& domain, const Point& y, double t_probe,
                       const FlowConfig& config) {
    return one_sided_trace(f, transport, field, domain, y, t_probe, config, BoundarySide::gamma_plus);
}

}  // namespace charflow
