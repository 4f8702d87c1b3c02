#pragma once

// Mollification along characteristics, the transport operator T f = -F.grad f
// evaluated as a derivative along the flow, and the boundary traces B+/-.

#include <optional>
#include <vector>

#include "charflow/domain.hpp"
#include "charflow/field.hpp"
#include "charflow/flow.hpp"
#include "charflow/measures.hpp"
#include "charflow/phase_function.hpp"

namespace charflow {

/// Bump rho_n(s) = n C exp(-1 / (1 - (2ns - 1)^2)) on (0, 1/n), zero elsewhere,
/// with C chosen so that rho_n has unit mass.
class MollifierSpec {
public:
    explicit MollifierSpec(unsigned n);

    unsigned n() const noexcept { return n_; }
    double support() const noexcept { return 1.0 / n_; }
    double operator()(double s) const noexcept;
    double derivative(double s) const noexcept;

    /// C = 2 / int_{-1}^{1} exp(-1/(1-u^2)) du.
    static double normalization() noexcept;

private:
    unsigned n_;
};

/// (rho_n <> f)(x) = int_0^{min(tau_-(x), 1/n)} rho_n(s) f(Phi(x, -s)) ds.
/// Throws NotInterior.
double mollify(const PhaseFunction& f, const MollifierSpec& moll, const VectorField& field,
               const Domain& domain, const Point& x, double quad_step, const FlowConfig& config);

/// The mollified function as a PhaseFunction (zero outside the domain).
PhaseFunction mollified(const PhaseFunction& f, const MollifierSpec& moll, const VectorField& field,
                        const Domain& domain, double quad_step, const FlowConfig& config);

/// -int_0^{tau_-(x)} rho_n'(s) f(Phi(x, -s)) ds, the transport of the
/// mollified function written without differentiating f. Throws NotInterior.
double mollified_transport(const PhaseFunction& f, const MollifierSpec& moll, const VectorField& field,
                           const Domain& domain, const Point& x, double quad_step, const FlowConfig& config);

/// T f(x) = d/dt f(Phi(x, -t)) at t = 0 by central differences
/// D(d) = (f(Phi(x,-d)) - f(Phi(x,d))) / (2d), Richardson-combined as
/// (4 D(d/2) - D(d)) / 3.
double apply_transport(const PhaseFunction& f, const VectorField& field, const Point& x, double delta,
                       const FlowConfig& config);

/// Same, requiring delta < min(tau_-(x), tau_+(x)); throws StayTimeTooShort
/// or NotInterior.
double apply_transport(const PhaseFunction& f, const VectorField& field, const Domain& domain, const Point& x,
                       double delta, const FlowConfig& config);

/// T f as a PhaseFunction.
PhaseFunction transported(const PhaseFunction& f, const VectorField& field, double delta,
                          const FlowConfig& config);

struct CommuteReport {
    double max_residual = 0.0;       ///< max of the three pairwise differences below
    double transport_vs_mollify = 0.0;  ///< |T(rho <> f) - rho <> (T f)|
    double transport_vs_kernel = 0.0;   ///< |T(rho <> f) + int rho' f|
    double mollify_vs_kernel = 0.0;     ///< |rho <> (T f) + int rho' f|
};

/// Compares T(rho_n <> f), rho_n <> T f and -int rho_n' f at interior points
/// with tau_- > 1/n (others are skipped).
CommuteReport commute_check(const PhaseFunction& f, const MollifierSpec& moll, const VectorField& field,
                            const Domain& domain, const std::vector<Point>& points, double quad_step,
                            const FlowConfig& config, double delta = 1e-3);

enum class TraceVia { limit_probe, mild_formula };

const char* to_string(TraceVia via) noexcept;

struct TraceSample {
    Point y;
    BoundarySide side = BoundarySide::gamma_minus;
    double value = 0.0;  ///< the reported value (per `via`)
    TraceVia via = TraceVia::limit_probe;
    double limit_value = 0.0;
    std::optional<double> mild_value;
};

/// B^- f(y) for y in Gamma_-: the limit of f(Phi(y, t)) as t -> 0+, from
/// t_probe, t_probe/2, t_probe/4 by Richardson extrapolation; with
/// `transport` (= T f) also f(Phi(y, t)) + int_0^t T f(Phi(y, s)) ds.
/// Throws WrongSide unless y is IncomingOnly or Both, StayTimeTooShort
/// unless t_probe < tau_+(y).
TraceSample trace_minus(const PhaseFunction& f, const std::optional<PhaseFunction>& transport,
                        const VectorField& field, const Domain& domain, const Point& y, double t_probe,
                        const FlowConfig& config);

/// B^+ f(y) for y in Gamma_+, mirrored: f(Phi(y, -t)) - int_0^t T f(Phi(y, -s)) ds.
TraceSample trace_plus(const PhaseFunction& f, const std::optional<PhaseFunction>& transport,
                       const VectorField& field, const Domain& domain, const Point& y, double t_probe,
                       const FlowConfig& config);

}  // namespace charflow
