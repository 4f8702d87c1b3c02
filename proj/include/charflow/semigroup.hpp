#pragma once

// The no-reentry semigroup U_0(t) f(x) = f(Phi(x, -t)) [t < tau_-(x)], the
// resolvent of its generator, the boundary value problem
// (lambda - T) f = g, B^- f = u, and the Green and norm identities.

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "charflow/domain.hpp"
#include "charflow/field.hpp"
#include "charflow/flow.hpp"
#include "charflow/measure.hpp"
#include "charflow/measures.hpp"
#include "charflow/phase_function.hpp"

namespace charflow {

struct SemigroupQuery {
    double t = 0.0;
    PhaseFunction f0;
    std::vector<Point> points;
};

/// U_0(t) f0 as a lazily evaluated function; zero outside the domain and at
/// points with tau_-(x) <= t. Throws InvalidArgument for t < 0.
PhaseFunction evolve(const PhaseFunction& f0, double t, const VectorField& field, const Domain& domain,
                     const FlowConfig& config);

/// U_0(t) f0 at the query points (evaluated in parallel).
std::vector<double> evolve(const SemigroupQuery& query, const VectorField& field, const Domain& domain,
                           const FlowConfig& config);

struct BvpProblem {
    double lambda = 1.0;
    PhaseFunction g;
    std::optional<PhaseFunction> u;  ///< boundary datum on Gamma_-; none means u = 0
};

/// Counters accumulated over every evaluation of a solution.
struct SolutionDiagnostics {
    std::size_t evaluations = 0;
    std::size_t exited = 0;                 ///< backward curve reached the boundary
    std::size_t periodic = 0;               ///< closed orbit, summed as a geometric series
    std::size_t truncated = 0;              ///< cut at the decay cutoff or the horizon
    std::size_t footpoint_unclassified = 0; ///< exit footpoint not in Gamma_-: u term dropped
    double sup_g = 0.0;                     ///< largest |g| met along curves
    double sup_u = 0.0;                     ///< largest |u| met at footpoints
    double cutoff = 0.0;                    ///< integration length min(T_hor, ln(1e18)/lambda)
    /// e^{-lambda cutoff} (sup|g| / lambda + sup|u|), bounding what truncation dropped.
    double truncation_bound = 0.0;
};

/// One evaluation of the solution formula
///   f(x) = int_0^{tau_-(x)} e^{-lambda s} g(Phi(x, -s)) ds
///        + [tau_-(x) < inf] e^{-lambda tau_-(x)} u(Phi(x, -tau_-(x))).
struct SolutionPoint {
    double value = 0.0;
    double source_term = 0.0;
    double boundary_term = 0.0;
    StayTime tau_minus = StayTime::exceeds_horizon();
    std::optional<Point> footpoint;
    std::optional<double> period;
    bool truncated = false;
    bool footpoint_unclassified = false;
};

class BvpSolution {
public:
    BvpSolution(BvpProblem problem, VectorField field, Domain domain, double quad_step, FlowConfig config);

    /// f(x); zero outside the closure of the domain. On the boundary the
    /// formula gives B^+ f on Gamma_+ and u on Gamma_-.
    double operator()(const Point& x) const { return evaluate(x).value; }
    SolutionPoint evaluate(const Point& x) const;

    /// f as a PhaseFunction sharing this solution's state.
    PhaseFunction function() const;
    /// T f = lambda f - g, as needed by the mild trace formula.
    PhaseFunction transport() const;

    const BvpProblem& problem() const noexcept { return state_->problem; }
    double lambda() const noexcept { return state_->problem.lambda; }
    SolutionDiagnostics diagnostics() const;

private:
    struct State {
        BvpProblem problem;
        VectorField field;
        Domain domain;
        double quad_step;
        FlowConfig config;
        double cutoff;
        mutable std::atomic<std::size_t> evaluations{0}, exited{0}, periodic{0}, truncated{0}, unclassified{0};
        mutable std::atomic<double> sup_g{0.0}, sup_u{0.0};
    };
    std::shared_ptr<const State> state_;
};

/// The resolvent (lambda - T_0)^{-1} g: the u = 0 solution. Throws
/// NonpositiveLambda.
BvpSolution resolvent(double lambda, const PhaseFunction& g, const VectorField& field, const Domain& domain,
                      double quad_step, const FlowConfig& config);

/// Throws NonpositiveLambda.
BvpSolution solve_bvp(const BvpProblem& problem, const VectorField& field, const Domain& domain,
                      double quad_step, const FlowConfig& config);

/// Options shared by the Green and norm identity checks.
struct IdentityOptions {
    DomainQuadrature quadrature = TensorGrid{160};
    std::size_t per_cell = 4;   ///< boundary nodes per mesh cell
    double t_probe = 1e-2;      ///< B^+ limit probe length (shortened near short curves)
};

struct GreenReport {
    double outgoing = 0.0;      ///< int_{Gamma_+} B^+ f dmu_+
    double lambda_f = 0.0;      ///< lambda int f dmu
    double incoming = 0.0;      ///< int_{Gamma_-} u dmu_-
    double source = 0.0;        ///< int g dmu
    double lhs = 0.0;           ///< outgoing + lambda_f
    double rhs = 0.0;           ///< incoming + source
    double residual = 0.0;      ///< |lhs - rhs| / max(|lhs|, |rhs|, 1)
    double domain_error = 0.0;  ///< quadrature error estimate of lambda_f + source
    double boundary_error = 0.0;///< MC error of the two boundary sums
};

struct NormReport {
    double lhs = 0.0;  ///< ||B^+ f|| + lambda ||f||
    double rhs = 0.0;  ///< ||u|| + ||g||
    double gap = 0.0;  ///< rhs - lhs
    double tolerance = 0.0;  ///< 2% of max(lhs, rhs) plus the quadrature errors
};

struct IdentityReport {
    GreenReport green;
    NormReport norms;
    std::size_t skipped_nodes = 0;  ///< Gamma_+ nodes whose backward curve has zero length
};

/// Both identities from one pass over the domain and boundary nodes.
IdentityReport check_identities(const BvpSolution& sol, const BoundaryMesh& mesh_minus,
                                const BoundaryMesh& mesh_plus, const VectorField& field, const Domain& domain,
                                const Measure& measure, const FlowConfig& config,
                                const IdentityOptions& options = {});

/// int B^+ f dmu_+ + lambda int f dmu = int u dmu_- + int g dmu.
GreenReport green_residual(const BvpSolution& sol, const BoundaryMesh& mesh_minus, const BoundaryMesh& mesh_plus,
                           const VectorField& field, const Domain& domain, const Measure& measure,
                           const FlowConfig& config, const IdentityOptions& options = {});

/// ||B^+ f|| + lambda ||f|| <= ||u|| + ||g||, with equality for g, u >= 0.
NormReport norm_identity_check(const BvpSolution& sol, const BoundaryMesh& mesh_minus,
                               const BoundaryMesh& mesh_plus, const VectorField& field, const Domain& domain,
                               const Measure& measure, const FlowConfig& config,
                               const IdentityOptions& options = {});

struct SemigroupPropertyReport {
    double max_discrepancy = 0.0;
    std::size_t evaluated = 0;
    std::size_t skipped = 0;  ///< points with |tau_- - (t + s)| below the guard
};

/// max |U_0(t) U_0(s) f0 - U_0(t + s) f0| over the points, skipping points
/// within `guard` of the cutoff set tau_- = t + s.
SemigroupPropertyReport semigroup_property_check(const VectorField& field, const Domain& domain,
                                                 const PhaseFunction& f0,
                                                 const std::vector<std::pair<double, double>>& pairs,
                                                 const std::vector<Point>& points, const FlowConfig& config,
                                                 double guard = 1e-6);

/// ||U_0(t) f0 - f0|| for each t.
std::vector<QuadratureResult> strong_continuity(const PhaseFunction& f0, const std::vector<double>& times,
                                                const VectorField& field, const Domain& domain,
                                                const Measure& measure, const FlowConfig& config,
                                                const DomainQuadrature& quadrature);

struct LaplaceReport {
    double max_abs_difference = 0.0;
    std::vector<double> semigroup_values;  ///< int_0^T e^{-lambda t} U_0(t) g(x) dt
    std::vector<double> resolvent_values;
};

/// Compares the Laplace transform of t -> U_0(t) g(x), integrated on
/// [0, min(T_hor, 50/lambda)] by adaptive Simpson, with the resolvent.
LaplaceReport laplace_check(double lambda, const PhaseFunction& g, const std::vector<Point>& points,
                            const VectorField& field, const Domain& domain, double quad_step,
                            const FlowConfig& config);

}  // namespace charflow
