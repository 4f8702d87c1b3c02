#include "charflow/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "charflow/error.hpp"
#include "charflow/parallel.hpp"
#include "charflow/quadrature.hpp"
#include "charflow/transport.hpp"

namespace charflow {

namespace {

// e^{-lambda L} = 1e-18 at the cutoff.
const double kDecayLog = std::log(1e18);

void atomic_max(std::atomic<double>& a, double v) noexcept {
    double cur = a.load(std::memory_order_relaxed);
    while (v > cur && !a.compare_exchange_weak(cur, v, std::memory_order_relaxed)) {
    }
}

void require_positive(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw Error(ErrorKind::nonpositive_lambda, "lambda must be positive, got " + std::to_string(lambda));
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Semigroup

PhaseFunction evolve(const PhaseFunction& f0, double t, const VectorField& field, const Domain& domain,
                     const FlowConfig& config) {
    if (!(t >= 0.0)) throw Error(ErrorKind::invalid_argument, "evolve: t must be nonnegative");
    return PhaseFunction(
        [=](const Point& x) {
            if (!domain.contains(x)) return 0.0;
            if (t == 0.0) return f0(x);
            Point last = x;
            const ExitResult ex = march(field, domain, x, Direction::backward, t,
                                        std::numeric_limits<double>::infinity(), config,
                                        [&](double, const Point&, double, const Point& x1) { last = x1; });
            // Open interval: an exit at s <= t removes the value.
            if (ex.time.is_finite()) return 0.0;
            if (ex.period) return f0(advance(field, x, -std::fmod(t, *ex.period), config));
            if (ex.stationary) return f0(x);
            return f0(last);
        },
        "U0(" + std::to_string(t) + ")[" + f0.description() + "]");
}

std::vector<double> evolve(const SemigroupQuery& query, const VectorField& field, const Domain& domain,
                           const FlowConfig& config) {
    const PhaseFunction u = evolve(query.f0, query.t, field, domain, config);
    std::vector<double> out(query.points.size(), 0.0);
    parallel_for(out.size(), [&](std::size_t i) { out[i] = u(query.points[i]); });
    return out;
}

// ---------------------------------------------------------------------------
// Resolvent and boundary value problem

BvpSolution::BvpSolution(BvpProblem problem, VectorField field, Domain domain, double quad_step,
                         FlowConfig config) {
    require_positive(problem.lambda);
    if (!(quad_step > 0.0)) throw Error(ErrorKind::invalid_argument, "quad_step must be positive");
    config.validate();
    auto st = std::make_shared<State>();
    st->cutoff = std::min(config.horizon, kDecayLog / problem.lambda);
    st->problem = std::move(problem);
    st->field = std::move(field);
    st->domain = std::move(domain);
    st->quad_step = quad_step;
    st->config = config;
    state_ = std::move(st);
}

SolutionPoint BvpSolution::evaluate(const Point& x) const {
    const State& st = *state_;
    st.evaluations.fetch_add(1, std::memory_order_relaxed);
    SolutionPoint out;
    if (st.domain.signed_distance(x) > st.config.exit_tolerance) return out;

    const double lambda = st.problem.lambda;
    const PhaseFunction& g = st.problem.g;
    const bool g_zero = g.constant_value() == 0.0;
    double sup_g = 0.0;
    auto weighted = [&](double s, const Point& y) {
        const double v = g(y);
        sup_g = std::max(sup_g, std::abs(v));
        return std::exp(-lambda * s) * v;
    };

    // Simpson per RK4 segment, the midpoint from a half step.
    double integral = 0.0;
    double prev_s = -1.0, prev_val = 0.0;
    const ExitResult ex =
        march(st.field, st.domain, x, Direction::backward, st.cutoff, st.quad_step, st.config,
              [&](double s0, const Point& x0, double s1, const Point& x1) {
                  if (g_zero) return;
                  const double ds = s1 - s0;
                  const double v0 = s0 == prev_s ? prev_val : weighted(s0, x0);
                  const double vm = weighted(0.5 * (s0 + s1), rk4_step(st.field, x0, -0.5 * ds));
                  const double v1 = weighted(s1, x1);
                  integral += ds / 6.0 * (v0 + 4.0 * vm + v1);
                  prev_s = s1;
                  prev_val = v1;
              });

    if (ex.time.is_finite()) {
        st.exited.fetch_add(1, std::memory_order_relaxed);
        const double tau = ex.time.value();
        out.tau_minus = ex.time;
        out.footpoint = ex.hit;
        out.source_term = integral;
        if (st.problem.u) {
            bool incoming = false;
            try {
                incoming = classify_boundary_point(st.field, st.domain, *ex.hit, st.config, false).in_gamma_minus();
            } catch (const Error&) {
                incoming = false;
            }
            if (incoming) {
                const double uv = (*st.problem.u)(*ex.hit);
                atomic_max(st.sup_u, std::abs(uv));
                out.boundary_term = std::exp(-lambda * tau) * uv;
            } else {
                out.footpoint_unclassified = true;
                st.unclassified.fetch_add(1, std::memory_order_relaxed);
            }
        }
    } else if (ex.period) {
        st.periodic.fetch_add(1, std::memory_order_relaxed);
        out.period = ex.period;
        out.source_term = integral / (1.0 - std::exp(-lambda * *ex.period));
    } else {
        st.truncated.fetch_add(1, std::memory_order_relaxed);
        out.truncated = true;
        if (ex.stationary) {
            out.source_term = g_zero ? 0.0 : weighted(0.0, x) * (1.0 - std::exp(-lambda * st.cutoff)) / lambda;
        } else {
            out.source_term = integral;
        }
    }
    atomic_max(st.sup_g, sup_g);
    out.value = out.source_term + out.boundary_term;
    return out;
}

PhaseFunction BvpSolution::function() const {
    const BvpSolution self = *this;
    std::string desc = "bvp(lambda=" + std::to_string(lambda()) + ", g=" + problem().g.description();
    if (problem().u) desc += ", u=" + problem().u->description();
    return PhaseFunction([self](const Point& x) { return self(x); }, desc + ")");
}

PhaseFunction BvpSolution::transport() const {
    const BvpSolution self = *this;
    return PhaseFunction(
        [self](const Point& x) {
            if (!self.state_->domain.contains(x)) return 0.0;
            return self.lambda() * self(x) - self.problem().g(x);
        },
        "lambda f - g");
}

SolutionDiagnostics BvpSolution::diagnostics() const {
    const State& st = *state_;
    SolutionDiagnostics d;
    d.evaluations = st.evaluations.load();
    d.exited = st.exited.load();
    d.periodic = st.periodic.load();
    d.truncated = st.truncated.load();
    d.footpoint_unclassified = st.unclassified.load();
    d.sup_g = st.sup_g.load();
    d.sup_u = st.sup_u.load();
    d.cutoff = st.cutoff;
    d.truncation_bound = std::exp(-st.problem.lambda * st.cutoff) * (d.sup_g / st.problem.lambda + d.sup_u);
    return d;
}

BvpSolution resolvent(double lambda, const PhaseFunction& g, const VectorField& field, const Domain& domain,
                      double quad_step, const FlowConfig& config) {
    return BvpSolution(BvpProblem{lambda, g, std::nullopt}, field, domain, quad_step, config);
}

BvpSolution solve_bvp(const BvpProblem& problem, const VectorField& field, const Domain& domain,
                      double quad_step, const FlowConfig& config) {
    return BvpSolution(problem, field, domain, quad_step, config);
}

// ---------------------------------------------------------------------------
// Green's formula and the norm identity

IdentityReport check_identities(const BvpSolution& sol, const BoundaryMesh& mesh_minus,
                                const BoundaryMesh& mesh_plus, const VectorField& field, const Domain& domain,
                                const Measure& measure, const FlowConfig& config,
                                const IdentityOptions& options) {
    if (mesh_minus.side != BoundarySide::gamma_minus || mesh_plus.side != BoundarySide::gamma_plus) {
        throw Error(ErrorKind::side_mismatch, "check_identities: expected a Gamma_- and a Gamma_+ mesh");
    }
    const auto bb = domain.bounding_box();
    if (!bb) throw Error(ErrorKind::unsupported, "check_identities: the domain must be bounded");
    IdentityReport rep;
    const double lambda = sol.lambda();
    const PhaseFunction& g = sol.problem().g;

    // Domain terms: f, |f|, g, |g| from one evaluation per point.
    const auto dom = integrate_domain_many(
        [&](const Point& x, std::span<double> out) {
            const double fv = sol(x);
            const double gv = g(x);
            out[0] = fv;
            out[1] = std::abs(fv);
            out[2] = gv;
            out[3] = std::abs(gv);
        },
        4, *bb, domain, measure, options.quadrature);

    // Incoming: u at Gamma_- nodes.
    double in_signed = 0.0, in_abs = 0.0, in_err = 0.0;
    if (sol.problem().u) {
        const auto nodes = mesh_minus.nodes(options.per_cell);
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            const double uv = (*sol.problem().u)(nodes[k].first);
            const double cell_err = mesh_minus.cells[k / options.per_cell].weight_error / options.per_cell;
            in_signed += nodes[k].second * uv;
            in_abs += nodes[k].second * std::abs(uv);
            in_err += cell_err * std::abs(uv);
        }
    }

    // Outgoing: B^+ f at Gamma_+ nodes by the limit probe.
    const auto nodes = mesh_plus.nodes(options.per_cell);
    std::vector<double> bplus(nodes.size(), 0.0);
    std::vector<unsigned char> skipped(nodes.size(), 0);
    const PhaseFunction f = sol.function();
    parallel_for(nodes.size(), [&](std::size_t k) {
        const Point& z = nodes[k].first;
        const ExitResult ex = find_exit(field, domain, z, Direction::backward, 2.0 * options.t_probe, config);
        double t = options.t_probe;
        if (ex.time.is_finite()) {
            if (ex.time.value() <= 0.0) {
                skipped[k] = 1;
                return;
            }
            t = std::min(t, 0.5 * ex.time.value());
        }
        try {
            bplus[k] = trace_plus(f, std::nullopt, field, domain, z, t, config).value;
        } catch (const Error&) {
            skipped[k] = 1;
        }
    });
    double out_signed = 0.0, out_abs = 0.0, out_err = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (skipped[k]) {
            ++rep.skipped_nodes;
            continue;
        }
        const double cell_err = mesh_plus.cells[k / options.per_cell].weight_error / options.per_cell;
        out_signed += nodes[k].second * bplus[k];
        out_abs += nodes[k].second * std::abs(bplus[k]);
        out_err += cell_err * std::abs(bplus[k]);
    }

    GreenReport& gr = rep.green;
    gr.outgoing = out_signed;
    gr.lambda_f = lambda * dom[0].value;
    gr.incoming = in_signed;
    gr.source = dom[2].value;
    gr.lhs = gr.outgoing + gr.lambda_f;
    gr.rhs = gr.incoming + gr.source;
    gr.residual = std::abs(gr.lhs - gr.rhs) / std::max({std::abs(gr.lhs), std::abs(gr.rhs), 1.0});
    gr.domain_error = lambda * dom[0].error + dom[2].error;
    gr.boundary_error = out_err + in_err;

    NormReport& nr = rep.norms;
    nr.lhs = out_abs + lambda * dom[1].value;
    nr.rhs = in_abs + dom[3].value;
    nr.gap = nr.rhs - nr.lhs;
    nr.tolerance = 0.02 * std::max(nr.lhs, nr.rhs) + lambda * dom[1].error + dom[3].error + out_err + in_err;
    return rep;
}

GreenReport green_residual(const BvpSolution& sol, const BoundaryMesh& mesh_minus, const BoundaryMesh& mesh_plus,
                           const VectorField& field, const Domain& domain, const Measure& measure,
                           const FlowConfig& config, const IdentityOptions& options) {
    return check_identities(sol, mesh_minus, mesh_plus, field, domain, measure, config, options).green;
}

NormReport norm_identity_check(const BvpSolution& sol, const BoundaryMesh& mesh_minus,
                               const BoundaryMesh& mesh_plus, const VectorField& field, const Domain& domain,
                               const Measure& measure, const FlowConfig& config,
                               const IdentityOptions& options) {
    return check_identities(sol, mesh_minus, mesh_plus, field, domain, measure, config, options).norms;
}

// ---------------------------------------------------------------------------
// Semigroup properties

SemigroupPropertyReport semigroup_property_check(const VectorField& field, const Domain& domain,
                                                 const PhaseFunction& f0,
                                                 const std::vector<std::pair<double, double>>& pairs,
                                                 const std::vector<Point>& points, const FlowConfig& config,
                                                 double guard) {
    SemigroupPropertyReport rep;
    for (const auto& [t, s] : pairs) {
        const PhaseFunction lhs = evolve(evolve(f0, s, field, domain, config), t, field, domain, config);
        const PhaseFunction rhs = evolve(f0, t + s, field, domain, config);
        std::vector<double> diff(points.size(), -1.0);
        parallel_for(points.size(), [&](std::size_t i) {
            const Point& x = points[i];
            if (domain.contains(x)) {
                const ExitResult ex = find_exit(field, domain, x, Direction::backward, t + s + 1.0, config);
                if (ex.time.is_finite() && std::abs(ex.time.value() - (t + s)) < guard) return;
            }
            diff[i] = std::abs(lhs(x) - rhs(x));
        });
        for (double d : diff) {
            if (d < 0.0) {
                ++rep.skipped;
            } else {
                ++rep.evaluated;
                rep.max_discrepancy = std::max(rep.max_discrepancy, d);
            }
        }
    }
    return rep;
}

std::vector<QuadratureResult> strong_continuity(const PhaseFunction& f0, const std::vector<double>& times,
                                                const VectorField& field, const Domain& domain,
                                                const Measure& measure, const FlowConfig& config,
                                                const DomainQuadrature& quadrature) {
    std::vector<QuadratureResult> out;
    out.reserve(times.size());
    for (double t : times) {
        const PhaseFunction ut = evolve(f0, t, field, domain, config);
        const PhaseFunction diff([=](const Point& x) { return std::abs(ut(x) - f0(x)); }, "|U0(t)f0 - f0|");
        out.push_back(integrate_domain(diff, domain, measure, quadrature));
    }
    return out;
}

LaplaceReport laplace_check(double lambda, const PhaseFunction& g, const std::vector<Point>& points,
                            const VectorField& field, const Domain& domain, double quad_step,
                            const FlowConfig& config) {
    require_positive(lambda);
    const BvpSolution res = resolvent(lambda, g, field, domain, quad_step, config);
    const double t_max = std::min(config.horizon, 50.0 / lambda);
    LaplaceReport rep;
    rep.semigroup_values.assign(points.size(), 0.0);
    rep.resolvent_values.assign(points.size(), 0.0);
    parallel_for(points.size(), [&](std::size_t i) {
        const Point& x = points[i];
        rep.semigroup_values[i] = adaptive_simpson(
            [&](double t) { return std::exp(-lambda * t) * evolve(g, t, field, domain, config)(x); }, 0.0, t_max,
            1e-9, std::min(0.5, t_max / 8.0));
        rep.resolvent_values[i] = res(x);
    });
    for (std::size_t i = 0; i < points.size(); ++i) {
        rep.max_abs_difference =
            std::max(rep.max_abs_difference, std::abs(rep.semigroup_values[i] - rep.resolvent_values[i]));
    }
    return rep;
}

}  // namespace charflow
