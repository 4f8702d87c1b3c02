#include "charflow/cli/suites.hpp"

#include <algorithm>
#include <cmath>

#include "charflow/error.hpp"
#include "charflow/measures.hpp"
#include "charflow/parallel.hpp"
#include "charflow/rng.hpp"
#include "charflow/semigroup.hpp"
#include "charflow/transport.hpp"

namespace charflow::cli {

using nlohmann::json;

namespace {

struct Fixture {
    const RunConfig& cfg;
    VectorField field;
    Domain domain;
    Measure measure;
    FlowConfig flow;
    Box box;

    explicit Fixture(const RunConfig& c)
        : cfg(c),
          field(c.make_field()),
          domain(c.make_domain()),
          measure(c.make_measure()),
          flow(c.numerics.flow),
          box(bounded_box(domain)) {}

    static Box bounded_box(const Domain& d) {
        const auto bb = d.bounding_box();
        if (!bb) throw Error(ErrorKind::unsupported, "check suites need a bounded domain");
        return *bb;
    }

    std::uint64_t seed() const { return cfg.numerics.rng_seed; }

    DomainQuadrature quadrature() const {
        if (measure.is_lebesgue()) return TensorGrid{cfg.numerics.grid};
        return MonteCarlo{cfg.numerics.mc_samples, seed()};
    }

    std::vector<Point> interior_points(std::size_t n, std::uint64_t stream) const {
        Rng rng(seed(), stream);
        std::vector<Point> pts;
        while (pts.size() < n) {
            const Point p = rng.uniform_in(box);
            if (domain.signed_distance(p) < -1e-3) pts.push_back(p);
        }
        return pts;
    }

    /// n points spread over the Gamma_- arcs, away from the arc ends.
    std::vector<Point> incoming_points(std::size_t n) const {
        const auto arcs = side_intervals(field, domain, BoundarySide::gamma_minus, flow);
        const auto pieces = domain.boundary_pieces();
        double total = 0.0;
        for (const auto& a : arcs) total += a.t1 - a.t0;
        std::vector<Point> pts;
        if (total <= 0.0) return pts;
        for (std::size_t k = 0; k < n; ++k) {
            double s = (static_cast<double>(k) + 0.5) / static_cast<double>(n) * total;
            for (const auto& a : arcs) {
                const double len = a.t1 - a.t0;
                if (s <= len) {
                    const double margin = 0.05 * len;
                    const double t = std::clamp(a.t0 + s, a.t0 + margin, a.t1 - margin);
                    pts.push_back(pieces[a.piece].point_at(t));
                    break;
                }
                s -= len;
            }
        }
        return pts;
    }
};

PhaseFunction parse_fn(const std::string& text, std::size_t dim) { return PhaseFunction::parse(text, dim); }

json finish(json report) {
    bool pass = true;
    for (const auto& [k, v] : report["gates"].items()) pass = pass && v.get<bool>();
    report["pass"] = pass;
    return report;
}

// ---------------------------------------------------------------------------

json invariance_suite(const Fixture& fx) {
    const InvarianceReport rep =
        check_invariance(fx.field, fx.measure, fx.box, 0.7, fx.cfg.numerics.mc_samples, fx.seed(), fx.flow);
    json out;
    out["suite"] = "invariance";
    out["t"] = 0.7;
    out["boxes"] = rep.discrepancies.size();
    out["max_discrepancy"] = rep.max_discrepancy;
    out["discrepancies"] = rep.discrepancies;
    out["standard_errors"] = rep.standard_errors;
    out["violation"] = rep.violation;
    out["gates"] = {{"max_discrepancy_below_2pct", rep.max_discrepancy < 0.02}, {"no_violation", !rep.violation}};
    return finish(out);
}

json mollifier_suite(const Fixture& fx, const SuiteOptions& opt) {
    const std::size_t dim = fx.field.dimension();
    // A smooth bump, off-center so that rotation fields move it.
    const Point c = fx.box.center();
    std::string bump = "exp(-10*(";
    for (std::size_t i = 0; i < dim; ++i) {
        const double ci = c[i] + 0.15 * fx.box.extent(i) * (i == 0 ? 1.0 : -0.5);
        bump += (i ? " + (x" : "(x") + std::to_string(i + 1) + " - (" + std::to_string(ci) + "))^2";
    }
    bump += "))";
    const PhaseFunction f = parse_fn(bump, dim);
    const MonteCarlo mc{fx.cfg.numerics.mc_samples, fx.seed()};
    const auto norm_f = integrate_domain_many(
        [&](const Point& x, std::span<double> out) { out[0] = std::abs(f(x)); }, 1, fx.box, fx.domain, fx.measure,
        mc)[0];
    const auto points = fx.interior_points(20, 101);

    json rows = json::array();
    bool decreasing = true, contraction = true, commute = true;
    double prev = std::numeric_limits<double>::infinity();
    for (unsigned n : opt.mollifier_n) {
        const MollifierSpec moll(n);
        const PhaseFunction fn = mollified(f, moll, fx.field, fx.domain, fx.cfg.numerics.quad_step, fx.flow);
        // Same samples for every n, so the comparison is not swamped by MC noise.
        const auto r = integrate_domain_many(
            [&](const Point& x, std::span<double> out) {
                const double a = fn(x), b = f(x);
                out[0] = std::abs(a - b);
                out[1] = std::abs(a);
            },
            2, fx.box, fx.domain, fx.measure, mc);
        const double ratio = r[1].value / norm_f.value;
        const double rel_err = norm_f.error / norm_f.value;
        const CommuteReport cr =
            commute_check(f, moll, fx.field, fx.domain, points, fx.cfg.numerics.quad_step, fx.flow, fx.cfg.numerics.delta);
        rows.push_back({{"n", n},
                        {"l1_distance", r[0].value},
                        {"l1_distance_error", r[0].error},
                        {"contraction_ratio", ratio},
                        {"commute_residual", cr.max_residual}});
        decreasing = decreasing && r[0].value < prev;
        prev = r[0].value;
        contraction = contraction && ratio <= 1.0 + 3.0 * rel_err;
        commute = commute && cr.max_residual < 1e-4;
    }
    json out;
    out["suite"] = "mollifier";
    out["function"] = bump;
    out["norm"] = norm_f.value;
    out["norm_error"] = norm_f.error;
    out["results"] = rows;
    out["gates"] = {{"l1_distance_decreasing", decreasing},
                    {"contraction", contraction},
                    {"commute_residual_below_1e-4", commute}};
    return finish(out);
}

json semigroup_suite(const Fixture& fx, const SuiteOptions& opt) {
    const std::size_t dim = fx.field.dimension();
    const Point c = fx.box.center();
    // Continuous, compactly supported: (r0^2 - |x - c'|^2)_+^2.
    std::string q = "0.25";
    for (std::size_t i = 0; i < dim; ++i) {
        const double ci = c[i] + (i == 0 ? 0.2 : 0.0);
        q += " - (x" + std::to_string(i + 1) + " - (" + std::to_string(ci) + "))^2";
    }
    const PhaseFunction f0 = parse_fn("step(" + q + ") * (" + q + ")^2", dim);
    const auto points = fx.interior_points(200, 202);

    double identity_gap = 0.0;
    const PhaseFunction u0 = evolve(f0, 0.0, fx.field, fx.domain, fx.flow);
    for (const Point& x : points) identity_gap = std::max(identity_gap, std::abs(u0(x) - f0(x)));

    const SemigroupPropertyReport comp =
        semigroup_property_check(fx.field, fx.domain, f0, {{0.3, 0.4}, {1.0, 0.5}}, points, fx.flow);

    const MonteCarlo mc{fx.cfg.numerics.mc_samples, fx.seed()};
    json contraction = json::array();
    bool contracts = true;
    for (double t : {0.5, 2.0}) {
        const PhaseFunction ut = evolve(f0, t, fx.field, fx.domain, fx.flow);
        const auto r = integrate_domain_many(
            [&](const Point& x, std::span<double> out) {
                out[0] = std::abs(f0(x));
                out[1] = std::abs(ut(x));
            },
            2, fx.box, fx.domain, fx.measure, mc);
        const double rel = r[0].error / r[0].value;
        contraction.push_back({{"t", t}, {"norm_f0", r[0].value}, {"norm_ut", r[1].value}, {"rel_error", rel}});
        contracts = contracts && r[1].value <= r[0].value * (1.0 + 3.0 * rel);
    }

    const std::vector<double> times{0.1, 0.01, 0.001};
    const auto sc = strong_continuity(f0, times, fx.field, fx.domain, fx.measure, fx.flow, fx.quadrature());
    const double norm0 = integrate_domain(f0, fx.domain, fx.measure, fx.quadrature()).value;
    json strong = json::array();
    bool decreasing = true;
    for (std::size_t i = 0; i < times.size(); ++i) {
        strong.push_back({{"t", times[i]}, {"distance", sc[i].value}});
        if (i > 0) decreasing = decreasing && sc[i].value < sc[i - 1].value;
    }

    const auto lp = laplace_check(opt.lambda, parse_fn(opt.g, dim), fx.interior_points(20, 203), fx.field, fx.domain,
                                  fx.cfg.numerics.quad_step, fx.flow);

    json out;
    out["suite"] = "semigroup";
    out["identity_gap"] = identity_gap;
    out["composition"] = {{"max_discrepancy", comp.max_discrepancy},
                          {"evaluated", comp.evaluated},
                          {"skipped", comp.skipped}};
    out["contraction"] = contraction;
    out["strong_continuity"] = strong;
    out["norm_f0"] = norm0;
    out["laplace_max_difference"] = lp.max_abs_difference;
    out["gates"] = {{"identity_exact", identity_gap == 0.0},
                    {"composition_below_1e-6", comp.max_discrepancy < 1e-6},
                    {"contraction", contracts},
                    {"strong_continuity_decreasing", decreasing},
                    {"strong_continuity_small", sc.back().value < 0.05 * norm0},
                    {"laplace_below_1e-3", lp.max_abs_difference < 1e-3}};
    return finish(out);
}

json bvp_suite(const Fixture& fx, const SuiteOptions& opt) {
    const std::size_t dim = fx.field.dimension();
    const PhaseFunction g = parse_fn(opt.g, dim), u = parse_fn(opt.u, dim);
    const BvpSolution sol =
        solve_bvp(BvpProblem{opt.lambda, g, u}, fx.field, fx.domain, fx.cfg.numerics.quad_step, fx.flow);
    const PhaseFunction f = sol.function();

    const auto pts = fx.interior_points(60, 301);
    std::vector<double> res(pts.size(), -1.0);
    parallel_for(pts.size(), [&](std::size_t i) {
        double tf = 0.0;
        try {
            tf = apply_transport(f, fx.field, fx.domain, pts[i], fx.cfg.numerics.delta, fx.flow);
        } catch (const Error&) {
            return;
        }
        res[i] = std::abs(opt.lambda * f(pts[i]) - tf - g(pts[i]));
    });
    double max_residual = 0.0;
    std::size_t used = 0;
    for (double r : res) {
        if (r < 0.0 || used == 30) continue;
        ++used;
        max_residual = std::max(max_residual, r);
    }

    const auto ys = fx.incoming_points(20);
    std::vector<double> gaps(ys.size(), 0.0);
    parallel_for(ys.size(), [&](std::size_t i) {
        const ExitResult ex = find_exit(fx.field, fx.domain, ys[i], Direction::forward, 2.0 * fx.cfg.numerics.t_probe,
                                        fx.flow);
        double t = fx.cfg.numerics.t_probe;
        if (ex.time.is_finite()) t = std::min(t, 0.5 * ex.time.value());
        const TraceSample ts = trace_minus(f, sol.transport(), fx.field, fx.domain, ys[i], t, fx.flow);
        gaps[i] = std::abs(ts.value - u(ys[i]));
    });
    const double max_trace = gaps.empty() ? 0.0 : *std::max_element(gaps.begin(), gaps.end());

    const SolutionDiagnostics d = sol.diagnostics();
    json out;
    out["suite"] = "bvp";
    out["lambda"] = opt.lambda;
    out["g"] = opt.g;
    out["u"] = opt.u;
    out["equation_points"] = used;
    out["max_equation_residual"] = max_residual;
    out["trace_points"] = ys.size();
    out["max_trace_error"] = max_trace;
    out["truncation_bound"] = d.truncation_bound;
    out["footpoint_unclassified"] = d.footpoint_unclassified;
    out["gates"] = {{"equation_residual_below_1e-3", used == 30 && max_residual < 1e-3},
                    {"trace_matches_u", ys.size() == 20 && max_trace < 1e-4}};
    return finish(out);
}

json identity_json(const IdentityReport& r) {
    return {{"green",
             {{"outgoing", r.green.outgoing},
              {"lambda_f", r.green.lambda_f},
              {"incoming", r.green.incoming},
              {"source", r.green.source},
              {"lhs", r.green.lhs},
              {"rhs", r.green.rhs},
              {"residual", r.green.residual},
              {"domain_error", r.green.domain_error},
              {"boundary_error", r.green.boundary_error}}},
            {"norms", {{"lhs", r.norms.lhs}, {"rhs", r.norms.rhs}, {"gap", r.norms.gap}, {"tolerance", r.norms.tolerance}}},
            {"skipped_nodes", r.skipped_nodes}};
}

json green_suite(const Fixture& fx, const SuiteOptions& opt) {
    const std::size_t dim = fx.field.dimension();
    const auto& nm = fx.cfg.numerics;
    const BoundaryMesh minus = build_boundary_mesh(fx.field, fx.domain, fx.measure, BoundarySide::gamma_minus,
                                                   nm.mesh_cells, nm.sigma, nm.mesh_samples, fx.flow, fx.seed());
    const BoundaryMesh plus = build_boundary_mesh(fx.field, fx.domain, fx.measure, BoundarySide::gamma_plus,
                                                  nm.mesh_cells, nm.sigma, nm.mesh_samples, fx.flow, fx.seed() + 1);
    IdentityOptions io;
    io.quadrature = fx.quadrature();
    io.t_probe = nm.t_probe;

    const BvpSolution pos = solve_bvp(BvpProblem{opt.lambda, parse_fn(opt.g, dim), parse_fn(opt.u, dim)}, fx.field,
                                      fx.domain, nm.quad_step, fx.flow);
    const IdentityReport a = check_identities(pos, minus, plus, fx.field, fx.domain, fx.measure, fx.flow, io);
    const BvpSolution sgn = solve_bvp(
        BvpProblem{opt.lambda, parse_fn(opt.g_signed, dim), parse_fn(opt.u_signed, dim)}, fx.field, fx.domain,
        nm.quad_step, fx.flow);
    const IdentityReport b = check_identities(sgn, minus, plus, fx.field, fx.domain, fx.measure, fx.flow, io);

    json out;
    out["suite"] = "green";
    out["mesh"] = {{"cells_minus", minus.cells.size()},
                   {"cells_plus", plus.cells.size()},
                   {"mu_minus", minus.total_weight()},
                   {"mu_plus", plus.total_weight()}};
    out["nonnegative"] = identity_json(a);
    out["nonnegative"]["g"] = opt.g;
    out["nonnegative"]["u"] = opt.u;
    out["signed"] = identity_json(b);
    out["signed"]["g"] = opt.g_signed;
    out["signed"]["u"] = opt.u_signed;
    out["gates"] = {{"green_nonnegative_below_2pct", a.green.residual < 0.02},
                    {"norm_equality_below_2pct", std::abs(a.norms.gap) < 0.02 * a.norms.rhs},
                    {"green_signed_below_2pct", b.green.residual < 0.02},
                    {"norm_inequality_signed", b.norms.gap >= -0.02 * b.norms.rhs}};
    return finish(out);
}

}  // namespace

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"invariance", "mollifier", "semigroup", "bvp", "green"};
    return names;
}

json run_suite(const std::string& name, const RunConfig& config, const SuiteOptions& options) {
    const Fixture fx(config);
    auto one = [&](const std::string& s) -> json {
        if (s == "invariance") return invariance_suite(fx);
        if (s == "mollifier") return mollifier_suite(fx, options);
        if (s == "semigroup") return semigroup_suite(fx, options);
        if (s == "bvp") return bvp_suite(fx, options);
        if (s == "green") return green_suite(fx, options);
        throw Error(ErrorKind::invalid_argument,
                    "unknown suite '" + s + "' (invariance, mollifier, semigroup, bvp, green or all)");
    };
    if (name != "all") return one(name);
    json out;
    out["suite"] = "all";
    out["suites"] = json::object();
    out["gates"] = json::object();
    for (const auto& s : suite_names()) {
        json r = one(s);
        out["gates"][s] = r["pass"];
        out["suites"][s] = std::move(r);
    }
    return finish(out);
}

}  // namespace charflow::cli
