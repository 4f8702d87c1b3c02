#include <doctest.h>

#include <chrono>
#include <cmath>

#include "charflow/domain.hpp"
#include "charflow/error.hpp"
#include "charflow/field.hpp"
#include "charflow/quadrature.hpp"
#include "charflow/rng.hpp"
#include "charflow/semigroup.hpp"
#include "charflow/transport.hpp"

using namespace charflow;

namespace {

PhaseFunction expr(const char* text) { return PhaseFunction::parse(text, 2); }

FlowConfig coarse() {
    FlowConfig c;
    c.step = 1e-2;
    return c;
}

std::vector<Point> random_points(std::size_t n, double lo, double hi, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Point> pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back(Point{rng.uniform(lo, hi), rng.uniform(lo, hi)});
    return pts;
}

}  // namespace

TEST_CASE("evolve examples") {
    const FlowConfig cfg;
    const auto f0 = expr("step(-x1) * step(x2 - 0.4) * step(0.6 - x2)");
    {
        const VectorField f = VectorField::free_transport();
        const Domain d = Domain::rectangle(1.0, 1.0);
        CHECK(evolve(f0, 0.0, f, d, cfg)(Point{-0.3, 0.5}) == 1.0);
        CHECK(evolve(f0, 1.0, f, d, cfg)(Point{0.2, 0.5}) == 1.0);
        CHECK(evolve(f0, 1.0, f, d, cfg)(Point{0.6, 0.5}) == 0.0);
        // tau_-(-0.5, 0.5) = 1: the cutoff at t = tau_- gives 0.
        CHECK(evolve(expr("1"), 1.5, f, d, cfg)(Point{-0.5, 0.5}) == 0.0);
        CHECK(evolve(expr("1"), 0.5, f, d, cfg)(Point{-0.5, 0.5}) == 1.0);
        CHECK(evolve(expr("1"), 0.5, f, d, cfg)(Point{3.0, 0.5}) == 0.0);
        CHECK_THROWS_AS(evolve(f0, -1.0, f, d, cfg), Error);
        const SemigroupQuery q{1.0, f0, {Point{0.2, 0.5}, Point{0.2, 0.7}}};
        const auto vals = evolve(q, f, d, cfg);
        CHECK(vals[0] == 1.0);
        CHECK(vals[1] == 0.0);
    }
    {
        // Stadium: the inner disk is trapped; values rotate and never vanish.
        const VectorField f = VectorField::harmonic(1.0);
        const Domain d = Domain::stadium();
        const auto g = expr("2 + x1");
        const Point x{0.5, 0.1};
        for (double t : {0.3, 2.0, 17.0, 400.0}) {
            const Point back{x[0] * std::cos(t) - x[1] * std::sin(t), x[0] * std::sin(t) + x[1] * std::cos(t)};
            CHECK(evolve(g, t, f, d, cfg)(x) == doctest::Approx(g(back)).epsilon(1e-7));
        }
    }
}

TEST_CASE("resolvent examples") {
    const FlowConfig cfg;
    const VectorField ft = VectorField::free_transport();
    const Domain rect = Domain::rectangle(1.0, 1.0);
    CHECK_THROWS_AS(resolvent(0.0, expr("1"), ft, rect, 1e-2, cfg), Error);
    CHECK_THROWS_AS(resolvent(-1.0, expr("1"), ft, rect, 1e-2, cfg), Error);
    CHECK(resolvent(1.0, PhaseFunction::constant(0.0), ft, rect, 1e-2, cfg)(Point{0.1, 0.2}) == 0.0);
    // tau_-(0, 0.5) = 2
    const BvpSolution r = resolvent(1.0, expr("1"), ft, rect, 1e-2, cfg);
    CHECK(r(Point{0.0, 0.5}) == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-6));
    const SolutionPoint sp = r.evaluate(Point{0.0, 0.5});
    CHECK(sp.tau_minus.value() == doctest::Approx(2.0));

    const VectorField h = VectorField::harmonic(1.0);
    const Domain st = Domain::stadium();
    const BvpSolution trapped = resolvent(1.0, expr("1"), h, st, 1e-2, cfg);
    const SolutionPoint tp = trapped.evaluate(Point{0.5, 0.0});
    CHECK(tp.period.has_value());
    CHECK(std::abs(tp.value - 1.0) < std::exp(-cfg.horizon) + 1e-6);
    // A stationary point of a trapped field.
    CHECK(std::abs(trapped(Point{0.0, 0.0}) - 1.0) < 1e-6);
    const SolutionDiagnostics diag = trapped.diagnostics();
    CHECK(diag.periodic >= 1);
    CHECK(diag.truncation_bound <= std::exp(-diag.cutoff) * (1.0 + 1e-12));
}

TEST_CASE("boundary value problem examples") {
    const FlowConfig cfg;
    const VectorField ft = VectorField::free_transport();
    const Domain rect = Domain::rectangle(1.0, 1.0);
    const BvpSolution s = solve_bvp(BvpProblem{1.0, PhaseFunction::constant(0.0), expr("1")}, ft, rect, 1e-2, cfg);
    // tau_-(-0.5, 1) = 0.5
    CHECK(s(Point{-0.5, 1.0 - 1e-9}) == doctest::Approx(std::exp(-0.5)).epsilon(1e-6));
    CHECK(s(Point{-0.5, 0.999}) == doctest::Approx(std::exp(-0.5 / 0.999)).epsilon(1e-6));

    // u = 0 reduces to the resolvent exactly.
    const auto g = expr("x1 + x2^2");
    const BvpSolution a = solve_bvp(BvpProblem{2.0, g, PhaseFunction::constant(0.0)}, ft, rect, 1e-2, cfg);
    const BvpSolution b = resolvent(2.0, g, ft, rect, 1e-2, cfg);
    for (const Point& x : random_points(20, -0.95, 0.95, 4)) CHECK(a(x) == b(x));

    // (0, 0) gives exactly zero.
    const BvpSolution z =
        solve_bvp(BvpProblem{1.0, PhaseFunction::constant(0.0), PhaseFunction::constant(0.0)}, ft, rect, 1e-2, cfg);
    for (const Point& x : random_points(20, -0.95, 0.95, 5)) CHECK(z(x) == 0.0);
}

TEST_CASE("solution satisfies (lambda - T) f = g") {
    const FlowConfig cfg;
    const VectorField h = VectorField::harmonic(1.0);
    const Domain rect = Domain::rectangle(1.0, 1.0);
    const auto g = expr("1 + x1 * x2");
    const auto u = expr("2 + sin(x2)");
    const BvpSolution s = solve_bvp(BvpProblem{1.5, g, u}, h, rect, 1e-2, cfg);
    const PhaseFunction f = s.function();
    std::size_t checked = 0;
    for (const Point& x : random_points(40, -0.95, 0.95, 6)) {
        double tf = 0.0;
        try {
            tf = apply_transport(f, h, rect, x, 1e-3, cfg);
        } catch (const Error&) {
            continue;
        }
        ++checked;
        CHECK(std::abs(1.5 * f(x) - tf - g(x)) < 1e-3);
    }
    CHECK(checked >= 30);
}

TEST_CASE("solution positivity") {
    const FlowConfig cfg;
    const VectorField h = VectorField::harmonic(1.0);
    const Domain st = Domain::stadium();
    const BvpSolution s = solve_bvp(BvpProblem{0.5, expr("x1^2"), expr("abs(x2)")}, h, st, 1e-2, cfg);
    for (const Point& x : random_points(200, -1.4, 1.4, 7)) CHECK(s(x) >= 0.0);
}

TEST_CASE("traces of solutions") {
    const FlowConfig cfg;
    const VectorField h = VectorField::harmonic(1.0);
    const Domain rect = Domain::rectangle(1.0, 1.0);
    const auto g = expr("1 + x1^2");
    const auto u = expr("2 + x2");
    const BvpSolution s = solve_bvp(BvpProblem{1.0, g, u}, h, rect, 1e-2, cfg);
    const BvpSolution r = resolvent(1.0, g, h, rect, 1e-2, cfg);
    // Gamma_- points on the right side have v < 0.
    for (double v : {-0.8, -0.5, -0.2}) {
        const Point y{1.0, v};
        const TraceSample tm = trace_minus(s.function(), s.transport(), h, rect, y, 0.05, cfg);
        CHECK(tm.value == doctest::Approx(u(y)).epsilon(1e-4));
        CHECK(tm.limit_value == doctest::Approx(u(y)).epsilon(1e-4));
        CHECK(std::abs(trace_minus(r.function(), r.transport(), h, rect, y, 0.05, cfg).value) < 1e-4);
    }
    // Gamma_+ on the right side has v > 0; compare with the formula started at y.
    for (double v : {0.2, 0.5, 0.8}) {
        const Point y{1.0, v};
        const double direct = r(y);
        const TraceSample tp = trace_plus(r.function(), r.transport(), h, rect, y, 0.05, cfg);
        CHECK(tp.value == doctest::Approx(direct).epsilon(1e-4));
        CHECK(tp.limit_value == doctest::Approx(direct).epsilon(1e-4));
        // g = 0 with datum u: e^{-lambda tau_-} u(footpoint)
        const BvpSolution pure = solve_bvp(BvpProblem{1.0, PhaseFunction::constant(0.0), u}, h, rect, 1e-2, cfg);
        const SolutionPoint p = pure.evaluate(y);
        REQUIRE(p.footpoint);
        const double expect = std::exp(-p.tau_minus.value()) * u(*p.footpoint);
        CHECK(trace_plus(pure.function(), std::nullopt, h, rect, y, 0.05, cfg).value ==
              doctest::Approx(expect).epsilon(1e-4));
    }
}

TEST_CASE("mild representation along curves") {
    const FlowConfig cfg;
    const VectorField h = VectorField::harmonic(1.0);
    const Domain rect = Domain::rectangle(1.0, 1.0);
    const auto g = expr("1 + x1 * x2");
    const BvpSolution r = resolvent(1.0, g, h, rect, 1e-2, cfg);
    const PhaseFunction f = r.function();
    const PhaseFunction tf = r.transport();
    std::size_t checked = 0;
    for (const Point& x : random_points(30, -0.9, 0.9, 8)) {
        const ExitResult back = find_exit(h, rect, x, Direction::backward, 0.2, cfg);
        const ExitResult fwd = find_exit(h, rect, x, Direction::forward, 0.2, cfg);
        if (back.time.is_finite() || fwd.time.is_finite()) continue;
        const double t1 = -0.1, t2 = 0.15;
        const double lhs = f(advance(h, x, t1, cfg)) - f(advance(h, x, t2, cfg));
        CurveSampler fwd_curve(h, x, Direction::forward, cfg), back_curve(h, x, Direction::backward, cfg);
        auto along = [&](double s) { return tf(s >= 0 ? fwd_curve.at(s) : back_curve.at(-s)); };
        const double rhs = adaptive_simpson(along, t1, 0.0, 1e-9, 0.02) + adaptive_simpson(along, 0.0, t2, 1e-9, 0.02);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-4));
        ++checked;
    }
    CHECK(checked >= 10);
}

TEST_CASE("semigroup property and contraction") {
    const FlowConfig cfg;
    const VectorField h = VectorField::harmonic(1.0);
    const Domain rect = Domain::rectangle(1.0, 1.0);
    const auto f0 = expr("exp(-3*((x1-0.2)^2 + x2^2))");
    const auto pts = random_points(60, -1.0, 1.0, 10);
    const auto zero = semigroup_property_check(h, rect, f0, {{0.0, 0.0}}, pts, cfg);
    CHECK(zero.max_discrepancy == 0.0);
    const auto rep = semigroup_property_check(h, rect, f0, {{0.3, 0.4}, {1.0, 0.5}}, pts, cfg);
    CHECK(rep.max_discrepancy < 1e-6);
    CHECK(rep.evaluated > 100);

    const Measure leb = Measure::lebesgue();
    const MonteCarlo mc{10000, 3};
    const auto norm0 = integrate_domain(
        PhaseFunction([&](const Point& x) { return std::abs(f0(x)); }, "|f0|"), rect, leb, mc);
    for (double t : {0.5, 2.0}) {
        const PhaseFunction ut = evolve(f0, t, h, rect, cfg);
        const auto nt =
            integrate_domain(PhaseFunction([&](const Point& x) { return std::abs(ut(x)); }, "|U f0|"), rect, leb, mc);
        CHECK(nt.value <= norm0.value * (1.0 + 3.0 * norm0.error / norm0.value));
    }
}

TEST_CASE("strong continuity") {
    const FlowConfig cfg;
    const VectorField h = VectorField::harmonic(1.0);
    const Domain rect = Domain::rectangle(1.0, 1.0);
    const auto f0 = expr("exp(-10*((x1-0.2)^2 + x2^2))");
    const Measure leb = Measure::lebesgue();
    const auto norm0 = integrate_domain(f0, rect, leb, TensorGrid{100});
    const auto dist = strong_continuity(f0, {0.1, 0.01, 0.001}, h, rect, leb, cfg, TensorGrid{100});
    CHECK(dist[0].value > dist[1].value);
    CHECK(dist[1].value > dist[2].value);
    CHECK(dist[2].value < 0.05 * norm0.value);
}

TEST_CASE("laplace transform of the semigroup is the resolvent") {
    const FlowConfig cfg;
    const VectorField h = VectorField::harmonic(1.0);
    const Domain rect = Domain::rectangle(1.0, 1.0);
    const auto rep = laplace_check(2.0, expr("1 + x1^2"), random_points(20, -0.95, 0.95, 11), h, rect, 1e-2, cfg);
    CHECK(rep.max_abs_difference < 1e-3);
}

TEST_CASE("green and norm identities on free transport") {
    const FlowConfig cfg = coarse();
    const VectorField ft = VectorField::free_transport();
    const Domain rect = Domain::rectangle(1.0, 1.0);
    const Measure leb = Measure::lebesgue();
    const BoundaryMesh minus = build_boundary_mesh(ft, rect, leb, BoundarySide::gamma_minus, 20, 0.05, 100000, cfg);
    const BoundaryMesh plus = build_boundary_mesh(ft, rect, leb, BoundarySide::gamma_plus, 20, 0.05, 100000, cfg);
    IdentityOptions opt;
    opt.quadrature = TensorGrid{100};

    const BvpSolution pos = solve_bvp(BvpProblem{1.0, expr("1 + x1^2"), expr("1 + x2^2")}, ft, rect, 1e-2, cfg);
    const IdentityReport a = check_identities(pos, minus, plus, ft, rect, leb, cfg, opt);
    CHECK(a.green.residual < 0.02);
    CHECK(std::abs(a.norms.gap) / a.norms.rhs < 0.02);

    const BvpSolution sgn = solve_bvp(BvpProblem{1.0, expr("x1"), expr("x2")}, ft, rect, 1e-2, cfg);
    const IdentityReport b = check_identities(sgn, minus, plus, ft, rect, leb, cfg, opt);
    CHECK(b.green.residual < 0.02);
    CHECK(b.norms.gap >= -b.norms.tolerance);

    const BvpSolution zero =
        solve_bvp(BvpProblem{1.0, PhaseFunction::constant(0.0), PhaseFunction::constant(0.0)}, ft, rect, 1e-2, cfg);
    const IdentityReport c = check_identities(zero, minus, plus, ft, rect, leb, cfg, opt);
    CHECK(c.green.lhs == 0.0);
    CHECK(c.green.rhs == 0.0);
    CHECK(c.norms.gap == 0.0);
}
