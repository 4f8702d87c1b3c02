#include <doctest.h>

#include <cmath>

#include "charflow/domain.hpp"
#include "charflow/error.hpp"
#include "charflow/field.hpp"
#include "charflow/rng.hpp"
#include "charflow/transport.hpp"

using namespace charflow;

namespace {

PhaseFunction expr(const char* text) { return PhaseFunction::parse(text, 2); }

}  // namespace

TEST_CASE("mollifier has unit mass and vanishes outside its support") {
    for (unsigned n : {1u, 8u, 64u}) {
        const MollifierSpec m(n);
        double mass = 0.0;
        const int k = 20000;
        for (int i = 0; i < k; ++i) mass += m((i + 0.5) / (k * double(n))) / (k * double(n));
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(m(-1e-9) == 0.0);
        CHECK(m(1.0 / n + 1e-9) == 0.0);
    }
    CHECK_THROWS_AS(MollifierSpec(0), Error);
    // derivative against a central difference
    const MollifierSpec m(4);
    for (double s : {0.05, 0.1, 0.125, 0.2}) {
        const double d = 1e-6;
        CHECK(m.derivative(s) == doctest::Approx((m(s + d) - m(s - d)) / (2 * d)).epsilon(1e-6));
    }
}

TEST_CASE("mollify constants and truncated support") {
    const VectorField f = VectorField::free_transport();
    const Domain d = Domain::rectangle(1.0, 1.0);
    const FlowConfig cfg;
    const MollifierSpec m(8);
    const auto c = PhaseFunction::constant(2.5);
    CHECK(mollify(c, m, f, d, Point{0.0, 0.5}, 1e-2, cfg) == doctest::Approx(2.5).epsilon(1e-6));
    // tau_-(x) = (x + 1)/v = 1/16, half the support of rho_8.
    CHECK(mollify(c, m, f, d, Point{-1.0 + 0.5 / 16.0, 0.5}, 1e-2, cfg) == doctest::Approx(1.25).epsilon(1e-6));
    CHECK_THROWS_AS(mollify(c, m, f, d, Point{1.5, 0.0}, 1e-2, cfg), Error);
}

TEST_CASE("mollification converges for smooth data") {
    const VectorField f = VectorField::harmonic(1.0);
    const Domain d = Domain::rectangle(1.0, 1.0);
    const FlowConfig cfg;
    const auto g = expr("sin(2*x1) + x2^2");
    const Point x{0.3, -0.2};
    double prev = 1e300;
    for (unsigned n : {8u, 32u, 128u}) {
        const double err = std::abs(mollify(g, MollifierSpec(n), f, d, x, 1e-2, cfg) - g(x));
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < 1e-2);
}

TEST_CASE("transport operator examples") {
    const FlowConfig cfg;
    {
        const VectorField f = VectorField::free_transport();
        const Domain d = Domain::rectangle(1.0, 1.0);
        CHECK(apply_transport(expr("x1"), f, d, Point{0.3, 0.7}, 1e-3, cfg) == doctest::Approx(-0.7).epsilon(1e-10));
        CHECK_THROWS_AS(apply_transport(expr("x1"), f, d, Point{0.9995, 0.7}, 1e-3, cfg), Error);
        CHECK_THROWS_AS(apply_transport(expr("x1"), f, d, Point{1.5, 0.7}, 1e-3, cfg), Error);
    }
    {
        const VectorField f = VectorField::harmonic(1.0);
        const Domain d = Domain::rectangle(1.0, 1.0);
        Rng rng(3);
        for (int i = 0; i < 50; ++i) {
            const Point x{rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9)};
            CHECK(std::abs(apply_transport(expr("x1^2 + x2^2"), f, d, x, 1e-3, cfg)) < 1e-8);
        }
    }
}

TEST_CASE("transport agrees with -F.grad f") {
    const VectorField f = VectorField::harmonic(2.0);
    const FlowConfig cfg;
    const auto g = expr("exp(x1) * cos(x2)");
    Rng rng(9);
    for (int i = 0; i < 50; ++i) {
        const Point x{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        // F = (v, -4x); grad g = (e^x cos v, -e^x sin v)
        const double exact = -(x[1] * std::exp(x[0]) * std::cos(x[1]) + 4 * x[0] * std::exp(x[0]) * std::sin(x[1]));
        CHECK(apply_transport(g, f, x, 1e-3, cfg) == doctest::Approx(exact).epsilon(1e-9));
    }
}

TEST_CASE("mollification commutes with transport") {
    const VectorField f = VectorField::harmonic(1.0);
    const Domain d = Domain::rectangle(1.0, 1.0);
    const FlowConfig cfg;
    std::vector<Point> pts;
    Rng rng(17);
    for (int i = 0; i < 20; ++i) pts.push_back(Point{rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)});
    for (unsigned n : {8u, 16u}) {
        const CommuteReport smooth =
            commute_check(expr("sin(3*x1) * x2 + x1^3"), MollifierSpec(n), f, d, pts, 1e-2, cfg);
        CHECK(smooth.max_residual < 1e-4);
    }
    // A jump across x1 = 0.1, just upstream of the sample points.
    std::vector<Point> near;
    for (int i = 0; i < 20; ++i) near.push_back(Point{rng.uniform(0.1, 0.15), rng.uniform(0.3, 0.8)});
    const CommuteReport jump = commute_check(expr("step(x1 - 0.1)"), MollifierSpec(8), f, d, near, 1e-2, cfg);
    CHECK(jump.max_residual < 1e-4);
    CHECK(jump.transport_vs_kernel > 0.0);
    const CommuteReport flat = commute_check(PhaseFunction::constant(3.0), MollifierSpec(16), f, d, pts, 1e-2, cfg);
    CHECK(flat.max_residual < 1e-10);
}

TEST_CASE("boundary traces") {
    const VectorField f = VectorField::free_transport();
    const Domain d = Domain::rectangle(1.0, 1.0);
    const FlowConfig cfg;
    const auto g = expr("x1^2 + x2");
    const auto tg = transported(g, f, 1e-3, cfg);
    // (-1, 0.5) enters (v > 0); (1, 0.5) leaves.
    const TraceSample in = trace_minus(g, std::nullopt, f, d, Point{-1.0, 0.5}, 0.1, cfg);
    CHECK(in.via == TraceVia::limit_probe);
    CHECK(in.value == doctest::Approx(1.5).epsilon(1e-9));
    const TraceSample in_mild = trace_minus(g, tg, f, d, Point{-1.0, 0.5}, 0.1, cfg);
    CHECK(in_mild.via == TraceVia::mild_formula);
    CHECK(*in_mild.mild_value == doctest::Approx(1.5).epsilon(1e-8));
    const TraceSample out = trace_plus(g, tg, f, d, Point{1.0, 0.5}, 0.1, cfg);
    CHECK(out.value == doctest::Approx(1.5).epsilon(1e-8));
    CHECK(out.limit_value == doctest::Approx(1.5).epsilon(1e-9));

    CHECK_THROWS_AS(trace_minus(g, std::nullopt, f, d, Point{1.0, 0.5}, 0.1, cfg), Error);
    CHECK_THROWS_AS(trace_plus(g, std::nullopt, f, d, Point{-1.0, 0.5}, 0.1, cfg), Error);
    // Too long a probe: the curve from (-1, 0.5) leaves after t = 4.
    CHECK_THROWS_AS(trace_minus(g, std::nullopt, f, d, Point{-1.0, 0.5}, 5.0, cfg), Error);
}
