#include <doctest.h>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "charflow/domain.hpp"
#include "charflow/error.hpp"
#include "charflow/expression.hpp"
#include "charflow/field.hpp"
#include "charflow/measure.hpp"
#include "charflow/rng.hpp"

using namespace charflow;

namespace {

VectorField parsed(std::vector<std::string> texts) {
    return parse_field_expression(texts, texts.size());
}

Box square(double r) { return Box{Point{-r, -r}, Point{r, r}}; }

}  // namespace

TEST_CASE("expression precedence and functions") {
    CHECK(Expression::parse("1 + 2 * 3", 1).evaluate(Point{0.0}) == 7.0);
    CHECK(Expression::parse("-x1^2", 1).evaluate(Point{3.0}) == -9.0);
    CHECK(Expression::parse("2^3^2", 1).evaluate(Point{0.0}) == 512.0);
    CHECK(Expression::parse("(1 + 2) * 3", 1).evaluate(Point{0.0}) == 9.0);
    CHECK(Expression::parse("x1 / x2", 2).evaluate(Point{1.0, 4.0}) == 0.25);
    CHECK(Expression::parse("sin(pi/2) + cos(0) + exp(0) + sqrt(16) + abs(-2)", 1)
              .evaluate(Point{0.0}) == doctest::Approx(9.0));
    CHECK(Expression::parse("1.5e-1", 1).evaluate(Point{0.0}) == doctest::Approx(0.15));
    CHECK(Expression::parse("3", 2).is_constant());
    CHECK_FALSE(Expression::parse("x2", 2).is_constant());
}

TEST_CASE("expression errors carry position and token") {
    try {
        parse_field_expression(std::vector<std::string>{"x2 +", "0"}, 2);
        FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.position() == 4);
        CHECK(e.kind() == ErrorKind::syntax);
    }
    CHECK_THROWS_AS(Expression::parse("foo(x1)", 1), UnknownIdentifier);
    try {
        Expression::parse("x1 + y", 1);
        FAIL("expected UnknownIdentifier");
    } catch (const UnknownIdentifier& e) {
        CHECK(e.name() == "y");
        CHECK(e.position() == 5);
    }
    CHECK_THROWS_AS(Expression::parse("(x1", 1), SyntaxError);
    CHECK_THROWS_AS(Expression::parse("x1 x1", 1), SyntaxError);
    CHECK_THROWS_AS(Expression::parse("", 1), SyntaxError);
    try {
        Expression::parse("x3", 2);
        FAIL("expected dimension mismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::dimension_mismatch);
    }
    CHECK_THROWS_AS(parse_field_expression(std::vector<std::string>{"x2"}, 2), Error);
}

TEST_CASE("parsed fields") {
    const auto h = parsed({"x2", "-1.0*x1"});
    const Point fh = evaluate_field(h, Point{1.0, 0.0});
    CHECK(fh[0] == 0.0);
    CHECK(fh[1] == -1.0);
    CHECK(h.lipschitz_bound() == doctest::Approx(1.0));

    const auto free = parsed({"x2", "0"});
    const Point ff = evaluate_field(free, Point{3.0, 2.0});
    CHECK(ff[0] == 2.0);
    CHECK(ff[1] == 0.0);
    CHECK_THROWS_AS(evaluate_field(free, Point{1.0, 2.0, 3.0}), Error);
}

TEST_CASE("builtin field evaluation") {
    const Point a = evaluate_field(VectorField::harmonic(1.0), Point{1.0, 0.0});
    CHECK(a == Point{0.0, -1.0});
    const Point b = evaluate_field(VectorField::free_transport(), Point{5.0, -2.0});
    CHECK(b == Point{-2.0, 0.0});
    const Point c = evaluate_field(VectorField::harmonic(2.0), Point{0.0, 0.0});
    CHECK(c == Point{0.0, 0.0});
    CHECK(VectorField::free_transport().lipschitz_bound() == 1.0);
    CHECK(VectorField::harmonic(1.0).lipschitz_bound() == 1.0);
    CHECK(VectorField::harmonic(3.0).lipschitz_bound() == 9.0);
    CHECK(VectorField::harmonic(0.5).lipschitz_bound() == 1.0);
    CHECK_THROWS_AS(VectorField::harmonic(-1.0), Error);
    CHECK_THROWS_AS(VectorField::free_transport(3), Error);
}

TEST_CASE("parsed harmonic agrees with builtin") {
    const auto builtin = VectorField::harmonic(1.0);
    const auto p = parsed({"x2", "-x1"});
    Rng rng(11);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const Point x = rng.uniform_in(square(10.0));
        const Point d = builtin(x) - p(x);
        worst = std::max(worst, norm(d) / std::max(1e-300, norm(builtin(x))));
    }
    CHECK(worst <= 1e-15);
}

TEST_CASE("estimate_lipschitz") {
    const double k1 = estimate_lipschitz(VectorField::harmonic(1.0), square(2.0), 100000);
    CHECK(k1 >= 0.999);
    CHECK(k1 <= 1.0);
    const double k3 = estimate_lipschitz(VectorField::harmonic(3.0), square(2.0), 100000);
    CHECK(k3 >= 8.99);
    CHECK(k3 <= 9.0 * (1.0 + 1e-12));
    CHECK(estimate_lipschitz(parsed({"1", "1"}), square(1.0), 100) == 0.0);
    CHECK_THROWS_AS(estimate_lipschitz(VectorField::harmonic(1.0), square(1.0), 1), Error);
}

TEST_CASE("estimate never exceeds declared builtin bound") {
    const std::vector<VectorField> fields = {VectorField::free_transport(), VectorField::harmonic(1.0),
                                             VectorField::harmonic(3.0), VectorField::rotation(2.0)};
    Rng rng(3);
    for (const auto& f : fields) {
        for (int b = 0; b < 5; ++b) {
            const double c0 = rng.uniform(-5, 5), c1 = rng.uniform(-5, 5), r = rng.uniform(0.1, 4);
            const Box box{Point{c0 - r, c1 - r}, Point{c0 + r, c1 + r}};
            const double est = estimate_lipschitz(f, box, 10000, 17 + b);
            CHECK(est <= 1.0001 * f.lipschitz_bound());
        }
    }
}

TEST_CASE("sampled Lipschitz check for builtin and custom fields") {
    const auto custom = parsed({"sin(x2)", "-x1/2"});
    CHECK(custom.lipschitz_bound() >= 0.99);
    CHECK(custom.lipschitz_bound() <= 1.01);
    for (const auto& f : {VectorField::harmonic(2.0), custom}) {
        Rng rng(99);
        for (int k = 0; k < 10000; ++k) {
            const Point a = rng.uniform_in(square(3.0)), b = rng.uniform_in(square(3.0));
            CHECK_LE(distance(f(a), f(b)), 1.0001 * f.lipschitz_bound() * distance(a, b) + 1e-15);
        }
    }
}

TEST_CASE("domain membership agrees with the signed distance") {
    const std::vector<Domain> domains = {Domain::rectangle(1.0, 1.0), Domain::stadium(),
                                         Domain::disk(1.5), Domain::half_space(1, 0.25, 2),
                                         Domain::product({{-1, 2}, {0, 1}})};
    for (const auto& d : domains) {
        Rng rng(5);
        for (int k = 0; k < 10000; ++k) {
            const Point x = rng.uniform_in(square(2.5));
            CHECK(d.contains(x) == (d.signed_distance(x) < 0.0));
        }
    }
}

TEST_CASE("rectangle and stadium geometry") {
    const auto r = Domain::rectangle(1.0, 2.0);
    CHECK(r.signed_distance(Point{0.0, 0.0}) == -1.0);
    CHECK(r.signed_distance(Point{2.0, 0.0}) == 1.0);
    CHECK(r.signed_distance(Point{1.0, 0.5}) == 0.0);
    CHECK(*r.outward_normal(Point{1.0, 0.5}) == Point{1.0, 0.0});
    CHECK(*r.outward_normal(Point{0.3, -2.0}) == Point{0.0, -1.0});
    CHECK_FALSE(r.outward_normal(Point{1.0, 2.0}).has_value());

    const auto s = Domain::stadium();
    CHECK(s.contains(Point{0.0, 0.0}));
    CHECK_FALSE(s.contains(Point{0.0, 1.0}));
    CHECK_FALSE(s.contains(Point{1.5, 0.0}));
    const auto n_arc = s.outward_normal(Point{std::sqrt(2.0), 0.0});
    REQUIRE(n_arc);
    CHECK(norm(*n_arc) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(s.outward_normal(Point{1.0, 1.0}).has_value());
    CHECK(*s.outward_normal(Point{0.2, 1.0}) == Point{0.0, 1.0});

    const auto pieces = s.boundary_pieces();
    REQUIRE(pieces.size() == 4);
    double len = 0.0;
    for (const auto& p : pieces) len += p.length();
    // Two flat segments of length 2 plus two arcs of angle pi/2 and radius sqrt 2.
    CHECK(len == doctest::Approx(4.0 + std::numbers::pi * std::sqrt(2.0)));
    for (const auto& p : pieces) {
        for (double t : {0.0, 0.3 * p.length(), p.length()}) {
            CHECK(std::abs(s.signed_distance(p.point_at(t))) < 1e-12);
            CHECK(p.parameter_of(p.point_at(t)) == doctest::Approx(t).epsilon(1e-9));
        }
    }
    CHECK_THROWS_AS(Domain::half_space(0, 0.0, 2).boundary_pieces(), Error);
    CHECK_FALSE(Domain::half_space(0, 0.0, 2).bounding_box().has_value());
    CHECK_THROWS_AS(Domain::rectangle(-1.0, 1.0), Error);
}

TEST_CASE("outward normals have unit length") {
    const std::vector<Domain> domains = {Domain::rectangle(1.0, 0.5), Domain::stadium(), Domain::disk(2.0)};
    for (const auto& d : domains) {
        for (const auto& p : d.boundary_pieces()) {
            for (int k = 1; k < 50; ++k) {
                const Point y = p.point_at(p.length() * k / 50.0);
                if (auto n = d.outward_normal(y)) CHECK(std::abs(norm(*n) - 1.0) <= 1e-12);
            }
        }
    }
}

TEST_CASE("measures") {
    CHECK(Measure::lebesgue().density(Point{3.0, 4.0}) == 1.0);
    const auto m = Measure::product_weighted(
        {Expression::parse("1", 2), Expression::parse("exp(-x2^2/2)", 2)});
    CHECK(m.density(Point{0.0, 0.0}) == 1.0);
    CHECK(m.density(Point{5.0, 1.0}) == doctest::Approx(std::exp(-0.5)));
    const auto bad = Measure::product_weighted({Expression::parse("x1", 2), Expression::parse("1", 2)});
    CHECK_THROWS_AS(bad.density(Point{-1.0, 0.0}), Error);
}
