#include <doctest.h>

#include <cmath>

#include "charflow/domain.hpp"
#include "charflow/error.hpp"
#include "charflow/field.hpp"
#include "charflow/measures.hpp"

using namespace charflow;

namespace {

FlowConfig coarse() {
    FlowConfig c;
    c.step = 1e-2;
    return c;
}

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::config;
}

}  // namespace

TEST_CASE("domain integrals") {
    const Domain rect = Domain::rectangle(1.0, 1.0);
    const auto lebesgue = Measure::lebesgue();

    const auto area = integrate_domain(PhaseFunction::constant(1.0), rect, lebesgue, MonteCarlo{100000, 7});
    CHECK(area.value == doctest::Approx(4.0).epsilon(1e-12));

    const auto grid = integrate_domain(PhaseFunction::constant(1.0), rect, lebesgue, TensorGrid{100});
    CHECK(grid.value == doctest::Approx(4.0).epsilon(1e-12));

    const auto odd = integrate_domain(PhaseFunction::parse("x1", 2), rect, lebesgue, MonteCarlo{100000, 7});
    CHECK(std::abs(odd.value) < 3.0 * odd.error);

    // Stadium area: 2 int_{-1}^{1} sqrt(2 - v^2) dv = 2 + pi.
    const Domain stadium = Domain::stadium();
    const auto s_mc = integrate_domain(PhaseFunction::constant(1.0), stadium, lebesgue, MonteCarlo{200000, 3});
    CHECK(std::abs(s_mc.value - (2.0 + M_PI)) < 3.0 * s_mc.error + 1e-3);
    const auto s_grid = integrate_domain(PhaseFunction::constant(1.0), stadium, lebesgue, TensorGrid{400});
    CHECK(s_grid.value == doctest::Approx(2.0 + M_PI).epsilon(2e-3));

    const auto product = Domain::product({{-1.0, 1.0}, {-1.0, 1.0}});
    const auto gauss = Measure::product_weighted({Expression::parse("1", 2), Expression::parse("exp(-x2^2)", 2)});
    const auto weighted = integrate_domain(PhaseFunction::constant(1.0), product, gauss, MonteCarlo{200000, 5});
    CHECK(std::abs(weighted.value - 2.0 * std::sqrt(M_PI) * std::erf(1.0)) < 4.0 * weighted.error);
}

TEST_CASE("multi integrand matches single integrals") {
    const Domain rect = Domain::rectangle(1.0, 1.0);
    const auto f = PhaseFunction::parse("x1^2 + x2", 2);
    const auto g = PhaseFunction::parse("cos(x1)", 2);
    const MonteCarlo mc{20000, 11};
    const auto many = integrate_domain_many(
        [&](const Point& x, std::span<double> out) {
            out[0] = f(x);
            out[1] = g(x);
        },
        2, *rect.bounding_box(), rect, Measure::lebesgue(), mc);
    CHECK(many[0].value == doctest::Approx(integrate_domain(f, rect, Measure::lebesgue(), mc).value));
    CHECK(many[1].value == doctest::Approx(integrate_domain(g, rect, Measure::lebesgue(), mc).value));
}

TEST_CASE("boundary density reference") {
    const auto h = VectorField::harmonic(1.0);
    const Domain rect = Domain::rectangle(1.0, 1.0);
    CHECK(boundary_density_reference(h, rect, Point{1.0, -0.3}) == doctest::Approx(0.3));
    CHECK(boundary_density_reference(h, rect, Point{0.4, 1.0}) == doctest::Approx(0.4));
    CHECK(boundary_density_reference(h, rect, Point{1.0, 0.0}) == 0.0);
    CHECK(kind_of([&] { boundary_density_reference(h, rect, Point{1.0, 1.0}); }) == ErrorKind::undefined_normal);
}

TEST_CASE("slab weight of one right-edge cell") {
    const auto h = VectorField::harmonic(1.0);
    const Domain rect = Domain::rectangle(1.0, 1.0);
    const auto pieces = rect.boundary_pieces();
    // Piece 1 is the right edge, parametrized upward from (1, -1); v < 0 there flows inward.
    const auto cell = measure_boundary_cell(h, rect, Measure::lebesgue(), BoundarySide::gamma_minus, pieces[1], 1,
                                            0.5, 0.6, 0.05, 400000, 17, 0, FlowConfig{});
    CHECK(cell.weight == doctest::Approx(0.045).epsilon(0.05));
    REQUIRE(cell.reference_weight);
    CHECK(*cell.reference_weight == doctest::Approx(0.045).epsilon(1e-10));

    const auto half = measure_boundary_cell(h, rect, Measure::lebesgue(), BoundarySide::gamma_minus, pieces[1], 1,
                                            0.5, 0.6, 0.025, 400000, 17, 0, FlowConfig{});
    CHECK(std::abs(half.weight - cell.weight) < 0.02 * cell.weight + 3.0 * (half.weight_error + cell.weight_error));
}

TEST_CASE("boundary meshes") {
    const auto h = VectorField::harmonic(1.0);
    const Domain rect = Domain::rectangle(1.0, 1.0);
    const auto lebesgue = Measure::lebesgue();
    const FlowConfig cfg = coarse();

    const auto plus = build_boundary_mesh(h, rect, lebesgue, BoundarySide::gamma_plus, 16, 0.05, 200000, cfg, 9);
    REQUIRE(!plus.cells.empty());
    double reference = 0.0;
    for (const auto& c : plus.cells) {
        CHECK(c.weight >= 0.0);
        CHECK((c.tag == BoundaryTag::outgoing_only || c.tag == BoundaryTag::both));
        if (c.reference_weight) reference += *c.reference_weight;
    }
    // Flux |F.n| integrated over the outgoing half of the rectangle boundary: 4 * int_0^1 s ds.
    CHECK(reference == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(plus.total_weight() == doctest::Approx(2.0).epsilon(0.05));

    // Same seed, same mesh.
    const auto again = build_boundary_mesh(h, rect, lebesgue, BoundarySide::gamma_plus, 16, 0.05, 200000, cfg, 9);
    for (std::size_t i = 0; i < plus.cells.size(); ++i) CHECK(plus.cells[i].weight == again.cells[i].weight);

    const auto nodes = plus.nodes(4);
    CHECK(nodes.size() == 4 * plus.cells.size());

    // Trapped curves never reach the outer arcs of the stadium.
    const Domain stadium = Domain::stadium();
    const auto s_plus = build_boundary_mesh(h, stadium, lebesgue, BoundarySide::gamma_plus, 8, 0.05, 80000, cfg, 9);
    for (const auto& c : s_plus.cells) CHECK(stadium.boundary_pieces()[c.piece].shape == BoundaryPiece::Shape::segment);
    CHECK(s_plus.total_weight() == doctest::Approx(1.0).epsilon(0.05));

    // Rotation is tangent to the circle: no boundary point is incoming.
    const auto rot = VectorField::rotation(1.0);
    const Domain disk = Domain::disk(1.0);
    CHECK(kind_of([&] { build_boundary_mesh(rot, disk, lebesgue, BoundarySide::gamma_minus, 4, 0.05, 1000, cfg); }) ==
          ErrorKind::degenerate_side);
}

TEST_CASE("invariance") {
    const auto h = VectorField::harmonic(1.0);
    const Box box{Point{-1.0, -1.0}, Point{1.0, 1.0}};
    const auto zero = check_invariance(h, Measure::lebesgue(), box, 0.0, 1000, 1, FlowConfig{}, 3);
    CHECK(zero.max_discrepancy == 0.0);

    const auto harmonic = check_invariance(h, Measure::lebesgue(), box, 0.7, 20000, 1, coarse(), 3);
    CHECK(harmonic.max_discrepancy < 0.05);
    CHECK(!harmonic.violation);

    const auto expanding = parse_field_expression(std::vector<std::string>{"x1", "x2"}, 2);
    const auto report = check_invariance(expanding, Measure::lebesgue(), box, 0.5, 20000, 1, coarse(), 2);
    CHECK(report.violation);
    for (double d : report.discrepancies) CHECK(d == doctest::Approx(std::exp(1.0) - 1.0).epsilon(0.05));

    const auto div = divergence_diagnostic(expanding, Measure::lebesgue(), box, 100);
    CHECK(div.max_abs == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(divergence_diagnostic(h, Measure::lebesgue(), box, 100).max_abs < 1e-6);
}

TEST_CASE("curve integrals, transfer and disintegration") {
    const auto h = VectorField::harmonic(1.0);
    const Domain rect = Domain::rectangle(1.0, 1.0);
    const auto lebesgue = Measure::lebesgue();
    const FlowConfig cfg = coarse();
    const auto minus = build_boundary_mesh(h, rect, lebesgue, BoundarySide::gamma_minus, 24, 0.05, 200000, cfg, 2);
    const auto plus = build_boundary_mesh(h, rect, lebesgue, BoundarySide::gamma_plus, 24, 0.05, 200000, cfg, 3);

    CHECK(integrate_along_characteristics(PhaseFunction::constant(0.0), h, rect, minus, BoundarySide::gamma_minus,
                                          1e-2, cfg) == 0.0);
    CHECK(kind_of([&] {
              integrate_along_characteristics(PhaseFunction::constant(1.0), h, rect, minus, BoundarySide::gamma_plus,
                                              1e-2, cfg);
          }) == ErrorKind::side_mismatch);

    // Both parametrizations of the same integral over the curves that cross the rectangle.
    const auto one = PhaseFunction::constant(1.0);
    const double from_minus = integrate_along_characteristics(one, h, rect, minus, BoundarySide::gamma_minus, 1e-2, cfg);
    const double from_plus = integrate_along_characteristics(one, h, rect, plus, BoundarySide::gamma_plus, 1e-2, cfg);
    CHECK(from_minus == doctest::Approx(from_plus).epsilon(0.03));

    const auto constant = transfer_integral(one, minus, plus, h, rect, cfg);
    CHECK(std::abs(constant.lhs - constant.rhs) < 0.05 * constant.lhs);
    const auto zero = transfer_integral(PhaseFunction::constant(0.0), minus, plus, h, rect, cfg);
    CHECK(zero.lhs == 0.0);
    CHECK(zero.rhs == 0.0);
    const auto indicator = PhaseFunction::parse("step(x1 - 0.99) * step(-x2 - 0.2) * step(x2 + 0.7)", 2);
    const auto ind = transfer_integral(indicator, minus, plus, h, rect, cfg);
    CHECK(ind.lhs > 0.0);
    CHECK(std::abs(ind.lhs - ind.rhs) < 0.1 * ind.lhs);

    const std::vector<PhaseFunction> fs{one, PhaseFunction::parse("1 + x1^2", 2),
                                        PhaseFunction::parse("cos(x2) + 0.5*x1", 2)};
    const auto dis = disintegrate(fs, h, rect, lebesgue, minus, plus, 1e-2, MonteCarlo{100000, 4}, cfg);
    REQUIRE(dis.size() == fs.size());
    for (const auto& r : dis) CHECK(r.relative_gap < std::max(0.02, 3.0 * r.domain_error / std::abs(r.domain_value)));
}
