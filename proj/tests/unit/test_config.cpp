#include <doctest.h>

#include <cmath>
#include <string>

#include "charflow/cli/config.hpp"
#include "charflow/error.hpp"

using namespace charflow;
using namespace charflow::cli;

namespace {

std::string config_error_key(const std::string& text, const std::vector<std::string>& overrides = {}) {
    try {
        parse_config(text, "<test>", overrides);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "";
}

}  // namespace

TEST_CASE("fixtures load") {
    for (const char* name : {"rect_free", "rect_harmonic", "stadium"}) {
        const auto cfg = load_config(std::string(CHARFLOW_SOURCE_DIR) + "/fixtures/" + name + ".json");
        CHECK(cfg.name == name);
        CHECK(cfg.hash().size() == 16);
        CHECK(cfg.make_field().dimension() == 2);
        CHECK(cfg.make_domain().dimension() == 2);
    }
    const auto h = load_config(std::string(CHARFLOW_SOURCE_DIR) + "/fixtures/rect_harmonic.json");
    CHECK(h.field.kind == "harmonic");
    CHECK(h.numerics.flow.step == 1e-3);
    CHECK(h.numerics.rng_seed == 24301);
}

TEST_CASE("nested and dotted keys are equivalent") {
    const auto nested = parse_config(R"({"field": {"kind": "rotation", "omega": 2}, "numerics": {"step": 0.01}})");
    const auto dotted = parse_config(R"({"field.kind": "rotation", "field.omega": 2, "numerics.step": 0.01})");
    CHECK(nested.canonical_json() == dotted.canonical_json());
    CHECK(nested.hash() == dotted.hash());
    CHECK(nested.field.omega == 2.0);
}

TEST_CASE("overrides") {
    const auto base = parse_config(R"({"numerics": {"mc_samples": 1000}})");
    const auto cfg = parse_config(R"({"numerics": {"mc_samples": 1000}})", "<test>",
                                  {"numerics.mc_samples=50", "domain.kind=stadium"});
    CHECK(cfg.numerics.mc_samples == 50);
    CHECK(cfg.domain.kind == "stadium");
    CHECK(cfg.hash() != base.hash());
    CHECK(config_error_key("{}", {"numerics.nonsense=1"}) == "numerics.nonsense");
    CHECK(config_error_key("{}", {"no_equals_sign"}) != "");
}

TEST_CASE("config errors name the key") {
    CHECK(config_error_key(R"({"numerics": {"stepp": 0.1}})") == "numerics.stepp");
    CHECK(config_error_key(R"({"field": {"kind": "magnetic"}})") == "field.kind");
    CHECK(config_error_key(R"({"numerics": {"step": -1}})") == "numerics.step");
    CHECK(config_error_key(R"({"numerics": {"mc_samples": "many"}})") == "numerics.mc_samples");
    CHECK(config_error_key("{not json") != "");

    try {
        load_config("/nonexistent/charflow.json");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("/nonexistent/charflow.json") != std::string::npos);
    }
}

TEST_CASE("custom field and measure") {
    const auto cfg = parse_config(
        R"j({"field": {"kind": "custom", "expressions": ["x2", "-x1"]},
            "domain": {"kind": "disk", "radius": 2},
            "measure": {"kind": "product_weighted", "densities": ["1", "exp(-x2^2)"]}})j");
    const auto f = cfg.make_field();
    const auto v = f.evaluate(Point{1.0, 0.5});
    CHECK(v[0] == 0.5);
    CHECK(v[1] == -1.0);
    CHECK(cfg.make_measure().density(Point{0.0, 1.0}) == doctest::Approx(std::exp(-1.0)));
    CHECK(cfg.make_domain().contains(Point{1.5, 0.0}));
    CHECK(config_error_key(R"({"field": {"kind": "custom", "expressions": ["x2", "-x9"]}})") ==
          "field.expressions");
}

TEST_CASE("fnv1a") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}
