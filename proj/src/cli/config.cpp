#include "charflow/cli/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "charflow/error.hpp"
#include "charflow/expression.hpp"

namespace charflow::cli {

using nlohmann::json;

namespace {

void flatten(const json& j, const std::string& prefix, std::map<std::string, json>& out) {
    if (j.is_object()) {
        if (j.empty() && !prefix.empty()) throw ConfigError(prefix, "empty object");
        for (auto it = j.begin(); it != j.end(); ++it) {
            flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
        }
    } else {
        if (out.count(prefix)) throw ConfigError(prefix, "given twice");
        out[prefix] = j;
    }
}

class Reader {
public:
    explicit Reader(std::map<std::string, json> values) : values_(std::move(values)) {}

    template <class T, class Check>
    void read(const std::string& key, T& target, Check&& check, const char* expect) {
        const auto it = values_.find(key);
        if (it == values_.end()) return;
        used_.insert(key);
        try {
            target = it->second.get<T>();
        } catch (const json::exception&) {
            throw ConfigError(key, std::string("expected ") + expect + ", got " + it->second.dump());
        }
        if (!check(target)) throw ConfigError(key, std::string("expected ") + expect + ", got " + it->second.dump());
    }

    void number(const std::string& key, double& target, bool positive = false) {
        const auto it = values_.find(key);
        if (it != values_.end() && !it->second.is_number()) {
            throw ConfigError(key, "expected a number, got " + it->second.dump());
        }
        read(key, target, [&](double v) { return std::isfinite(v) && (!positive || v > 0.0); },
             positive ? "a positive number" : "a finite number");
    }

    template <class U>
    void count(const std::string& key, U& target, bool positive = true) {
        const auto it = values_.find(key);
        if (it != values_.end() && !it->second.is_number_unsigned()) {
            throw ConfigError(key, "expected a nonnegative integer, got " + it->second.dump());
        }
        read(key, target, [&](U v) { return !positive || v > 0; },
             positive ? "a positive integer" : "a nonnegative integer");
    }

    void text(const std::string& key, std::string& target) {
        read(key, target, [](const std::string&) { return true; }, "a string");
    }

    void flag(const std::string& key, bool& target) {
        read(key, target, [](bool) { return true; }, "true or false");
    }

    void strings(const std::string& key, std::vector<std::string>& target) {
        read(key, target, [](const std::vector<std::string>&) { return true; }, "an array of strings");
    }

    void pairs(const std::string& key, std::vector<std::pair<double, double>>& target) {
        read(key, target,
             [](const std::vector<std::pair<double, double>>& v) {
                 for (const auto& [lo, hi] : v) {
                     if (!(lo < hi)) return false;
                 }
                 return true;
             },
             "an array of [lo, hi] pairs with lo < hi");
    }

    void reject_unknown() const {
        for (const auto& [key, value] : values_) {
            if (!used_.count(key)) throw ConfigError(key, "unknown key");
        }
    }

private:
    std::map<std::string, json> values_;
    std::set<std::string> used_;
};

std::vector<Expression> parse_all(const std::vector<std::string>& texts, std::size_t dim, const std::string& key) {
    std::vector<Expression> out;
    for (const auto& t : texts) {
        try {
            out.push_back(Expression::parse(t, dim));
        } catch (const Error& e) {
            throw ConfigError(key, "'" + t + "': " + e.what());
        }
    }
    return out;
}

}  // namespace

std::uint64_t fnv1a(const std::string& bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

RunConfig parse_config(const std::string& json_text, const std::string& origin,
                       const std::vector<std::string>& overrides) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin, std::string("invalid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError(origin, "the top level must be a JSON object");
    std::map<std::string, json> flat;
    flatten(root, "", flat);
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError(o, "overrides are written key=value");
        const std::string key = o.substr(0, eq), value = o.substr(eq + 1);
        json parsed = json::parse(value, nullptr, false);
        flat[key] = parsed.is_discarded() ? json(value) : parsed;
    }
    Reader r(std::move(flat));

    RunConfig c;
    r.text("name", c.name);

    r.text("field.kind", c.field.kind);
    r.number("field.omega", c.field.omega, true);
    r.count("field.dimension", c.field.dimension);
    r.strings("field.expressions", c.field.expressions);
    double kappa = -1.0;
    r.number("field.lipschitz", kappa);
    if (kappa >= 0.0) c.field.lipschitz = kappa;

    r.text("domain.kind", c.domain.kind);
    r.number("domain.a", c.domain.a, true);
    r.number("domain.xi", c.domain.xi, true);
    r.number("domain.R", c.domain.R, true);
    r.number("domain.vmax", c.domain.vmax, true);
    r.number("domain.radius", c.domain.radius, true);
    r.count("domain.axis", c.domain.axis, false);
    r.number("domain.bound", c.domain.bound);
    r.count("domain.dimension", c.domain.dimension);
    r.pairs("domain.intervals", c.domain.intervals);

    r.text("measure.kind", c.measure.kind);
    r.strings("measure.densities", c.measure.densities);

    Numerics& n = c.numerics;
    r.number("numerics.step", n.flow.step, true);
    r.number("numerics.horizon", n.flow.horizon, true);
    r.number("numerics.exit_tolerance", n.flow.exit_tolerance, true);
    r.flag("numerics.periodic_shortcut", n.flow.periodic_shortcut);
    r.number("numerics.quad_step", n.quad_step, true);
    r.number("numerics.delta", n.delta, true);
    r.number("numerics.t_probe", n.t_probe, true);
    r.count("numerics.mc_samples", n.mc_samples);
    r.count("numerics.grid", n.grid);
    r.count("numerics.rng_seed", n.rng_seed, false);
    r.count("numerics.mesh_cells", n.mesh_cells);
    r.number("numerics.sigma", n.sigma, true);
    r.count("numerics.mesh_samples", n.mesh_samples);
    r.text("output.directory", c.output.directory);
    r.text("output.format", c.output.format);
    if (!c.output.format.empty() && c.output.format != "json" && c.output.format != "csv") {
        throw ConfigError("output.format", "expected \"json\" or \"csv\", got \"" + c.output.format + "\"");
    }
    r.reject_unknown();

    if (n.flow.horizon <= n.flow.step) throw ConfigError("numerics.horizon", "must exceed numerics.step");
    // Building the objects validates the kinds and expressions.
    c.make_field();
    c.make_domain();
    c.make_measure();
    return c;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config", "cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    RunConfig c = parse_config(ss.str(), path, overrides);
    c.source = path;
    return c;
}

VectorField RunConfig::make_field() const {
    const auto& f = field;
    if (f.kind == "free_transport") return VectorField::free_transport(f.dimension);
    if (f.kind == "harmonic") return VectorField::harmonic(f.omega, f.dimension);
    if (f.kind == "rotation") return VectorField::rotation(f.omega, f.dimension);
    if (f.kind == "custom") {
        if (f.expressions.size() != f.dimension) {
            throw ConfigError("field.expressions", "needs one expression per dimension (" +
                                                       std::to_string(f.dimension) + ")");
        }
        return VectorField::custom(parse_all(f.expressions, f.dimension, "field.expressions"), f.lipschitz);
    }
    throw ConfigError("field.kind", "unknown field kind '" + f.kind +
                                        "' (free_transport, harmonic, rotation or custom)");
}

Domain RunConfig::make_domain() const {
    const auto& d = domain;
    auto build = [&]() {
        if (d.kind == "rectangle") return Domain::rectangle(d.a, d.xi);
        if (d.kind == "stadium") {
            if (!(d.vmax < d.R)) throw ConfigError("domain.vmax", "must be smaller than domain.R");
            return Domain::stadium(d.R, d.vmax);
        }
        if (d.kind == "disk") return Domain::disk(d.radius, d.dimension);
        if (d.kind == "half_space") {
            if (d.axis >= d.dimension) throw ConfigError("domain.axis", "must be below domain.dimension");
            return Domain::half_space(d.axis, d.bound, d.dimension);
        }
        if (d.kind == "product") {
            if (d.intervals.empty()) throw ConfigError("domain.intervals", "needs at least one interval");
            return Domain::product(d.intervals);
        }
        throw ConfigError("domain.kind", "unknown domain kind '" + d.kind +
                                             "' (rectangle, stadium, disk, half_space or product)");
    };
    Domain out = build();
    if (out.dimension() != field.dimension) {
        throw ConfigError("domain.kind", "domain dimension " + std::to_string(out.dimension()) +
                                             " does not match field dimension " + std::to_string(field.dimension));
    }
    return out;
}

Measure RunConfig::make_measure() const {
    if (measure.kind == "lebesgue") return Measure::lebesgue();
    if (measure.kind == "product_weighted") {
        if (measure.densities.size() != field.dimension) {
            throw ConfigError("measure.densities", "needs one density per dimension");
        }
        return Measure::product_weighted(parse_all(measure.densities, field.dimension, "measure.densities"));
    }
    throw ConfigError("measure.kind", "unknown measure kind '" + measure.kind + "' (lebesgue or product_weighted)");
}

std::string RunConfig::canonical_json() const {
    json j;
    j["name"] = name;
    j["field"] = {{"kind", field.kind}, {"omega", field.omega}, {"dimension", field.dimension},
                  {"expressions", field.expressions}};
    if (field.lipschitz) j["field"]["lipschitz"] = *field.lipschitz;
    j["domain"] = {{"kind", domain.kind}, {"a", domain.a},           {"xi", domain.xi},
                   {"R", domain.R},       {"vmax", domain.vmax},     {"radius", domain.radius},
                   {"axis", domain.axis}, {"bound", domain.bound},   {"dimension", domain.dimension},
                   {"intervals", domain.intervals}};
    j["measure"] = {{"kind", measure.kind}, {"densities", measure.densities}};
    const Numerics& n = numerics;
    j["numerics"] = {{"step", n.flow.step},
                     {"horizon", n.flow.horizon},
                     {"exit_tolerance", n.flow.exit_tolerance},
                     {"periodic_shortcut", n.flow.periodic_shortcut},
                     {"quad_step", n.quad_step},
                     {"delta", n.delta},
                     {"t_probe", n.t_probe},
                     {"mc_samples", n.mc_samples},
                     {"grid", n.grid},
                     {"rng_seed", n.rng_seed},
                     {"mesh_cells", n.mesh_cells},
                     {"sigma", n.sigma},
                     {"mesh_samples", n.mesh_samples}};
    j["output"] = {{"directory", output.directory}, {"format", output.format}};
    return j.dump();
}

std::string RunConfig::hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical_json())));
    return buf;
}

}  // namespace charflow::cli
