#pragma once

// Run configuration: JSON files with nested objects or flat dotted keys
// ("field.kind": "harmonic" and {"field": {"kind": "harmonic"}} are the
// same). Unknown keys are rejected.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "charflow/domain.hpp"
#include "charflow/field.hpp"
#include "charflow/flow.hpp"
#include "charflow/measure.hpp"

namespace charflow::cli {

struct FieldSpec {
    std::string kind = "harmonic";  ///< free_transport | harmonic | rotation | custom
    double omega = 1.0;
    std::size_t dimension = 2;
    std::vector<std::string> expressions;
    std::optional<double> lipschitz;
};

struct DomainSpec {
    std::string kind = "rectangle";  ///< rectangle | stadium | disk | half_space | product
    double a = 1.0;
    double xi = 1.0;
    double R = 1.4142135623730951;
    double vmax = 1.0;
    double radius = 1.0;
    std::size_t axis = 0;
    double bound = 0.0;
    std::size_t dimension = 2;
    std::vector<std::pair<double, double>> intervals;
};

struct MeasureSpec {
    std::string kind = "lebesgue";  ///< lebesgue | product_weighted
    std::vector<std::string> densities;
};

struct Numerics {
    FlowConfig flow;
    double quad_step = 1e-2;
    double delta = 1e-3;               ///< transport difference step
    double t_probe = 1e-2;             ///< trace probe length
    std::size_t mc_samples = 100000;
    std::size_t grid = 160;            ///< tensor grid cells per axis
    std::uint64_t rng_seed = 0x5eed;
    std::size_t mesh_cells = 40;
    double sigma = 0.05;
    std::size_t mesh_samples = 400000; ///< total slab samples per mesh
};

struct OutputSpec {
    std::string directory;  ///< relative output paths resolve against it; created on demand
    std::string format;     ///< json | csv for commands that write either; empty = per-command default
};

struct RunConfig {
    std::string name;
    std::string source;  ///< path the config was read from, if any
    FieldSpec field;
    DomainSpec domain;
    MeasureSpec measure;
    Numerics numerics;
    OutputSpec output;

    VectorField make_field() const;
    Domain make_domain() const;
    Measure make_measure() const;

    /// Canonical JSON of every effective setting (sorted keys, defaults filled).
    std::string canonical_json() const;
    /// 64-bit FNV-1a of canonical_json(), as 16 hex digits.
    std::string hash() const;
};

/// Throws ConfigError naming the key (or the path for unreadable files).
/// `overrides` are "dotted.key=value" strings applied on top of the file;
/// values parse as JSON when they can and as plain strings otherwise.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});
RunConfig parse_config(const std::string& json_text, const std::string& origin = "<string>",
                       const std::vector<std::string>& overrides = {});

std::uint64_t fnv1a(const std::string& bytes) noexcept;

}  // namespace charflow::cli
