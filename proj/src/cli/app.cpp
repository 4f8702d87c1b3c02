#include "charflow/cli/app.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "charflow/cli/config.hpp"
#include "charflow/cli/suites.hpp"
#include "charflow/error.hpp"
#include "charflow/measures.hpp"
#include "charflow/parallel.hpp"
#include "charflow/semigroup.hpp"

namespace charflow::cli {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json point_json(const Point& p) {
    json a = json::array();
    for (std::size_t i = 0; i < p.size(); ++i) a.push_back(p[i]);
    return a;
}

json time_json(const StayTime& t) {
    if (t.is_finite()) return t.value();
    return "ExceedsHorizon";
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::invalid_argument, "cannot write '" + path + "'");
    out << text;
    if (!out) throw Error(ErrorKind::invalid_argument, "failed writing '" + path + "'");
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// Comma separated, '.' decimals, LF line endings.
class Csv {
public:
    explicit Csv(const std::vector<std::string>& header) { row_strings(header); }

    void row(const std::vector<std::string>& cells) { row_strings(cells); }
    const std::string& text() const noexcept { return text_; }

private:
    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text_ += ',';
            text_ += cells[i];
        }
        text_ += '\n';
    }
    std::string text_;
};

bool is_csv(const std::string& path) {
    return path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
}

std::vector<std::string> coordinate_names(std::size_t dim) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < dim; ++i) out.push_back("x" + std::to_string(i + 1));
    return out;
}

/// "200x200" (one count per axis) or "200" for all axes.
std::vector<std::size_t> parse_grid(const std::string& text, std::size_t dim) {
    std::vector<std::size_t> counts;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, 'x')) {
        std::size_t used = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(part, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != part.size() || v == 0) throw ConfigError("--grid", "expected counts like 200x200, got '" + text + "'");
        counts.push_back(v);
    }
    if (counts.size() == 1) counts.assign(dim, counts[0]);
    if (counts.size() != dim) throw ConfigError("--grid", "needs one count per dimension (" + std::to_string(dim) + ")");
    return counts;
}

/// Cell centers of a grid over the box, first axis fastest.
std::vector<Point> grid_points(const Box& box, const std::vector<std::size_t>& counts) {
    std::size_t total = 1;
    for (auto c : counts) total *= c;
    std::vector<Point> pts;
    pts.reserve(total);
    for (std::size_t k = 0; k < total; ++k) {
        Point p(counts.size());
        std::size_t r = k;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            const std::size_t j = r % counts[i];
            r /= counts[i];
            p[i] = box.lo[i] + (static_cast<double>(j) + 0.5) * box.extent(i) / static_cast<double>(counts[i]);
        }
        pts.push_back(p);
    }
    return pts;
}

Point parse_point(const std::vector<double>& xs, std::size_t dim, const std::string& flag) {
    if (xs.size() != dim) throw ConfigError(flag, "needs " + std::to_string(dim) + " coordinates");
    return Point(std::span<const double>(xs));
}

PhaseFunction parse_function(const std::string& text, std::size_t dim, const std::string& flag) {
    try {
        return PhaseFunction::parse(text, dim);
    } catch (const Error& e) {
        throw ConfigError(flag, "'" + text + "': " + e.what());
    }
}

Box require_box(const Domain& d) {
    const auto bb = d.bounding_box();
    if (!bb) throw ConfigError("domain.kind", "this command needs a bounded domain");
    return *bb;
}

bool writes_either(const std::string& cmd) { return cmd == "trace" || cmd == "boundary-measure"; }

std::string default_out(const std::string& cmd, const std::string& format = "") {
    if (writes_either(cmd) && !format.empty()) return "charflow-" + cmd + "." + format;
    if (cmd == "trace" || cmd == "boundary-measure" || cmd == "solve-bvp" || cmd == "check") {
        return "charflow-" + cmd + ".json";
    }
    return "charflow-" + cmd + ".csv";
}

// Shared state of one invocation.
struct Run {
    std::string command;
    std::string config_path;
    std::string out;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    int threads = -1;
    RunConfig config;
    json diagnostics = json::object();
    std::vector<std::string> outputs;

    void load() {
        if (config_path.empty()) throw ConfigError("--config", "a config file is required");
        config = load_config(config_path, overrides);
        if (seed) config.numerics.rng_seed = *seed;
        if (threads >= 0) set_thread_count(static_cast<unsigned>(threads));
        if (out.empty()) out = default_out(command, config.output.format);
        out = resolve(out);
    }

    /// Relative paths land in output.directory, which is created if needed.
    std::string resolve(const std::string& path) const {
        namespace fs = std::filesystem;
        const std::string& dir = config.output.directory;
        if (dir.empty() || path.empty() || fs::path(path).is_absolute()) return path;
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw ConfigError("output.directory", "cannot create '" + dir + "': " + ec.message());
        return (fs::path(dir) / path).string();
    }

    void emit(const std::string& path, const std::string& text) {
        write_text(path, text);
        outputs.push_back(path);
    }
};

// ---------------------------------------------------------------------------
// Subcommands

struct TraceArgs {
    std::vector<double> x;
    std::size_t samples = 200;
};

void cmd_trace(Run& run, const TraceArgs& a) {
    const VectorField field = run.config.make_field();
    const Domain domain = run.config.make_domain();
    const Point x = parse_point(a.x, field.dimension(), "--x");
    const CharacteristicRecord rec = trace(field, domain, x, run.config.numerics.flow, a.samples);
    run.diagnostics["tau_minus"] = time_json(rec.tau_minus);
    run.diagnostics["tau_plus"] = time_json(rec.tau_plus);
    if (is_csv(run.out)) {
        std::vector<std::string> header{"s"};
        for (const auto& n : coordinate_names(field.dimension())) header.push_back(n);
        Csv csv(header);
        for (const auto& [s, p] : rec.samples) {
            std::vector<std::string> row{num(s)};
            for (std::size_t i = 0; i < p.size(); ++i) row.push_back(num(p[i]));
            csv.row(row);
        }
        run.emit(run.out, csv.text());
        return;
    }
    json j;
    j["seed"] = point_json(rec.seed);
    j["tau_minus"] = time_json(rec.tau_minus);
    j["tau_plus"] = time_json(rec.tau_plus);
    j["hit_minus"] = rec.hit_minus ? point_json(*rec.hit_minus) : json(nullptr);
    j["hit_plus"] = rec.hit_plus ? point_json(*rec.hit_plus) : json(nullptr);
    j["period"] = rec.period ? json(*rec.period) : json(nullptr);
    json samples = json::array();
    for (const auto& [s, p] : rec.samples) samples.push_back({{"s", s}, {"x", point_json(p)}});
    j["samples"] = samples;
    run.emit(run.out, j.dump(2) + "\n");
}

struct ClassifyArgs {
    std::size_t samples = 2000;
    bool infinity_flags = true;
};

void cmd_classify(Run& run, const ClassifyArgs& a) {
    const VectorField field = run.config.make_field();
    const Domain domain = run.config.make_domain();
    const auto pieces = domain.boundary_pieces();
    if (pieces.empty()) throw ConfigError("domain.kind", "classify needs a planar domain with a parametrized boundary");
    double total = 0.0;
    for (const auto& p : pieces) total += p.length();

    struct Sample {
        std::size_t piece;
        double t;
        Point y;
        BoundaryClass bc;
    };
    std::vector<Sample> rows(a.samples);
    for (std::size_t k = 0; k < a.samples; ++k) {
        double s = (static_cast<double>(k) + 0.5) / static_cast<double>(a.samples) * total;
        std::size_t i = 0;
        while (i + 1 < pieces.size() && s > pieces[i].length()) s -= pieces[i++].length();
        rows[k].piece = i;
        rows[k].t = std::min(s, pieces[i].length());
        rows[k].y = pieces[i].point_at(rows[k].t);
    }
    const FlowConfig flow = run.config.numerics.flow;
    parallel_for(rows.size(), [&](std::size_t k) {
        rows[k].bc = classify_boundary_point(field, domain, rows[k].y, flow, a.infinity_flags);
    });

    std::vector<std::string> header{"index", "piece", "t"};
    for (const auto& n : coordinate_names(field.dimension())) header.push_back(n);
    for (const char* h : {"tag", "gamma_minus_infinity", "gamma_plus_infinity"}) header.push_back(h);
    Csv csv(header);
    json counts = {{"IncomingOnly", 0}, {"OutgoingOnly", 0}, {"Both", 0}, {"Neither", 0}};
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& r = rows[k];
        std::vector<std::string> row{std::to_string(k), std::to_string(r.piece), num(r.t)};
        for (std::size_t i = 0; i < r.y.size(); ++i) row.push_back(num(r.y[i]));
        row.push_back(to_string(r.bc.tag));
        row.push_back(r.bc.is_gamma_minus_infinity ? "1" : "0");
        row.push_back(r.bc.is_gamma_plus_infinity ? "1" : "0");
        csv.row(row);
        counts[to_string(r.bc.tag)] = counts[to_string(r.bc.tag)].get<int>() + 1;
    }
    run.diagnostics["counts"] = counts;
    run.emit(run.out, csv.text());
}

struct MeshArgs {
    std::string side = "minus";
    std::size_t cells = 0;
    double sigma = 0.0;
    std::size_t n_mc = 0;
};

void cmd_boundary_measure(Run& run, const MeshArgs& a) {
    const auto& nm = run.config.numerics;
    const VectorField field = run.config.make_field();
    const Domain domain = run.config.make_domain();
    const Measure measure = run.config.make_measure();
    BoundarySide side;
    try {
        side = parse_side(a.side);
    } catch (const Error& e) {
        throw ConfigError("--side", e.what());
    }
    const BoundaryMesh mesh =
        build_boundary_mesh(field, domain, measure, side, a.cells ? a.cells : nm.mesh_cells,
                            a.sigma > 0.0 ? a.sigma : nm.sigma, a.n_mc ? a.n_mc : nm.mesh_samples, nm.flow,
                            nm.rng_seed);
    run.diagnostics["total_weight"] = mesh.total_weight();
    run.diagnostics["total_error"] = mesh.total_error();
    run.diagnostics["cells"] = mesh.cells.size();

    auto opt_num = [](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
    if (is_csv(run.out)) {
        Csv csv({"cell", "piece", "t0", "t1", "x1", "x2", "length", "weight", "weight_error", "density",
                 "reference_density", "reference_weight", "tag", "opposite_time"});
        for (std::size_t k = 0; k < mesh.cells.size(); ++k) {
            const auto& c = mesh.cells[k];
            csv.row({std::to_string(k), std::to_string(c.piece), num(c.t0), num(c.t1), num(c.representative[0]),
                     num(c.representative[1]), num(c.length), num(c.weight), num(c.weight_error),
                     num(c.weight / c.length), opt_num(c.reference_density), opt_num(c.reference_weight),
                     to_string(c.tag), c.opposite_time.to_string()});
        }
        run.emit(run.out, csv.text());
        return;
    }
    json j;
    j["side"] = to_string(mesh.side);
    j["sigma"] = mesh.sigma;
    j["n_mc"] = mesh.n_mc;
    j["seed"] = mesh.seed;
    j["total_weight"] = mesh.total_weight();
    j["total_error"] = mesh.total_error();
    json cells = json::array();
    for (const auto& c : mesh.cells) {
        cells.push_back({{"piece", c.piece},
                         {"t0", c.t0},
                         {"t1", c.t1},
                         {"representative", point_json(c.representative)},
                         {"length", c.length},
                         {"weight", c.weight},
                         {"weight_error", c.weight_error},
                         {"density", c.weight / c.length},
                         {"reference_density", c.reference_density ? json(*c.reference_density) : json(nullptr)},
                         {"reference_weight", c.reference_weight ? json(*c.reference_weight) : json(nullptr)},
                         {"tag", to_string(c.tag)},
                         {"opposite_time", time_json(c.opposite_time)}});
    }
    j["cells"] = cells;
    run.emit(run.out, j.dump(2) + "\n");
}

struct FieldOutArgs {
    std::string grid = "100x100";
    std::vector<std::vector<double>> points;
};

std::vector<Point> evaluation_points(const FieldOutArgs& a, const Domain& domain, std::size_t dim) {
    if (!a.points.empty()) {
        std::vector<Point> pts;
        for (const auto& p : a.points) pts.push_back(parse_point(p, dim, "--point"));
        return pts;
    }
    return grid_points(require_box(domain), parse_grid(a.grid, dim));
}

std::string values_csv(const std::vector<Point>& pts, const std::vector<double>& vals, std::size_t dim) {
    auto header = coordinate_names(dim);
    header.push_back("value");
    Csv csv(header);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        std::vector<std::string> row;
        for (std::size_t i = 0; i < dim; ++i) row.push_back(num(pts[k][i]));
        row.push_back(num(vals[k]));
        csv.row(row);
    }
    return csv.text();
}

struct EvolveArgs {
    double t = 0.0;
    std::string f0;
    FieldOutArgs where;
};

void cmd_evolve(Run& run, const EvolveArgs& a) {
    const VectorField field = run.config.make_field();
    const Domain domain = run.config.make_domain();
    if (a.t < 0.0) throw ConfigError("--t", "must be nonnegative");
    const PhaseFunction f0 = parse_function(a.f0, field.dimension(), "--f0");
    SemigroupQuery q{a.t, f0, evaluation_points(a.where, domain, field.dimension())};
    const auto vals = evolve(q, field, domain, run.config.numerics.flow);
    run.diagnostics["points"] = q.points.size();
    run.emit(run.out, values_csv(q.points, vals, field.dimension()));
}

struct ResolventArgs {
    double lambda = 1.0;
    std::string g;
    std::string u;
    std::string report;
    std::string values_out;
    FieldOutArgs where;
};

json diagnostics_json(const SolutionDiagnostics& d) {
    return {{"evaluations", d.evaluations},
            {"exited", d.exited},
            {"periodic", d.periodic},
            {"truncated", d.truncated},
            {"footpoint_unclassified", d.footpoint_unclassified},
            {"sup_g", d.sup_g},
            {"sup_u", d.sup_u},
            {"cutoff", d.cutoff},
            {"truncation_bound", d.truncation_bound}};
}

void check_lambda(double lambda) {
    if (!(lambda > 0.0)) throw Error(ErrorKind::nonpositive_lambda, "--lambda must be positive");
}

void cmd_resolvent(Run& run, const ResolventArgs& a) {
    const VectorField field = run.config.make_field();
    const Domain domain = run.config.make_domain();
    check_lambda(a.lambda);
    const PhaseFunction g = parse_function(a.g, field.dimension(), "--g");
    const BvpSolution sol = resolvent(a.lambda, g, field, domain, run.config.numerics.quad_step,
                                      run.config.numerics.flow);
    const auto pts = evaluation_points(a.where, domain, field.dimension());
    std::vector<double> vals(pts.size(), 0.0);
    parallel_for(pts.size(), [&](std::size_t k) { vals[k] = sol(pts[k]); });
    run.diagnostics["solution"] = diagnostics_json(sol.diagnostics());
    run.emit(run.out, values_csv(pts, vals, field.dimension()));
}

void cmd_solve_bvp(Run& run, const ResolventArgs& a) {
    const auto& nm = run.config.numerics;
    const VectorField field = run.config.make_field();
    const Domain domain = run.config.make_domain();
    const Measure measure = run.config.make_measure();
    check_lambda(a.lambda);
    BvpProblem problem{a.lambda, parse_function(a.g, field.dimension(), "--g"), std::nullopt};
    if (!a.u.empty()) problem.u = parse_function(a.u, field.dimension(), "--u");
    const BvpSolution sol = solve_bvp(problem, field, domain, nm.quad_step, nm.flow);

    std::set<std::string> reports;
    {
        std::stringstream ss(a.report);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item.empty()) continue;
            if (item != "green" && item != "norms") throw ConfigError("--report", "unknown report '" + item + "'");
            reports.insert(item);
        }
    }

    json j;
    j["lambda"] = a.lambda;
    j["g"] = a.g;
    j["u"] = a.u.empty() ? json(nullptr) : json(a.u);
    if (!reports.empty()) {
        const BoundaryMesh minus = build_boundary_mesh(field, domain, measure, BoundarySide::gamma_minus,
                                                       nm.mesh_cells, nm.sigma, nm.mesh_samples, nm.flow, nm.rng_seed);
        const BoundaryMesh plus = build_boundary_mesh(field, domain, measure, BoundarySide::gamma_plus,
                                                      nm.mesh_cells, nm.sigma, nm.mesh_samples, nm.flow,
                                                      nm.rng_seed + 1);
        IdentityOptions io;
        io.quadrature = measure.is_lebesgue() ? DomainQuadrature(TensorGrid{nm.grid})
                                              : DomainQuadrature(MonteCarlo{nm.mc_samples, nm.rng_seed});
        io.t_probe = nm.t_probe;
        const IdentityReport rep = check_identities(sol, minus, plus, field, domain, measure, nm.flow, io);
        if (reports.count("green")) {
            j["green"] = {{"outgoing", rep.green.outgoing}, {"lambda_f", rep.green.lambda_f},
                          {"incoming", rep.green.incoming}, {"source", rep.green.source},
                          {"lhs", rep.green.lhs},           {"rhs", rep.green.rhs},
                          {"residual", rep.green.residual}, {"domain_error", rep.green.domain_error},
                          {"boundary_error", rep.green.boundary_error}};
        }
        if (reports.count("norms")) {
            j["norms"] = {{"lhs", rep.norms.lhs},
                          {"rhs", rep.norms.rhs},
                          {"gap", rep.norms.gap},
                          {"tolerance", rep.norms.tolerance}};
        }
        j["skipped_nodes"] = rep.skipped_nodes;
    }
    if (!a.values_out.empty()) {
        const auto pts = evaluation_points(a.where, domain, field.dimension());
        std::vector<double> vals(pts.size(), 0.0);
        parallel_for(pts.size(), [&](std::size_t k) { vals[k] = sol(pts[k]); });
        run.emit(run.resolve(a.values_out), values_csv(pts, vals, field.dimension()));
    }
    j["diagnostics"] = diagnostics_json(sol.diagnostics());
    run.diagnostics["solution"] = j["diagnostics"];
    run.emit(run.out, j.dump(2) + "\n");
}

struct CheckArgs {
    std::string suite = "all";
    std::vector<unsigned> n;
};

bool cmd_check(Run& run, const CheckArgs& a) {
    SuiteOptions opt;
    if (!a.n.empty()) opt.mollifier_n = a.n;
    for (unsigned n : opt.mollifier_n) {
        if (n == 0) throw ConfigError("--n", "mollifier indices must be positive");
    }
    const json report = run_suite(a.suite, run.config, opt);
    run.diagnostics["pass"] = report["pass"];
    run.diagnostics["gates"] = report["gates"];
    run.emit(run.out, report.dump(2) + "\n");
    return report["pass"].get<bool>();
}

void write_manifest(const Run& run, const std::string& status, int code, double seconds,
                    const std::optional<json>& error, const std::vector<std::string>& argv) {
    json m;
    m["tool"] = "charflow";
    m["version"] = kVersion;
    m["command"] = run.command;
    m["argv"] = argv;
    m["config_path"] = run.config_path;
    m["config_hash"] = run.config.source.empty() ? json(nullptr) : json(run.config.hash());
    m["seed"] = run.config.numerics.rng_seed;
    m["threads"] = thread_count();
    m["status"] = status;
    m["exit_code"] = code;
    m["outputs"] = run.outputs;
    m["diagnostics"] = run.diagnostics;
    m["error"] = error ? *error : json(nullptr);
    m["wall_clock_seconds"] = seconds;
    const std::string path = (run.out.empty() ? std::string("charflow") : run.out) + ".manifest.json";
    try {
        write_json(path, m);
    } catch (const std::exception& e) {
        std::cerr << "charflow: could not write manifest: " << e.what() << "\n";
    }
}

}  // namespace

int run_subcommand(int argc, const char* const* argv) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> args(argv, argv + argc);

    CLI::App app{"Characteristic-curve engine for linear transport equations", "charflow"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    Run run;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", run.config_path, "JSON config file")->required();
        sub->add_option("--out", run.out, "output file (the manifest goes to OUT.manifest.json)");
        sub->add_option("--seed", run.seed, "overrides numerics.rng_seed");
        sub->add_option("--threads", run.threads, "worker threads (0 = auto; default CHARFLOW_THREADS)");
        sub->add_option("--set", run.overrides, "config override, dotted.key=value (repeatable)");
    };

    TraceArgs trace_args;
    auto* trace_cmd = app.add_subcommand("trace", "follow one characteristic");
    common(trace_cmd);
    trace_cmd->add_option("--x", trace_args.x, "seed point, comma separated")->delimiter(',')->required();
    trace_cmd->add_option("--samples", trace_args.samples, "states along the curve")->check(CLI::PositiveNumber);

    ClassifyArgs classify_args;
    auto* classify_cmd = app.add_subcommand("classify", "tag boundary points as incoming/outgoing");
    common(classify_cmd);
    classify_cmd->add_option("--samples", classify_args.samples, "points spaced evenly along the boundary")
        ->check(CLI::PositiveNumber);
    classify_cmd->add_flag("!--no-infinity", classify_args.infinity_flags, "skip the Gamma-infinity flags");

    MeshArgs mesh_args;
    auto* mesh_cmd = app.add_subcommand("boundary-measure", "slab estimates of the boundary measure");
    common(mesh_cmd);
    mesh_cmd->add_option("--side", mesh_args.side, "minus or plus");
    mesh_cmd->add_option("--cells", mesh_args.cells, "number of cells (default numerics.mesh_cells)");
    mesh_cmd->add_option("--sigma", mesh_args.sigma, "slab thickness (default numerics.sigma)");
    mesh_cmd->add_option("--mc,--n-mc", mesh_args.n_mc, "total slab samples (default numerics.mesh_samples)");

    auto where = [](CLI::App* sub, FieldOutArgs& w) {
        sub->add_option("--grid", w.grid, "cell-center grid over the bounding box, e.g. 200x200");
        sub->add_option("--point", w.points, "evaluation point, comma separated (repeatable)")->delimiter(',')
            ->allow_extra_args(false);
    };

    EvolveArgs evolve_args;
    auto* evolve_cmd = app.add_subcommand("evolve", "no-reentry semigroup U0(t) f0");
    common(evolve_cmd);
    evolve_cmd->add_option("--t", evolve_args.t, "time")->required();
    evolve_cmd->add_option("--f0", evolve_args.f0, "initial function, expr:... or const:...")->required();
    where(evolve_cmd, evolve_args.where);

    ResolventArgs resolvent_args;
    auto* resolvent_cmd = app.add_subcommand("resolvent", "resolvent (lambda - T0)^-1 g");
    common(resolvent_cmd);
    resolvent_cmd->add_option("--lambda", resolvent_args.lambda, "lambda > 0");
    resolvent_cmd->add_option("--g", resolvent_args.g, "source")->required();
    where(resolvent_cmd, resolvent_args.where);

    ResolventArgs bvp_args;
    auto* bvp_cmd = app.add_subcommand("solve-bvp", "(lambda - T) f = g, B^- f = u");
    common(bvp_cmd);
    bvp_cmd->add_option("--lambda", bvp_args.lambda, "lambda > 0");
    bvp_cmd->add_option("--g", bvp_args.g, "source")->required();
    bvp_cmd->add_option("--u", bvp_args.u, "incoming boundary datum (default 0)");
    bvp_cmd->add_option("--report", bvp_args.report, "comma separated: green, norms");
    bvp_cmd->add_option("--values", bvp_args.values_out, "also write f on --grid/--point to this CSV");
    where(bvp_cmd, bvp_args.where);

    CheckArgs check_args;
    auto* check_cmd = app.add_subcommand("check", "run self-check suites");
    common(check_cmd);
    std::vector<std::string> suites = suite_names();
    suites.push_back("all");
    check_cmd->add_option("--suite", check_args.suite, "invariance, mollifier, semigroup, bvp, green or all")
        ->check(CLI::IsMember(suites));
    check_cmd->add_option("--n", check_args.n, "mollifier indices, comma separated")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        for (auto* sub : app.get_subcommands()) run.command = sub->get_name();
        run.out = run.out.empty() && !run.command.empty() ? default_out(run.command) : run.out;
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_manifest(run, "config_error", 2, secs, json{{"kind", "usage"}, {"message", e.what()}}, args);
        return 2;
    }

    run.command = app.get_subcommands().front()->get_name();

    int code = 0;
    std::string status = "ok";
    std::optional<json> error;
    try {
        run.load();
        if (run.command == "trace") cmd_trace(run, trace_args);
        else if (run.command == "classify") cmd_classify(run, classify_args);
        else if (run.command == "boundary-measure") cmd_boundary_measure(run, mesh_args);
        else if (run.command == "evolve") cmd_evolve(run, evolve_args);
        else if (run.command == "resolvent") cmd_resolvent(run, resolvent_args);
        else if (run.command == "solve-bvp") cmd_solve_bvp(run, bvp_args);
        else if (run.command == "check" && !cmd_check(run, check_args)) {
            code = 1;
            status = "check_failed";
            std::cerr << "charflow: some check gates failed (see " << run.out << ")\n";
        }
    } catch (const ConfigError& e) {
        code = 2;
        status = "config_error";
        error = json{{"kind", "config"}, {"key", e.key()}, {"message", e.what()}};
        std::cerr << "charflow: config error: " << e.what() << "\n";
    } catch (const Error& e) {
        code = e.kind() == ErrorKind::config ? 2 : 1;
        status = code == 2 ? "config_error" : "numeric_error";
        error = json{{"kind", to_string(e.kind())}, {"message", e.what()}};
        std::cerr << "charflow: " << e.what() << "\n";
    } catch (const std::exception& e) {
        code = 1;
        status = "numeric_error";
        error = json{{"kind", "internal"}, {"message", e.what()}};
        std::cerr << "charflow: " << e.what() << "\n";
    }
    if (run.out.empty()) run.out = default_out(run.command);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(run, status, code, secs, error, args);
    return code;
}

}  // namespace charflow::cli
