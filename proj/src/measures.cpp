#include "charflow/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "charflow/error.hpp"
#include "charflow/parallel.hpp"
#include "charflow/quadrature.hpp"
#include "charflow/rng.hpp"

namespace charflow {

namespace {

constexpr std::size_t kBlock = 1 << 15;

Box integration_box(const Domain& domain, const PhaseFunction& f) {
    const auto bb = domain.bounding_box();
    const auto& hint = f.support_hint();
    if (bb && hint) return bb->intersect(*hint);
    if (bb) return *bb;
    if (hint) return *hint;
    throw Error(ErrorKind::unsupported,
                "integrate_domain: unbounded domain needs a support hint on the integrand");
}

Direction slab_direction(BoundarySide side) {
    // Gamma_- cells are reached by going backward from the slab, Gamma_+ forward.
    return side == BoundarySide::gamma_minus ? Direction::backward : Direction::forward;
}

Direction curve_direction(BoundarySide side) {
    return side == BoundarySide::gamma_minus ? Direction::forward : Direction::backward;
}

bool on_side(const BoundaryClass& bc, BoundarySide side) {
    return side == BoundarySide::gamma_minus ? bc.in_gamma_minus() : bc.in_gamma_plus();
}

}  // namespace

const char* to_string(BoundarySide side) noexcept {
    return side == BoundarySide::gamma_minus ? "gamma_minus" : "gamma_plus";
}

BoundarySide parse_side(const std::string& text) {
    if (text == "minus" || text == "gamma_minus" || text == "-" || text == "incoming") {
        return BoundarySide::gamma_minus;
    }
    if (text == "plus" || text == "gamma_plus" || text == "+" || text == "outgoing") {
        return BoundarySide::gamma_plus;
    }
    throw Error(ErrorKind::invalid_argument, "unknown boundary side '" + text + "' (use minus or plus)");
}

// ---------------------------------------------------------------------------
// Domain quadrature

std::vector<QuadratureResult> integrate_domain_many(const MultiIntegrand& f, std::size_t count, const Box& box,
                                                    const Domain& domain, const Measure& measure,
                                                    const DomainQuadrature& method) {
    const std::size_t n = box.dimension();
    std::vector<QuadratureResult> out(count);
    if (const auto* mc = std::get_if<MonteCarlo>(&method)) {
        if (mc->samples == 0) throw Error(ErrorKind::invalid_argument, "integrate_domain: zero samples");
        Rng rng(mc->seed);
        std::vector<Point> pts;
        std::vector<double> vals;
        std::vector<unsigned char> in;
        std::vector<double> sum(count, 0.0), sum2(count, 0.0);
        std::size_t accepted = 0;
        for (std::size_t done = 0; done < mc->samples; done += kBlock) {
            const std::size_t m = std::min(kBlock, mc->samples - done);
            pts.resize(m);
            vals.assign(m * count, 0.0);
            in.assign(m, 0);
            for (auto& p : pts) p = rng.uniform_in(box);
            parallel_for(m, [&](std::size_t i) {
                if (!domain.contains(pts[i])) return;
                in[i] = 1;
                const std::span<double> row(vals.data() + i * count, count);
                f(pts[i], row);
                const double rho = measure.density(pts[i]);
                for (double& v : row) v *= rho;
            });
            for (std::size_t i = 0; i < m; ++i) {
                if (!in[i]) continue;
                ++accepted;
                for (std::size_t c = 0; c < count; ++c) {
                    const double v = vals[i * count + c];
                    sum[c] += v;
                    sum2[c] += v * v;
                }
            }
        }
        if (accepted == 0) throw Error(ErrorKind::empty_domain, "integrate_domain: no sample fell inside the domain");
        const double nn = static_cast<double>(mc->samples);
        for (std::size_t c = 0; c < count; ++c) {
            const double mean = sum[c] / nn;
            const double var = std::max(0.0, sum2[c] / nn - mean * mean);
            out[c].value = box.volume() * mean;
            out[c].error = box.volume() * std::sqrt(var / nn);
            out[c].evaluations = mc->samples;
            out[c].accepted = accepted;
        }
        return out;
    }

    const auto& grid = std::get<TensorGrid>(method);
    if (!measure.is_lebesgue()) {
        throw Error(ErrorKind::unsupported, "tensor-grid quadrature is only available for the Lebesgue measure");
    }
    if (grid.resolution == 0) throw Error(ErrorKind::invalid_argument, "integrate_domain: zero grid resolution");
    auto midpoint = [&](std::size_t res, std::size_t& accepted) {
        std::size_t total = 1;
        for (std::size_t i = 0; i < n; ++i) total *= res;
        double cell = 1.0;
        for (std::size_t i = 0; i < n; ++i) cell *= box.extent(i) / static_cast<double>(res);
        std::vector<double> vals(total * count, 0.0);
        std::vector<unsigned char> in(total, 0);
        parallel_for(total, [&](std::size_t k) {
            Point p(n);
            std::size_t r = k;
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t j = r % res;
                r /= res;
                p[i] = box.lo[i] + (static_cast<double>(j) + 0.5) * box.extent(i) / static_cast<double>(res);
            }
            if (domain.contains(p)) {
                f(p, std::span<double>(vals.data() + k * count, count));
                in[k] = 1;
            }
        });
        accepted = static_cast<std::size_t>(std::count(in.begin(), in.end(), 1));
        std::vector<double> sums(count, 0.0);
        for (std::size_t k = 0; k < total; ++k) {
            for (std::size_t c = 0; c < count; ++c) sums[c] += vals[k * count + c];
        }
        for (double& v : sums) v *= cell;
        return sums;
    };
    std::size_t acc = 0, acc_coarse = 0;
    const auto fine = midpoint(grid.resolution, acc);
    if (acc == 0) throw Error(ErrorKind::empty_domain, "integrate_domain: no grid cell center inside the domain");
    std::size_t evals = 1;
    for (std::size_t i = 0; i < n; ++i) evals *= grid.resolution;
    std::vector<double> coarse;
    if (grid.resolution >= 4) coarse = midpoint(grid.resolution / 2, acc_coarse);
    for (std::size_t c = 0; c < count; ++c) {
        out[c].value = fine[c];
        out[c].accepted = acc;
        out[c].evaluations = evals;
        if (!coarse.empty()) out[c].error = std::abs(fine[c] - coarse[c]);
    }
    return out;
}

QuadratureResult integrate_domain(const PhaseFunction& f, const Domain& domain, const Measure& measure,
                                  const DomainQuadrature& method) {
    return integrate_domain_many([&](const Point& x, std::span<double> out) { out[0] = f(x); }, 1,
                                 integration_box(domain, f), domain, measure, method)[0];
}

DivergenceReport divergence_diagnostic(const VectorField& field, const Measure& measure, const Box& box,
                                       std::size_t samples, std::uint64_t seed) {
    DivergenceReport rep;
    if (samples == 0) return rep;
    Rng rng(seed);
    const std::size_t n = field.dimension();
    double total = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        const Point x = rng.uniform_in(box);
        double div = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double hstep = 1e-5 * (1.0 + std::abs(x[i]));
            Point xp = x, xm = x;
            xp[i] += hstep;
            xm[i] -= hstep;
            div += (measure.density(xp) * field(xp)[i] - measure.density(xm) * field(xm)[i]) / (2.0 * hstep);
        }
        rep.max_abs = std::max(rep.max_abs, std::abs(div));
        total += std::abs(div);
    }
    rep.mean_abs = total / static_cast<double>(samples);
    return rep;
}

double boundary_density_reference(const VectorField& field, const Domain& domain, const Point& y) {
    return boundary_density_reference(field, domain, Measure::lebesgue(), y);
}

double boundary_density_reference(const VectorField& field, const Domain& domain, const Measure& measure,
                                  const Point& y) {
    const auto n = domain.outward_normal(y);
    if (!n) throw Error(ErrorKind::undefined_normal, "outward normal undefined at " + y.to_string());
    return measure.density(y) * std::abs(dot(field.evaluate(y), *n));
}

// ---------------------------------------------------------------------------
// Boundary meshes

double BoundaryMesh::total_weight() const noexcept {
    double s = 0.0;
    for (const auto& c : cells) s += c.weight;
    return s;
}

double BoundaryMesh::total_error() const noexcept {
    double s = 0.0;
    for (const auto& c : cells) s += c.weight_error * c.weight_error;
    return std::sqrt(s);
}

bool BoundaryMesh::cell_contains(std::size_t cell, const Point& y, double tol) const {
    const BoundaryCell& c = cells.at(cell);
    const BoundaryPiece& p = pieces.at(c.piece);
    if (p.distance_to(y) > tol) return false;
    const double t = p.parameter_of(y);
    return t >= c.t0 - tol && t <= c.t1 + tol;
}

std::vector<std::pair<Point, double>> BoundaryMesh::nodes(std::size_t per_cell) const {
    if (per_cell == 0) per_cell = 1;
    std::vector<std::pair<Point, double>> out;
    out.reserve(cells.size() * per_cell);
    for (const auto& c : cells) {
        const BoundaryPiece& p = pieces.at(c.piece);
        std::vector<Point> ys;
        std::vector<double> shape(per_cell, 1.0);
        for (std::size_t k = 0; k < per_cell; ++k) {
            const double t = c.t0 + (c.t1 - c.t0) * (static_cast<double>(k) + 0.5) / static_cast<double>(per_cell);
            ys.push_back(p.point_at(t));
        }
        if (density_shape && per_cell > 1) {
            for (std::size_t k = 0; k < per_cell; ++k) shape[k] = density_shape(ys[k]);
        }
        double total = std::accumulate(shape.begin(), shape.end(), 0.0);
        if (!(total > 0.0) || !std::isfinite(total)) {
            std::fill(shape.begin(), shape.end(), 1.0);
            total = static_cast<double>(per_cell);
        }
        for (std::size_t k = 0; k < per_cell; ++k) out.emplace_back(ys[k], c.weight * shape[k] / total);
    }
    return out;
}

std::vector<SideInterval> side_intervals(const VectorField& field, const Domain& domain, BoundarySide side,
                                         const FlowConfig& config, std::size_t scan) {
    const auto pieces = domain.boundary_pieces();
    std::vector<SideInterval> out;
    if (scan < 2) scan = 2;
    // Arc ends are located with a short probe: the default window misses the
    // last |F| * probe of an arc that ends at a corner.
    FlowConfig fine = config;
    fine.probe_window = 0.1 * config.step;
    for (std::size_t pi = 0; pi < pieces.size(); ++pi) {
        const BoundaryPiece& p = pieces[pi];
        const double len = p.length();
        auto member = [&](double t) {
            return on_side(classify_boundary_point(field, domain, p.point_at(t), fine, false), side);
        };
        std::vector<double> ts(scan);
        std::vector<unsigned char> in(scan);
        for (std::size_t j = 0; j < scan; ++j) ts[j] = len * (static_cast<double>(j) + 0.5) / static_cast<double>(scan);
        parallel_for(scan, [&](std::size_t j) { in[j] = member(ts[j]) ? 1 : 0; });

        // Transition between an outside sample a and an inside sample b.
        auto edge = [&](double a, double b) {
            for (int it = 0; it < 45; ++it) {
                const double m = 0.5 * (a + b);
                if (member(m)) b = m;
                else a = m;
            }
            return b;
        };
        std::size_t j = 0;
        while (j < scan) {
            if (!in[j]) {
                ++j;
                continue;
            }
            std::size_t k = j;
            while (k + 1 < scan && in[k + 1]) ++k;
            const double t0 = (j == 0) ? 0.0 : edge(ts[j - 1], ts[j]);
            const double t1 = (k + 1 == scan) ? len : edge(ts[k + 1], ts[k]);
            if (t1 > t0) out.push_back({pi, t0, t1});
            j = k + 1;
        }
    }
    return out;
}

BoundaryCell measure_boundary_cell(const VectorField& field, const Domain& domain, const Measure& measure,
                                   BoundarySide side, const BoundaryPiece& piece, std::size_t piece_index,
                                   double t0, double t1, double sigma, std::size_t n_mc,
                                   std::uint64_t seed, std::uint64_t stream, const FlowConfig& config) {
    if (!(sigma > 0.0)) throw Error(ErrorKind::invalid_argument, "slab thickness sigma must be positive");
    const std::size_t dim = domain.dimension();
    BoundaryCell cell;
    cell.piece = piece_index;
    cell.t0 = t0;
    cell.t1 = t1;
    cell.start = piece.point_at(t0);
    cell.end = piece.point_at(t1);
    cell.representative = piece.point_at(0.5 * (t0 + t1));
    cell.length = t1 - t0;
    cell.samples = n_mc;

    // Box containing every point Phi(y, -+s), y in the cell, 0 < s <= sigma:
    // |Phi_i(y, s) - y_i| <= s (|F_i(y)| + kappa sup|Phi - y|) with
    // sup|Phi - y| <= Fmax (e^{kappa s} - 1) / kappa.
    const Box arc_box = piece.bounds(t0, t1);
    const Point centre = arc_box.center();
    double half_diam = 0.0;
    for (std::size_t i = 0; i < dim; ++i) half_diam += 0.25 * arc_box.extent(i) * arc_box.extent(i);
    half_diam = std::sqrt(half_diam);
    const double kappa = field.lipschitz_bound();
    Point fmax_i(dim);
    double fmax = 0.0;
    constexpr int kProbe = 17;
    for (int k = 0; k < kProbe; ++k) {
        const Point y = piece.point_at(t0 + (t1 - t0) * k / (kProbe - 1.0));
        const Point fy = field(y);
        for (std::size_t i = 0; i < dim; ++i) fmax_i[i] = std::max(fmax_i[i], std::abs(fy[i]));
        fmax = std::max(fmax, norm(fy));
    }
    {
        const Point fc = field(centre);
        for (std::size_t i = 0; i < dim; ++i) fmax_i[i] = std::max(fmax_i[i], std::abs(fc[i]));
        fmax = std::max(fmax, norm(fc));
    }
    fmax += kappa * half_diam;
    const double rho = kappa > 0.0 ? fmax * std::expm1(kappa * sigma) / kappa : fmax * sigma;
    Point margin(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        margin[i] = 1.01 * sigma * (fmax_i[i] + kappa * (half_diam + rho)) + 1e-12;
    }
    Box box = arc_box.inflated(margin);

    // Tighter enclosure: traced curves from cell points, widened by the
    // spread e^{kappa sigma} * spacing / 2 between neighbouring curves and
    // by one step of motion between stored states.
    {
        constexpr int kCurves = 33;
        const Direction dir = curve_direction(side);
        const double spacing = (t1 - t0) / (kCurves - 1.0);
        Box traced{cell.start, cell.start};
        double fpeak = 0.0;
        for (int k = 0; k < kCurves; ++k) {
            Point y = piece.point_at(t0 + spacing * k);
            const auto steps = static_cast<int>(std::ceil(sigma / config.step));
            const double dt = sigma / steps;
            for (int j = 0; j <= steps; ++j) {
                for (std::size_t i = 0; i < dim; ++i) {
                    traced.lo[i] = std::min(traced.lo[i], y[i]);
                    traced.hi[i] = std::max(traced.hi[i], y[i]);
                }
                fpeak = std::max(fpeak, norm(field(y)));
                if (j < steps) y = rk4_step(field, y, sign(dir) * dt);
            }
        }
        const double chord = std::max(spacing, distance(cell.start, cell.end) / (kCurves - 1.0));
        const double pad = std::exp(kappa * sigma) * 0.5 * chord * 1.05 +
                           fpeak * sigma / std::ceil(sigma / config.step) + 1e-12;
        Point tpad(dim);
        for (std::size_t i = 0; i < dim; ++i) tpad[i] = pad;
        box = box.intersect(traced.inflated(tpad));
    }
    if (auto bb = domain.bounding_box()) box = box.intersect(*bb);
    const double vol = box.volume();

    if (n_mc > 0 && vol > 0.0) {
        Rng rng(seed, stream);
        const Direction dir = slab_direction(side);
        std::vector<Point> pts;
        std::vector<double> vals;
        double sum = 0.0, sum2 = 0.0;
        for (std::size_t done = 0; done < n_mc; done += kBlock) {
            const std::size_t m = std::min(kBlock, n_mc - done);
            pts.resize(m);
            vals.assign(m, 0.0);
            for (auto& p : pts) p = rng.uniform_in(box);
            parallel_for(m, [&](std::size_t i) {
                const Point& x = pts[i];
                if (!domain.contains(x)) return;
                const ExitResult ex = find_exit(field, domain, x, dir, sigma, config);
                if (!ex.time.is_finite() || !ex.hit) return;
                if (piece.distance_to(*ex.hit) > 1e-6) return;
                const double t = piece.parameter_of(*ex.hit);
                const bool last = (t1 >= piece.length());
                if (t < t0 || (last ? t > t1 : t >= t1)) return;
                // The curve through x may leave again before sigma; its slab
                // segment then has length l < sigma and x counts sigma / l.
                const double s = ex.time.value();
                const ExitResult on = find_exit(field, domain, x, curve_direction(side), sigma - s, config);
                const double l = on.time.is_finite() ? s + on.time.value() : sigma;
                vals[i] = measure.density(x) * (l > 0.0 ? sigma / l : 1.0);
            });
            for (double v : vals) {
                if (v != 0.0) ++cell.hits;
                sum += v;
                sum2 += v * v;
            }
        }
        const double nn = static_cast<double>(n_mc);
        const double mean = sum / nn;
        const double var = std::max(0.0, sum2 / nn - mean * mean);
        cell.weight = vol * mean / sigma;
        cell.weight_error = vol * std::sqrt(var / nn) / sigma;
    }

    cell.tag = classify_boundary_point(field, domain, cell.representative, config, false).tag;
    const ExitResult far =
        find_exit(field, domain, cell.representative, curve_direction(side), config.horizon, config);
    cell.opposite_time = far.time;
    cell.opposite_hit = far.hit;

    if (auto n = domain.outward_normal(cell.representative)) {
        cell.reference_density = measure.density(cell.representative) * std::abs(dot(field(cell.representative), *n));
        static const GaussLegendre gl(16);
        cell.reference_weight = gl.integrate(
            [&](double t) {
                const Point y = piece.point_at(t);
                const auto ny = domain.outward_normal(y);
                return ny ? measure.density(y) * std::abs(dot(field(y), *ny)) : 0.0;
            },
            t0, t1);
    }
    return cell;
}

BoundaryMesh build_boundary_mesh(const VectorField& field, const Domain& domain, const Measure& measure,
                                 BoundarySide side, std::size_t n_cells, double sigma, std::size_t n_mc,
                                 const FlowConfig& config, std::uint64_t seed) {
    if (n_cells == 0) throw Error(ErrorKind::invalid_argument, "build_boundary_mesh: n_cells must be positive");
    BoundaryMesh mesh;
    mesh.side = side;
    mesh.sigma = sigma;
    mesh.n_mc = n_mc;
    mesh.seed = seed;
    mesh.pieces = domain.boundary_pieces();
    mesh.density_shape = [field, domain, measure](const Point& y) {
        const auto n = domain.outward_normal(y);
        return n ? measure.density(y) * std::abs(dot(field(y), *n)) : 0.0;
    };
    const auto intervals = side_intervals(field, domain, side, config);
    if (intervals.empty()) {
        throw Error(ErrorKind::degenerate_side,
                    std::string("no boundary point is classified into ") + to_string(side));
    }

    // Largest-remainder allotment of cells by arc length, at least one each.
    const std::size_t m = intervals.size();
    double total_len = 0.0;
    for (const auto& iv : intervals) total_len += iv.t1 - iv.t0;
    std::vector<double> quota(m);
    std::vector<std::size_t> alloc(m);
    for (std::size_t k = 0; k < m; ++k) {
        quota[k] = static_cast<double>(n_cells) * (intervals[k].t1 - intervals[k].t0) / total_len;
        alloc[k] = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(quota[k])));
    }
    const std::size_t target = std::max(n_cells, m);
    auto sum_alloc = [&] { return std::accumulate(alloc.begin(), alloc.end(), std::size_t{0}); };
    while (sum_alloc() < target) {
        std::size_t best = 0;
        double best_r = -1e300;
        for (std::size_t k = 0; k < m; ++k) {
            const double r = quota[k] - static_cast<double>(alloc[k]);
            if (r > best_r) {
                best_r = r;
                best = k;
            }
        }
        ++alloc[best];
    }
    while (sum_alloc() > target) {
        std::size_t best = m;
        double best_r = 1e300;
        for (std::size_t k = 0; k < m; ++k) {
            if (alloc[k] <= 1) continue;
            const double r = quota[k] - static_cast<double>(alloc[k]);
            if (r < best_r) {
                best_r = r;
                best = k;
            }
        }
        if (best == m) break;
        --alloc[best];
    }

    struct Job {
        std::size_t piece;
        double t0, t1;
    };
    std::vector<Job> jobs;
    for (std::size_t k = 0; k < m; ++k) {
        const auto& iv = intervals[k];
        for (std::size_t c = 0; c < alloc[k]; ++c) {
            const double a = iv.t0 + (iv.t1 - iv.t0) * static_cast<double>(c) / static_cast<double>(alloc[k]);
            const double b = (c + 1 == alloc[k])
                                 ? iv.t1
                                 : iv.t0 + (iv.t1 - iv.t0) * static_cast<double>(c + 1) / static_cast<double>(alloc[k]);
            jobs.push_back({iv.piece, a, b});
        }
    }
    const std::size_t nc = jobs.size();
    mesh.cells.resize(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        const std::size_t share = n_mc / nc + (c < n_mc % nc ? 1 : 0);
        const Job& j = jobs[c];
        mesh.cells[c] = measure_boundary_cell(field, domain, measure, side, mesh.pieces[j.piece], j.piece, j.t0,
                                              j.t1, sigma, share, seed, c + 1, config);
    }
    return mesh;
}

// ---------------------------------------------------------------------------
// Curve integrals

namespace {

// int_0^{min(tau, horizon)} f(Phi(y, dir s)) ds by the trapezoid rule on the
// march nodes.
double curve_trapezoid(const PhaseFunction& f, const VectorField& field, const Domain& domain, const Point& y,
                       Direction dir, double horizon, double quad_step, const FlowConfig& config) {
    double sum = 0.0;
    bool have_prev = false;
    double f_prev = 0.0;
    march(field, domain, y, dir, horizon, quad_step, config,
          [&](double s0, const Point& x0, double s1, const Point& x1) {
              if (!have_prev) {
                  f_prev = f(x0);
                  have_prev = true;
              }
              const double f1 = f(x1);
              sum += 0.5 * (s1 - s0) * (f_prev + f1);
              f_prev = f1;
          });
    return sum;
}

}  // namespace

double integrate_along_characteristics(const PhaseFunction& f, const VectorField& field, const Domain& domain,
                                       const BoundaryMesh& mesh, BoundarySide region, double quad_step,
                                       const FlowConfig& config, std::size_t per_cell) {
    if (mesh.side != region) {
        throw Error(ErrorKind::side_mismatch, std::string("mesh on ") + to_string(mesh.side) +
                                                  " cannot parametrize the region of " + to_string(region));
    }
    if (!(quad_step > 0.0)) throw Error(ErrorKind::invalid_argument, "quad_step must be positive");
    if (auto c = f.constant_value(); c && *c == 0.0) return 0.0;
    const auto nodes = mesh.nodes(per_cell);
    std::vector<double> vals(nodes.size(), 0.0);
    const Direction dir = curve_direction(region);
    parallel_for(nodes.size(), [&](std::size_t i) {
        if (nodes[i].second == 0.0) return;
        vals[i] = nodes[i].second *
                  curve_trapezoid(f, field, domain, nodes[i].first, dir, config.horizon, quad_step, config);
    });
    double total = 0.0;
    for (double v : vals) total += v;
    return total;
}

// ---------------------------------------------------------------------------
// Invariance

InvarianceReport check_invariance(const VectorField& field, const Measure& measure, const Box& domain_box,
                                  double t, std::size_t n_mc, std::uint64_t seed, const FlowConfig& config,
                                  std::size_t n_boxes) {
    InvarianceReport rep;
    if (t == 0.0) {
        rep.discrepancies.assign(n_boxes, 0.0);
        rep.standard_errors.assign(n_boxes, 0.0);
        return rep;
    }
    if (n_mc == 0) throw Error(ErrorKind::invalid_argument, "check_invariance: n_mc must be positive");
    const std::size_t dim = domain_box.dimension();
    Rng rng(seed);
    for (std::size_t b = 0; b < n_boxes; ++b) {
        Box a{Point(dim), Point(dim)};
        for (std::size_t i = 0; i < dim; ++i) {
            const double side = domain_box.extent(i) * rng.uniform(0.1, 0.5);
            const double lo = rng.uniform(domain_box.lo[i], domain_box.hi[i] - side);
            a.lo[i] = lo;
            a.hi[i] = lo + side;
        }
        Rng box_rng(seed, b + 1);

        // mu(A): exact for Lebesgue, MC otherwise.
        double mu_a = a.volume();
        double mu_a_err = 0.0;
        if (!measure.is_lebesgue()) {
            double s = 0.0, s2 = 0.0;
            for (std::size_t k = 0; k < n_mc; ++k) {
                const double d = measure.density(box_rng.uniform_in(a));
                s += d;
                s2 += d * d;
            }
            const double mean = s / static_cast<double>(n_mc);
            mu_a = a.volume() * mean;
            mu_a_err = a.volume() * std::sqrt(std::max(0.0, s2 / static_cast<double>(n_mc) - mean * mean) /
                                              static_cast<double>(n_mc));
        }

        // Bounding box of T_t A from pushed corners and samples, inflated.
        std::vector<Point> cloud;
        for (std::size_t mask = 0; mask < (std::size_t{1} << dim); ++mask) {
            Point c(dim);
            for (std::size_t i = 0; i < dim; ++i) c[i] = (mask >> i & 1U) ? a.hi[i] : a.lo[i];
            cloud.push_back(c);
        }
        for (int k = 0; k < 2048; ++k) cloud.push_back(box_rng.uniform_in(a));
        std::vector<Point> pushed(cloud.size());
        parallel_for(cloud.size(), [&](std::size_t k) { pushed[k] = advance(field, cloud[k], t, config); });
        Box img{pushed[0], pushed[0]};
        for (const Point& p : pushed) {
            for (std::size_t i = 0; i < dim; ++i) {
                img.lo[i] = std::min(img.lo[i], p[i]);
                img.hi[i] = std::max(img.hi[i], p[i]);
            }
        }
        Point margin(dim);
        for (std::size_t i = 0; i < dim; ++i) margin[i] = 0.05 * img.extent(i) + 1e-9;
        img = img.inflated(margin);

        std::vector<Point> pts;
        std::vector<double> vals;
        double s = 0.0, s2 = 0.0;
        for (std::size_t done = 0; done < n_mc; done += kBlock) {
            const std::size_t m = std::min(kBlock, n_mc - done);
            pts.resize(m);
            vals.assign(m, 0.0);
            for (auto& p : pts) p = box_rng.uniform_in(img);
            parallel_for(m, [&](std::size_t i) {
                if (a.contains(advance(field, pts[i], -t, config))) vals[i] = measure.density(pts[i]);
            });
            for (double v : vals) {
                s += v;
                s2 += v * v;
            }
        }
        const double nn = static_cast<double>(n_mc);
        const double mean = s / nn;
        const double mu_t = img.volume() * mean;
        const double mu_t_err = img.volume() * std::sqrt(std::max(0.0, s2 / nn - mean * mean) / nn);
        const double disc = std::abs(mu_t - mu_a) / mu_a;
        const double se = std::hypot(mu_t_err, mu_a_err) / mu_a;
        rep.discrepancies.push_back(disc);
        rep.standard_errors.push_back(se);
        rep.max_discrepancy = std::max(rep.max_discrepancy, disc);
        if (disc > 4.0 * se && disc > 0.02) rep.violation = true;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Transfer and disintegration

TransferResult transfer_integral(const PhaseFunction& psi, const BoundaryMesh& mesh_minus,
                                 const BoundaryMesh& mesh_plus, const VectorField& field, const Domain& domain,
                                 const FlowConfig& config, std::size_t per_cell) {
    if (mesh_minus.side != BoundarySide::gamma_minus || mesh_plus.side != BoundarySide::gamma_plus) {
        throw Error(ErrorKind::side_mismatch, "transfer_integral needs a Gamma_- mesh and a Gamma_+ mesh");
    }
    TransferResult out;
    if (per_cell == 0) per_cell = 1;
    const auto lhs_nodes = mesh_minus.nodes(per_cell);
    const auto rhs_nodes = mesh_plus.nodes(per_cell);
    std::vector<double> lhs(lhs_nodes.size(), 0.0), rhs(rhs_nodes.size(), 0.0);
    parallel_for(lhs_nodes.size(), [&](std::size_t i) {
        const auto& [y, w] = lhs_nodes[i];
        const ExitResult ex = find_exit(field, domain, y, Direction::forward, config.horizon, config);
        if (ex.time.is_finite()) lhs[i] = w * psi(y);
    });
    parallel_for(rhs_nodes.size(), [&](std::size_t i) {
        const auto& [z, w] = rhs_nodes[i];
        const ExitResult ex = find_exit(field, domain, z, Direction::backward, config.horizon, config);
        if (ex.time.is_finite() && ex.hit) rhs[i] = w * psi(*ex.hit);
    });
    double e_l = 0.0, e_r = 0.0;
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        out.lhs += lhs[i];
        const auto& c = mesh_minus.cells[i / per_cell];
        if (c.weight > 0.0) e_l += std::pow(c.weight_error * lhs[i] / c.weight, 2) * static_cast<double>(per_cell);
    }
    for (std::size_t i = 0; i < rhs.size(); ++i) {
        out.rhs += rhs[i];
        const auto& c = mesh_plus.cells[i / per_cell];
        if (c.weight > 0.0) e_r += std::pow(c.weight_error * rhs[i] / c.weight, 2) * static_cast<double>(per_cell);
    }
    out.lhs_error = std::sqrt(e_l);
    out.rhs_error = std::sqrt(e_r);
    return out;
}

std::vector<DisintegrationResult> disintegrate(const std::vector<PhaseFunction>& fs, const VectorField& field,
                                               const Domain& domain, const Measure& measure,
                                               const BoundaryMesh& mesh_minus, const BoundaryMesh& mesh_plus,
                                               double quad_step, const MonteCarlo& mc,
                                               const FlowConfig& config) {
    std::vector<DisintegrationResult> out(fs.size());
    const auto bb = domain.bounding_box();
    if (!bb) throw Error(ErrorKind::unsupported, "disintegrate needs a bounded domain");
    if (mc.samples == 0) throw Error(ErrorKind::invalid_argument, "disintegrate: zero samples");

    // Curve side.
    const std::size_t per_cell = 4;
    const auto plus_nodes = mesh_plus.nodes(per_cell);
    for (std::size_t k = 0; k < fs.size(); ++k) {
        out[k].curve_value = integrate_along_characteristics(fs[k], field, domain, mesh_minus,
                                                             BoundarySide::gamma_minus, quad_step, config, per_cell);
        std::vector<double> extra(plus_nodes.size(), 0.0);
        parallel_for(plus_nodes.size(), [&](std::size_t i) {
            const auto& cell = mesh_plus.cells[i / per_cell];
            if (cell.opposite_time.is_finite()) return;
            const auto& [z, w] = plus_nodes[i];
            const ExitResult ex = find_exit(field, domain, z, Direction::backward, config.horizon, config);
            if (ex.time.is_finite()) return;
            extra[i] = w * curve_trapezoid(fs[k], field, domain, z, Direction::backward, config.horizon,
                                           quad_step, config);
        });
        for (double e : extra) out[k].curve_value += e;
    }

    // Domain side: one sample set shared by all functions.
    Rng rng(mc.seed);
    const Box box = *bb;
    const double vol = box.volume();
    std::vector<double> sum(fs.size(), 0.0), sum2(fs.size(), 0.0);
    std::vector<Point> pts;
    std::vector<double> vals;
    for (std::size_t done = 0; done < mc.samples; done += kBlock) {
        const std::size_t m = std::min(kBlock, mc.samples - done);
        pts.resize(m);
        for (auto& p : pts) p = rng.uniform_in(box);
        vals.assign(m * fs.size(), 0.0);
        parallel_for(m, [&](std::size_t i) {
            const Point& x = pts[i];
            if (!domain.contains(x)) return;
            const ExitResult fwd = find_exit(field, domain, x, Direction::forward, config.horizon, config);
            bool finite = fwd.time.is_finite();
            if (!finite && !fwd.period && !fwd.stationary) {
                finite = find_exit(field, domain, x, Direction::backward, config.horizon, config).time.is_finite();
            }
            if (!finite) return;
            const double rho = measure.density(x);
            for (std::size_t k = 0; k < fs.size(); ++k) vals[i * fs.size() + k] = fs[k](x) * rho;
        });
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t k = 0; k < fs.size(); ++k) {
                const double v = vals[i * fs.size() + k];
                sum[k] += v;
                sum2[k] += v * v;
            }
        }
    }
    const double nn = static_cast<double>(mc.samples);
    for (std::size_t k = 0; k < fs.size(); ++k) {
        const double mean = sum[k] / nn;
        out[k].domain_value = vol * mean;
        out[k].domain_error = vol * std::sqrt(std::max(0.0, sum2[k] / nn - mean * mean) / nn);
        out[k].relative_gap = std::abs(out[k].curve_value - out[k].domain_value) /
                              std::max(std::abs(out[k].domain_value), 1e-300);
    }
    return out;
}

}  // namespace charflow
