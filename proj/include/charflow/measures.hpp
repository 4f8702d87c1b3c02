#pragma once

// Integration over the domain and along characteristics, the boundary
// measures mu_+/- built by slab volumes, and invariance/transfer checks.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "charflow/domain.hpp"
#include "charflow/field.hpp"
#include "charflow/flow.hpp"
#include "charflow/measure.hpp"
#include "charflow/phase_function.hpp"
#include "charflow/point.hpp"

namespace charflow {

enum class BoundarySide { gamma_minus, gamma_plus };

const char* to_string(BoundarySide side) noexcept;
/// Accepts "minus"/"plus" (also "gamma_minus"/"gamma_plus", "-"/"+").
BoundarySide parse_side(const std::string& text);

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;         ///< MC standard error, or |fine - coarse| for grids
    std::size_t evaluations = 0;
    std::size_t accepted = 0;   ///< points inside the domain
};

struct MonteCarlo {
    std::size_t samples = 100000;
    std::uint64_t seed = 0x5eed;
};

struct TensorGrid {
    std::size_t resolution = 200;  ///< cells per axis
};

using DomainQuadrature = std::variant<MonteCarlo, TensorGrid>;

/// Integral of f d mu over the domain. Samples (or grid cells) cover the
/// domain's bounding box intersected with f's support hint. Tensor grids
/// require the Lebesgue measure. Throws EmptyDomain when no sample lands
/// inside.
QuadratureResult integrate_domain(const PhaseFunction& f, const Domain& domain, const Measure& measure,
                                  const DomainQuadrature& method);

/// Several integrands at once over `box` n domain: f(x, out) fills out[0..count).
/// Every sample point is evaluated once.
using MultiIntegrand = std::function<void(const Point&, std::span<double>)>;
std::vector<QuadratureResult> integrate_domain_many(const MultiIntegrand& f, std::size_t count, const Box& box,
                                                    const Domain& domain, const Measure& measure,
                                                    const DomainQuadrature& method);

/// Sampled divergence of rho F (central differences); zero for measure
/// preserving pairs up to differencing error.
struct DivergenceReport {
    double max_abs = 0.0;
    double mean_abs = 0.0;
};
DivergenceReport divergence_diagnostic(const VectorField& field, const Measure& measure, const Box& box,
                                       std::size_t samples, std::uint64_t seed = 0x5eed);

/// rho(y) |F(y) . n(y)|, the density of mu_+/- against arc length. Throws
/// UndefinedNormal at corners.
double boundary_density_reference(const VectorField& field, const Domain& domain, const Point& y);
double boundary_density_reference(const VectorField& field, const Domain& domain, const Measure& measure,
                                  const Point& y);

/// One boundary cell: the arc-length interval [t0, t1] of a boundary piece.
struct BoundaryCell {
    std::size_t piece = 0;
    double t0 = 0.0;
    double t1 = 0.0;
    Point start;
    Point end;
    Point representative;  ///< midpoint in arc length
    double length = 0.0;

    double weight = 0.0;        ///< slab estimate of mu_+/-(cell)
    double weight_error = 0.0;  ///< MC standard error of `weight`
    std::size_t samples = 0;
    std::size_t hits = 0;

    BoundaryTag tag = BoundaryTag::neither;  ///< classification of the representative
    /// tau_+ (for Gamma_- cells) or tau_- (for Gamma_+ cells) of the representative
    StayTime opposite_time = StayTime::exceeds_horizon();
    std::optional<Point> opposite_hit;  ///< where that curve meets the boundary again

    std::optional<double> reference_density;  ///< rho |F.n| at the representative
    std::optional<double> reference_weight;   ///< Gauss-Legendre integral of rho |F.n| over the cell
};

struct BoundaryMesh {
    BoundarySide side = BoundarySide::gamma_minus;
    double sigma = 0.0;
    std::size_t n_mc = 0;
    std::uint64_t seed = 0;
    std::vector<BoundaryPiece> pieces;
    std::vector<BoundaryCell> cells;

    double total_weight() const noexcept;
    double total_error() const noexcept;
    /// True if y lies on the cell's arc (within `tol` of it).
    bool cell_contains(std::size_t cell, const Point& y, double tol = 1e-7) const;
    /// rho |F.n| on the boundary (empty if unknown); shapes the weight split in nodes().
    std::function<double(const Point&)> density_shape;

    /// Boundary quadrature nodes: each cell is cut into `per_cell` equal
    /// sub-arcs with nodes at their midpoints. The cell weight is shared in
    /// proportion to density_shape at the nodes, or evenly without one.
    std::vector<std::pair<Point, double>> nodes(std::size_t per_cell) const;
};

/// Maximal arcs of the boundary classified into `side` (Both points count
/// for either side), located by scanning `scan` points per piece and
/// bisecting the class changes.
struct SideInterval {
    std::size_t piece = 0;
    double t0 = 0.0;
    double t1 = 0.0;
};
std::vector<SideInterval> side_intervals(const VectorField& field, const Domain& domain, BoundarySide side,
                                         const FlowConfig& config, std::size_t scan = 400);

/// Slab estimate for one cell: mu(E_sigma)/sigma with E_sigma the points
/// whose backward (Gamma_-) or forward (Gamma_+) exit lies in the cell
/// within time sigma; n_mc uniform samples of a box that contains the slab.
/// A sample on a curve that crosses the domain in time l < sigma counts
/// sigma / l, so cells whose curves are shorter than sigma are not
/// underweighted.
BoundaryCell measure_boundary_cell(const VectorField& field, const Domain& domain, const Measure& measure,
                                   BoundarySide side, const BoundaryPiece& piece, std::size_t piece_index,
                                   double t0, double t1, double sigma, std::size_t n_mc,
                                   std::uint64_t seed, std::uint64_t stream, const FlowConfig& config);

/// Splits the side's arcs into about n_cells cells (at least one per arc,
/// allotted by length) and estimates every cell weight; n_mc is the total
/// sample budget shared evenly by the cells. Planar bounded domains only.
/// Throws DegenerateSide if no boundary point belongs to the side.
BoundaryMesh build_boundary_mesh(const VectorField& field, const Domain& domain, const Measure& measure,
                                 BoundarySide side, std::size_t n_cells, double sigma, std::size_t n_mc,
                                 const FlowConfig& config, std::uint64_t seed = 0x5eed);

/// Sum over mesh nodes of w * int_0^{min(tau, T)} f(Phi(y, +-s)) ds
/// (forward from Gamma_-, backward from Gamma_+) by the trapezoid rule
/// with panels of at most quad_step. `region` names Omega_- (Gamma_- mesh)
/// or Omega_+ (Gamma_+ mesh); a mismatch throws SideMismatch.
double integrate_along_characteristics(const PhaseFunction& f, const VectorField& field, const Domain& domain,
                                       const BoundaryMesh& mesh, BoundarySide region, double quad_step,
                                       const FlowConfig& config, std::size_t per_cell = 4);

struct InvarianceReport {
    double max_discrepancy = 0.0;           ///< max over boxes of |mu(T_t A) - mu(A)| / mu(A)
    std::vector<double> discrepancies;      ///< per box
    std::vector<double> standard_errors;    ///< MC standard error of each ratio
    bool violation = false;                 ///< some box differs by more than 4 standard errors and 2%
};

/// Random boxes A inside domain_box (sides 0.1..0.5 of its extent); mu(T_t A)
/// is estimated by uniform samples x of a box containing T_t A with the
/// membership test Phi(x, -t) in A.
InvarianceReport check_invariance(const VectorField& field, const Measure& measure, const Box& domain_box,
                                  double t, std::size_t n_mc, std::uint64_t seed, const FlowConfig& config,
                                  std::size_t n_boxes = 10);

struct TransferResult {
    double lhs = 0.0;  ///< sum over Gamma_- nodes with finite tau_+ of w psi(y)
    double rhs = 0.0;  ///< sum over Gamma_+ nodes with finite tau_- of w psi(footpoint)
    double lhs_error = 0.0;
    double rhs_error = 0.0;
};

/// Both sides of the curve transfer identity for boundary data psi on Gamma_-.
TransferResult transfer_integral(const PhaseFunction& psi, const BoundaryMesh& mesh_minus,
                                 const BoundaryMesh& mesh_plus, const VectorField& field, const Domain& domain,
                                 const FlowConfig& config, std::size_t per_cell = 8);

/// Disintegration of int f d mu over Omega_- u (Omega_+ n Omega_-inf):
/// curve side = Gamma_- curves plus Gamma_+ curves whose tau_- exceeds the
/// horizon (truncated there); domain side = MC integral of f restricted to
/// points with a finite stay time.
struct DisintegrationResult {
    double curve_value = 0.0;
    double domain_value = 0.0;
    double domain_error = 0.0;
    double relative_gap = 0.0;  ///< |curve - domain| / max(|domain|, tiny)
};
std::vector<DisintegrationResult> disintegrate(const std::vector<PhaseFunction>& fs, const VectorField& field,
                                               const Domain& domain, const Measure& measure,
                                               const BoundaryMesh& mesh_minus, const BoundaryMesh& mesh_plus,
                                               double quad_step, const MonteCarlo& mc,
                                               const FlowConfig& config);

}  // namespace charflow
