#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "charflow/expression.hpp"
#include "charflow/point.hpp"

namespace charflow {

enum class FieldKind { free_transport, harmonic, rotation, custom };

const char* to_string(FieldKind kind) noexcept;

/// A time-independent, globally Lipschitz vector field F : R^N -> R^N.
///
/// Builtin kinds use the kinetic splitting x = (position, velocity) with
/// N = 2k:
///   free_transport  F(x, v) = (v, 0)
///   harmonic        F(x, v) = (v, -omega^2 x)
/// and rotation(omega) turns the (x1, x2) plane counterclockwise at angular
/// speed omega, F = (-omega x2, omega x1, 0, ...).
class VectorField {
public:
    static VectorField free_transport(std::size_t dimension = 2);
    static VectorField harmonic(double omega, std::size_t dimension = 2);
    static VectorField rotation(double omega, std::size_t dimension = 2);
    /// One expression per component. Without an explicit bound the Lipschitz
    /// constant is exact for affine fields and a sampled estimate otherwise.
    static VectorField custom(std::vector<Expression> components,
                              std::optional<double> lipschitz = std::nullopt);

    FieldKind kind() const noexcept { return kind_; }
    std::size_t dimension() const noexcept { return dim_; }
    double lipschitz_bound() const noexcept { return kappa_; }
    double omega() const noexcept { return omega_; }
    const std::vector<Expression>& expressions() const noexcept { return exprs_; }

    /// Checked evaluation; throws on dimension mismatch.
    Point evaluate(const Point& x) const;

    /// Unchecked hot-path evaluation (dimension must already match).
    Point operator()(const Point& x) const noexcept {
        Point out(dim_);
        eval_into(x, out);
        return out;
    }
    void eval_into(const Point& x, Point& out) const noexcept {
        switch (kind_) {
            case FieldKind::free_transport: {
                const std::size_t k = dim_ / 2;
                for (std::size_t i = 0; i < k; ++i) {
                    out[i] = x[k + i];
                    out[k + i] = 0.0;
                }
                break;
            }
            case FieldKind::harmonic: {
                const std::size_t k = dim_ / 2;
                const double w2 = omega_ * omega_;
                for (std::size_t i = 0; i < k; ++i) {
                    out[i] = x[k + i];
                    out[k + i] = -w2 * x[i];
                }
                break;
            }
            case FieldKind::rotation:
                out[0] = -omega_ * x[1];
                out[1] = omega_ * x[0];
                for (std::size_t i = 2; i < dim_; ++i) out[i] = 0.0;
                break;
            case FieldKind::custom:
                eval_custom(x, out);
                break;
        }
    }

    /// Closed-form flow for the linear builtin kinds; nullopt for custom fields.
    std::optional<Point> exact_flow(const Point& x, double t) const;

private:
    void eval_custom(const Point& x, Point& out) const noexcept;

    FieldKind kind_ = FieldKind::free_transport;
    std::size_t dim_ = 2;
    double omega_ = 0.0;
    double kappa_ = 1.0;
    std::vector<Expression> exprs_;
};

/// Parses one expression per component. The number of expressions must equal
/// `dimension`.
VectorField parse_field_expression(std::span<const std::string> texts, std::size_t dimension,
                                   std::optional<double> lipschitz = std::nullopt);

Point evaluate_field(const VectorField& field, const Point& x);

/// Max of |F(x1) - F(x2)| / |x1 - x2| over `samples` random pairs in `box`:
/// a lower bound on the Lipschitz constant over the box.
double estimate_lipschitz(const VectorField& field, const Box& box, std::size_t samples,
                          std::uint64_t seed = 0x5eedULL);

}  // namespace charflow
