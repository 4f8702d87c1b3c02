#pragma once

#include <vector>

#include "charflow/expression.hpp"
#include "charflow/point.hpp"

namespace charflow {

enum class MeasureKind { lebesgue, product_weighted };

/// Absolutely continuous phase-space measure d mu = density(x) dx.
///
/// product_weighted multiplies one nonnegative density expression per
/// coordinate (expression i is meant to depend on x_i only, e.g. a
/// velocity weight exp(-x2^2/2)).
class Measure {
public:
    static Measure lebesgue() { return Measure{}; }
    static Measure product_weighted(std::vector<Expression> densities);

    MeasureKind kind() const noexcept { return kind_; }
    bool is_lebesgue() const noexcept { return kind_ == MeasureKind::lebesgue; }
    const std::vector<Expression>& densities() const noexcept { return densities_; }

    /// Throws if a density expression evaluates negative or non-finite.
    double density(const Point& x) const;

private:
    MeasureKind kind_ = MeasureKind::lebesgue;
    std::vector<Expression> densities_;
};

}  // namespace charflow
