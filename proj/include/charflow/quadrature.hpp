#pragma once

// One-dimensional quadrature rules.

#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace charflow {

/// Composite trapezoid rule on [a, b] with panels of width at most `step`.
double trapezoid(const std::function<double(double)>& f, double a, double b, double step);

/// Adaptive Simpson on [a, b]. The interval is first cut into panels of width
/// at most `max_panel`; each panel is refined until the local Richardson
/// estimate is below its share of `tol` (or `max_depth` is reached).
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        double max_panel, int max_depth = 40);

/// Gauss-Legendre nodes and weights on [-1, 1].
class GaussLegendre {
public:
    explicit GaussLegendre(std::size_t n);

    std::size_t size() const noexcept { return nodes_.size(); }
    const std::vector<double>& nodes() const noexcept { return nodes_; }
    const std::vector<double>& weights() const noexcept { return weights_; }

    /// Integral of f over [a, b] split into `panels` equal panels.
    double integrate(const std::function<double(double)>& f, double a, double b,
                     std::size_t panels = 1) const;

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

}  // namespace charflow
