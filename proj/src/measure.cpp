#include "charflow/measure.hpp"

#include <cmath>

#include "charflow/error.hpp"

namespace charflow {

Measure Measure::product_weighted(std::vector<Expression> densities) {
    if (densities.empty()) {
        throw Error(ErrorKind::invalid_argument, "product_weighted measure needs density expressions");
    }
    for (const auto& d : densities) {
        if (d.dimension() != densities.size()) {
            throw Error(ErrorKind::dimension_mismatch,
                        "density '" + d.text() + "' parsed for dimension " +
                            std::to_string(d.dimension()) + ", expected " +
                            std::to_string(densities.size()));
        }
    }
    Measure m;
    m.kind_ = MeasureKind::product_weighted;
    m.densities_ = std::move(densities);
    return m;
}

double Measure::density(const Point& x) const {
    if (kind_ == MeasureKind::lebesgue) return 1.0;
    if (x.size() != densities_.size()) {
        throw Error(ErrorKind::dimension_mismatch, "measure density: dimension mismatch");
    }
    double rho = 1.0;
    for (const auto& d : densities_) {
        const double v = d.evaluate(x);
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw Error(ErrorKind::invalid_argument,
                        "density '" + d.text() + "' is negative or non-finite at " + x.to_string());
        }
        rho *= v;
    }
    return rho;
}

}  // namespace charflow
