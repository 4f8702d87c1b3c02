#include "charflow/field.hpp"

#include <algorithm>
#include <cmath>

#include "charflow/error.hpp"
#include "charflow/rng.hpp"

namespace charflow {

namespace {

void require_even(std::size_t dim, const char* what) {
    if (dim == 0 || dim % 2 != 0 || dim > kMaxDim) {
        throw Error(ErrorKind::dimension_mismatch,
                    std::string(what) + " needs an even phase-space dimension (positions, velocities)");
    }
}

// Spectral norm of a dim x dim matrix by power iteration on J^T J.
double spectral_norm(const std::vector<double>& jac, std::size_t dim) {
    std::vector<double> v(dim, 1.0), w(dim), u(dim);
    double lambda = 0.0;
    for (int it = 0; it < 500; ++it) {
        for (std::size_t i = 0; i < dim; ++i) {
            u[i] = 0.0;
            for (std::size_t j = 0; j < dim; ++j) u[i] += jac[i * dim + j] * v[j];
        }
        for (std::size_t j = 0; j < dim; ++j) {
            w[j] = 0.0;
            for (std::size_t i = 0; i < dim; ++i) w[j] += jac[i * dim + j] * u[i];
        }
        double n = 0.0;
        for (double x : w) n += x * x;
        n = std::sqrt(n);
        if (n == 0.0) return 0.0;
        for (std::size_t j = 0; j < dim; ++j) v[j] = w[j] / n;
        if (std::abs(n - lambda) <= 1e-15 * n) {
            lambda = n;
            break;
        }
        lambda = n;
    }
    return std::sqrt(lambda);
}

// Exact Lipschitz constant when the field is affine, otherwise nullopt.
std::optional<double> affine_lipschitz(const VectorField& f) {
    const std::size_t n = f.dimension();
    std::vector<double> jac(n * n);
    const Point origin(n);
    const Point f0 = f(origin);
    for (std::size_t j = 0; j < n; ++j) {
        Point e(n);
        e[j] = 1.0;
        const Point fp = f(e);
        for (std::size_t i = 0; i < n; ++i) jac[i * n + j] = fp[i] - f0[i];
    }
    Rng rng(0xaff1eULL);
    for (int k = 0; k < 16; ++k) {
        Point x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = rng.uniform(-7.0, 7.0);
        const Point fx = f(x);
        for (std::size_t i = 0; i < n; ++i) {
            double pred = f0[i];
            for (std::size_t j = 0; j < n; ++j) pred += jac[i * n + j] * x[j];
            if (std::abs(pred - fx[i]) > 1e-9 * (1.0 + std::abs(fx[i]))) return std::nullopt;
        }
    }
    return spectral_norm(jac, n);
}

// Sampled Lipschitz estimate for a nonlinear field: max of pair quotients and
// of finite-difference Jacobian norms over [-10, 10]^N.
double sampled_lipschitz(const VectorField& f) {
    const std::size_t n = f.dimension();
    Box box{Point(n), Point(n)};
    for (std::size_t i = 0; i < n; ++i) {
        box.lo[i] = -10.0;
        box.hi[i] = 10.0;
    }
    double est = estimate_lipschitz(f, box, 20000, 0x11b5ULL);
    Rng rng(0x7ac0b1ULL);
    std::vector<double> jac(n * n);
    for (int k = 0; k < 500; ++k) {
        const Point x = rng.uniform_in(box);
        for (std::size_t j = 0; j < n; ++j) {
            const double hstep = 1e-5 * (1.0 + std::abs(x[j]));
            Point xp = x, xm = x;
            xp[j] += hstep;
            xm[j] -= hstep;
            const Point d = f(xp) - f(xm);
            for (std::size_t i = 0; i < n; ++i) jac[i * n + j] = d[i] / (2.0 * hstep);
        }
        est = std::max(est, spectral_norm(jac, n));
    }
    return est;
}

}  // namespace

const char* to_string(FieldKind kind) noexcept {
    switch (kind) {
        case FieldKind::free_transport: return "free_transport";
        case FieldKind::harmonic: return "harmonic";
        case FieldKind::rotation: return "rotation";
        case FieldKind::custom: return "custom";
    }
    return "unknown";
}

VectorField VectorField::free_transport(std::size_t dimension) {
    require_even(dimension, "free transport");
    VectorField f;
    f.kind_ = FieldKind::free_transport;
    f.dim_ = dimension;
    f.kappa_ = 1.0;
    return f;
}

VectorField VectorField::harmonic(double omega, std::size_t dimension) {
    require_even(dimension, "harmonic field");
    if (!(omega > 0.0) || !std::isfinite(omega)) {
        throw Error(ErrorKind::invalid_argument, "harmonic field needs a positive finite omega");
    }
    VectorField f;
    f.kind_ = FieldKind::harmonic;
    f.dim_ = dimension;
    f.omega_ = omega;
    f.kappa_ = std::max(1.0, omega * omega);
    return f;
}

VectorField VectorField::rotation(double omega, std::size_t dimension) {
    if (dimension < 2 || dimension > kMaxDim) {
        throw Error(ErrorKind::dimension_mismatch, "rotation field needs dimension >= 2");
    }
    if (!std::isfinite(omega) || omega == 0.0) {
        throw Error(ErrorKind::invalid_argument, "rotation field needs a nonzero finite omega");
    }
    VectorField f;
    f.kind_ = FieldKind::rotation;
    f.dim_ = dimension;
    f.omega_ = omega;
    f.kappa_ = std::abs(omega);
    return f;
}

VectorField VectorField::custom(std::vector<Expression> components, std::optional<double> lipschitz) {
    if (components.empty() || components.size() > kMaxDim) {
        throw Error(ErrorKind::dimension_mismatch, "custom field needs 1.." +
                                                       std::to_string(kMaxDim) + " components");
    }
    VectorField f;
    f.kind_ = FieldKind::custom;
    f.dim_ = components.size();
    for (const auto& e : components) {
        if (e.dimension() != f.dim_) {
            throw Error(ErrorKind::dimension_mismatch,
                        "component '" + e.text() + "' was parsed for dimension " +
                            std::to_string(e.dimension()) + ", field has " +
                            std::to_string(f.dim_));
        }
    }
    f.exprs_ = std::move(components);
    if (lipschitz) {
        if (!(*lipschitz >= 0.0) || !std::isfinite(*lipschitz)) {
            throw Error(ErrorKind::invalid_argument, "Lipschitz bound must be finite and >= 0");
        }
        f.kappa_ = *lipschitz;
    } else if (auto k = affine_lipschitz(f)) {
        f.kappa_ = *k;
    } else {
        f.kappa_ = sampled_lipschitz(f);
    }
    return f;
}

void VectorField::eval_custom(const Point& x, Point& out) const noexcept {
    for (std::size_t i = 0; i < dim_; ++i) out[i] = exprs_[i].evaluate(x);
}

Point VectorField::evaluate(const Point& x) const {
    if (x.size() != dim_) {
        throw Error(ErrorKind::dimension_mismatch,
                    "point of dimension " + std::to_string(x.size()) + " for a field of dimension " +
                        std::to_string(dim_));
    }
    return (*this)(x);
}

std::optional<Point> VectorField::exact_flow(const Point& x, double t) const {
    if (x.size() != dim_) {
        throw Error(ErrorKind::dimension_mismatch, "exact_flow: dimension mismatch");
    }
    Point out = x;
    switch (kind_) {
        case FieldKind::free_transport: {
            const std::size_t k = dim_ / 2;
            for (std::size_t i = 0; i < k; ++i) out[i] = x[i] + t * x[k + i];
            return out;
        }
        case FieldKind::harmonic: {
            const std::size_t k = dim_ / 2;
            const double c = std::cos(omega_ * t), s = std::sin(omega_ * t);
            for (std::size_t i = 0; i < k; ++i) {
                out[i] = x[i] * c + x[k + i] / omega_ * s;
                out[k + i] = -x[i] * omega_ * s + x[k + i] * c;
            }
            return out;
        }
        case FieldKind::rotation: {
            const double c = std::cos(omega_ * t), s = std::sin(omega_ * t);
            out[0] = c * x[0] - s * x[1];
            out[1] = s * x[0] + c * x[1];
            return out;
        }
        case FieldKind::custom: return std::nullopt;
    }
    return std::nullopt;
}

VectorField parse_field_expression(std::span<const std::string> texts, std::size_t dimension,
                                   std::optional<double> lipschitz) {
    if (texts.size() != dimension) {
        throw Error(ErrorKind::dimension_mismatch,
                    "expected " + std::to_string(dimension) + " component expressions, got " +
                        std::to_string(texts.size()));
    }
    std::vector<Expression> comps;
    comps.reserve(texts.size());
    for (const auto& t : texts) comps.push_back(Expression::parse(t, dimension));
    return VectorField::custom(std::move(comps), lipschitz);
}

Point evaluate_field(const VectorField& field, const Point& x) { return field.evaluate(x); }

double estimate_lipschitz(const VectorField& field, const Box& box, std::size_t samples,
                          std::uint64_t seed) {
    if (samples < 2) throw Error(ErrorKind::invalid_argument, "estimate_lipschitz needs samples >= 2");
    if (box.dimension() != field.dimension()) {
        throw Error(ErrorKind::dimension_mismatch, "estimate_lipschitz: box dimension mismatch");
    }
    Rng rng(seed);
    double best = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        const Point a = rng.uniform_in(box);
        const Point b = rng.uniform_in(box);
        const double d = distance(a, b);
        if (d == 0.0) continue;
        best = std::max(best, distance(field(a), field(b)) / d);
    }
    return best;
}

}  // namespace charflow
