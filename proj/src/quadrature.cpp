#include "charflow/quadrature.hpp"

#include <algorithm>
#include <numbers>

#include "charflow/error.hpp"

namespace charflow {

double trapezoid(const std::function<double(double)>& f, double a, double b, double step) {
    if (!(step > 0.0)) throw Error(ErrorKind::invalid_argument, "trapezoid: step must be positive");
    if (b == a) return 0.0;
    const auto panels = static_cast<std::size_t>(std::max(1.0, std::ceil(std::abs(b - a) / step - 1e-9)));
    const double w = (b - a) / static_cast<double>(panels);
    double sum = 0.5 * (f(a) + f(b));
    for (std::size_t k = 1; k < panels; ++k) sum += f(a + w * static_cast<double>(k));
    return sum * w;
}

namespace {

struct Simpson {
    const std::function<double(double)>& f;
    int max_depth;

    double refine(double a, double b, double fa, double fm, double fb, double whole, double tol,
                  int depth) const {
        const double m = 0.5 * (a + b);
        const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
        const double flm = f(lm), frm = f(rm);
        const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        const double delta = left + right - whole;
        if (depth >= max_depth || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
        return refine(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
               refine(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
    }
};

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        double max_panel, int max_depth) {
    if (!(tol > 0.0) || !(max_panel > 0.0)) {
        throw Error(ErrorKind::invalid_argument, "adaptive_simpson: tol and max_panel must be positive");
    }
    if (b == a) return 0.0;
    const auto panels = static_cast<std::size_t>(std::max(1.0, std::ceil(std::abs(b - a) / max_panel - 1e-9)));
    const double w = (b - a) / static_cast<double>(panels);
    const Simpson s{f, max_depth};
    double total = 0.0;
    double x0 = a, f0 = f(a);
    for (std::size_t k = 0; k < panels; ++k) {
        const double x1 = (k + 1 == panels) ? b : a + w * static_cast<double>(k + 1);
        const double xm = 0.5 * (x0 + x1);
        const double fm = f(xm), f1 = f(x1);
        const double whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        total += s.refine(x0, x1, f0, fm, f1, whole, tol / static_cast<double>(panels), 0);
        x0 = x1;
        f0 = f1;
    }
    return total;
}

GaussLegendre::GaussLegendre(std::size_t n) {
    if (n == 0) throw Error(ErrorKind::invalid_argument, "Gauss-Legendre rule needs n >= 1");
    nodes_.resize(n);
    weights_.resize(n);
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        // Newton iteration on P_n from the Chebyshev-like initial guess.
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = pk;
            }
            if (n == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        if (n == 1) {
            x = 0.0;
            dp = 1.0;
        }
        nodes_[i] = -x;
        nodes_[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights_[i] = w;
        weights_[n - 1 - i] = w;
    }
    if (n == 1) weights_[0] = 2.0;
}

double GaussLegendre::integrate(const std::function<double(double)>& f, double a, double b,
                                std::size_t panels) const {
    if (panels == 0) panels = 1;
    const double w = (b - a) / static_cast<double>(panels);
    double total = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
        const double lo = a + w * static_cast<double>(p);
        const double c = lo + 0.5 * w, r = 0.5 * w;
        double sum = 0.0;
        for (std::size_t i = 0; i < nodes_.size(); ++i) sum += weights_[i] * f(c + r * nodes_[i]);
        total += sum * r;
    }
    return total;
}

}  // namespace charflow
