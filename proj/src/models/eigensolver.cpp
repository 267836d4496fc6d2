#include <algorithm>
#include <cmath>
#include <limits>

#include "semitoric/models.hpp"

namespace semitoric::models {
namespace {

void check_shape(std::span<const double> diag, std::span<const double> offdiag) {
    if (diag.empty() ? !offdiag.empty() : offdiag.size() + 1 != diag.size())
        throw Error(ErrorKind::DimensionMismatch, "offdiag must have length len(diag) - 1");
}

// Implicit-shift QL on the tridiagonal matrix, eigenvalues only.
std::vector<double> eigs_ql(std::span<const double> diag, std::span<const double> offdiag) {
    const int n = static_cast<int>(diag.size());
    std::vector<double> d(diag.begin(), diag.end());
    std::vector<double> e(n, 0.0);
    std::copy(offdiag.begin(), offdiag.end(), e.begin());
    const double eps = std::numeric_limits<double>::epsilon();
    const int max_iter = tolerances().max_ql_iterations;

    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m = l;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= eps * dd) break;
            }
            if (m == l) break;
            if (iter++ == max_iter)
                throw Error(ErrorKind::NumericalFailure, "QL iteration did not converge");
            double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            double r = std::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
            double s = 1.0, c = 1.0, p = 0.0;
            int i = m - 1;
            for (; i >= l; --i) {
                const double f = s * e[i];
                const double b = c * e[i];
                r = std::hypot(f, g);
                e[i + 1] = r;
                if (r == 0.0) {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if (r == 0.0 && i >= l) continue;
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        } while (m != l);
    }
    std::sort(d.begin(), d.end());
    return d;
}

// Number of eigenvalues strictly below x (Sturm sequence sign count).
int sturm_count(std::span<const double> diag, std::span<const double> offdiag, double x, double pivmin) {
    int count = 0;
    double q = diag[0] - x;
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0) ++count;
    for (std::size_t i = 1; i < diag.size(); ++i) {
        q = diag[i] - x - offdiag[i - 1] * offdiag[i - 1] / q;
        if (std::abs(q) < pivmin) q = -pivmin;
        if (q < 0) ++count;
    }
    return count;
}

std::vector<double> eigs_bisection(std::span<const double> diag, std::span<const double> offdiag) {
    const std::size_t n = diag.size();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double emax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double radius = 0.0;
        if (i > 0) radius += std::abs(offdiag[i - 1]);
        if (i + 1 < n) radius += std::abs(offdiag[i]);
        lo = std::min(lo, diag[i] - radius);
        hi = std::max(hi, diag[i] + radius);
    }
    for (double v : offdiag) emax = std::max(emax, v * v);
    const double scale = std::max(std::abs(lo), std::abs(hi));
    const double pivmin = std::max(std::numeric_limits<double>::min(), std::numeric_limits<double>::min() * emax);
    const double eps = std::numeric_limits<double>::epsilon();
    lo -= 4 * eps * scale + pivmin;
    hi += 4 * eps * scale + pivmin;

    std::vector<double> out(n);
    for (std::size_t idx = 0; idx < n; ++idx) {
        double a = idx > 0 ? std::max(lo, out[idx - 1] - 2 * eps * scale) : lo;
        double b = hi;
        for (int step = 0; step < tolerances().bisection_max_steps; ++step) {
            const double mid = 0.5 * (a + b);
            if (b - a <= 2 * eps * scale + pivmin || mid == a || mid == b) break;
            if (sturm_count(diag, offdiag, mid, pivmin) > static_cast<int>(idx))
                b = mid;
            else
                a = mid;
        }
        out[idx] = 0.5 * (a + b);
    }
    return out;
}

}  // namespace

std::vector<double> eigs_sym_tridiagonal(std::span<const double> diag, std::span<const double> offdiag,
                                         EigMethod method) {
    check_shape(diag, offdiag);
    if (diag.empty()) return {};
    for (double v : diag)
        if (!std::isfinite(v)) throw Error(ErrorKind::NumericalFailure, "non-finite diagonal entry");
    for (double v : offdiag)
        if (!std::isfinite(v)) throw Error(ErrorKind::NumericalFailure, "non-finite off-diagonal entry");
    if (diag.size() == 1) return {diag[0]};
    return method == EigMethod::QL ? eigs_ql(diag, offdiag) : eigs_bisection(diag, offdiag);
}

}  // namespace semitoric::models
