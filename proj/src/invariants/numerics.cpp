#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "semitoric/invariants.hpp"

namespace semitoric::invariants {
namespace {

Eigen::VectorXd least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    return a.colPivHouseholderQr().solve(b);
}

}  // namespace

LimitEstimate richardson(std::span<const double> hbars, std::span<const double> values, int degree) {
    if (hbars.size() != values.size()) throw Error(ErrorKind::DimensionMismatch, "richardson: size mismatch");
    if (hbars.empty()) throw Error(ErrorKind::EmptyWindow, "richardson: no samples");
    const auto n = static_cast<Eigen::Index>(hbars.size());
    const int deg = std::clamp(degree, 0, static_cast<int>(n) - 1);
    Eigen::MatrixXd a(n, deg + 1);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double p = 1.0;
        for (int d = 0; d <= deg; ++d, p *= hbars[i]) a(i, d) = p;
        b(i) = values[i];
    }
    LimitEstimate out;
    out.value = least_squares(a, b)(0);
    std::size_t finest = 0;
    for (std::size_t i = 0; i < hbars.size(); ++i) {
        out.samples.emplace_back(hbars[i], values[i]);
        if (hbars[i] < hbars[finest]) finest = i;
    }
    out.last = values[finest];
    std::vector<double> hs, es;
    for (std::size_t i = 0; i < hbars.size(); ++i) {
        const double e = std::abs(values[i] - out.value);
        if (e > 0) {
            hs.push_back(hbars[i]);
            es.push_back(e);
        }
    }
    out.order = hs.size() >= 2 ? convergence_slope(hs, es) : 0.0;
    return out;
}

double convergence_slope(std::span<const double> abscissae, std::span<const double> errors) {
    if (abscissae.size() != errors.size()) throw Error(ErrorKind::DimensionMismatch, "slope: size mismatch");
    if (abscissae.size() < 2) throw Error(ErrorKind::EmptyWindow, "slope needs two samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(abscissae.size());
    for (std::size_t i = 0; i < abscissae.size(); ++i) {
        if (!(abscissae[i] > 0) || !(errors[i] > 0)) throw Error(ErrorKind::NumericalFailure, "slope of nonpositive data");
        const double x = std::log(abscissae[i]), y = std::log(errors[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

DoubleLimit x_limit(std::vector<std::pair<double, LimitEstimate>> per_x) {
    if (per_x.empty()) throw Error(ErrorKind::EmptyWindow, "no probe abscissae");
    std::sort(per_x.begin(), per_x.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    DoubleLimit out;
    if (per_x.size() == 1) {
        out.value = per_x.front().second.value;
    } else {
        const auto n = static_cast<Eigen::Index>(per_x.size());
        Eigen::MatrixXd a(n, 2);
        Eigen::VectorXd b(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double x = per_x[static_cast<std::size_t>(i)].first;
            a(i, 0) = 1.0;
            a(i, 1) = x * std::log(x);
            b(i) = per_x[static_cast<std::size_t>(i)].second.value;
        }
        const Eigen::VectorXd sol = least_squares(a, b);
        out.value = sol(0);
        out.x_fit_residual = std::sqrt((a * sol - b).squaredNorm() / static_cast<double>(n));
    }
    out.per_x = std::move(per_x);
    return out;
}

double KinkFit::operator()(double x) const {
    double v = coefficients.at(0) + coefficients.at(1) * x;
    for (std::size_t i = 0; i < kinks.size(); ++i) v += coefficients.at(2 + i) * std::max(0.0, x - kinks[i]);
    return v;
}

namespace {

KinkFit hinge_fit(std::span<const double> xs, std::span<const double> ys, const std::vector<double>& kinks) {
    const auto n = static_cast<Eigen::Index>(xs.size());
    const auto p = static_cast<Eigen::Index>(2 + kinks.size());
    Eigen::MatrixXd a(n, p);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, 0) = 1.0;
        a(i, 1) = xs[static_cast<std::size_t>(i)];
        for (std::size_t q = 0; q < kinks.size(); ++q)
            a(i, static_cast<Eigen::Index>(2 + q)) = std::max(0.0, xs[static_cast<std::size_t>(i)] - kinks[q]);
        b(i) = ys[static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXd sol = least_squares(a, b);
    KinkFit fit;
    fit.kinks = kinks;
    fit.coefficients.assign(sol.data(), sol.data() + sol.size());
    fit.rss = (a * sol - b).squaredNorm();
    return fit;
}

void best_with_kinks(std::span<const double> xs, std::span<const double> ys, const std::vector<double>& cand,
                     std::size_t want, std::size_t from, std::vector<double>& current, KinkFit& best) {
    if (current.size() == want) {
        KinkFit f = hinge_fit(xs, ys, current);
        if (best.coefficients.empty() || f.rss < best.rss) best = std::move(f);
        return;
    }
    for (std::size_t i = from; i < cand.size(); ++i) {
        current.push_back(cand[i]);
        best_with_kinks(xs, ys, cand, want, i + 2, current, best);
        current.pop_back();
    }
}

}  // namespace

KinkFit fit_piecewise_linear(std::span<const double> xs, std::span<const double> ys, int max_kinks,
                             double accept_ratio, std::size_t max_candidates) {
    if (xs.size() != ys.size()) throw Error(ErrorKind::DimensionMismatch, "kink fit: size mismatch");
    if (xs.size() < 4) throw Error(ErrorKind::EmptyWindow, "kink fit needs at least four samples");
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> cand;
    const std::size_t first = 2, last = sorted.size() - 2;
    if (last > first) {
        const std::size_t span = last - first;
        const std::size_t count = std::min(span, std::max<std::size_t>(max_candidates, 1));
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t idx = first + (i * span) / count;
            if (cand.empty() || sorted[idx] > cand.back()) cand.push_back(sorted[idx]);
        }
    }
    double scale = 0.0;
    for (double y : ys) scale += y * y;
    KinkFit best = hinge_fit(xs, ys, {});
    for (int k = 1; k <= max_kinks; ++k) {
        if (best.rss <= 1e-24 * std::max(scale, 1.0)) break;
        KinkFit trial;
        std::vector<double> current;
        best_with_kinks(xs, ys, cand, static_cast<std::size_t>(k), 0, current, trial);
        if (trial.coefficients.empty()) break;
        if (!(best.rss > accept_ratio * trial.rss)) break;
        best = std::move(trial);
    }
    return best;
}

double determinant(std::vector<std::vector<double>> m) {
    const auto n = static_cast<Eigen::Index>(m.size());
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (m[static_cast<std::size_t>(i)].size() != m.size())
            throw Error(ErrorKind::DimensionMismatch, "determinant of a non-square matrix");
        for (Eigen::Index j = 0; j < n; ++j) a(i, j) = m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return a.determinant();
}

}  // namespace semitoric::invariants
