#include <cmath>

#include "semitoric/invariants.hpp"

namespace semitoric::invariants {

double scaled_strip_count(const lattice::PointCloud& cloud, double delta, double c_width, double x0,
                          std::optional<double> y0, Side side) {
    if (!(delta > 0 && delta < 1)) throw Error(ErrorKind::Config, "delta must lie in (0, 1)");
    if (!(c_width > 0)) throw Error(ErrorKind::Config, "strip width factor must be positive");
    const double h = cloud.hbar();
    // Half-width snapped to a half-integer number of columns, so every strip holds a whole number of columns.
    const double w = (std::max(0.0, std::floor(c_width * std::pow(h, delta) / h - 0.5)) + 0.5) * h;
    std::size_t in_strip = 0, counted = 0;
    for (const Point2 p : cloud.points) {
        if (std::abs(p.x - x0) > w) continue;
        ++in_strip;
        if (!y0 || (side == Side::Below ? p.y <= *y0 : p.y >= *y0)) ++counted;
    }
    if (y0 && in_strip < 10) throw Error(ErrorKind::WindowTooNarrow, "strip contains fewer than 10 points");
    return h * h / (2.0 * w) * static_cast<double>(counted);
}

LimitEstimate height_invariant(std::span<const lattice::PointCloud> clouds, double delta, double c_width,
                               Point2 focus, Side side) {
    if (!(delta > 0 && delta < 0.5)) throw Error(ErrorKind::Config, "delta must lie in (0, 1/2)");
    if (clouds.empty()) throw Error(ErrorKind::EmptyWindow, "no spectra to count");
    std::vector<double> hs, vs;
    for (const auto& cloud : clouds) {
        hs.push_back(std::pow(cloud.hbar(), delta));
        vs.push_back(scaled_strip_count(cloud, delta, c_width, focus.x, focus.y, side));
    }
    LimitEstimate e = richardson(hs, vs, 1);
    for (std::size_t i = 0; i < e.samples.size(); ++i) e.samples[i].first = clouds[i].hbar();
    return e;
}

DHProfile dh_profile(const lattice::PointCloud& cloud, double delta, double c_width, std::span<const double> x_grid) {
    if (!(delta > 0 && delta < 0.5)) throw Error(ErrorKind::Config, "delta must lie in (0, 1/2)");
    DHProfile out;
    out.delta = delta;
    out.c_width = c_width;
    std::vector<double> xs, ys;
    for (double x : x_grid) {
        const double rho = scaled_strip_count(cloud, delta, c_width, x);
        out.samples.emplace_back(x, rho);
        xs.push_back(x);
        ys.push_back(rho);
    }
    if (xs.size() >= 4) {
        const KinkFit fit = fit_piecewise_linear(xs, ys);
        out.fit_residual = std::sqrt(fit.rss / static_cast<double>(xs.size()));
        // Kinks closer than the smoothing width are one kink, placed at their slope-weighted mean.
        const double w = c_width * std::pow(cloud.hbar(), delta);
        for (std::size_t i = 0; i < fit.kinks.size();) {
            std::size_t e = i + 1;
            while (e < fit.kinks.size() && fit.kinks[e] - fit.kinks[e - 1] < 2 * w) ++e;
            double sw = 0, sx = 0;
            for (std::size_t q = i; q < e; ++q) {
                const double wt = std::abs(fit.coefficients[2 + q]);
                sw += wt;
                sx += wt * fit.kinks[q];
            }
            out.kinks.push_back(sw > 0 ? sx / sw : fit.kinks[i]);
            i = e;
        }
    }
    return out;
}

}  // namespace semitoric::invariants
