#include <algorithm>
#include <cmath>
#include <limits>

#include "semitoric/lattice.hpp"

namespace semitoric::lattice {

void ChartSpec::validate(int grid) const {
    if (!g0 || !g1) throw Error(ErrorKind::Config, "chart maps must be set");
    if (!domain.xs.bounded() || !domain.ys.bounded()) throw Error(ErrorKind::Config, "chart domain must be bounded");
    const double hx = (domain.xs.hi - domain.xs.lo) / grid;
    const double hy = (domain.ys.hi - domain.ys.lo) / grid;
    std::vector<Point2> images;
    for (int i = 0; i <= grid; ++i)
        for (int j = 0; j <= grid; ++j) {
            const Point2 xi{domain.xs.lo + i * hx, domain.ys.lo + j * hy};
            const double e = 1e-6 * std::max(hx, hy);
            const Point2 dx = (1.0 / (2 * e)) * (g0(xi + Point2{e, 0}) - g0(xi - Point2{e, 0}));
            const Point2 dy = (1.0 / (2 * e)) * (g0(xi + Point2{0, e}) - g0(xi - Point2{0, e}));
            if (!(cross(dx, dy) > 0)) throw Error(ErrorKind::InjectivityFailure, "g0 is not orientation preserving");
            images.push_back(g0(xi));
        }
    PointCloud cloud;
    cloud.k = std::max(1, static_cast<int>(1.0 / std::max(hx, hy)));
    cloud.points = std::move(images);
    if (min_separation(cloud) < 1e-9 * std::max(hx, hy))
        throw Error(ErrorKind::InjectivityFailure, "g0 is not injective on the domain grid");
}

Labelling SynthLattice::truth_labelling() const {
    Labelling lab;
    for (std::size_t i = 0; i < truth.size(); ++i) lab.assignment.emplace(i, truth[i]);
    return lab;
}

SynthLattice synth_lattice(const ChartSpec& chart, int k) {
    if (k < 1) throw Error(ErrorKind::Config, "k must be positive");
    chart.validate();
    const double h = hbar_of(k);
    const int j_lo = static_cast<int>(std::ceil(chart.domain.xs.lo * k - 1e-9));
    const int j_hi = static_cast<int>(std::floor(chart.domain.xs.hi * k + 1e-9));
    int l_lo = static_cast<int>(std::ceil(chart.domain.ys.lo * k - 1e-9));
    const int l_hi = static_cast<int>(std::floor(chart.domain.ys.hi * k + 1e-9));
    if (chart.half) l_lo = std::max(l_lo, 0);

    SynthLattice out;
    out.cloud.k = k;
    double x_lo = INFINITY, x_hi = -INFINITY, y_lo = INFINITY, y_hi = -INFINITY;
    for (int j = j_lo; j <= j_hi; ++j)
        for (int l = l_lo; l <= l_hi; ++l) {
            const Point2 xi{h * j, h * l};
            const Point2 p = chart.g0(xi) + h * chart.g1(xi);
            out.cloud.points.push_back(p);
            out.truth.push_back({j, l});
            x_lo = std::min(x_lo, p.x);
            x_hi = std::max(x_hi, p.x);
            y_lo = std::min(y_lo, p.y);
            y_hi = std::max(y_hi, p.y);
        }
    if (out.cloud.points.empty()) throw Error(ErrorKind::TooSparse, "chart domain contains no lattice point");
    out.cloud.region.base = Rect{{x_lo, x_hi}, {y_lo, y_hi}};
    if (min_separation(out.cloud) < 1e-3 * h * h)
        throw Error(ErrorKind::InjectivityFailure, "generated points collide; hbar too large for this chart");
    return out;
}

ChartSpec identity_chart(bool half) {
    return {[](Point2 x) { return x; }, [](Point2) { return Point2{}; }, Rect{{0, 1}, {0, 1}}, half};
}

namespace {

// Singular values of the Jacobian of g0 stay within a factor 1.3 of each other over the whole domain.
bool bounded_distortion(const ChartSpec& chart) {
    constexpr int n = 10;
    constexpr double d = 1e-6;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int a = 0; a <= n; ++a)
        for (int b = 0; b <= n; ++b) {
            const Point2 x{chart.domain.xs.lo + (chart.domain.xs.hi - chart.domain.xs.lo) * a / n,
                           chart.domain.ys.lo + (chart.domain.ys.hi - chart.domain.ys.lo) * b / n};
            const Point2 g = chart.g0(x);
            const Point2 c1 = (1 / d) * (chart.g0(x + Point2{d, 0}) - g);
            const Point2 c2 = (1 / d) * (chart.g0(x + Point2{0, d}) - g);
            const double fro = dot(c1, c1) + dot(c2, c2);
            const double det = std::abs(cross(c1, c2));
            const double disc = std::sqrt(std::max(0.0, fro * fro - 4 * det * det));
            lo = std::min(lo, std::sqrt(0.5 * (fro - disc)));
            hi = std::max(hi, std::sqrt(0.5 * (fro + disc)));
        }
    return hi <= 1.3 * lo;
}

ChartSpec draw_regular(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1, 1);
    const double a = 1.0 + 0.3 * u(rng), b = 0.4 * u(rng), c = 0.4 * u(rng), d = 1.0 + 0.3 * u(rng);
    const double q1 = 0.25 * u(rng), q2 = 0.25 * u(rng), q3 = 0.25 * u(rng), q4 = 0.25 * u(rng);
    const double s1 = 0.2 * u(rng), s2 = 0.2 * u(rng);
    ChartSpec chart;
    chart.g0 = [=](Point2 x) {
        return Point2{a * x.x + b * x.y + q1 * x.x * x.x + q2 * x.x * x.y,
                      c * x.x + d * x.y + q3 * x.y * x.y + q4 * x.x * x.x};
    };
    chart.g1 = [=](Point2 x) { return Point2{s1 + 0.1 * x.y, s2 - 0.1 * x.x}; };
    chart.domain = Rect{{0, 1}, {0, 1}};
    return chart;
}

ChartSpec draw_half(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1, 1);
    const double beta = 1.0 + 0.3 * u(rng), alpha = 0.3 * u(rng), gamma = 0.3 * u(rng), eps = 0.2 * u(rng);
    const double s1 = 0.3 * u(rng), s2 = 0.2 * u(rng);
    ChartSpec chart;
    chart.g0 = [=](Point2 x) {
        return Point2{x.x, beta * x.y + alpha * x.x * x.x + gamma * x.x * x.y + eps * x.y * x.y};
    };
    chart.g1 = [=](Point2 x) { return Point2{s1, s2 + 0.1 * x.x}; };
    chart.domain = Rect{{0, 1}, {0, 1}};
    chart.half = true;
    return chart;
}

}  // namespace

ChartSpec random_regular_chart(std::mt19937_64& rng) {
    for (;;)
        if (ChartSpec c = draw_regular(rng); bounded_distortion(c)) return c;
}

ChartSpec random_half_chart(std::mt19937_64& rng) {
    for (;;)
        if (ChartSpec c = draw_half(rng); bounded_distortion(c)) return c;
}

}  // namespace semitoric::lattice
