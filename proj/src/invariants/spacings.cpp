#include <algorithm>
#include <cmath>
#include <numbers>

#include "semitoric/invariants.hpp"

namespace semitoric::invariants {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double lagrange(std::span<const double> xs, std::span<const double> ys, double x) {
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double p = ys[i];
        for (std::size_t j = 0; j < xs.size(); ++j)
            if (j != i) p *= (x - xs[j]) / (xs[i] - xs[j]);
        s += p;
    }
    return s;
}

// Window of up to `width` consecutive indices around the insertion point of t in the sorted sequence.
std::pair<std::size_t, std::size_t> stencil(std::span<const double> sorted, double t, std::size_t width) {
    const std::size_t n = sorted.size();
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), t);
    const std::size_t pos = static_cast<std::size_t>(it - sorted.begin());
    const std::size_t w = std::min(width, n);
    std::size_t lo = pos >= w / 2 ? pos - w / 2 : 0;
    if (lo + w > n) lo = n - w;
    return {lo, lo + w};
}

struct Sample {
    double x, y, v;
};

// Interpolates samples sorted by y to height t; returns (x, v) or nothing when t is outside the samples.
std::optional<std::pair<double, double>> along_column(const std::vector<Sample>& s, double t) {
    if (s.size() < 2 || t < s.front().y || t > s.back().y) return std::nullopt;
    std::vector<double> ys, xs, vs;
    for (const auto& q : s) ys.push_back(q.y);
    const auto [lo, hi] = stencil(ys, t, 4);
    std::vector<double> sy, sx, sv;
    for (std::size_t i = lo; i < hi; ++i) {
        sy.push_back(s[i].y);
        sx.push_back(s[i].x);
        sv.push_back(s[i].v);
    }
    return std::pair{lagrange(sy, sx, t), lagrange(sy, sv, t)};
}

double across_columns(std::vector<std::pair<double, double>> cols, double t) {
    std::sort(cols.begin(), cols.end());
    std::vector<double> xs, vs;
    for (const auto& [x, v] : cols) {
        xs.push_back(x);
        vs.push_back(v);
    }
    const auto [lo, hi] = stencil(xs, t, 4);
    return lagrange(std::span(xs).subspan(lo, hi - lo), std::span(vs).subspan(lo, hi - lo), t);
}

double column_x(const Column& c) {
    double s = 0.0;
    for (const auto& [l, p] : c.points) s += p.x;
    return s / static_cast<double>(c.points.size());
}

}  // namespace

const Column* LabelledSpectrum::column(int j) const {
    const auto it = std::lower_bound(columns.begin(), columns.end(), j,
                                     [](const Column& c, int v) { return c.j < v; });
    return it != columns.end() && it->j == j ? &*it : nullptr;
}

std::optional<Point2> LabelledSpectrum::at(Label label) const {
    const Column* c = column(label.j);
    if (!c) return std::nullopt;
    const auto it = c->points.find(label.l);
    if (it == c->points.end()) return std::nullopt;
    return it->second;
}

std::size_t LabelledSpectrum::size() const {
    std::size_t n = 0;
    for (const auto& c : columns) n += c.points.size();
    return n;
}

LabelledSpectrum from_labelling(const lattice::PointCloud& cloud, const lattice::Labelling& labelling) {
    std::map<int, Column> cols;
    for (const auto& [idx, lab] : labelling.assignment) {
        if (idx >= cloud.points.size()) throw Error(ErrorKind::DimensionMismatch, "label index outside the cloud");
        Column& c = cols[lab.j];
        c.j = lab.j;
        if (!c.points.emplace(lab.l, cloud.points[idx]).second)
            throw Error(ErrorKind::Inconsistent, "two points share a label");
    }
    LabelledSpectrum out;
    out.k = cloud.k;
    for (auto& [j, c] : cols) out.columns.push_back(std::move(c));
    return out;
}

LabelledSpectrum relabel_shear(const LabelledSpectrum& spectrum, int n) {
    LabelledSpectrum out;
    out.k = spectrum.k;
    for (const Column& c : spectrum.columns) {
        Column nc;
        nc.j = c.j;
        for (const auto& [l, p] : c.points) nc.points.emplace_hint(nc.points.end(), l - n * c.j, p);
        out.columns.push_back(std::move(nc));
    }
    return out;
}

lattice::PointCloud to_cloud(const models::JointSpectrum& spectrum) {
    lattice::PointCloud cloud;
    cloud.k = spectrum.k;
    cloud.points.reserve(spectrum.points.size());
    for (const auto& p : spectrum.points) cloud.points.push_back({p.x, p.y});
    if (spectrum.window) cloud.region.base = *spectrum.window;
    return cloud;
}

LabelledSpectrum labelled_model_spectrum(const models::ModelSpec& model, int k, Interval x_window, double x_ref,
                                         const models::SpectrumOptions& options) {
    const auto spectrum = models::joint_spectrum(model, k, Rect{x_window, {}}, options);
    if (spectrum.points.empty()) throw Error(ErrorKind::EmptyWindow, "no joint eigenvalue in the window");
    double ref = spectrum.points.front().x;
    for (const auto& p : spectrum.points)
        if (std::abs(p.x - x_ref) < std::abs(ref - x_ref)) ref = p.x;
    const auto cloud = to_cloud(spectrum);
    return from_labelling(cloud, lattice::label_semitoric_columns(cloud, ref));
}

A1A2Sample spacings_to_a1a2(const LabelledSpectrum& spectrum, Label anchor) {
    const auto e = spectrum.at(anchor);
    const auto right = spectrum.at({anchor.j + 1, anchor.l});
    const auto up = spectrum.at({anchor.j, anchor.l + 1});
    if (!e || !right || !up) throw Error(ErrorKind::MissingNeighbor, "anchor lacks a right or upper neighbour");
    const double gap = up->y - e->y;
    if (!(std::abs(gap) > 0)) throw Error(ErrorKind::NumericalFailure, "zero vertical spacing");
    const double h = spectrum.hbar();
    A1A2Sample s;
    s.c = *e;
    s.k = spectrum.k;
    s.ratio_a1_a2 = (e->y - right->y) / h;
    s.a2 = h / gap;
    s.a1 = s.ratio_a1_a2 * s.a2;
    return s;
}

A1A2Sample probe_a1a2(const LabelledSpectrum& spectrum, Point2 c) {
    const double h = spectrum.hbar();
    std::vector<std::pair<double, double>> a2_cols, ratio_cols;
    for (std::size_t ci = 0; ci < spectrum.columns.size(); ++ci) {
        const Column& col = spectrum.columns[ci];
        if (col.points.size() < 2) continue;
        const double cx = column_x(col);
        if (std::abs(cx - c.x) > 8 * h) continue;

        std::vector<Sample> vert;
        for (auto it = col.points.begin(); std::next(it) != col.points.end(); ++it) {
            const auto nx = std::next(it);
            if (nx->first != it->first + 1) continue;
            const Point2 a = it->second, b = nx->second;
            if (std::abs(0.5 * (a.y + b.y) - c.y) > 8 * h) continue;
            vert.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y), h / (b.y - a.y)});
        }
        if (const auto v = along_column(vert, c.y)) a2_cols.push_back(*v);

        const Column* next = spectrum.column(col.j + 1);
        if (!next) continue;
        std::vector<Sample> horiz;
        for (const auto& [l, a] : col.points) {
            const auto it = next->points.find(l);
            if (it == next->points.end()) continue;
            const Point2 b = it->second;
            if (std::abs(0.5 * (a.y + b.y) - c.y) > 8 * h) continue;
            horiz.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y), (a.y - b.y) / h});
        }
        std::sort(horiz.begin(), horiz.end(), [](const Sample& p, const Sample& q) { return p.y < q.y; });
        if (const auto v = along_column(horiz, c.y)) ratio_cols.push_back(*v);
    }
    if (a2_cols.size() < 2 || ratio_cols.size() < 2)
        throw Error(ErrorKind::MissingNeighbor, "not enough labelled columns around the probe");
    A1A2Sample s;
    s.c = c;
    s.k = spectrum.k;
    s.a2 = across_columns(a2_cols, c.x);
    s.ratio_a1_a2 = across_columns(ratio_cols, c.x);
    s.a1 = s.ratio_a1_a2 * s.a2;
    if (!std::isfinite(s.a2) || s.a2 == 0.0) throw Error(ErrorKind::NumericalFailure, "degenerate spacing at probe");
    return s;
}

namespace {

void require_family(const SpectrumFamily& family, std::span<const double> xs) {
    if (family.empty()) throw Error(ErrorKind::EmptyWindow, "empty spectrum family");
    if (xs.empty()) throw Error(ErrorKind::Config, "empty probe schedule");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0)) throw Error(ErrorKind::Config, "probe offsets must be positive");
        if (i > 0 && !(xs[i] < xs[i - 1])) throw Error(ErrorKind::Config, "probe schedule must be strictly decreasing");
    }
}

// Per x, evaluates f on every spectrum and extrapolates hbar -> 0.
template <class F>
std::vector<std::pair<double, LimitEstimate>> per_x_limits(const SpectrumFamily& family, std::span<const double> xs,
                                                          F&& f) {
    std::vector<std::pair<double, LimitEstimate>> out;
    for (double x : xs) {
        std::vector<double> hs, vs;
        for (const auto& s : family) {
            hs.push_back(s.hbar());
            vs.push_back(f(s, x));
        }
        out.emplace_back(x, richardson(hs, vs));
    }
    return out;
}

}  // namespace

GradientResult recover_fr_gradient(const SpectrumFamily& family, Point2 focus, std::span<const double> x_schedule,
                                   double mu) {
    require_family(family, x_schedule);
    if (!(mu > 1)) throw Error(ErrorKind::Config, "mu must exceed 1");
    const double scale = kTwoPi / std::log(mu);
    GradientResult r;
    r.dx_limit = x_limit(per_x_limits(family, x_schedule, [&](const LabelledSpectrum& s, double x) {
        return scale * (probe_a1a2(s, focus + Point2{x, 0}).a1 - probe_a1a2(s, focus + Point2{mu * x, 0}).a1);
    }));
    r.dy_limit = x_limit(per_x_limits(family, x_schedule, [&](const LabelledSpectrum& s, double x) {
        return scale * (probe_a1a2(s, focus + Point2{x, 0}).a2 - probe_a1a2(s, focus + Point2{mu * x, 0}).a2);
    }));
    r.dx = r.dx_limit.value;
    r.dy = r.dy_limit.value;
    if (!(r.dy > 0)) throw Error(ErrorKind::SignError, "recovered d_y f_r(0) is not positive");
    r.s0 = -r.dx / r.dy;
    const double xm = x_schedule.back();
    r.error_budget = xm * std::abs(std::log(xm)) + family.back().hbar();
    return r;
}

Sigma1Result recover_sigma1(const SpectrumFamily& family, Point2 focus, double s0, std::span<const double> x_schedule) {
    require_family(family, x_schedule);
    auto per_x = per_x_limits(family, x_schedule, [&](const LabelledSpectrum& s, double x) {
        const A1A2Sample a = probe_a1a2(s, focus + Point2{x, s0 * x});
        return a.a1 + s0 * a.a2;
    });
    Sigma1Result out;
    for (std::size_t i = 1; i < per_x.size(); ++i) {
        const double jump = per_x[i].second.value - per_x[i - 1].second.value;
        const double n = std::round(jump);
        if (n == 0.0) continue;
        if (std::abs(jump - n) > 0.2)
            throw Error(ErrorKind::ActionDiscontinuity, "successive probes disagree by a non-integer amount");
        LimitEstimate& e = per_x[i].second;
        e.value -= n;
        e.last -= n;
        for (auto& [h, v] : e.samples) v -= n;
        ++out.corrected_jumps;
    }
    out.limit = x_limit(std::move(per_x));
    return out;
}

Twisting twisting_number(double sigma1_0, double snap) {
    if (!std::isfinite(sigma1_0)) throw Error(ErrorKind::NumericalFailure, "sigma1 is not finite");
    Twisting t;
    const double nearest = std::round(sigma1_0);
    t.p = static_cast<int>(std::abs(sigma1_0 - nearest) <= snap ? nearest : std::floor(sigma1_0));
    t.sigma1_p = sigma1_0 - t.p;
    return t;
}

std::pair<Twisting, LabelledSpectrum> twisting_and_privileged(double sigma1_0, const LabelledSpectrum& spectrum,
                                                              double snap) {
    const Twisting t = twisting_number(sigma1_0, snap);
    return {t, t.p == 0 ? spectrum : relabel_shear(spectrum, t.p)};
}

DoubleLimit recover_S01(const SpectrumFamily& family, Point2 focus, double s0, double dy_fr,
                        std::span<const double> x_schedule) {
    require_family(family, x_schedule);
    if (!(dy_fr > 0)) throw Error(ErrorKind::SignError, "d_y f_r(0) must be positive");
    return x_limit(per_x_limits(family, x_schedule, [&](const LabelledSpectrum& s, double x) {
        return probe_a1a2(s, focus + Point2{x, s0 * x}).a2 / dy_fr + std::log(x) / kTwoPi;
    }));
}

}  // namespace semitoric::invariants
