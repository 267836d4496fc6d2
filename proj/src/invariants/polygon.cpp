#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "semitoric/invariants.hpp"

namespace semitoric::invariants {
namespace {

double segment_distance(Point2 p, Point2 a, Point2 b) {
    const Point2 ab = b - a;
    const double len2 = dot(ab, ab);
    const double t = len2 > 0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    return norm(p - (a + t * ab));
}

// Keeps the part of the polygon where sign * (x - x0) >= 0.
std::vector<Point2> clip_half(const std::vector<Point2>& poly, double x0, double sign) {
    std::vector<Point2> out;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point2 a = poly[i], b = poly[(i + 1) % poly.size()];
        const double fa = sign * (a.x - x0), fb = sign * (b.x - x0);
        if (fa >= 0) out.push_back(a);
        if ((fa >= 0) != (fb >= 0)) {
            const double t = fa / (fa - fb);
            out.push_back(a + t * (b - a));
        }
    }
    return out;
}

struct Line {
    double a = 0.0, b = 0.0;  // v = a + b u
};

Line fit_line(const std::vector<Point2>& pts) {
    double su = 0, sv = 0, suu = 0, suv = 0;
    const double n = static_cast<double>(pts.size());
    for (const Point2 p : pts) {
        su += p.x;
        sv += p.y;
        suu += p.x * p.x;
        suv += p.x * p.y;
    }
    Line l;
    const double det = n * suu - su * su;
    l.b = det != 0 ? (n * suv - su * sv) / det : 0.0;
    l.a = (sv - l.b * su) / n;
    return l;
}

std::optional<Point2> intersect(const Line& p, const Line& q) {
    if (std::abs(p.b - q.b) < 0.1) return std::nullopt;
    const double u = (q.a - p.a) / (p.b - q.b);
    return Point2{u, p.a + p.b * u};
}

// Splits a profile at the kinks of a piecewise-linear fit and fits one line per piece.
std::vector<Line> edge_lines(const std::vector<Point2>& profile, KinkFit& fit, int max_kinks, double margin,
                             double merge) {
    if (profile.size() < 5) throw Error(ErrorKind::EdgeFitFailure, "edge has fewer than 5 boundary points");
    std::vector<double> us, vs;
    for (const Point2 p : profile) {
        us.push_back(p.x);
        vs.push_back(p.y);
    }
    fit = fit_piecewise_linear(us, vs, max_kinks);
    // A gap left by an excluded neighbourhood attracts a kink at each side; those are one corner.
    std::vector<double> kinks;
    for (std::size_t i = 0; i < fit.kinks.size();) {
        std::size_t e = i + 1;
        while (e < fit.kinks.size() && fit.kinks[e] - fit.kinks[e - 1] < merge) ++e;
        kinks.push_back(0.5 * (fit.kinks[i] + fit.kinks[e - 1]));
        i = e;
    }
    fit.kinks = kinks;
    std::vector<Line> lines;
    for (std::size_t s = 0; s <= fit.kinks.size(); ++s) {
        const double lo = s == 0 ? -std::numeric_limits<double>::infinity() : fit.kinks[s - 1] + margin;
        const double hi = s == fit.kinks.size() ? std::numeric_limits<double>::infinity() : fit.kinks[s] - margin;
        std::vector<Point2> piece;
        for (const Point2 p : profile)
            if (p.x >= lo && p.x <= hi) piece.push_back(p);
        if (piece.size() < 5) throw Error(ErrorKind::EdgeFitFailure, "edge has fewer than 5 boundary points");
        lines.push_back(fit_line(piece));
    }
    return lines;
}

}  // namespace

bool ConvexPolygon::contains(Point2 p) const {
    if (vertices.size() < 3) return false;
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const Point2 a = vertices[i], b = vertices[(i + 1) % vertices.size()];
        if (cross(b - a, p - a) < -1e-12) return false;
    }
    return true;
}

double ConvexPolygon::distance(Point2 p) const {
    if (contains(p)) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < vertices.size(); ++i)
        best = std::min(best, segment_distance(p, vertices[i], vertices[(i + 1) % vertices.size()]));
    return best;
}

ConvexPolygon ConvexPolygon::clip_x(Interval xs) const {
    ConvexPolygon out;
    out.vertices = vertices;
    if (std::isfinite(xs.lo)) out.vertices = clip_half(out.vertices, xs.lo, 1.0);
    if (std::isfinite(xs.hi)) out.vertices = clip_half(out.vertices, xs.hi, -1.0);
    return out;
}

std::vector<Point2> ConvexPolygon::sample(double step) const {
    if (!(step > 0)) throw Error(ErrorKind::Config, "sampling step must be positive");
    std::vector<Point2> out;
    if (vertices.empty()) return out;
    double x0 = vertices[0].x, x1 = x0, y0 = vertices[0].y, y1 = y0;
    for (const Point2 v : vertices) {
        x0 = std::min(x0, v.x);
        x1 = std::max(x1, v.x);
        y0 = std::min(y0, v.y);
        y1 = std::max(y1, v.y);
    }
    for (double x = std::ceil(x0 / step) * step; x <= x1; x += step)
        for (double y = std::ceil(y0 / step) * step; y <= y1; y += step)
            if (contains({x, y})) out.push_back({x, y});
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const Point2 a = vertices[i], b = vertices[(i + 1) % vertices.size()];
        const int n = std::max(1, static_cast<int>(std::ceil(norm(b - a) / step)));
        for (int s = 0; s < n; ++s) out.push_back(a + (static_cast<double>(s) / n) * (b - a));
    }
    return out;
}

PolygonEstimate polygon_recover(const lattice::PointCloud& cloud, const lattice::Labelling& labelling,
                                const PolygonOptions& options) {
    const double h = cloud.hbar();
    PolygonEstimate out;
    std::vector<double> offsets;
    for (const auto& [idx, lab] : labelling.assignment) offsets.push_back(h * lab.j - cloud.points.at(idx).x);
    if (offsets.empty()) throw Error(ErrorKind::EdgeFitFailure, "empty labelling");
    std::nth_element(offsets.begin(), offsets.begin() + static_cast<std::ptrdiff_t>(offsets.size() / 2), offsets.end());
    out.offset = offsets[offsets.size() / 2];

    // Labelled extremes per column, and the true extremes of the spectrum column.
    struct Extremes {
        double lo = std::numeric_limits<double>::infinity(), hi = -std::numeric_limits<double>::infinity();
    };
    std::map<long long, Extremes> column_all;
    std::map<int, Extremes> labelled_v, labelled_y;
    auto column_key = [&](double x) { return std::llround(x / h); };
    for (const Point2 p : cloud.points) {
        if (!options.strip.contains(p.x)) continue;
        Extremes& e = column_all[column_key(p.x)];
        e.lo = std::min(e.lo, p.y);
        e.hi = std::max(e.hi, p.y);
    }
    for (const auto& [idx, lab] : labelling.assignment) {
        const Point2 p = cloud.points[idx];
        if (!options.strip.contains(p.x)) continue;
        if (std::abs(h * lab.j - p.x - out.offset) > 0.25 * h)
            throw Error(ErrorKind::Inconsistent, "labels are not aligned with the columns");
        const Point2 uv{h * lab.j, h * lab.l};
        out.cloud.push_back(uv);
        Extremes& v = labelled_v[lab.j];
        Extremes& y = labelled_y[lab.j];
        v.lo = std::min(v.lo, uv.y);
        v.hi = std::max(v.hi, uv.y);
        y.lo = std::min(y.lo, p.y);
        y.hi = std::max(y.hi, p.y);
    }
    std::vector<Point2> lower, upper;
    for (const auto& [j, v] : labelled_v) {
        const double u = h * j;
        const auto it = column_all.find(column_key(u - out.offset));
        if (it == column_all.end()) continue;
        const Extremes& y = labelled_y[j];
        if (y.lo <= it->second.lo) lower.push_back({u, v.lo});
        if (y.hi >= it->second.hi) upper.push_back({u, v.hi});
    }
    const double margin = 2 * h;
    const double merge = 2 * (options.epsilon + margin);
    const auto low_lines = edge_lines(lower, out.lower, options.max_kinks, margin, merge);
    const auto up_lines = edge_lines(upper, out.upper, options.max_kinks, margin, merge);

    auto add = [&](std::optional<Point2> p) {
        if (p) out.fitted_vertices.push_back(*p);
    };
    for (std::size_t i = 0; i + 1 < low_lines.size(); ++i) add(intersect(low_lines[i], low_lines[i + 1]));
    for (std::size_t i = 0; i + 1 < up_lines.size(); ++i) add(intersect(up_lines[i], up_lines[i + 1]));
    add(intersect(low_lines.front(), up_lines.front()));
    add(intersect(low_lines.back(), up_lines.back()));
    std::sort(out.fitted_vertices.begin(), out.fitted_vertices.end(), lex_less);
    return out;
}

namespace {

double cell_for(std::span<const Point2> pts) {
    double x0 = pts[0].x, x1 = x0, y0 = pts[0].y, y1 = y0;
    for (const Point2 p : pts) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    const double area = std::max((x1 - x0) * (y1 - y0), 1e-12);
    return std::max(std::sqrt(area / static_cast<double>(pts.size())), 1e-9);
}

// Two-sided distance for translation t, abandoning early once it exceeds cutoff.
double hausdorff_at(std::span<const Point2> a, std::span<const Point2> b, const lattice::SpatialIndex& ia,
                    const lattice::SpatialIndex& ib, Point2 t, double cutoff) {
    double d = 0.0;
    for (const Point2 p : a) {
        const Point2 q = p + t;
        d = std::max(d, norm(b[ib.nearest(q)] - q));
        if (d > cutoff) return d;
    }
    for (const Point2 p : b) {
        const Point2 q = p - t;
        d = std::max(d, norm(a[ia.nearest(q)] - q));
        if (d > cutoff) return d;
    }
    return d;
}

Point2 bbox_center(std::span<const Point2> pts) {
    double x0 = pts[0].x, x1 = x0, y0 = pts[0].y, y1 = y0;
    for (const Point2 p : pts) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    return {0.5 * (x0 + x1), 0.5 * (y0 + y1)};
}

}  // namespace

HausdorffResult hausdorff(std::span<const Point2> a, std::span<const Point2> b, bool optimize_translation,
                          double search_radius) {
    if (a.empty() || b.empty()) throw Error(ErrorKind::EmptyWindow, "Hausdorff distance of an empty set");
    const lattice::SpatialIndex ia(a, cell_for(a)), ib(b, cell_for(b));
    const double inf = std::numeric_limits<double>::infinity();
    HausdorffResult best;
    if (!optimize_translation) {
        best.distance = hausdorff_at(a, b, ia, ib, {0, 0}, inf);
        return best;
    }
    const Point2 t0 = bbox_center(b) - bbox_center(a);
    const double r = search_radius > 0 ? search_radius : 0.05 * std::max(cell_for(a), cell_for(b)) * 20;
    best.translation = t0;
    best.distance = hausdorff_at(a, b, ia, ib, t0, inf);
    const int n = 8;
    for (int i = -n; i <= n; ++i)
        for (int j = -n; j <= n; ++j) {
            const Point2 t = t0 + Point2{r * i / n, r * j / n};
            const double d = hausdorff_at(a, b, ia, ib, t, best.distance);
            if (d < best.distance) best = {d, t};
        }
    // Pattern search from the best grid node.
    for (double step = r / n; step > 1e-6 * r;) {
        bool moved = false;
        for (const Point2 dir : {Point2{1, 0}, Point2{-1, 0}, Point2{0, 1}, Point2{0, -1}}) {
            const Point2 t = best.translation + step * dir;
            const double d = hausdorff_at(a, b, ia, ib, t, best.distance);
            if (d < best.distance) {
                best = {d, t};
                moved = true;
            }
        }
        if (!moved) step *= 0.5;
    }
    return best;
}

PolygonComparison compare_polygon(const PolygonEstimate& estimate, const ConvexPolygon& reference, Interval strip,
                                  std::span<const lattice::Shape> reference_holes, double step, double search_radius) {
    lattice::Region keep;
    keep.holes.assign(reference_holes.begin(), reference_holes.end());
    std::vector<Point2> ref;
    for (const Point2 p : reference.clip_x(strip).sample(step))
        if (keep.contains(p)) ref.push_back(p);
    std::vector<Point2> cloud;
    cloud.reserve(estimate.cloud.size());
    for (const Point2 p : estimate.cloud) cloud.push_back({p.x - estimate.offset, p.y});

    const HausdorffResult h = hausdorff(cloud, ref, true, search_radius);
    PolygonComparison out;
    out.hausdorff = h.distance;
    out.translation = h.translation;
    out.cloud_points = cloud.size();
    out.reference_points = ref.size();
    if (estimate.fitted_vertices.empty() || reference.vertices.empty()) return out;
    // Vertices are matched after the Hausdorff translation, then get their own mean translation.
    std::vector<std::pair<Point2, Point2>> pairs;
    Point2 shift;
    for (const Point2 v : estimate.fitted_vertices) {
        const Point2 moved{v.x - estimate.offset + h.translation.x, v.y + h.translation.y};
        Point2 nearest = reference.vertices.front();
        for (const Point2 r : reference.vertices)
            if (norm(r - moved) < norm(nearest - moved)) nearest = r;
        pairs.emplace_back(moved, nearest);
        shift = shift + (nearest - moved);
    }
    shift = (1.0 / static_cast<double>(pairs.size())) * shift;
    for (const auto& [v, r] : pairs) out.vertex_error = std::max(out.vertex_error, norm(r - (v + shift)));
    return out;
}

}  // namespace semitoric::invariants
