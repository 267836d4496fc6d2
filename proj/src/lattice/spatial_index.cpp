#include <algorithm>
#include <cmath>
#include <limits>

#include "semitoric/lattice.hpp"

namespace semitoric::lattice {
namespace {

double rect_depth(const Rect& r, Point2 p) {
    return std::min({p.x - r.xs.lo, r.xs.hi - p.x, p.y - r.ys.lo, r.ys.hi - p.y});
}

// Signed distance, positive inside the shape.
double shape_depth(const Shape& s, Point2 p) {
    if (const auto* b = std::get_if<Ball>(&s)) return b->radius - norm(p - b->center);
    const Rect& r = std::get<Rect>(s);
    const double inside = rect_depth(r, p);
    if (inside >= 0) return inside;
    const double dx = std::max({r.xs.lo - p.x, 0.0, p.x - r.xs.hi});
    const double dy = std::max({r.ys.lo - p.y, 0.0, p.y - r.ys.hi});
    return -std::hypot(dx, dy);
}

}  // namespace

double Region::depth(Point2 p) const {
    double d = shape_depth(base, p);
    for (const Shape& h : holes) d = std::min(d, -shape_depth(h, p));
    return d;
}

std::optional<Label> Labelling::find(std::size_t index) const {
    const auto it = assignment.find(index);
    if (it == assignment.end()) return std::nullopt;
    return it->second;
}

std::unordered_map<Label, std::size_t, LabelHash> Labelling::inverse() const {
    std::unordered_map<Label, std::size_t, LabelHash> inv;
    for (const auto& [idx, lab] : assignment) inv.emplace(lab, idx);
    return inv;
}

Label IntAffine::apply(Label x) const {
    return {static_cast<int>(a[0][0] * x.j + a[0][1] * x.l + kappa[0]),
            static_cast<int>(a[1][0] * x.j + a[1][1] * x.l + kappa[1])};
}

IntAffine IntAffine::compose(const IntAffine& inner) const {
    IntAffine out;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) out.a[i][j] = a[i][0] * inner.a[0][j] + a[i][1] * inner.a[1][j];
        out.kappa[i] = a[i][0] * inner.kappa[0] + a[i][1] * inner.kappa[1] + kappa[i];
    }
    return out;
}

IntAffine IntAffine::inverse() const {
    const long long d = det();
    if (d != 1 && d != -1) throw Error(ErrorKind::Inconsistent, "affine map is not invertible over the integers");
    IntAffine inv;
    inv.a = {{{a[1][1] * d, -a[0][1] * d}, {-a[1][0] * d, a[0][0] * d}}};
    for (int i = 0; i < 2; ++i) inv.kappa[i] = -(inv.a[i][0] * kappa[0] + inv.a[i][1] * kappa[1]);
    return inv;
}

SpatialIndex::SpatialIndex(std::span<const Point2> points, double cell)
    : points_(points.begin(), points.end()), cell_(cell) {
    if (!(cell > 0)) throw Error(ErrorKind::Config, "spatial index cell must be positive");
    double lo_x = 0, hi_x = 0, lo_y = 0, hi_y = 0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const Point2 p = points_[i];
        buckets_[{static_cast<long long>(std::floor(p.x / cell_)), static_cast<long long>(std::floor(p.y / cell_))}]
            .push_back(i);
        if (i == 0) {
            lo_x = hi_x = p.x;
            lo_y = hi_y = p.y;
        }
        lo_x = std::min(lo_x, p.x);
        hi_x = std::max(hi_x, p.x);
        lo_y = std::min(lo_y, p.y);
        hi_y = std::max(hi_y, p.y);
    }
    extent_ = std::hypot(hi_x - lo_x, hi_y - lo_y) + std::max(std::abs(lo_x), std::abs(hi_x)) +
              std::max(std::abs(lo_y), std::abs(hi_y));
}

std::vector<std::size_t> SpatialIndex::within(Point2 p, double r) const {
    std::vector<std::pair<double, std::size_t>> found;
    const long long x0 = static_cast<long long>(std::floor((p.x - r) / cell_));
    const long long x1 = static_cast<long long>(std::floor((p.x + r) / cell_));
    const long long y0 = static_cast<long long>(std::floor((p.y - r) / cell_));
    const long long y1 = static_cast<long long>(std::floor((p.y + r) / cell_));
    if ((x1 - x0 + 1) * (y1 - y0 + 1) > static_cast<long long>(4 * buckets_.size() + 16)) {
        for (const auto& [key, idxs] : buckets_)
            for (std::size_t i : idxs) {
                const double d = norm(points_[i] - p);
                if (d <= r) found.emplace_back(d, i);
            }
    } else {
        for (long long cx = x0; cx <= x1; ++cx)
            for (long long cy = y0; cy <= y1; ++cy) {
                const auto it = buckets_.find({cx, cy});
                if (it == buckets_.end()) continue;
                for (std::size_t i : it->second) {
                    const double d = norm(points_[i] - p);
                    if (d <= r) found.emplace_back(d, i);
                }
            }
    }
    std::sort(found.begin(), found.end());
    std::vector<std::size_t> out;
    out.reserve(found.size());
    for (const auto& f : found) out.push_back(f.second);
    return out;
}

std::size_t SpatialIndex::nearest(Point2 p) const {
    if (points_.empty()) throw Error(ErrorKind::TooSparse, "nearest query on an empty cloud");
    for (double r = cell_;; r *= 2) {
        const auto cand = within(p, r);
        if (!cand.empty()) {
            const double best = norm(points_[cand.front()] - p);
            std::size_t pick = cand.front();
            for (std::size_t i : cand) {
                if (norm(points_[i] - p) > best) break;
                if (lex_less(points_[i], points_[pick])) pick = i;
            }
            return pick;
        }
        if (r > 4 * (extent_ + norm(p))) throw Error(ErrorKind::NumericalFailure, "nearest query failed");
    }
}

double min_separation(const PointCloud& cloud) {
    if (cloud.points.size() < 2) return std::numeric_limits<double>::infinity();
    const double cell = cloud.hbar();
    const SpatialIndex index(cloud.points, cell);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        for (double r = cell;; r *= 2) {
            const auto cand = index.within(cloud.points[i], r);
            if (cand.size() >= 2) {
                best = std::min(best, norm(cloud.points[cand[1]] - cloud.points[i]));
                break;
            }
        }
    }
    return best;
}

}  // namespace semitoric::lattice
