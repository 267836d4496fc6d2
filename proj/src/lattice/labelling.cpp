#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "semitoric/lattice.hpp"

namespace semitoric::lattice {
namespace {

constexpr Label kDirs[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

Label operator+(Label a, Label b) { return {a.j + b.j, a.l + b.l}; }
Label operator-(Label a, Label b) { return {a.j - b.j, a.l - b.l}; }

std::vector<std::size_t> neighbourhood(const SpatialIndex& index, Point2 p, double start, std::size_t want) {
    double r = start;
    std::vector<std::size_t> cand = index.within(p, r);
    while (cand.size() < want && cand.size() < index.size()) {
        r *= 1.5;
        cand = index.within(p, r);
    }
    return cand;
}

double typical_spacing(const PointCloud& cloud) { return cloud.hbar(); }

struct TransportState {
    std::vector<std::optional<Label>> label_of;
    std::unordered_map<Label, std::size_t, LabelHash> at;
    std::vector<std::array<Point2, 2>> vec;
};

Labelling transport(const PointCloud& cloud, const SpatialIndex& index, const AffineBasis& basis, const Region& region,
                    const TransportOptions& options, bool half) {
    const auto& pts = cloud.points;
    const std::size_t n = pts.size();
    for (std::size_t s : {basis.lam00, basis.lam10, basis.lam01})
        if (s >= n) throw Error(ErrorKind::Config, "basis index out of range");
    const Point2 v1 = pts[basis.lam10] - pts[basis.lam00];
    const Point2 v2 = pts[basis.lam01] - pts[basis.lam00];
    if (!(std::abs(cross(v1, v2)) > 1e-12 * dot(v1, v1)))
        throw Error(ErrorKind::TooSparse, "affine basis is degenerate");
    const double rho = options.rho_factor * std::min(norm(v1), norm(v2));

    TransportState st;
    st.label_of.assign(n, std::nullopt);
    st.vec.assign(n, {v1, v2});
    std::deque<std::size_t> queue;
    auto assign = [&](std::size_t idx, Label lab) {
        st.label_of[idx] = lab;
        st.at.emplace(lab, idx);
        queue.push_back(idx);
    };
    assign(basis.lam00, {0, 0});
    assign(basis.lam10, {1, 0});
    assign(basis.lam01, {0, 1});

    auto pos = [&](Label lab) -> const Point2* {
        const auto it = st.at.find(lab);
        return it == st.at.end() ? nullptr : &pts[it->second];
    };

    while (!queue.empty()) {
        const std::size_t p = queue.front();
        queue.pop_front();
        const Label lp = *st.label_of[p];
        for (const Label d : kDirs) {
            const Label target = lp + d;
            if (half && target.l < 0) continue;
            if (st.at.count(target)) continue;
            const int axis = d.j != 0 ? 0 : 1;
            const double sign = (d.j + d.l) > 0 ? 1.0 : -1.0;
            const Label perp = axis == 0 ? Label{0, 1} : Label{1, 0};

            Point2 step = sign * st.vec[p][axis];
            if (const Point2* back = pos(lp - d)) {
                step = pts[p] - *back;
            } else {
                for (const Label e : {perp, Label{-perp.j, -perp.l}}) {
                    const Point2* side = pos(lp + e);
                    if (!side) continue;
                    if (const Point2* ahead = pos(lp + e + d)) {
                        step = *ahead - *side;
                        break;
                    }
                    if (const Point2* behind = pos(lp + e - d)) {
                        step = *side - *behind;
                        break;
                    }
                }
            }
            const Point2 pred = pts[p] + step;
            std::optional<std::size_t> hit;
            for (std::size_t q : index.within(pred, rho)) {
                if (!region.contains(pts[q])) continue;
                if (hit)
                    throw Error(ErrorKind::AmbiguousNeighbor,
                                "two candidates within the search radius; hbar too large for this region");
                hit = q;
            }
            if (!hit) continue;
            const std::size_t q = *hit;
            if (st.label_of[q]) {
                if (*st.label_of[q] != target)
                    throw Error(ErrorKind::AmbiguousNeighbor, "point reached with two different labels");
                continue;
            }
            st.vec[q] = st.vec[p];
            st.vec[q][axis] = sign * (pts[q] - pts[p]);
            assign(q, target);
        }
    }

    Labelling out;
    out.kind = half ? LabelKind::HalfLattice : LabelKind::Regular;
    for (std::size_t i = 0; i < n; ++i)
        if (st.label_of[i]) out.assignment.emplace(i, *st.label_of[i]);

    if (options.check_coverage) {
        const double margin = options.shrink_factor * std::max(norm(v1), norm(v2));
        for (std::size_t i = 0; i < n; ++i)
            if (!st.label_of[i] && region.depth(pts[i]) >= margin)
                throw Error(ErrorKind::Disconnected, "parallel transport did not reach every interior point");
    }
    return out;
}

void require_points(const PointCloud& cloud, const Region& region) {
    std::size_t inside = 0;
    for (const Point2& p : cloud.points)
        if (region.contains(p)) ++inside;
    if (inside < 10) throw Error(ErrorKind::TooSparse, "fewer than 10 points in the labelling region");
}

}  // namespace

AffineBasis select_affine_basis(const PointCloud& cloud, Point2 c, BasisMode mode) {
    if (cloud.points.size() < 3) throw Error(ErrorKind::TooSparse, "fewer than 3 points in the cloud");
    const double h = typical_spacing(cloud);
    const SpatialIndex index(cloud.points, h);
    const std::size_t i0 = index.nearest(c);
    const Point2 p0 = cloud.points[i0];
    const auto cand = neighbourhood(index, p0, 3 * h, 25);
    if (cand.size() < 3) throw Error(ErrorKind::TooSparse, "neighbourhood has fewer than 3 points");

    AffineBasis basis{i0, i0, i0};
    if (mode == BasisMode::Reduced) {
        std::size_t i1 = cand[1];
        const Point2 v1 = cloud.points[i1] - p0;
        std::optional<std::size_t> i2;
        for (std::size_t a = 2; a < cand.size(); ++a) {
            const Point2 w = cloud.points[cand[a]] - p0;
            if (std::abs(cross(v1, w)) >= 0.5 * norm(v1) * norm(w)) {
                i2 = cand[a];
                break;
            }
        }
        if (!i2) throw Error(ErrorKind::TooSparse, "no independent neighbour found");
        basis.lam10 = i1;
        basis.lam01 = *i2;
        if (cross(v1, cloud.points[*i2] - p0) < 0) std::swap(basis.lam10, basis.lam01);
        return basis;
    }

    const double col = 0.5 * h;
    std::optional<std::size_t> up, right;
    for (std::size_t q : cand) {
        const Point2 d = cloud.points[q] - p0;
        if (std::abs(d.x) < col && d.y > 0 && (!up || d.y < cloud.points[*up].y - p0.y)) up = q;
        if (d.x > col && d.x < 3 * col &&
            (!right || std::abs(d.y) < std::abs(cloud.points[*right].y - p0.y)))
            right = q;
    }
    if (!up || !right) throw Error(ErrorKind::TooSparse, "no semitoric basis near the seed");
    basis.lam10 = *right;
    basis.lam01 = *up;
    return basis;
}

Labelling label_regular(const PointCloud& cloud, const AffineBasis& basis, const Region& region,
                        const TransportOptions& options) {
    require_points(cloud, region);
    const SpatialIndex index(cloud.points, typical_spacing(cloud));
    return transport(cloud, index, basis, region, options, false);
}

HalfLatticeResult label_half_lattice(const PointCloud& cloud, Point2 c, const Region& b0,
                                     const TransportOptions& options) {
    require_points(cloud, b0);
    const double h = cloud.hbar();
    const SpatialIndex index(cloud.points, h);
    const std::size_t mu = index.nearest(c);
    const double half_width = 0.5 * std::pow(h, 1.5);

    auto strip = [&](double x_center) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < cloud.points.size(); ++i)
            if (std::abs(cloud.points[i].x - x_center) <= half_width && b0.contains(cloud.points[i]))
                members.push_back(i);
        std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
            return cloud.points[a].y != cloud.points[b].y ? cloud.points[a].y < cloud.points[b].y : a < b;
        });
        return members;
    };
    const auto s0 = strip(cloud.points[mu].x);
    if (s0.size() < 2) throw Error(ErrorKind::EmptyStrip, "seed strip has fewer than two points");
    const auto s1 = strip(cloud.points[mu].x + h);
    if (s1.empty()) throw Error(ErrorKind::EmptyStrip, "translated strip is empty");

    HalfLatticeResult out;
    out.basis = {s0[0], s1[0], s0[1]};
    out.labelling = transport(cloud, index, out.basis, b0, options, true);
    return out;
}

Labelling label_semitoric_columns(const PointCloud& cloud, double x_ref) {
    if (cloud.points.empty()) throw Error(ErrorKind::TooSparse, "empty cloud");
    const double h = cloud.hbar();
    const double gap = std::pow(h, 1.5);
    std::vector<std::size_t> order(cloud.points.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return lex_less(cloud.points[a], cloud.points[b]); });

    Labelling lab;
    lab.kind = LabelKind::HalfLattice;
    std::map<int, double> column_x;
    std::size_t start = 0;
    while (start < order.size()) {
        std::size_t end = start + 1;
        while (end < order.size() && cloud.points[order[end]].x - cloud.points[order[end - 1]].x < gap) ++end;
        double mean = 0.0;
        for (std::size_t i = start; i < end; ++i) mean += cloud.points[order[i]].x;
        mean /= static_cast<double>(end - start);
        const int j = static_cast<int>(std::lround((mean - x_ref) / h));
        if (std::abs(mean - x_ref - j * h) > 0.25 * h)
            throw Error(ErrorKind::Inconsistent, "column abscissa is not on the hbar grid");
        if (!column_x.emplace(j, mean).second) throw Error(ErrorKind::AmbiguousNeighbor, "two strips share a column");
        std::vector<std::size_t> col(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(end));
        std::sort(col.begin(), col.end(), [&](std::size_t a, std::size_t b) {
            const Point2 pa = cloud.points[a], pb = cloud.points[b];
            return pa.y != pb.y ? pa.y < pb.y : a < b;
        });
        for (std::size_t r = 0; r < col.size(); ++r) lab.assignment.emplace(col[r], Label{j, static_cast<int>(r)});
        start = end;
    }
    return lab;
}

std::vector<Point2> detect_boundary(std::span<const PointCloud> clouds, bool lower, double strip_factor) {
    if (clouds.empty()) return {};
    const PointCloud* best = &clouds[0];
    for (const PointCloud& c : clouds)
        if (c.k > best->k) best = &c;
    const double w = strip_factor * best->hbar();
    std::map<long long, Point2> extremal;
    for (const Point2& p : best->points) {
        const long long key = std::llround(p.x / w);
        const auto it = extremal.find(key);
        if (it == extremal.end() || (lower ? p.y < it->second.y : p.y > it->second.y)) extremal[key] = p;
    }
    std::vector<Point2> out;
    for (const auto& [key, p] : extremal) out.push_back(p);
    std::sort(out.begin(), out.end(), lex_less);
    return out;
}

ChartTransition transition(const PointCloud& cloud, const Labelling& lab1, const Labelling& lab2,
                           const Region& overlap) {
    std::vector<std::pair<Label, Label>> common;
    for (const auto& [idx, l1] : lab1.assignment) {
        if (idx >= cloud.points.size() || !overlap.contains(cloud.points[idx])) continue;
        if (const auto l2 = lab2.find(idx)) common.emplace_back(l1, *l2);
    }
    if (common.size() < 3) throw Error(ErrorKind::TooSparse, "fewer than 3 common labelled points");

    const auto& [a0, b0] = common[0];
    std::optional<std::size_t> i1, i2;
    for (std::size_t i = 1; i < common.size() && !i2; ++i) {
        const Label u = common[i].first - a0;
        if (!i1) {
            if (u.j != 0 || u.l != 0) i1 = i;
            continue;
        }
        const Label u1 = common[*i1].first - a0;
        if (static_cast<long long>(u1.j) * u.l - static_cast<long long>(u1.l) * u.j != 0) i2 = i;
    }
    if (!i2) throw Error(ErrorKind::TooSparse, "common points are collinear in label space");

    const Label u1 = common[*i1].first - a0, u2 = common[*i2].first - a0;
    const Label w1 = common[*i1].second - b0, w2 = common[*i2].second - b0;
    const long long det_u = static_cast<long long>(u1.j) * u2.l - static_cast<long long>(u2.j) * u1.l;
    // A = W adj(U) / det(U) with U = [u1 u2], W = [w1 w2] as columns.
    const long long adj[2][2] = {{u2.l, -u2.j}, {-u1.l, u1.j}};
    const long long wm[2][2] = {{w1.j, w2.j}, {w1.l, w2.l}};
    ChartTransition t;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) {
            const long long num = wm[r][0] * adj[0][c] + wm[r][1] * adj[1][c];
            if (num % det_u != 0) throw Error(ErrorKind::Inconsistent, "no integer affine map relates the labellings");
            t.a[r][c] = num / det_u;
        }
    t.kappa = {0, 0};
    const Label image = t.apply(a0);
    t.kappa = {b0.j - image.j, b0.l - image.l};
    for (const auto& [l1, l2] : common)
        if (t.apply(l1) != l2) throw Error(ErrorKind::Inconsistent, "affine map fails on a common point");
    if (t.det() != 1) throw Error(ErrorKind::Inconsistent, "transition does not preserve orientation");
    return t;
}

std::vector<Labelling> label_family_regular(std::span<const PointCloud> clouds, Point2 c, const Region& region,
                                            BasisMode mode, const TransportOptions& options) {
    std::vector<Labelling> out;
    Point2 seed = c;
    for (const PointCloud& cloud : clouds) {
        const AffineBasis basis = select_affine_basis(cloud, seed, mode);
        out.push_back(label_regular(cloud, basis, region, options));
        seed = cloud.points[basis.lam00];
    }
    return out;
}

SynthCheck check_synthetic_labelling(const ChartSpec& chart, int k) {
    const SynthLattice s = synth_lattice(chart, k);
    SynthCheck out;
    out.points = s.truth.size();
    if (chart.half)
        out.labelling = label_half_lattice(s.cloud, chart.g0({0.5, 0.0}), s.cloud.region).labelling;
    else
        out.labelling = label_regular(s.cloud, select_affine_basis(s.cloud, chart.g0({0.5, 0.5})), s.cloud.region);
    out.labelled = out.labelling.assignment.size();
    out.transition = transition(s.cloud, s.truth_labelling(), out.labelling);
    const bool admissible =
        out.transition.det() == 1 && (!chart.half || (out.transition.a == IntAffine{}.a && out.transition.kappa[1] == 0));
    for (std::size_t i = 0; i < s.truth.size(); ++i) {
        const auto got = out.labelling.find(i);
        if (!admissible || !got || *got != out.transition.apply(s.truth[i])) ++out.mislabelled;
    }
    return out;
}

}  // namespace semitoric::lattice
