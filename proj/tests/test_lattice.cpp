#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "semitoric/lattice.hpp"
#include "semitoric/models.hpp"

using namespace semitoric;
using namespace semitoric::lattice;

namespace {

bool is_identity(const IntAffine& t) { return t.a == IntAffine{}.a; }

}  // namespace

TEST_CASE("region depth with holes") {
    Region r{Rect{{0, 2}, {0, 1}}, {Ball{{1, 0.5}, 0.2}}};
    CHECK(r.depth({0.5, 0.5}) == doctest::Approx(0.3));
    CHECK(!r.contains({1.05, 0.5}));
    CHECK(!r.contains({3, 0.5}));
    CHECK(r.depth({1.5, 0.5}) == doctest::Approx(0.3));
    Region hole_rect{Rect::everything(), {Rect{{0, 1}, {0, 1}}}};
    CHECK(hole_rect.depth({2, 0.5}) == doctest::Approx(1.0));
    CHECK(hole_rect.depth({0.5, 0.5}) == doctest::Approx(-0.5));
}

TEST_CASE("spatial index queries and tie breaking") {
    const std::vector<Point2> pts{{0, 0}, {1, 0}, {-1, 0}, {0, 2}};
    SpatialIndex idx(pts, 0.5);
    CHECK(idx.nearest({0.5, 0}) == 0);   // tie between (0,0) and (1,0): lexicographically smallest
    CHECK(idx.nearest({-0.5, 0}) == 2);  // tie between (-1,0) and (0,0)
    CHECK(idx.nearest({10, 10}) == 3);
    const auto w = idx.within({0, 0}, 1.0);
    CHECK(w == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("integer affine algebra") {
    IntAffine t;
    t.a = {{{1, 0}, {1, 1}}};
    t.kappa = {3, -1};
    const IntAffine inv = t.inverse();
    CHECK(inv.compose(t) == IntAffine{});
    CHECK(t.apply({2, 5}) == Label{5, 6});
}

TEST_CASE("synthetic identity chart is the grid") {
    const auto s = synth_lattice(identity_chart(), 10);
    CHECK(s.cloud.points.size() == 121);
    for (std::size_t i = 0; i < s.truth.size(); ++i) {
        CHECK(s.cloud.points[i].x == doctest::Approx(s.truth[i].j / 10.0));
        CHECK(s.cloud.points[i].y == doctest::Approx(s.truth[i].l / 10.0));
    }
}

TEST_CASE("synthetic linear chart is the sheared grid") {
    ChartSpec chart{[](Point2 x) { return Point2{x.x, x.x + x.y}; }, [](Point2) { return Point2{}; },
                    Rect{{0, 1}, {0, 1}}, false};
    const auto s = synth_lattice(chart, 10);
    for (std::size_t i = 0; i < s.truth.size(); ++i)
        CHECK(s.cloud.points[i].y == doctest::Approx((s.truth[i].j + s.truth[i].l) / 10.0));
}

TEST_CASE("non-injective chart is rejected") {
    ChartSpec chart{[](Point2 x) { return Point2{x.x, 0.0 * x.y}; }, [](Point2) { return Point2{}; },
                    Rect{{0, 1}, {0, 1}}, false};
    try {
        synth_lattice(chart, 10);
        FAIL("expected InjectivityFailure");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InjectivityFailure);
    }
}

TEST_CASE("affine basis on exact and sheared grids") {
    const auto s = synth_lattice(identity_chart(), 20);
    const auto b = select_affine_basis(s.cloud, {0.5, 0.5});
    const Point2 v1 = s.cloud.points[b.lam10] - s.cloud.points[b.lam00];
    const Point2 v2 = s.cloud.points[b.lam01] - s.cloud.points[b.lam00];
    CHECK(norm(v1) == doctest::Approx(0.05));
    CHECK(norm(v2) == doctest::Approx(0.05));
    CHECK(cross(v1, v2) == doctest::Approx(0.0025));

    ChartSpec shear{[](Point2 x) { return Point2{2 * x.x + 0.5 * x.y, 0.3 * x.x + x.y}; },
                    [](Point2) { return Point2{}; }, Rect{{0, 1}, {0, 1}}, false};
    const auto t = synth_lattice(shear, 40);
    const auto bt = select_affine_basis(t.cloud, {1.2, 0.6});
    const Point2 w1 = t.cloud.points[bt.lam10] - t.cloud.points[bt.lam00];
    const Point2 w2 = t.cloud.points[bt.lam01] - t.cloud.points[bt.lam00];
    CHECK(cross(w1, w2) == doctest::Approx((2 - 0.15) / (40.0 * 40.0)).epsilon(1e-9));

    PointCloud tiny;
    tiny.k = 10;
    tiny.points = {{0, 0}, {0.1, 0}};
    CHECK_THROWS_AS(select_affine_basis(tiny, {0, 0}), Error);
}

TEST_CASE("label_regular on the identity chart returns true indices") {
    const auto s = synth_lattice(identity_chart(), 20);
    const auto basis = select_affine_basis(s.cloud, {0, 0}, BasisMode::Semitoric);
    const auto lab = label_regular(s.cloud, basis, s.cloud.region);
    CHECK(lab.assignment.size() == s.truth.size());
    for (const auto& [idx, l] : lab.assignment) CHECK(l == s.truth[idx]);
}

TEST_CASE("label_regular recovers randomized nonlinear charts up to one affine map") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 6; ++trial) {
        const ChartSpec chart = random_regular_chart(rng);
        for (int k : {20, 50, 100}) {
            const auto s = synth_lattice(chart, k);
            const Point2 c = chart.g0({0.5, 0.5});
            const auto lab = label_regular(s.cloud, select_affine_basis(s.cloud, c), s.cloud.region);
            CHECK(lab.assignment.size() == s.truth.size());
            const auto t = transition(s.cloud, s.truth_labelling(), lab);
            CHECK(t.det() == 1);
        }
    }
}

TEST_CASE("label_regular failure modes") {
    const auto s = synth_lattice(identity_chart(), 20);
    const auto basis = select_affine_basis(s.cloud, {0.5, 0.5});
    TransportOptions wide;
    wide.rho_factor = 1.5;
    try {
        label_regular(s.cloud, basis, s.cloud.region, wide);
        FAIL("expected AmbiguousNeighbor");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::AmbiguousNeighbor);
    }

    PointCloud split = s.cloud;
    for (auto& p : split.points)
        if (p.x > 0.5) p.x += 0.5;
    split.region.base = Rect{{0, 1.5}, {0, 1}};
    try {
        label_regular(split, select_affine_basis(split, {0.25, 0.5}), split.region);
        FAIL("expected Disconnected");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Disconnected);
    }
}

TEST_CASE("half-lattice labelling on the identity chart") {
    const auto s = synth_lattice(identity_chart(true), 20);
    const auto res = label_half_lattice(s.cloud, {0, 0}, s.cloud.region);
    CHECK(res.labelling.kind == LabelKind::HalfLattice);
    CHECK(res.labelling.assignment.size() == s.truth.size());
    for (const auto& [idx, l] : res.labelling.assignment) CHECK(l == s.truth[idx]);
}

TEST_CASE("half-lattice labelling on randomized semitoric charts is a horizontal shift") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 6; ++trial) {
        const ChartSpec chart = random_half_chart(rng);
        for (int k : {20, 50, 100}) {
            const auto s = synth_lattice(chart, k);
            const auto res = label_half_lattice(s.cloud, chart.g0({0.5, 0.0}), s.cloud.region);
            CHECK(res.labelling.assignment.size() == s.truth.size());
            const auto t = transition(s.cloud, s.truth_labelling(), res.labelling);
            CHECK(is_identity(t));
            CHECK(t.kappa[1] == 0);
            // l >= 0 and the bottom row is monotone in x.
            std::vector<std::pair<int, double>> bottom;
            for (const auto& [idx, l] : res.labelling.assignment) {
                CHECK(l.l >= 0);
                if (l.l == 0) bottom.emplace_back(l.j, s.cloud.points[idx].x);
            }
            std::sort(bottom.begin(), bottom.end());
            for (std::size_t i = 1; i < bottom.size(); ++i) CHECK(bottom[i].second > bottom[i - 1].second);
        }
    }
}

TEST_CASE("column labelling agrees with the half-lattice labelling near the bottom boundary") {
    const auto model = models::ModelSpec::coupled();
    const auto spectrum = models::joint_spectrum(model, 50, Rect{{-3.0, -2.0}, {-0.6, 0.0}});
    PointCloud cloud;
    cloud.k = 50;
    for (const auto& p : spectrum.points) cloud.points.push_back({p.x, p.y});
    cloud.region.base = Rect{{-3.0, -2.0}, {-0.6, 0.0}};
    const Labelling columns = label_semitoric_columns(cloud, -2.5);
    CHECK(columns.assignment.size() == cloud.points.size());
    for (const auto& [idx, l] : columns.assignment) CHECK(std::abs(cloud.points[idx].x - (-2.5 + l.j / 50.0)) < 1e-9);

    Point2 seed{-2.5, 0.0};
    for (const auto& p : cloud.points)
        if (std::abs(p.x + 2.5) < 1e-9 && p.y < seed.y) seed = p;
    const auto half = label_half_lattice(cloud, seed, Region{Rect{{-2.9, -2.1}, {-0.6, -0.05}}, {}});
    const auto t = transition(cloud, columns, half.labelling);
    CHECK(is_identity(t));
    CHECK(t.kappa[1] == 0);
}

TEST_CASE("column labelling rejects off-grid columns") {
    PointCloud cloud;
    cloud.k = 10;
    for (double x : {0.0, 0.1, 0.25})
        for (int i = 0; i < 3; ++i) cloud.points.push_back({x, 0.1 * i});
    try {
        label_semitoric_columns(cloud, 0.0);
        FAIL("expected Inconsistent");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Inconsistent);
    }
}

TEST_CASE("half-lattice empty strip") {
    PointCloud column;
    column.k = 20;
    for (int i = 0; i < 20; ++i) column.points.push_back({0.0, i / 20.0});
    try {
        label_half_lattice(column, {0, 0}, {});
        FAIL("expected EmptyStrip");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyStrip);
    }
}

TEST_CASE("boundary detection") {
    const auto id = synth_lattice(identity_chart(true), 20);
    for (const Point2& p : detect_boundary(std::span(&id.cloud, 1))) CHECK(p.y == doctest::Approx(0.0));

    std::mt19937_64 rng(5);
    const ChartSpec chart = random_half_chart(rng);
    std::vector<PointCloud> family;
    for (int k : {20, 40, 80}) family.push_back(synth_lattice(chart, k).cloud);
    const auto curve = detect_boundary(family);
    CHECK(curve.size() >= 70);
    for (const Point2& p : curve) {
        // Boundary image g0(x, 0) of the chart, shifted by the order-hbar term of the first component.
        double best = INFINITY;
        for (int i = 0; i <= 2000; ++i) best = std::min(best, norm(chart.g0({i / 2000.0, 0.0}) - p));
        CHECK(best <= 2.0 / 80);
    }
}

TEST_CASE("transition is exact") {
    std::mt19937_64 rng(17);
    const auto s = synth_lattice(random_regular_chart(rng), 30);
    const Labelling truth = s.truth_labelling();
    CHECK(transition(s.cloud, truth, truth) == IntAffine{});

    IntAffine t;
    t.a = {{{1, 0}, {1, 1}}};
    t.kappa = {3, -1};
    Labelling mapped;
    for (const auto& [idx, l] : truth.assignment) mapped.assignment.emplace(idx, t.apply(l));
    CHECK(transition(s.cloud, truth, mapped) == t);

    Labelling corrupted = mapped;
    corrupted.assignment.rbegin()->second.l += 1;
    CHECK_THROWS_AS(transition(s.cloud, truth, corrupted), Error);

    Labelling flipped;
    for (const auto& [idx, l] : truth.assignment) flipped.assignment.emplace(idx, Label{l.l, l.j});
    try {
        transition(s.cloud, truth, flipped);
        FAIL("expected Inconsistent");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Inconsistent);
    }
}

TEST_CASE("independently seeded labellings have a transition matrix constant in k") {
    std::mt19937_64 rng(23);
    const ChartSpec chart = random_regular_chart(rng);
    std::vector<PointCloud> clouds;
    for (int k : {20, 40, 80}) clouds.push_back(synth_lattice(chart, k).cloud);
    const Region region = clouds[0].region;
    const auto fam1 = label_family_regular(clouds, chart.g0({0.3, 0.3}), region);
    const auto fam2 = label_family_regular(clouds, chart.g0({0.7, 0.6}), region, BasisMode::Semitoric);
    std::optional<IntAffine> first;
    for (std::size_t i = 0; i < clouds.size(); ++i) {
        const auto t = transition(clouds[i], fam1[i], fam2[i]);
        if (first) CHECK(t.a == first->a);
        first = t;
    }
}

TEST_CASE("glue two overlapping charts and single chart") {
    std::mt19937_64 rng(31);
    const ChartSpec chart = random_regular_chart(rng);
    const auto s = synth_lattice(chart, 40);
    const Rect box = std::get<Rect>(s.cloud.region.base);
    const double mid = 0.5 * (box.xs.lo + box.xs.hi);
    Region left{Rect{{box.xs.lo, mid + 0.15}, box.ys}, {}};
    Region right{Rect{{mid - 0.15, box.xs.hi}, box.ys}, {}};
    TransportOptions opts;
    opts.check_coverage = false;
    auto seed_in = [&](const Region& r) {
        const Rect& rr = std::get<Rect>(r.base);
        return Point2{0.5 * (rr.xs.lo + rr.xs.hi), 0.5 * (rr.ys.lo + rr.ys.hi)};
    };
    const auto lab_left = label_regular(s.cloud, select_affine_basis(s.cloud, seed_in(left)), left, opts);
    const auto lab_right =
        label_regular(s.cloud, select_affine_basis(s.cloud, seed_in(right), BasisMode::Semitoric), right, opts);

    std::map<int, PointCloud> clouds{{40, s.cloud}};
    const auto g = glue_global(clouds, {{left, {{40, lab_left}}}, {right, {{40, lab_right}}}});
    CHECK(g.global.at(40).assignment.size() == s.truth.size());
    CHECK(g.transitions.size() == 1);
    CHECK(transition(s.cloud, s.truth_labelling(), g.global.at(40)).det() == 1);
    CHECK(g.phi_samples.at(40).size() == s.truth.size());

    const auto swapped = glue_global(clouds, {{right, {{40, lab_right}}}, {left, {{40, lab_left}}}});
    CHECK(transition(s.cloud, g.global.at(40), swapped.global.at(40)).det() == 1);

    const auto single = glue_global(clouds, {{left, {{40, lab_left}}}});
    for (const auto& [idx, l] : lab_left.assignment) CHECK(single.global.at(40).assignment.at(idx) == l);

    std::ostringstream json;
    write_global_json(json, g);
    CHECK(json.str().find("\"transitions\"") != std::string::npos);
    std::ostringstream csv;
    write_labelling_csv(csv, s.cloud, lab_left);
    CHECK(csv.str().rfind("k,x,y,j,l\n", 0) == 0);
}

TEST_CASE("glue detects monodromy around a hole") {
    // Four charts around the centre of the identity grid; one chart carries a shifted frame.
    const auto s = synth_lattice(identity_chart(), 20);
    const Labelling truth = s.truth_labelling();
    const std::vector<Rect> boxes{{{0, 1}, {0.7, 1}}, {{0.7, 1}, {0, 1}}, {{0, 1}, {0, 0.3}}, {{0, 0.3}, {0, 1}}};
    std::vector<ChartInput> charts;
    for (std::size_t c = 0; c < boxes.size(); ++c) {
        Labelling lab;
        for (const auto& [idx, l] : truth.assignment) {
            const Point2 p = s.cloud.points[idx];
            if (!boxes[c].contains(p)) continue;
            // The left chart disagrees with the top chart on their common corner.
            Label v = l;
            if (c == 3 && p.y > 0.5) v.j += 5;
            lab.assignment.emplace(idx, v);
        }
        charts.push_back({Region{boxes[c], {}}, {{20, lab}}});
    }
    std::map<int, PointCloud> clouds{{20, s.cloud}};
    try {
        glue_global(clouds, charts);
        FAIL("expected NonSimplyConnected");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonSimplyConnected);
    }
}

TEST_CASE("synthetic labelling check against ground truth") {
    const auto r = check_synthetic_labelling(identity_chart(true), 20);
    CHECK(r.points == r.labelled);
    CHECK(r.mislabelled == 0);
    CHECK(is_identity(r.transition));
    std::mt19937_64 rng(5);
    for (int i = 0; i < 3; ++i) {
        const auto c = check_synthetic_labelling(random_regular_chart(rng), 50);
        CHECK(c.mislabelled == 0);
        CHECK(c.transition.det() == 1);
    }
}
