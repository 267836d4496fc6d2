#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "semitoric/invariants.hpp"

using namespace semitoric;
using namespace semitoric::invariants;

namespace {

constexpr double kPi = std::numbers::pi;

// Labelled points E_{j,l} = hbar (j, alpha j + beta l) for 0 <= j < nj, 0 <= l < nl.
LabelledSpectrum sheared_lattice(int k, double alpha, double beta, int nj = 20, int nl = 40) {
    LabelledSpectrum s;
    s.k = k;
    const double h = hbar_of(k);
    for (int j = 0; j < nj; ++j) {
        Column c;
        c.j = j;
        for (int l = 0; l < nl; ++l) c.points[l] = {h * j, h * (alpha * j + beta * l)};
        s.columns.push_back(std::move(c));
    }
    return s;
}

SpectrumFamily coupled_family(std::initializer_list<int> ks) {
    SpectrumFamily fam;
    for (int k : ks) fam.push_back(labelled_model_spectrum(models::ModelSpec::coupled(), k, {-1.56, -1.38}, -1.5));
    return fam;
}

std::vector<Point2> square(double step) { return ConvexPolygon{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}}.sample(step); }

}  // namespace

TEST_CASE("spacings on the identity lattice") {
    const LabelledSpectrum s = sheared_lattice(50, 0.0, 1.0);
    const A1A2Sample a = spacings_to_a1a2(s, {3, 4});
    CHECK(a.a1 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(a.a2 == doctest::Approx(1.0));
    const A1A2Sample p = probe_a1a2(s, {0.2013, 0.3007});
    CHECK(std::abs(p.a1) < 1e-9);
    CHECK(p.a2 == doctest::Approx(1.0));
}

TEST_CASE("spacings on a sheared lattice") {
    const double alpha = 0.3, beta = 1.7;
    const LabelledSpectrum s = sheared_lattice(40, alpha, beta);
    const A1A2Sample a = spacings_to_a1a2(s, {5, 7});
    CHECK(a.ratio_a1_a2 == doctest::Approx(-alpha));
    CHECK(a.a1 == doctest::Approx(-alpha / beta));
    CHECK(a.a2 == doctest::Approx(1 / beta));
    const A1A2Sample p = probe_a1a2(s, {0.21, 0.6});
    CHECK(p.a1 == doctest::Approx(-alpha / beta));
    CHECK(p.a2 == doctest::Approx(1 / beta));
    CHECK_THROWS_AS(spacings_to_a1a2(s, {19, 0}), Error);
}

TEST_CASE("relabel shear moves labels downward by n j") {
    const LabelledSpectrum s = sheared_lattice(10, 0.0, 1.0, 4, 6);
    const LabelledSpectrum r = relabel_shear(s, 2);
    REQUIRE(r.at({3, -6}).has_value());
    CHECK(r.at({3, -6})->y == doctest::Approx(s.at({3, 0})->y));
    CHECK(r.size() == s.size());
}

TEST_CASE("richardson and convergence slope") {
    const std::vector<double> hs{0.01, 0.008, 0.005, 0.004};
    std::vector<double> vs;
    for (double h : hs) vs.push_back(2.0 + 3.0 * h);
    const LimitEstimate e = richardson(hs, vs);
    CHECK(e.value == doctest::Approx(2.0));
    CHECK(e.last == doctest::Approx(2.012));
    CHECK(e.order == doctest::Approx(1.0).epsilon(1e-6));
    const std::vector<double> errs{1e-2, 4e-3, 1e-3};
    const std::vector<double> ks{10, 25, 100};
    CHECK(convergence_slope(ks, errs) == doctest::Approx(-1.0));
}

TEST_CASE("x limit fits A + B x ln x") {
    std::vector<std::pair<double, LimitEstimate>> per_x;
    for (double x : {0.08, 0.04, 0.02, 0.01}) {
        LimitEstimate e;
        e.value = 1.25 - 0.5 * x * std::log(x);
        per_x.emplace_back(x, e);
    }
    CHECK(x_limit(per_x).value == doctest::Approx(1.25));
}

TEST_CASE("log expansion fit on a manufactured series") {
    GMuExpansion exp;
    const double c0 = 0.3, d0 = -0.7, c1 = 1.1, d1 = 0.4, c2 = -0.2, d2 = 0.9;
    for (double x : {0.08, 0.06, 0.04, 0.03, 0.02, 0.015, 0.01}) {
        const double l = std::log(x);
        exp.x_samples.emplace_back(x, c0 + d0 * l + x * (c1 + d1 * l) + x * x * (c2 + d2 * l));
    }
    const LogFit f = fit_log_expansion(exp, 0, 2);
    CHECK(f.c == doctest::Approx(c0).epsilon(1e-3));
    CHECK(f.d == doctest::Approx(d0).epsilon(1e-3));
    CHECK(f.condition > 1);

    GMuExpansion poly;
    for (double x : {0.08, 0.06, 0.04, 0.03, 0.02, 0.015, 0.01}) poly.x_samples.emplace_back(x, 0.5 - 2 * x + x * x);
    const LogFit g = fit_log_expansion(poly, 0, 2);
    CHECK(std::abs(g.d) < 1e-3);
    CHECK(g.c == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("jet system round trip") {
    const std::vector<double> truth{0.7, -0.25, 0.1};  // d_y^2, d_x d_y, d_x^2
    const std::vector<double> mus{1.0, 2.0, 3.5};
    std::vector<double> d;
    for (double mu : mus) {
        const auto row = jet_system_row(1, mu);
        d.push_back(row[0] * truth[0] + row[1] * truth[1] + row[2] * truth[2]);
    }
    const auto sol = solve_jet_order(1, mus, d);
    for (std::size_t i = 0; i < truth.size(); ++i) CHECK(sol[i] == doctest::Approx(truth[i]));
    FrJet jet;
    insert_jet_order(jet, 1, sol);
    CHECK(jet.get(0, 2) == doctest::Approx(0.7));
    CHECK(jet.get(2, 0) == doctest::Approx(0.1));

    const std::vector<double> dup{1.0, 1.0, 2.0};
    try {
        solve_jet_order(1, dup, d);
        FAIL("expected DuplicateMu");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DuplicateMu);
    }
}

TEST_CASE("first order d0 matches the gradient") {
    FrJet jet;
    jet.derivs = {{{1, 0}, -1.0 / 3.0}, {{0, 1}, 10.0 / 3.0}};
    for (double mu : {1.0, 2.0, 4.0}) {
        const auto [c, d] = g_mu_coefficients(jet, {}, mu, 0);
        CHECK(d[0] == doctest::Approx(-(-1.0 / 3.0 + mu * 10.0 / 3.0) / (2 * kPi)));
    }
}

TEST_CASE("spin-oscillator closed forms for c0 and c1") {
    FrJet jet;
    jet.derivs = {{{1, 0}, 0.0}, {{0, 1}, 2.0}, {{1, 1}, -0.25}};
    const SeriesCoeffs s{{{0, 1}, 5 * std::log(2.0) / (2 * kPi)}, {{1, 1}, 1 / (8 * kPi)}};
    for (double mu : {0.5, 1.0, 2.0}) {
        const auto [c, d] = g_mu_coefficients(jet, s, mu, 1);
        const double l4 = std::log(1 + 4 * mu * mu);
        CHECK(c[0] == doctest::Approx(-std::atan(2 * mu) / (2 * kPi) + 5 * mu * std::log(2.0) / kPi -
                                      mu / (2 * kPi) * l4));
        CHECK(d[0] == doctest::Approx(-mu / kPi));
        CHECK(c[1] == doctest::Approx(3 * mu / (8 * kPi) -
                                      0.25 * mu * (5 * std::log(2.0) / kPi - 1 / (2 * kPi) - l4 / (2 * kPi))));
        CHECK(d[1] == doctest::Approx(0.25 * mu / kPi));
        CHECK(spinosc_S11(c[1], mu, -0.25) == doctest::Approx(1 / (8 * kPi)));
    }
}

TEST_CASE("Taylor system determinant and round trip") {
    FrJet jet;
    jet.derivs = {{{1, 0}, 0.2}, {{0, 1}, 1.0}, {{2, 0}, 0.1}, {{1, 1}, -0.3}, {{0, 2}, 0.05}};
    const std::vector<double> mus{1.0, 2.0, 3.0};
    const double det = determinant(taylor_system(1, mus, jet));
    CHECK(std::abs(det) == doctest::Approx(std::abs(taylor_determinant_formula(1, mus, 1.0))).epsilon(1e-8));

    const SeriesCoeffs truth{{{0, 0}, 0.4}, {{1, 0}, 0.1}, {{0, 1}, 0.3}, {{2, 0}, 0.05}, {{1, 1}, -0.02}, {{0, 2}, 0.07}};
    std::vector<double> c1;
    for (double mu : mus) c1.push_back(g_mu_coefficients(jet, truth, mu, 1).first[1]);
    const TaylorSolve sol = solve_taylor_order(1, mus, c1, jet, truth);
    CHECK(sol.coeffs.at({2, 0}) == doctest::Approx(0.05));
    CHECK(sol.coeffs.at({1, 1}) == doctest::Approx(-0.02));
    CHECK(sol.coeffs.at({0, 2}) == doctest::Approx(0.07));
}

TEST_CASE("twisting number") {
    CHECK(twisting_number(0.1536).p == 0);
    const Twisting a = twisting_number(2.3);
    CHECK(a.p == 2);
    CHECK(a.sigma1_p == doctest::Approx(0.3));
    const Twisting b = twisting_number(-0.4);
    CHECK(b.p == -1);
    CHECK(b.sigma1_p == doctest::Approx(0.6));
    const Twisting c = twisting_number(0.98, 0.05);
    CHECK(c.p == 1);
    CHECK(c.sigma1_p == doctest::Approx(-0.02));
}

TEST_CASE("sigma1 relabelling covariance and privileged idempotence") {
    const SpectrumFamily fam = coupled_family({100, 150, 200});
    const Point2 focus{-1.5, 0.0};
    const std::vector<double> xs{0.05};
    const GradientResult g = recover_fr_gradient(fam, focus, xs, 2.0);
    const double s0 = recover_sigma1(fam, focus, g.s0, xs).limit.value;
    for (int n = -2; n <= 2; ++n) {
        SpectrumFamily shifted;
        for (const auto& s : fam) shifted.push_back(relabel_shear(s, n));
        // Discrete spacings shift by -n only up to O(hbar^2) after extrapolation.
        CHECK(std::abs(recover_sigma1(shifted, focus, g.s0, xs).limit.value - (s0 - n)) < 2e-3);
    }
    SpectrumFamily privileged;
    for (const auto& s : fam) privileged.push_back(twisting_and_privileged(s0 - 1, relabel_shear(s, 1)).second);
    const double sp = recover_sigma1(privileged, focus, g.s0, xs).limit.value;
    CHECK(sp >= 0.0);
    CHECK(sp < 1.0);
    CHECK(twisting_number(sp).p == 0);
}

TEST_CASE("strip counts on a flat lattice") {
    lattice::PointCloud cloud;
    cloud.k = 100;
    for (int j = 0; j <= 100; ++j)
        for (int l = 0; l < 200; ++l) cloud.points.push_back({0.01 * j, 0.01 * l + 0.005});
    CHECK(scaled_strip_count(cloud, 0.25, 1.0, 0.5) == doctest::Approx(2.0));
    CHECK(scaled_strip_count(cloud, 0.25, 1.0, 0.5, 1.0) == doctest::Approx(1.0));
    std::vector<double> grid;
    for (double x = 0.35; x <= 0.65; x += 0.05) grid.push_back(x);
    const DHProfile dh = dh_profile(cloud, 0.25, 1.0, grid);
    for (const auto& [x, rho] : dh.samples) CHECK(rho == doctest::Approx(2.0));
    CHECK(dh.kinks.empty());
    CHECK_THROWS_AS(scaled_strip_count(cloud, 0.25, 1.0, 5.0, 0.0), Error);
}

TEST_CASE("piecewise-linear kink fit") {
    std::vector<double> xs, ys;
    for (int i = 0; i <= 100; ++i) {
        const double x = i / 100.0;
        xs.push_back(x);
        ys.push_back(x < 0.3 ? x : x < 0.7 ? 0.3 : 0.3 - 2 * (x - 0.7));
    }
    const KinkFit f = fit_piecewise_linear(xs, ys);
    REQUIRE(f.kinks.size() == 2);
    CHECK(f.kinks[0] == doctest::Approx(0.3).epsilon(0.05));
    CHECK(f.kinks[1] == doctest::Approx(0.7).epsilon(0.05));
    CHECK(f(0.5) == doctest::Approx(0.3).epsilon(1e-2));
}

TEST_CASE("regular lattice has no focus-focus peak") {
    const LabelledSpectrum s = sheared_lattice(50, 0.2, 1.3, 20, 60);
    try {
        classify_candidate(s, 0.2);
        FAIL("expected NoPeak");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NoPeak);
    }
    const auto c = locate_focus_focus(s, std::vector<double>{0.2});
    REQUIRE(c.size() == 1);
    CHECK(!c[0].focus_focus);
}

TEST_CASE("focus-focus value of the coupled model") {
    const Location loc = locate_critical(models::ModelSpec::coupled(), 100, 0.25, 1.0);
    REQUIRE(loc.focus.has_value());
    CHECK(std::abs(loc.focus->x + 1.5) < 0.05);
    CHECK(std::abs(loc.focus->y) < 0.05);
    CHECK(loc.candidates.size() == 2);
}

TEST_CASE("Hausdorff distance of squares") {
    const auto a = square(0.02);
    std::vector<Point2> b;
    for (const Point2 p : a) b.push_back({p.x + 0.1, p.y});
    CHECK(hausdorff(a, a).distance == doctest::Approx(0.0));
    CHECK(hausdorff(a, b).distance == doctest::Approx(0.1));
    const HausdorffResult opt = hausdorff(a, b, true, 0.2);
    CHECK(opt.distance < 1e-6);
    CHECK(opt.translation.x == doctest::Approx(0.1).epsilon(1e-4));
}

TEST_CASE("convex polygon helpers") {
    const ConvexPolygon p{{{0, 0}, {2, 0}, {2, 1}, {0, 1}}};
    CHECK(p.contains({1, 0.5}));
    CHECK(!p.contains({3, 0.5}));
    CHECK(p.distance({3, 0.5}) == doctest::Approx(1.0));
    const ConvexPolygon c = p.clip_x({0.5, 1.5});
    double lo = 10, hi = -10;
    for (const Point2 v : c.vertices) {
        lo = std::min(lo, v.x);
        hi = std::max(hi, v.x);
    }
    CHECK(lo == doctest::Approx(0.5));
    CHECK(hi == doctest::Approx(1.5));
}

TEST_CASE("polygon recovery on a synthetic lattice") {
    // Lattice points of the polygon 0 <= v <= min(1 + u, 2) over 0 <= u <= 3, labelled by themselves.
    const int k = 20;
    const double h = hbar_of(k);
    lattice::PointCloud cloud;
    cloud.k = k;
    lattice::Labelling lab;
    for (int j = 0; j <= 3 * k; ++j)
        for (int l = 0; l <= std::min(k + j, 2 * k); ++l) {
            lab.assignment[cloud.points.size()] = {j, l};
            cloud.points.push_back({h * j + 0.37, h * l - 0.2});
        }
    PolygonOptions o;
    o.strip = {0.37, 3.37};
    const PolygonEstimate est = polygon_recover(cloud, lab, o);
    CHECK(est.offset == doctest::Approx(-0.37));
    bool found = false;
    for (const Point2 v : est.fitted_vertices)
        if (std::abs(v.x - 1) < 1e-9 && std::abs(v.y - 2) < 1e-9) found = true;
    CHECK(found);
    const ConvexPolygon truth{{{-1, 0}, {3, 0}, {3, 2}, {1, 2}}};
    const PolygonComparison cmp = compare_polygon(est, truth, {0, 3}, {}, h / 2);
    CHECK(cmp.hausdorff < h);
    CHECK(cmp.vertex_error < 1e-9);
}

TEST_CASE("polygon recovery needs five boundary points per edge") {
    lattice::PointCloud cloud;
    cloud.k = 10;
    lattice::Labelling lab;
    for (int j = 0; j < 3; ++j)
        for (int l = 0; l < 3; ++l) {
            lab.assignment[cloud.points.size()] = {j, l};
            cloud.points.push_back({0.1 * j, 0.1 * l});
        }
    PolygonOptions o;
    o.strip = {0, 1};
    try {
        polygon_recover(cloud, lab, o);
        FAIL("expected EdgeFitFailure");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EdgeFitFailure);
    }
}

TEST_CASE("pipeline configuration errors") {
    PipelineConfig c;
    c.k_list.clear();
    CHECK_THROWS_AS(run_invariants(c), Error);
    c.k_list = {300, 200};
    CHECK_THROWS_AS(run_invariants(c), Error);
    c.k_list = {200, 300};
    c.x_schedule = {0.01, 0.02};
    CHECK_THROWS_AS(run_invariants(c), Error);
}

TEST_CASE("reference values") {
    const ReferenceValues spin = reference_values(models::ModelSpec::spin_oscillator());
    CHECK(*spin.S01 == doctest::Approx(0.5516).epsilon(1e-4));
    CHECK(spin.rho(0.0) == doctest::Approx(1.0));
    CHECK(spin.rho(2.0) == doctest::Approx(2.0));
    const ReferenceValues cp = reference_values(models::ModelSpec::coupled());
    CHECK(*cp.S00 == doctest::Approx(1.1356).epsilon(1e-4));
    CHECK(*cp.sigma1_p == doctest::Approx(0.1536).epsilon(1e-3));
    CHECK(!reference_values(models::ModelSpec::coupled(1.0, 2.0, 0.5)).S00.has_value());
}

TEST_CASE("report and figure writers") {
    InvariantReport r;
    r.model = "spin-oscillator";
    r.focus = {1.0, 0.0};
    r.jet.derivs[{0, 1}] = 2.0;
    r.taylor.s_coeffs[{0, 0}] = 1.0;
    r.convergence_slopes["height"] = 1.0;
    std::ostringstream js;
    write_report_json(js, r);
    for (const char* key : {"\"focus_focus\"", "\"fr_jet\"", "\"sigma1_0\"", "\"twisting_p\"", "\"S\"", "\"0,0\"",
                            "\"convergence_slopes\"", "\"condition_numbers\""})
        CHECK(js.str().find(key) != std::string::npos);
    std::ostringstream csv;
    write_figure_csv(csv, {{100, 0.5, 0.25}, {200, 0.75, std::nullopt}});
    CHECK(csv.str() == "abscissa,estimate,theory\n100,0.5,0.25\n200,0.75,\n");
}
