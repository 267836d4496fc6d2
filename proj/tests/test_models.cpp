#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "semitoric/models.hpp"

using namespace semitoric;
using namespace semitoric::models;

namespace {

// Independent oracle: sign changes of the characteristic polynomial sequence
// p_0 = 1, p_1 = d_0 - x, p_i = (d_{i-1} - x) p_{i-1} - e_{i-2}^2 p_{i-2}.
int charpoly_sign_agreements(const std::vector<double>& d, const std::vector<double>& e, double x) {
    double pm2 = 1.0, pm1 = d[0] - x;
    int changes = (pm1 < 0) ? 1 : 0;
    for (std::size_t i = 1; i < d.size(); ++i) {
        double p = (d[i] - x) * pm1 - e[i - 1] * e[i - 1] * pm2;
        const double s = std::max({std::abs(p), std::abs(pm1), 1e-300});
        if ((p < 0) != (pm1 < 0) && p != 0) ++changes;
        pm2 = pm1 / s;
        pm1 = p / s;
    }
    return changes;
}

std::vector<double> charpoly_oracle(const std::vector<double>& d, const std::vector<double>& e) {
    std::vector<double> out;
    for (std::size_t idx = 0; idx < d.size(); ++idx) {
        double a = -100, b = 100;
        for (int it = 0; it < 200; ++it) {
            const double m = 0.5 * (a + b);
            if (charpoly_sign_agreements(d, e, m) > static_cast<int>(idx))
                b = m;
            else
                a = m;
        }
        out.push_back(0.5 * (a + b));
    }
    return out;
}

double max_discrepancy(const JointSpectrum& a, const JointSpectrum& b) {
    REQUIRE(a.points.size() == b.points.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i].block_id == b.points[i].block_id);
        CHECK(a.points[i].index_in_block == b.points[i].index_in_block);
        worst = std::max({worst, std::abs(a.points[i].x - b.points[i].x), std::abs(a.points[i].y - b.points[i].y)});
    }
    return worst;
}

}  // namespace

TEST_CASE("tridiagonal eigensolver on closed-form cases") {
    for (EigMethod m : {EigMethod::QL, EigMethod::Bisection}) {
        const std::vector<double> one{3.25};
        CHECK(eigs_sym_tridiagonal(one, {}, m) == std::vector<double>{3.25});
        const std::vector<double> d{0, 0}, e{1};
        const auto ev = eigs_sym_tridiagonal(d, e, m);
        CHECK(ev[0] == doctest::Approx(-1).epsilon(1e-14));
        CHECK(ev[1] == doctest::Approx(1).epsilon(1e-14));
        CHECK(eigs_sym_tridiagonal(std::vector<double>{}, std::vector<double>{}, m).empty());
    }
}

TEST_CASE("tridiagonal eigensolver rejects malformed input") {
    const std::vector<double> d{1, 2, 3}, e{1};
    CHECK_THROWS_AS(eigs_sym_tridiagonal(d, e), Error);
}

TEST_CASE("tridiagonal eigensolver matches characteristic polynomial oracle") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> d(6), e(5);
        for (auto& v : d) v = u(rng);
        for (auto& v : e) v = u(rng);
        const auto oracle = charpoly_oracle(d, e);
        for (EigMethod m : {EigMethod::QL, EigMethod::Bisection}) {
            const auto ev = eigs_sym_tridiagonal(d, e, m);
            for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(ev[i] - oracle[i]) < 1e-10);
        }
    }
}

TEST_CASE("QL and bisection agree on large blocks") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    std::vector<double> d(300), e(299);
    for (auto& v : d) v = g(rng);
    for (auto& v : e) v = g(rng);
    const auto a = eigs_sym_tridiagonal(d, e, EigMethod::QL);
    const auto b = eigs_sym_tridiagonal(d, e, EigMethod::Bisection);
    const double radius = std::max(std::abs(a.front()), std::abs(a.back()));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12 * radius);
}

TEST_CASE("spin-oscillator smallest block") {
    const auto blocks = build_blocks(ModelSpec::spin_oscillator(), 1, {0.9, 1.1});
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0].j_value == doctest::Approx(1.0));
    REQUIRE(blocks[0].size() == 2);
    CHECK(blocks[0].diag[0] == 0.0);
    CHECK(blocks[0].offdiag[0] == doctest::Approx(1.0 / (2.0 * std::sqrt(2.0))));
}

TEST_CASE("coupled model without coupling is diagonal") {
    for (const auto& b : build_blocks(ModelSpec::coupled(1.0, 2.5, 0.0), 2, {}))
        for (double v : b.offdiag) CHECK(v == 0.0);
}

TEST_CASE("coupled model block decomposition is exhaustive") {
    const auto blocks = build_blocks(ModelSpec::coupled(), 10, {});
    std::size_t total = 0;
    int prev = -1;
    for (const auto& b : blocks) {
        total += b.size();
        CHECK(b.block_id == prev + 1);
        prev = b.block_id;
    }
    CHECK(total == 1000);
}

TEST_CASE("dimension and window errors") {
    try {
        build_blocks(ModelSpec::coupled(0.3, 2.5, 0.5), 1, {});
        FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DimensionMismatch);
    }
    try {
        build_blocks(ModelSpec::coupled(), 4, {10.0, 11.0});
        FAIL("expected EmptyWindow");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyWindow);
    }
    CHECK_THROWS_AS(build_blocks(ModelSpec::coupled(2.5, 1.0, 0.5), 2, {}), Error);
    CHECK_THROWS_AS(build_blocks(ModelSpec::spin_oscillator(), 2, {0.0, INFINITY}), Error);
}

TEST_CASE("joint spectrum equals the dense oracle") {
    for (int k : {1, 2, 3}) {
        const auto oracle = dense_oracle(ModelSpec::coupled(), k);
        CHECK(oracle.commutator_norm <= 1e-10);
        const auto js = joint_spectrum(ModelSpec::coupled(), k, Rect::everything());
        CHECK(max_discrepancy(js, oracle.spectrum) <= 1e-9);
    }
    for (int k : {1, 2, 3}) {
        const int n_max = 60;
        const auto oracle = dense_oracle(ModelSpec::spin_oscillator(), k, n_max);
        CHECK(oracle.commutator_norm <= 1e-10);
        const double j_hi = block_j_value(ModelSpec::spin_oscillator(), k, n_max - (2 * k - 1));
        const auto js = joint_spectrum(ModelSpec::spin_oscillator(), k, Rect{{-INFINITY, j_hi + 1e-9}, {}});
        CHECK(max_discrepancy(js, oracle.spectrum) <= 1e-9);
    }
}

TEST_CASE("dense oracle on the uncoupled model has constant rows") {
    const auto s = dense_oracle_spectrum(ModelSpec::coupled(1.0, 2.5, 0.0), 2);
    CHECK(s.points.size() == 4u * 10u);
    for (const auto& p : s.points) {
        const double z1 = (p.y) / (1.0 + 1.0 / 4.0);
        const double l1 = (4.0 - 1.0 - 4.0 * z1) / 2.0;
        CHECK(std::abs(l1 - std::round(l1)) < 1e-12);
    }
}

TEST_CASE("dense oracle commutator check on the truncated Bargmann factor") {
    CHECK(dense_oracle(ModelSpec::spin_oscillator(), 2, 40).commutator_norm <= 1e-10);
}

TEST_CASE("block spectra are simple and order independent") {
    SpectrumOptions fwd, rev;
    rev.reverse_block_order = true;
    rev.threads = 3;
    const auto a = joint_spectrum(ModelSpec::coupled(), 6, Rect::everything(), fwd);
    const auto b = joint_spectrum(ModelSpec::coupled(), 6, Rect::everything(), rev);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(std::abs(a.points[i].y - b.points[i].y) <= 1e-12);
        if (i > 0 && a.points[i].block_id == a.points[i - 1].block_id) CHECK(a.points[i].y > a.points[i - 1].y);
    }
}

TEST_CASE("coupled spectrum lies in the momentum map image") {
    const auto s = joint_spectrum(ModelSpec::coupled(), 10, Rect::everything());
    CHECK(s.points.size() == 1000);
    for (const auto& p : s.points) {
        CHECK(std::abs(p.x) <= 3.5);
        CHECK(std::abs(p.y) <= 1.0 + 2.0 / 10);
    }
}

TEST_CASE("spin-oscillator spectrum is filtered to the window") {
    const Rect w{{-1, 2}, {-1.2, 1.2}};
    const auto s = joint_spectrum(ModelSpec::spin_oscillator(), 15, w);
    CHECK(!s.points.empty());
    for (const auto& p : s.points) CHECK(w.contains({p.x, p.y}));
    // Lowest J is -1 + 1/k at the elliptic-elliptic corner.
    CHECK(s.points.front().x == doctest::Approx(-1.0 + 1.0 / 15));
}

TEST_CASE("spectrum export formats") {
    JointSpectrum s;
    s.k = 3;
    s.points = {{0.1, -1.0 / 3.0, 2, 0}};
    std::ostringstream csv, json;
    write_spectrum_csv(csv, s);
    CHECK(csv.str() == "k,x,y,block,idx\n3,0.10000000000000001,-0.33333333333333331,2,0\n");
    write_spectrum_json(json, s);
    CHECK(json.str() == "{\"k\":3,\"points\":[{\"x\":0.10000000000000001,\"y\":-0.33333333333333331,\"block\":2,\"idx\":0}]}\n");
}
