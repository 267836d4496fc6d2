#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "semitoric/invariants.hpp"

namespace semitoric::invariants {
namespace {

constexpr double kPi = std::numbers::pi;

using Series = std::vector<double>;  // truncated power series in x

Series mul(const Series& a, const Series& b) {
    Series c(a.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; i + j < c.size() && j < b.size(); ++j) c[i + j] += a[i] * b[j];
    return c;
}

Series inverse(const Series& a) {
    if (a.at(0) == 0.0) throw Error(ErrorKind::NumericalFailure, "series inverse of a series vanishing at 0");
    Series b(a.size(), 0.0);
    b[0] = 1.0 / a[0];
    for (std::size_t n = 1; n < a.size(); ++n) {
        double s = 0.0;
        for (std::size_t i = 1; i <= n && i < a.size(); ++i) s += a[i] * b[n - i];
        b[n] = -s / a[0];
    }
    return b;
}

Series derivative(const Series& a) {
    Series d(a.size(), 0.0);
    for (std::size_t i = 1; i < a.size(); ++i) d[i - 1] = static_cast<double>(i) * a[i];
    return d;
}

Series integral(const Series& a, double constant) {
    Series s(a.size(), 0.0);
    s[0] = constant;
    for (std::size_t i = 1; i < a.size(); ++i) s[i] = a[i - 1] / static_cast<double>(i);
    return s;
}

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

double binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

void require_distinct(std::span<const double> mus, std::size_t need) {
    if (mus.size() < need) throw Error(ErrorKind::Config, "not enough mu values for this order");
    for (std::size_t i = 0; i < mus.size(); ++i) {
        if (!(mus[i] > 0)) throw Error(ErrorKind::Config, "mu values must be positive");
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(mus[i] - mus[j]) <= 1e-12 * std::max(mus[i], mus[j]))
                throw Error(ErrorKind::DuplicateMu, "mu values must be pairwise distinct");
    }
}

double condition_number(const Eigen::MatrixXd& a) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(s.size() - 1) == 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / s(s.size() - 1);
}

}  // namespace

double FrJet::get(int i, int j) const {
    const auto it = derivs.find({i, j});
    return it == derivs.end() ? 0.0 : it->second;
}

int FrJet::order() const {
    int o = 0;
    for (const auto& [ij, v] : derivs) o = std::max(o, ij.first + ij.second);
    return o;
}

GMuExpansion g_mu_sample(const SpectrumFamily& family, Point2 focus, double mu, std::span<const double> x_schedule) {
    if (family.empty()) throw Error(ErrorKind::EmptyWindow, "empty spectrum family");
    if (!(mu > 0)) throw Error(ErrorKind::Config, "mu must be positive");
    GMuExpansion out;
    out.mu = mu;
    for (double x : x_schedule) {
        if (!(x > 0)) throw Error(ErrorKind::Config, "probe offsets must be positive");
        std::vector<double> hs, vs;
        for (const auto& s : family) {
            const A1A2Sample a = probe_a1a2(s, focus + Point2{x, mu * x});
            hs.push_back(s.hbar());
            vs.push_back(a.a1 + mu * a.a2);
        }
        out.x_samples.emplace_back(x, richardson(hs, vs).value);
    }
    return out;
}

LogFit fit_log_expansion(const GMuExpansion& exp, int n, int nuisance, double max_condition) {
    if (n < 0) throw Error(ErrorKind::Config, "order must be nonnegative");
    if (static_cast<int>(exp.c.size()) < n || static_cast<int>(exp.d.size()) < n)
        throw Error(ErrorKind::Config, "lower-order coefficients are missing");
    const auto rows = static_cast<Eigen::Index>(exp.x_samples.size());
    int extra = std::max(0, nuisance);
    while (extra > 0 && rows < 2 * (1 + extra)) --extra;
    const Eigen::Index cols = 2 * (1 + extra);
    if (rows < cols) throw Error(ErrorKind::IllConditioned, "fewer samples than unknowns");
    Eigen::MatrixXd a(rows, cols);
    Eigen::VectorXd b(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto [x, g] = exp.x_samples[static_cast<std::size_t>(i)];
        const double lx = std::log(x);
        double r = g;
        for (int l = 0; l < n; ++l) r -= std::pow(x, l) * (exp.c[static_cast<std::size_t>(l)] + exp.d[static_cast<std::size_t>(l)] * lx);
        // Rows are scaled by x^{-n} so every order-n sample carries the same weight.
        const double w = std::pow(x, -n);
        for (int m = 0; m <= extra; ++m) {
            const double xm = std::pow(x, n + m) * w;
            a(i, 2 * m) = xm;
            a(i, 2 * m + 1) = xm * lx;
        }
        b(i) = r * w;
    }
    Eigen::VectorXd norms = a.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < cols; ++j)
        if (norms(j) > 0) a.col(j) /= norms(j);
    LogFit out;
    out.condition = condition_number(a);
    if (!(out.condition <= max_condition)) throw Error(ErrorKind::IllConditioned, "log-expansion fit is ill conditioned");
    const Eigen::VectorXd sol = a.colPivHouseholderQr().solve(b);
    out.c = sol(0) / norms(0);
    out.d = sol(1) / norms(1);
    return out;
}

std::vector<double> jet_system_row(int n, double mu) {
    std::vector<double> row(static_cast<std::size_t>(n + 2));
    const double pre = -1.0 / (2 * kPi * factorial(n));
    for (int j = 0; j <= n + 1; ++j) row[static_cast<std::size_t>(j)] = pre * binomial(n + 1, j) * std::pow(mu, n + 1 - j);
    return row;
}

std::vector<double> solve_jet_order(int n, std::span<const double> mus, std::span<const double> d_values) {
    if (n < 0) throw Error(ErrorKind::Config, "order must be nonnegative");
    if (mus.size() != d_values.size()) throw Error(ErrorKind::DimensionMismatch, "one d_n value per mu is required");
    require_distinct(mus, static_cast<std::size_t>(n + 2));
    const auto rows = static_cast<Eigen::Index>(mus.size());
    const Eigen::Index cols = n + 2;
    Eigen::MatrixXd a(rows, cols);
    Eigen::VectorXd b(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto row = jet_system_row(n, mus[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = row[static_cast<std::size_t>(j)];
        b(i) = d_values[static_cast<std::size_t>(i)];
    }
    if (!(condition_number(a) < 1e12)) throw Error(ErrorKind::IllConditioned, "jet system is singular");
    const Eigen::VectorXd sol = a.colPivHouseholderQr().solve(b);
    return {sol.data(), sol.data() + sol.size()};
}

void insert_jet_order(FrJet& jet, int n, std::span<const double> solution) {
    if (static_cast<int>(solution.size()) != n + 2) throw Error(ErrorKind::DimensionMismatch, "jet order size mismatch");
    for (int j = 0; j <= n + 1; ++j) jet.derivs[{j, n + 1 - j}] = solution[static_cast<std::size_t>(j)];
}

std::pair<std::vector<double>, std::vector<double>> g_mu_coefficients(const FrJet& jet, const SeriesCoeffs& s,
                                                                      double mu, int order) {
    if (order < 0) throw Error(ErrorKind::Config, "order must be nonnegative");
    const std::size_t len = static_cast<std::size_t>(order + 1);
    // F(x) = f_r(x, mu x) = x phi(x).
    Series phi(len, 0.0);
    for (int m = 0; m <= order; ++m) {
        const int deg = m + 1;
        double v = 0.0;
        for (int i = 0; i <= deg; ++i)
            v += jet.get(i, deg - i) / (factorial(i) * factorial(deg - i)) * std::pow(mu, deg - i);
        phi[static_cast<std::size_t>(m)] = v;
    }
    Series fprime(len, 0.0);
    for (std::size_t m = 0; m < len; ++m) fprime[m] = static_cast<double>(m + 1) * phi[m];

    // sigma_1(c) = S_X(x, mu x), sigma_2(c) = S_Y(x, mu x).
    Series sx(len, 0.0), sy(len, 0.0);
    for (const auto& [lm, v] : s) {
        const auto [l, m] = lm;
        const int deg = l + m - 1;
        if (deg < 0 || deg > order) continue;
        if (l > 0) sx[static_cast<std::size_t>(deg)] += l * v * std::pow(mu, m);
        if (m > 0) sy[static_cast<std::size_t>(deg)] += m * v * std::pow(mu, m - 1);
    }

    const Series q = inverse([&] {
        Series one_plus = mul(phi, phi);
        one_plus[0] += 1.0;
        return one_plus;
    }());
    const Series dphi = derivative(phi);
    const Series atan_phi = integral(mul(dphi, q), std::atan(phi[0]));
    Series two_phi_dphi = mul(phi, dphi);
    for (double& v : two_phi_dphi) v *= 2.0;
    const Series log_term = integral(mul(two_phi_dphi, q), std::log1p(phi[0] * phi[0]));

    const Series fs = mul(fprime, sy);
    const Series fl = mul(fprime, log_term);
    std::vector<double> c(len), d(len);
    for (std::size_t i = 0; i < len; ++i) {
        c[i] = sx[i] + fs[i] - atan_phi[i] / (2 * kPi) - fl[i] / (4 * kPi);
        d[i] = -fprime[i] / (2 * kPi);
    }
    return {c, d};
}

std::vector<std::vector<double>> taylor_system(int n, std::span<const double> mus, const FrJet& jet) {
    std::vector<std::vector<double>> a;
    for (double mu : mus) {
        std::vector<double> row;
        for (int m = 0; m <= n + 1; ++m) {
            const SeriesCoeffs unit{{{n + 1 - m, m}, 1.0}};
            row.push_back(g_mu_coefficients(jet, unit, mu, n).first[static_cast<std::size_t>(n)] -
                          g_mu_coefficients(jet, {}, mu, n).first[static_cast<std::size_t>(n)]);
        }
        a.push_back(std::move(row));
    }
    return a;
}

double taylor_determinant_formula(int n, std::span<const double> mus, double dy_fr) {
    double v = std::pow(n + 1.0, n + 2) * std::pow(dy_fr, n + 2);
    for (std::size_t i = 0; i < mus.size(); ++i)
        for (std::size_t j = i + 1; j < mus.size(); ++j) v *= mus[j] - mus[i];
    return v;
}

TaylorSolve solve_taylor_order(int n, std::span<const double> mus, std::span<const double> c_values,
                               const FrJet& jet, const SeriesCoeffs& known, double max_condition) {
    if (n < 0) throw Error(ErrorKind::Config, "order must be nonnegative");
    if (mus.size() != c_values.size()) throw Error(ErrorKind::DimensionMismatch, "one c_n value per mu is required");
    require_distinct(mus, static_cast<std::size_t>(n + 2));
    if (!(jet.get(0, 1) > 0)) throw Error(ErrorKind::SignError, "d_y f_r(0) must be positive");
    SeriesCoeffs lower;
    for (const auto& [lm, v] : known)
        if (lm.first + lm.second <= n) lower.emplace(lm, v);

    const auto a = taylor_system(n, mus, jet);
    const auto rows = static_cast<Eigen::Index>(mus.size());
    const Eigen::Index cols = n + 2;
    Eigen::MatrixXd m(rows, cols);
    Eigen::VectorXd b(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        const double mu = mus[static_cast<std::size_t>(i)];
        b(i) = c_values[static_cast<std::size_t>(i)] - g_mu_coefficients(jet, lower, mu, n).first[static_cast<std::size_t>(n)];
    }
    TaylorSolve out;
    out.condition = condition_number(m);
    if (!(out.condition <= max_condition)) throw Error(ErrorKind::IllConditioned, "Taylor system is ill conditioned");
    const Eigen::VectorXd sol = m.colPivHouseholderQr().solve(b);
    for (int j = 0; j <= n + 1; ++j) out.coeffs[{n + 1 - j, j}] = sol(j);
    return out;
}

SpinDxDy spinosc_dxdy(const SpectrumFamily& family, Point2 focus, double mu, double x, const FrJet& jet,
                      const SeriesCoeffs& known) {
    if (!(x > 0 && x < 1)) throw Error(ErrorKind::Config, "probe offset must lie in (0, 1)");
    std::vector<double> hs, vs;
    for (const auto& s : family) {
        const A1A2Sample a = probe_a1a2(s, focus + Point2{x, mu * x});
        hs.push_back(s.hbar());
        vs.push_back(a.a1 + mu * a.a2);
    }
    SpinDxDy out;
    out.g_limit = richardson(hs, vs);
    out.g = out.g_limit.value;
    FrJet first;
    for (const auto& [ij, v] : jet.derivs)
        if (ij.first + ij.second == 1) first.derivs.emplace(ij, v);
    const auto [c, d] = g_mu_coefficients(first, known, mu, 0);
    out.c0 = c[0];
    out.d0 = d[0];
    const double lx = std::log(x);
    out.dxdy = -kPi * (out.g - out.c0 - out.d0 * lx) / (mu * x * lx);
    return out;
}

double spinosc_S11(double c1, double mu, double dxdy) {
    const double bracket = 5 * std::log(2.0) / kPi - 1 / (2 * kPi) - std::log1p(4 * mu * mu) / (2 * kPi);
    return (c1 / mu - dxdy * bracket) / 3.0;
}

double spinosc_c1(double g, double x, double c0, double d0, double d1) {
    const double lx = std::log(x);
    return (g - c0 - d0 * lx - d1 * x * lx) / x;
}

}  // namespace semitoric::invariants
