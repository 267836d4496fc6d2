#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "semitoric/invariants.hpp"

namespace semitoric::invariants {
namespace {

struct Profile {
    double x = 0.0;
    std::vector<double> y;  // midpoints of consecutive labels
    std::vector<double> v;  // hbar / spacing
};

struct LogFitResult {
    double c = 0.0, rss = 0.0, tss = 0.0, c_stderr = 0.0;
    std::size_t used = 0;
};

// Least squares for v ~ A + C ln|u| (+ B u + D u ln|u| when full), u = y - y0, over exclude <= |u| <= window.
LogFitResult log_fit(const Profile& p, double y0, double exclude, double window, bool full = true) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < p.y.size(); ++i) {
        const double u = std::abs(p.y[i] - y0);
        if (u >= exclude && u <= window) rows.push_back(i);
    }
    LogFitResult r;
    r.used = rows.size();
    if (rows.size() < 8) {
        r.rss = std::numeric_limits<double>::infinity();
        return r;
    }
    const Eigen::Index nc = full ? 4 : 2;
    Eigen::MatrixXd a(rows.size(), nc);
    Eigen::VectorXd b(rows.size());
    for (std::size_t q = 0; q < rows.size(); ++q) {
        const double u = p.y[rows[q]] - y0;
        const double l = std::log(std::abs(u));
        const Eigen::Index row = static_cast<Eigen::Index>(q);
        a(row, 0) = 1.0;
        a(row, 1) = l;
        if (full) {
            a(row, 2) = u;
            a(row, 3) = u * l;
        }
        b(static_cast<Eigen::Index>(q)) = p.v[rows[q]];
    }
    const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
    r.c = coef(1);
    r.rss = (a * coef - b).squaredNorm();
    r.tss = (b.array() - b.mean()).square().sum();
    const double dof = std::max(1.0, static_cast<double>(rows.size() - static_cast<std::size_t>(nc)));
    const Eigen::MatrixXd cov = (a.transpose() * a).inverse() * (r.rss / dof);
    r.c_stderr = std::sqrt(std::max(0.0, cov(1, 1)));
    return r;
}

}  // namespace

FocusCandidate classify_candidate(const LabelledSpectrum& spectrum, double x_candidate, double search) {
    const double h = spectrum.hbar();
    std::optional<Profile> best;
    std::size_t best_i = 0;
    for (const Column& col : spectrum.columns) {
        if (col.points.size() < 8) continue;
        double cx = 0;
        for (const auto& [l, p] : col.points) cx += p.x;
        cx /= static_cast<double>(col.points.size());
        if (std::abs(cx - x_candidate) > search) continue;
        Profile pr;
        pr.x = cx;
        for (auto it = col.points.begin(); std::next(it) != col.points.end(); ++it) {
            const auto nx = std::next(it);
            if (nx->first != it->first + 1) continue;
            pr.y.push_back(0.5 * (it->second.y + nx->second.y));
            pr.v.push_back(h / (nx->second.y - it->second.y));
        }
        if (pr.v.size() < 8) continue;
        const std::size_t i = static_cast<std::size_t>(std::max_element(pr.v.begin(), pr.v.end()) - pr.v.begin());
        if (i < 3 || i + 4 > pr.v.size()) continue;
        if (!best || pr.v[i] > best->v[best_i]) {
            best = std::move(pr);
            best_i = i;
        }
    }
    if (!best) throw Error(ErrorKind::NoPeak, "no interior spacing peak near the candidate");

    // Points within a few hbar of the singularity are smoothed out; the fit uses the asymptotic region only.
    const Profile& p = *best;
    const double exclude = 5 * h;
    const double window = std::max(0.1 * (p.y.back() - p.y.front()), 20 * h + exclude);
    const double yc = p.y[best_i];
    double lo = yc - exclude - 3 * h, hi = yc + exclude + 3 * h;
    double y0 = yc, best_rss = std::numeric_limits<double>::infinity();
    for (int pass = 0; pass < 2; ++pass) {
        const int n = 400;
        const double step = (hi - lo) / n;
        for (int i = 0; i <= n; ++i) {
            const double y = lo + step * i;
            const double rss = log_fit(p, y, exclude, window).rss;
            if (rss < best_rss) {
                best_rss = rss;
                y0 = y;
            }
        }
        lo = y0 - step;
        hi = y0 + step;
    }
    // The location uses the full expansion; the decision uses the bare logarithm, which smooth profiles fail.
    const LogFitResult fit = log_fit(p, y0, exclude, window, false);
    if (!std::isfinite(fit.rss)) throw Error(ErrorKind::NoPeak, "spacing peak too close to the column end");
    const double r2 = fit.tss > 0 ? 1.0 - fit.rss / fit.tss : 0.0;
    if (!(fit.c < 0) || -fit.c < 10 * fit.c_stderr || r2 < 0.8)
        throw Error(ErrorKind::NoPeak, "spacing profile is not logarithmic");

    FocusCandidate out;
    out.candidate = x_candidate;
    out.focus_focus = true;
    out.value = {p.x, y0};
    out.log_coefficient = fit.c;
    out.peak = p.v[best_i];
    return out;
}

std::vector<FocusCandidate> locate_focus_focus(const LabelledSpectrum& spectrum, std::span<const double> candidates,
                                               double search) {
    std::vector<FocusCandidate> out;
    for (double x : candidates) {
        try {
            out.push_back(classify_candidate(spectrum, x, search));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NoPeak) throw;
            FocusCandidate c;
            c.candidate = x;
            c.value = {x, std::nan("")};
            out.push_back(c);
        }
    }
    return out;
}

FocusRefinement refine_focus(const SpectrumFamily& family, Point2 focus, double search) {
    if (family.empty()) throw Error(ErrorKind::EmptyWindow, "empty spectrum family");
    std::vector<double> hs, ys;
    for (const LabelledSpectrum& s : family) {
        hs.push_back(s.hbar());
        ys.push_back(classify_candidate(s, focus.x, search).value.y);
    }
    FocusRefinement out;
    out.y0 = family.size() > 1 ? richardson(hs, ys) : LimitEstimate{ys[0], ys[0], 0.0, {{hs[0], ys[0]}}};
    out.value = {focus.x, out.y0.value};
    return out;
}

}  // namespace semitoric::invariants
