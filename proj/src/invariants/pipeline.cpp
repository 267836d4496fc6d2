#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "json.hpp"
#include "semitoric/invariants.hpp"

namespace semitoric::invariants {
namespace {

constexpr double kPi = std::numbers::pi;

bool near(double a, double b) { return std::abs(a - b) < 1e-12; }

bool is_default_coupled(const models::ModelSpec& m) {
    return m.kind == models::ModelKind::CoupledAngularMomenta && near(m.r1, 1.0) && near(m.r2, 2.5) &&
           near(m.t, 0.5);
}

void validate(const PipelineConfig& c) {
    if (c.k_list.empty()) throw Error(ErrorKind::Config, "k list is empty");
    if (!std::is_sorted(c.k_list.begin(), c.k_list.end()) ||
        std::adjacent_find(c.k_list.begin(), c.k_list.end()) != c.k_list.end())
        throw Error(ErrorKind::Config, "k list must be strictly ascending");
    if (c.k_list.front() < 1 || c.k_locate < 1) throw Error(ErrorKind::Config, "k must be positive");
    if (c.x_schedule.empty()) throw Error(ErrorKind::Config, "x schedule is empty");
    for (std::size_t i = 0; i < c.x_schedule.size(); ++i)
        if (!(c.x_schedule[i] > 0) || (i > 0 && !(c.x_schedule[i] < c.x_schedule[i - 1])))
            throw Error(ErrorKind::Config, "x schedule must be strictly decreasing and positive");
    if (c.mu_list.empty()) throw Error(ErrorKind::Config, "mu list is empty");
}

std::vector<FigureRow> per_k_rows(const LimitEstimate& e, std::optional<double> theory) {
    std::vector<FigureRow> rows;
    for (const auto& [h, v] : e.samples) rows.push_back({std::round(1.0 / h), v, theory});
    return rows;
}

const LimitEstimate& finest(const DoubleLimit& d) { return d.per_x.back().second; }

double interpolate(const std::vector<std::pair<double, double>>& samples, double x) {
    if (samples.empty()) return std::nan("");
    if (x <= samples.front().first) return samples.front().second;
    for (std::size_t i = 1; i < samples.size(); ++i)
        if (x <= samples[i].first) {
            const auto [x0, y0] = samples[i - 1];
            const auto [x1, y1] = samples[i];
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        }
    return samples.back().second;
}

lattice::PointCloud strip_cloud(const models::ModelSpec& model, int k, Interval xs,
                                const models::SpectrumOptions& options) {
    return to_cloud(models::joint_spectrum(model, k, Rect{xs, {}}, options));
}

// Lowest and highest y on the polygon's vertical section at x.
Interval section(const ConvexPolygon& poly, double x) {
    const ConvexPolygon cut = poly.clip_x({x, x});
    Interval out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const Point2 v : cut.vertices) {
        out.lo = std::min(out.lo, v.y);
        out.hi = std::max(out.hi, v.y);
    }
    return out;
}

// End of the column nearest x whose boundary curve bends the most there.
Point2 boundary_corner(const LabelledSpectrum& spectrum, double x) {
    auto nearest = [&](double at) -> const Column* {
        const Column* best = nullptr;
        double d = std::numeric_limits<double>::infinity();
        for (const Column& col : spectrum.columns) {
            if (col.points.empty()) continue;
            const double e = std::abs(col.points.begin()->second.x - at);
            if (e < d) {
                d = e;
                best = &col;
            }
        }
        if (!best) throw Error(ErrorKind::EmptyWindow, "no columns near the corner");
        return best;
    };
    auto lower = [&](double at) { return nearest(at)->points.begin()->second; };
    auto upper = [&](double at) { return nearest(at)->points.rbegin()->second; };
    auto bend = [&](auto end) {
        const Point2 a = end(x - 0.3), b = end(x - 0.1), c = end(x + 0.1), d = end(x + 0.3);
        auto slope = [](Point2 p, Point2 q) { return q.x != p.x ? (q.y - p.y) / (q.x - p.x) : 0.0; };
        return std::abs(slope(c, d) - slope(a, b));
    };
    return bend(lower) >= bend(upper) ? lower(x) : upper(x);
}

nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

const char* to_string(LowerOrderSource source) {
    return source == LowerOrderSource::Reference ? "reference" : "recovered";
}

ReferenceValues reference_values(const models::ModelSpec& model) {
    ReferenceValues r;
    if (model.kind == models::ModelKind::SpinOscillator) {
        r.focus = Point2{1.0, 0.0};
        r.dx = 0.0;
        r.dy = 2.0;
        r.sigma1_p = 0.0;
        r.S01 = 5 * std::log(2.0) / (2 * kPi);
        r.S00 = 1.0;
        r.dxdy = -0.25;
        r.S11 = 1 / (8 * kPi);
        r.rho = [](double x) { return x < -1 ? 0.0 : std::min(x, 1.0) + 1.0; };
        r.polygon = ConvexPolygon{{{-1, -1}, {3, -1}, {3, 1}, {1, 1}}};
    } else if (is_default_coupled(model)) {
        r.focus = Point2{-1.5, 0.0};
        r.dx = -1.0 / 3.0;
        r.dy = 10.0 / 3.0;
        r.sigma1_p = std::atan(13.0 / 9.0) / (2 * kPi);
        r.S01 = (3.5 * std::log(2.0) + 3 * std::log(3.0) - 1.5 * std::log(5.0)) / (2 * kPi);
        r.S00 = 2 + (3 - 5 * std::atan(0.75) - 2 * std::atan(3.0)) / kPi;
        r.rho = [](double x) {
            if (x < -3.5 || x > 3.5) return 0.0;
            if (x < -1.5) return x + 3.5;
            if (x < 1.5) return 2.0;
            return 3.5 - x;
        };
        r.polygon = ConvexPolygon{{{-3.5, -1}, {1.5, -1}, {3.5, 1}, {-1.5, 1}}};
    }
    return r;
}

Interval model_window(const models::ModelSpec& model) {
    if (model.kind == models::ModelKind::SpinOscillator) return {-1.0, 2.5};
    return {-(model.r1 + model.r2), model.r1 + model.r2};
}

Location locate_critical(const models::ModelSpec& model, int k, double dh_delta, double c_width,
                         const models::SpectrumOptions& options) {
    const Interval win = model_window(model);
    const models::JointSpectrum sp = models::joint_spectrum(model, k, Rect{win, {}}, options);
    if (sp.points.empty()) throw Error(ErrorKind::EmptyWindow, "no joint eigenvalues in the model window");
    const lattice::PointCloud cloud = to_cloud(sp);
    Location out;
    const double w = c_width * std::pow(hbar_of(k), dh_delta);
    std::vector<double> grid;
    for (int i = 0;; ++i) {
        const double x = win.lo + 2 * w + 0.05 * i;
        if (x > win.hi - 2 * w + 1e-9) break;
        grid.push_back(x);
    }
    out.dh = dh_profile(cloud, dh_delta, c_width, grid);
    out.spectrum = from_labelling(cloud, lattice::label_semitoric_columns(cloud, cloud.points.front().x));
    out.candidates = locate_focus_focus(out.spectrum, out.dh.kinks);
    for (const FocusCandidate& c : out.candidates)
        if (c.focus_focus) {
            out.focus = c.value;
            break;
        }
    return out;
}

InvariantReport run_invariants(const PipelineConfig& config) {
    validate(config);
    models::SpectrumOptions opts;
    opts.threads = static_cast<unsigned>(std::max(0, config.threads));
    const ReferenceValues ref = reference_values(config.model);
    const std::span<const double> xs(config.x_schedule);
    const double mu = config.mu_list.front();

    InvariantReport rep;
    rep.model = config.model.name();
    rep.second_order_inputs = to_string(config.second_order_inputs);

    const Location loc = locate_critical(config.model, config.k_locate, config.dh_delta, config.c_width, opts);
    rep.candidates = loc.candidates;
    if (!loc.focus) throw Error(ErrorKind::NoPeak, "no focus-focus value among the DH kinks");
    const Point2 f_located = *loc.focus;

    const std::vector<double> check_xs{0.08, 0.06, 0.04, 0.03, 0.02, 0.015, 0.01};
    const double x_reach = std::max(config.x_schedule.front(), check_xs.front());
    const Interval family_window{f_located.x - 0.06, f_located.x + x_reach + 0.07};
    SpectrumFamily family;
    for (int k : config.k_list) family.push_back(labelled_model_spectrum(config.model, k, family_window, f_located.x, opts));
    const FocusRefinement refined = refine_focus(family, *loc.focus);
    rep.focus_y0 = refined.y0;
    rep.focus = refined.value;
    rep.checks["focus_y_at_k_locate"] = loc.focus->y;
    const Point2 f = refined.value;

    // First order
    const GradientResult grad = recover_fr_gradient(family, f, xs, mu);
    rep.jet.derivs[{1, 0}] = grad.dx;
    rep.jet.derivs[{0, 1}] = grad.dy;
    for (std::size_t i = 1; i < config.mu_list.size(); ++i) {
        const GradientResult g = recover_fr_gradient(family, f, xs, config.mu_list[i]);
        rep.checks["dxfr_spread_over_mu"] = std::max(rep.checks["dxfr_spread_over_mu"], std::abs(g.dx - grad.dx));
        rep.checks["dyfr_spread_over_mu"] = std::max(rep.checks["dyfr_spread_over_mu"], std::abs(g.dy - grad.dy));
    }
    const Sigma1Result sig = recover_sigma1(family, f, grad.s0, xs);
    const Twisting tw = twisting_number(sig.limit.value, config.twist_snap);
    rep.sigma1_p = tw.sigma1_p;
    const DoubleLimit s01 = recover_S01(family, f, grad.s0, grad.dy, xs);

    std::vector<lattice::PointCloud> clouds;
    const double h_max = hbar_of(config.k_list.front());
    const double w_max = config.c_width * std::pow(h_max, config.delta) + h_max;
    for (int k : config.k_list) clouds.push_back(strip_cloud(config.model, k, {f.x - w_max, f.x + w_max}, opts));
    const LimitEstimate s00 = height_invariant(clouds, config.delta, config.c_width, f, Side::Below);
    const LimitEstimate s00_above = height_invariant(clouds, config.delta, config.c_width, f, Side::Above);
    rep.checks["height_below_plus_above_over_rho"] =
        (s00.value + s00_above.value) / interpolate(loc.dh.samples, f.x);
    rep.checks["sigma1_corrected_jumps"] = sig.corrected_jumps;
    rep.checks["gradient_error_budget"] = grad.error_budget;

    rep.taylor.sigma1_0 = sig.limit.value;
    rep.taylor.twisting_p = tw.p;
    rep.taylor.s_coeffs[{0, 0}] = s00.value;
    rep.taylor.s_coeffs[{1, 0}] = tw.sigma1_p;
    rep.taylor.s_coeffs[{0, 1}] = s01.value;
    rep.taylor.sigma2_0 = s01.value;

    rep.convergence_slopes["focus_y0"] = refined.y0.order;
    rep.convergence_slopes["height"] = s00.order;
    rep.convergence_slopes["dxfr"] = finest(grad.dx_limit).order;
    rep.convergence_slopes["dyfr"] = finest(grad.dy_limit).order;
    rep.convergence_slopes["sigma1"] = finest(sig.limit).order;
    rep.convergence_slopes["S01"] = finest(s01).order;

    rep.figures["height"] = per_k_rows(s00, ref.S00);
    rep.figures["dxfr"] = per_k_rows(finest(grad.dx_limit), ref.dx);
    rep.figures["dyfr"] = per_k_rows(finest(grad.dy_limit), ref.dy);
    rep.figures["sigma1"] = per_k_rows(
        finest(sig.limit), ref.sigma1_p ? std::optional<double>(*ref.sigma1_p + tw.p) : std::nullopt);
    rep.figures["S01"] = per_k_rows(finest(s01), ref.S01);
    for (const auto& [x, rho] : loc.dh.samples)
        rep.figures["DH"].push_back({x, rho, ref.rho ? std::optional<double>(ref.rho(x)) : std::nullopt});
    {
        const Column* best = nullptr;
        double best_dist = std::numeric_limits<double>::infinity();
        for (const Column& col : loc.spectrum.columns) {
            if (col.points.empty()) continue;
            const double d = std::abs(col.points.begin()->second.x - f.x);
            if (d < best_dist) {
                best_dist = d;
                best = &col;
            }
        }
        const double h = loc.spectrum.hbar();
        if (best && !best->points.empty())
            for (auto it = best->points.begin(); std::next(it) != best->points.end(); ++it) {
                const auto nx = std::next(it);
                rep.figures["spacing-peak"].push_back(
                    {0.5 * (it->second.y + nx->second.y), h / (nx->second.y - it->second.y), std::nullopt});
            }
    }

    // d_0(mu) from a log fit against its value implied by the recovered gradient.
    for (double m : {1.0, 2.0, 4.0}) {
        const GMuExpansion e = g_mu_sample(family, f, m, check_xs);
        const LogFit fit = fit_log_expansion(e, 0, 1);
        const double expected = -(grad.dx + m * grad.dy) / (2 * kPi);
        const std::string tag = "d0_mu=" + models::format_double(m);
        rep.checks[tag + "_rel_error"] = std::abs(fit.d - expected) / std::abs(expected);
        rep.checks[tag + "_abs_error"] = std::abs(fit.d - expected);
        // The fitted and the gradient-implied values each carry (1 + mu) gradient budgets over 2 pi.
        rep.checks[tag + "_budget"] = 2 * (1 + m) * grad.error_budget / (2 * kPi);
        rep.condition_numbers[tag] = fit.condition;
    }

    // Second order, spin-oscillator only.
    if (config.model.kind == models::ModelKind::SpinOscillator && !config.dxdy_mu.empty()) {
        FrJet first;
        SeriesCoeffs known;
        if (config.second_order_inputs == LowerOrderSource::Reference) {
            first.derivs = {{{1, 0}, *ref.dx}, {{0, 1}, *ref.dy}};
            known = {{{1, 0}, *ref.sigma1_p}, {{0, 1}, *ref.S01}};
        } else {
            first.derivs = {{{1, 0}, grad.dx}, {{0, 1}, grad.dy}};
            known = {{{1, 0}, tw.sigma1_p}, {{0, 1}, s01.value}};
        }
        const double x = config.x_schedule.back();
        const double lx = std::log(x);
        std::optional<double> kappa, s11;
        for (double m : config.dxdy_mu) {
            const SpinDxDy dd = spinosc_dxdy(family, f, m, x, first, known);
            if (!kappa) {
                kappa = dd.dxdy;
                rep.convergence_slopes["dxdyfr"] = dd.g_limit.order;
                const double k_in =
                    config.second_order_inputs == LowerOrderSource::Reference ? *ref.dxdy : dd.dxdy;
                auto s11_of = [&](double g) {
                    const double c1 = spinosc_c1(g, x, dd.c0, dd.d0, -m * k_in / kPi);
                    return spinosc_S11(c1, m, k_in);
                };
                s11 = s11_of(dd.g);
                for (const auto& [h, g] : dd.g_limit.samples) {
                    const double k = std::round(1.0 / h);
                    rep.figures["dxdyfr"].push_back({k, -kPi * (g - dd.c0 - dd.d0 * lx) / (m * x * lx), ref.dxdy});
                    rep.figures["S11"].push_back({k, s11_of(g), ref.S11});
                }
            } else {
                rep.checks["dxdyfr_spread_over_mu"] =
                    std::max(rep.checks["dxdyfr_spread_over_mu"], std::abs(dd.dxdy - *kappa));
            }
        }
        rep.jet.derivs[{1, 1}] = *kappa;
        rep.taylor.s_coeffs[{1, 1}] = *s11;
    }
    return rep;
}

void write_report_json(std::ostream& out, const InvariantReport& r) {
    nlohmann::json doc;
    doc["model"] = r.model;
    doc["focus_focus"] = {number(r.focus.x), number(r.focus.y)};
    nlohmann::json jet = nlohmann::json::object();
    for (const auto& [ij, v] : r.jet.derivs) jet[std::to_string(ij.first) + "," + std::to_string(ij.second)] = number(v);
    doc["fr_jet"] = jet;
    doc["sigma1_0"] = number(r.taylor.sigma1_0);
    doc["twisting_p"] = r.taylor.twisting_p;
    nlohmann::json s = nlohmann::json::object();
    for (const auto& [lm, v] : r.taylor.s_coeffs) s[std::to_string(lm.first) + "," + std::to_string(lm.second)] = number(v);
    doc["S"] = s;
    nlohmann::json cands = nlohmann::json::array();
    for (const FocusCandidate& c : r.candidates)
        cands.push_back({{"candidate", number(c.candidate)},
                         {"focus_focus", c.focus_focus},
                         {"value", {number(c.value.x), number(c.value.y)}},
                         {"log_coefficient", number(c.log_coefficient)}});
    nlohmann::json slopes = nlohmann::json::object(), conds = nlohmann::json::object(),
                   checks = nlohmann::json::object();
    for (const auto& [k, v] : r.convergence_slopes) slopes[k] = number(v);
    for (const auto& [k, v] : r.condition_numbers) conds[k] = number(v);
    for (const auto& [k, v] : r.checks) checks[k] = number(v);
    doc["diagnostics"] = {{"convergence_slopes", slopes},
                          {"condition_numbers", conds},
                          {"checks", checks},
                          {"candidates", cands},
                          {"second_order_inputs", r.second_order_inputs}};
    out << doc.dump(1) << '\n';
}

void write_figure_csv(std::ostream& out, const std::vector<FigureRow>& rows) {
    out << "abscissa,estimate,theory\n";
    for (const FigureRow& r : rows)
        out << models::format_double(r.abscissa) << ',' << models::format_double(r.estimate) << ','
            << (r.theory ? models::format_double(*r.theory) : std::string()) << '\n';
}

PolygonRun run_polygon(const PolygonConfig& config) {
    if (config.k < 1) throw Error(ErrorKind::Config, "k must be positive");
    if (!(config.strip.lo < config.strip.hi)) throw Error(ErrorKind::Config, "empty strip");
    models::SpectrumOptions opts;
    opts.threads = static_cast<unsigned>(std::max(0, config.threads));
    const double h = hbar_of(config.k);
    const double eps = config.epsilon > 0 ? config.epsilon : std::sqrt(h);
    const Location loc = locate_critical(config.model, config.k_locate, config.dh_delta, 1.0, opts);

    PolygonRun run;
    run.cloud = strip_cloud(config.model, config.k, config.strip, opts);
    if (run.cloud.points.empty()) throw Error(ErrorKind::EmptyWindow, "no joint eigenvalues in the strip");
    lattice::Region region;
    region.base = Rect{config.strip, {}};
    run.options.strip = config.strip;
    run.options.epsilon = eps;
    std::vector<Interval> blocked;
    for (const FocusCandidate& c : loc.candidates) {
        if (c.candidate < config.strip.lo - eps || c.candidate > config.strip.hi + eps) continue;
        if (c.focus_focus) {
            run.options.cuts.push_back(c.value.x);
            run.options.holes.push_back({c.value, eps});
            region.holes.push_back(lattice::Ball{c.value, eps});
            region.holes.push_back(Rect{{c.value.x - eps, c.value.x + eps}, {c.value.y, std::numeric_limits<double>::infinity()}});
        } else {
            const Point2 corner = boundary_corner(loc.spectrum, c.candidate);
            run.options.holes.push_back({corner, eps});
            region.holes.push_back(lattice::Ball{corner, eps});
        }
        blocked.push_back({c.candidate - eps - 2 * h, c.candidate + eps + 2 * h});
    }
    run.cloud.region = region;

    // Seed at the bottom of the column in the middle of the widest unobstructed stretch.
    std::sort(blocked.begin(), blocked.end(), [](Interval a, Interval b) { return a.lo < b.lo; });
    double start = config.strip.lo, best_len = -1, seed_x = 0.5 * (config.strip.lo + config.strip.hi);
    blocked.push_back({config.strip.hi, config.strip.hi});
    for (const Interval b : blocked) {
        if (b.lo - start > best_len) {
            best_len = b.lo - start;
            seed_x = 0.5 * (start + b.lo);
        }
        start = std::max(start, b.hi);
    }
    Point2 seed{seed_x, std::numeric_limits<double>::infinity()};
    double seed_dist = std::numeric_limits<double>::infinity();
    for (const Point2 p : run.cloud.points) seed_dist = std::min(seed_dist, std::abs(p.x - seed_x));
    for (const Point2 p : run.cloud.points)
        if (std::abs(std::abs(p.x - seed_x) - seed_dist) <= 0.25 * h && p.y < seed.y) seed = p;

    run.labelling = lattice::label_half_lattice(run.cloud, seed, region).labelling;
    run.estimate = polygon_recover(run.cloud, run.labelling, run.options);

    const ReferenceValues ref = reference_values(config.model);
    if (ref.polygon && ref.S00) {
        std::vector<lattice::Shape> holes;
        for (double x0 : run.options.cuts) {
            const Interval sec = section(*ref.polygon, x0);
            holes.push_back(Rect{{x0 - eps - h, x0 + eps + h}, {sec.lo + *ref.S00 - 2 * eps, std::numeric_limits<double>::infinity()}});
        }
        for (const Point2 v : ref.polygon->vertices) {
            if (!(v.x > config.strip.lo && v.x < config.strip.hi)) continue;
            const bool on_cut = std::any_of(run.options.cuts.begin(), run.options.cuts.end(),
                                            [&](double x0) { return std::abs(v.x - x0) <= eps; });
            if (!on_cut) holes.push_back(lattice::Ball{v, 2 * eps});
        }
        run.comparison = compare_polygon(run.estimate, *ref.polygon, config.strip, holes, h / 2);
    }
    return run;
}

void write_polygon_csv(std::ostream& out, const PolygonRun& run) {
    out << "kind,u,v\n";
    for (const Point2 p : run.estimate.cloud)
        out << "cloud," << models::format_double(p.x - run.estimate.offset) << ',' << models::format_double(p.y)
            << '\n';
    for (const Point2 p : run.estimate.fitted_vertices)
        out << "vertex," << models::format_double(p.x - run.estimate.offset) << ',' << models::format_double(p.y)
            << '\n';
}

void write_polygon_json(std::ostream& out, const PolygonRun& run) {
    nlohmann::json doc;
    doc["k"] = run.cloud.k;
    doc["strip"] = {run.options.strip.lo, run.options.strip.hi};
    doc["epsilon"] = run.options.epsilon;
    doc["labelled_points"] = run.labelling.assignment.size();
    doc["cloud_points"] = run.cloud.points.size();
    nlohmann::json verts = nlohmann::json::array();
    for (const Point2 p : run.estimate.fitted_vertices) verts.push_back({p.x - run.estimate.offset, p.y});
    doc["fitted_vertices"] = verts;
    doc["cuts"] = run.options.cuts;
    doc["translation_freedom"] = run.estimate.translation_freedom;
    if (run.comparison) {
        const double h = run.cloud.hbar();
        doc["hausdorff"] = run.comparison->hausdorff;
        doc["hausdorff_over_hbar"] = run.comparison->hausdorff / h;
        doc["translation"] = {run.comparison->translation.x, run.comparison->translation.y};
        doc["vertex_error"] = run.comparison->vertex_error;
    }
    out << doc.dump(1) << '\n';
}

}  // namespace semitoric::invariants
