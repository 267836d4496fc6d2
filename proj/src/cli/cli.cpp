#include "semitoric/cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <locale>
#include <ostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "semitoric/lattice.hpp"
#include "semitoric/parallel.hpp"

namespace semitoric::cli {

using nlohmann::json;

namespace {

void write_file(const RunConfig& config, const std::string& name, std::ostream& log,
                const std::function<void(std::ostream&)>& body) {
    std::error_code ec;
    std::filesystem::create_directories(config.output_dir, ec);
    if (ec || !std::filesystem::is_directory(config.output_dir))
        throw Error(ErrorKind::Io, "cannot create output directory " + config.output_dir.string());
    const auto path = config.output_dir / name;
    std::ofstream f(path);
    if (!f) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    f.imbue(std::locale::classic());
    body(f);
    if (!f) throw Error(ErrorKind::Io, "write failed for " + path.string());
    log << "wrote " << path.string() << '\n';
}

models::SpectrumOptions inner_options(std::size_t fan_out) {
    models::SpectrumOptions o;
    o.threads = fan_out > 1 ? 1 : 0;
    return o;
}

unsigned threads_of(const RunConfig& c) { return static_cast<unsigned>(std::max(0, c.threads)); }

bool is_spin(const RunConfig& c) { return c.model.kind == models::ModelKind::SpinOscillator; }

Interval spectrum_window(const RunConfig& c) { return c.window ? *c.window : invariants::model_window(c.model); }

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::vector<int> resolve_k_list(const RunConfig& config, std::vector<int> fallback) {
    std::vector<int> ks = config.k_list ? *config.k_list : std::move(fallback);
    if (config.k_max) std::erase_if(ks, [&](int k) { return k > *config.k_max; });
    if (ks.empty()) throw Error(ErrorKind::Config, "k list is empty");
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (ks[i] < 1) throw Error(ErrorKind::Config, "k must be positive");
        if (i > 0 && ks[i] <= ks[i - 1]) throw Error(ErrorKind::Config, "k list must be strictly ascending");
    }
    return ks;
}

void cmd_spectrum(const RunConfig& config, std::ostream& log) {
    const auto ks = resolve_k_list(config, {is_spin(config) ? 15 : 10});
    const Interval win = spectrum_window(config);
    std::vector<models::JointSpectrum> out(ks.size());
    parallel_for(ks.size(), threads_of(config), [&](std::size_t i) {
        out[i] = models::joint_spectrum(config.model, ks[i], Rect{win, {}}, inner_options(ks.size()));
    });
    for (std::size_t i = 0; i < ks.size(); ++i)
        write_file(config, "spectrum_k" + std::to_string(ks[i]) + ".csv", log,
                   [&](std::ostream& f) { models::write_spectrum_csv(f, out[i]); });
}

void cmd_label(const RunConfig& config, std::ostream& log) {
    const auto ks = resolve_k_list(config, {is_spin(config) ? 15 : 10});
    const Interval win = spectrum_window(config);
    std::vector<lattice::PointCloud> clouds(ks.size());
    std::vector<lattice::Labelling> labels(ks.size());
    parallel_for(ks.size(), threads_of(config), [&](std::size_t i) {
        const auto sp = models::joint_spectrum(config.model, ks[i], Rect{win, {}}, inner_options(ks.size()));
        if (sp.points.empty()) throw Error(ErrorKind::EmptyWindow, "no joint eigenvalues in the window");
        clouds[i] = invariants::to_cloud(sp);
        labels[i] = lattice::label_semitoric_columns(clouds[i], clouds[i].points.front().x);
    });
    for (std::size_t i = 0; i < ks.size(); ++i)
        write_file(config, "labels_k" + std::to_string(ks[i]) + ".csv", log,
                   [&](std::ostream& f) { lattice::write_labelling_csv(f, clouds[i], labels[i]); });
}

void cmd_invariants(const RunConfig& config, std::ostream& log) {
    invariants::PipelineConfig pc;
    pc.model = config.model;
    pc.k_list = resolve_k_list(config, pc.k_list);
    if (!config.probes.x_schedule.empty()) pc.x_schedule = config.probes.x_schedule;
    if (!config.probes.mu_list.empty()) pc.mu_list = config.probes.mu_list;
    if (config.probes.delta) pc.delta = *config.probes.delta;
    pc.c_width = config.probes.c_width;
    pc.second_order_inputs = config.second_order_inputs;
    pc.threads = config.threads;
    const auto report = invariants::run_invariants(pc);
    write_file(config, "report.json", log, [&](std::ostream& f) { invariants::write_report_json(f, report); });
    for (const auto& [name, rows] : report.figures)
        write_file(config, "fig_" + name + ".csv", log,
                   [&](std::ostream& f) { invariants::write_figure_csv(f, rows); });
}

void cmd_polygon(const RunConfig& config, std::ostream& log) {
    invariants::PolygonConfig pc;
    pc.model = config.model;
    pc.k = resolve_k_list(config, {is_spin(config) ? 25 : 20}).back();
    pc.strip = config.strip ? *config.strip : (is_spin(config) ? Interval{-0.8, 2.0} : Interval{-3.3, 3.1});
    pc.epsilon = config.epsilon;
    pc.threads = config.threads;
    const auto run = invariants::run_polygon(pc);
    write_file(config, "polygon.csv", log, [&](std::ostream& f) { invariants::write_polygon_csv(f, run); });
    write_file(config, "polygon.json", log, [&](std::ostream& f) { invariants::write_polygon_json(f, run); });
}

void cmd_dh(const RunConfig& config, std::ostream& log) {
    const auto ks = resolve_k_list(config, {200});
    const double delta = config.probes.delta.value_or(0.25);
    const auto ref = invariants::reference_values(config.model);
    json kinks = json::object();
    for (int k : ks) {
        models::SpectrumOptions opts;
        opts.threads = threads_of(config);
        const auto loc = invariants::locate_critical(config.model, k, delta, config.probes.c_width, opts);
        std::vector<invariants::FigureRow> rows;
        for (const auto& [x, rho] : loc.dh.samples) {
            invariants::FigureRow r{x, rho, std::nullopt};
            if (ref.rho) r.theory = ref.rho(x);
            rows.push_back(r);
        }
        write_file(config, "dh_k" + std::to_string(k) + ".csv", log,
                   [&](std::ostream& f) { invariants::write_figure_csv(f, rows); });
        json entry{{"delta", delta}, {"c_width", config.probes.c_width}, {"kinks", loc.dh.kinks},
                   {"fit_residual", number(loc.dh.fit_residual)}};
        json cands = json::array();
        for (const auto& c : loc.candidates)
            cands.push_back({{"candidate", c.candidate}, {"focus_focus", c.focus_focus},
                             {"value", {number(c.value.x), number(c.value.y)}}});
        entry["candidates"] = cands;
        kinks[std::to_string(k)] = entry;
    }
    write_file(config, "dh.json", log, [&](std::ostream& f) { f << kinks.dump(1) << '\n'; });
}

std::size_t cmd_synth(const RunConfig& config, std::ostream& log) {
    const auto ks = resolve_k_list(config, {20, 50, 100});
    if (config.charts < 1) throw Error(ErrorKind::Config, "charts must be positive");
    std::mt19937_64 rng(config.seed);
    std::vector<std::pair<std::string, lattice::ChartSpec>> charts;
    for (int i = 0; i < config.charts; ++i) charts.emplace_back("regular" + std::to_string(i), lattice::random_regular_chart(rng));
    for (int i = 0; i < config.charts; ++i) charts.emplace_back("half" + std::to_string(i), lattice::random_half_chart(rng));

    std::size_t total_bad = 0;
    json report = json::object();
    for (const auto& [name, chart] : charts) {
        chart.validate();
        for (int k : ks) {
            const auto r = lattice::check_synthetic_labelling(chart, k);
            total_bad += r.mislabelled;
            report[name][std::to_string(k)] = {{"points", r.points},
                                               {"labelled", r.labelled},
                                               {"mislabelled", r.mislabelled},
                                               {"transition", {{"a", r.transition.a}, {"kappa", r.transition.kappa}}}};
            const auto cloud = lattice::synth_lattice(chart, k).cloud;
            write_file(config, "synth_" + name + "_k" + std::to_string(k) + ".csv", log,
                       [&](std::ostream& f) { lattice::write_labelling_csv(f, cloud, r.labelling); });
        }
    }
    report["seed"] = config.seed;
    report["mislabelled_total"] = total_bad;
    write_file(config, "synth.json", log, [&](std::ostream& f) { f << report.dump(1) << '\n'; });
    return total_bad;
}

namespace {

struct Flags {
    std::string model;
    double r1 = 0, r2 = 0, t = 0;
    std::vector<int> k;
    int k_max = 0;
    std::vector<double> x, mu;
    double delta = 0;
    std::string out, config;
    std::uint64_t seed = 0;
    std::vector<double> window, strip;
    double epsilon = 0, c_width = 0;
    int charts = 0, threads = 0;
    std::string second_order_inputs;
};

Interval interval_of(const std::vector<double>& v, const char* what) {
    if (v.size() != 2 || !(v[0] < v[1])) throw Error(ErrorKind::Config, std::string(what) + " needs lo < hi");
    return {v[0], v[1]};
}

invariants::LowerOrderSource parse_source(const std::string& s) {
    if (s == "reference") return invariants::LowerOrderSource::Reference;
    if (s == "recovered") return invariants::LowerOrderSource::Recovered;
    throw Error(ErrorKind::Config, "second-order inputs must be 'reference' or 'recovered'");
}

struct ModelParams {
    std::string name = "spin-oscillator";
    std::optional<double> r1, r2, t;
};

void apply_json(const json& j, RunConfig& c, ModelParams& m) {
    if (!j.is_object()) throw Error(ErrorKind::Config, "config file must hold a JSON object");
    for (const auto& [key, v] : j.items()) {
        if (key == "model") m.name = v.get<std::string>();
        else if (key == "r1") m.r1 = v.get<double>();
        else if (key == "r2") m.r2 = v.get<double>();
        else if (key == "t") m.t = v.get<double>();
        else if (key == "k") c.k_list = v.is_array() ? v.get<std::vector<int>>() : std::vector<int>{v.get<int>()};
        else if (key == "k_max") c.k_max = v.get<int>();
        else if (key == "x") c.probes.x_schedule = v.is_array() ? v.get<std::vector<double>>() : std::vector<double>{v.get<double>()};
        else if (key == "mu") c.probes.mu_list = v.is_array() ? v.get<std::vector<double>>() : std::vector<double>{v.get<double>()};
        else if (key == "delta") c.probes.delta = v.get<double>();
        else if (key == "c_width") c.probes.c_width = v.get<double>();
        else if (key == "out") c.output_dir = v.get<std::string>();
        else if (key == "seed") c.seed = v.get<std::uint64_t>();
        else if (key == "window") c.window = interval_of(v.get<std::vector<double>>(), "window");
        else if (key == "strip") c.strip = interval_of(v.get<std::vector<double>>(), "strip");
        else if (key == "epsilon") c.epsilon = v.get<double>();
        else if (key == "charts") c.charts = v.get<int>();
        else if (key == "threads") c.threads = v.get<int>();
        else if (key == "second_order_inputs") c.second_order_inputs = parse_source(v.get<std::string>());
        else throw Error(ErrorKind::Config, "unknown config key '" + key + "'");
    }
}

models::ModelSpec build_model(const ModelParams& m) {
    const auto kind = models::parse_model_kind(m.name);
    if (kind == models::ModelKind::SpinOscillator) {
        if (m.r1 || m.r2 || m.t) throw Error(ErrorKind::Config, "r1, r2 and t apply to the coupled model only");
        return models::ModelSpec::spin_oscillator();
    }
    const auto d = models::ModelSpec::coupled();
    return models::ModelSpec::coupled(m.r1.value_or(d.r1), m.r2.value_or(d.r2), m.t.value_or(d.t));
}

void validate_probes(const Probes& p) {
    for (std::size_t i = 0; i < p.x_schedule.size(); ++i) {
        if (!(p.x_schedule[i] > 0)) throw Error(ErrorKind::Config, "probe abscissae must be positive");
        if (i > 0 && !(p.x_schedule[i] < p.x_schedule[i - 1]))
            throw Error(ErrorKind::Config, "probe schedule must be strictly decreasing");
    }
    for (double mu : p.mu_list)
        if (!(mu > 0)) throw Error(ErrorKind::Config, "mu must be positive");
    if (p.delta && !(*p.delta > 0 && *p.delta < 0.5)) throw Error(ErrorKind::Config, "delta must lie in (0, 1/2)");
    if (!(p.c_width > 0)) throw Error(ErrorKind::Config, "strip width factor must be positive");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Joint spectra of semitoric systems and recovery of their symplectic invariants", "semitoric"};
    app.fallthrough();
    app.require_subcommand(1);
    Flags f;
    app.add_option("--model", f.model, "spin-oscillator or coupled");
    app.add_option("--r1", f.r1, "first sphere radius (coupled)");
    app.add_option("--r2", f.r2, "second sphere radius (coupled)");
    app.add_option("--t", f.t, "coupling parameter (coupled)");
    app.add_option("--k", f.k, "ascending list of k = 1/hbar")->delimiter(',');
    app.add_option("--k-max", f.k_max, "drop k above this value");
    app.add_option("--x", f.x, "decreasing probe abscissae")->delimiter(',');
    app.add_option("--mu", f.mu, "probe aspect ratios")->delimiter(',');
    app.add_option("--delta", f.delta, "strip exponent");
    app.add_option("--c-width", f.c_width, "strip width factor");
    app.add_option("--out", f.out, "output directory");
    app.add_option("--config", f.config, "JSON config file; flags override its entries");
    app.add_option("--seed", f.seed, "seed for randomized charts");
    app.add_option("--window", f.window, "J-window lo hi")->expected(2)->delimiter(',');
    app.add_option("--strip", f.strip, "polygon strip lo hi")->expected(2)->delimiter(',');
    app.add_option("--epsilon", f.epsilon, "hole radius around critical values (0 selects hbar^{1/2})");
    app.add_option("--charts", f.charts, "random charts of each kind for synth");
    app.add_option("--threads", f.threads, "worker threads (0 selects all cores)");
    app.add_option("--second-order-inputs", f.second_order_inputs, "reference or recovered");

    auto* spectrum = app.add_subcommand("spectrum", "joint spectrum CSV per k");
    auto* label = app.add_subcommand("label", "column labelling CSV per k");
    auto* inv = app.add_subcommand("invariants", "invariant report JSON and convergence CSVs");
    auto* poly = app.add_subcommand("polygon", "polygon CSV and Hausdorff report");
    auto* dh = app.add_subcommand("dh", "Duistermaat-Heckman profile CSV and kinks");
    auto* synth = app.add_subcommand("synth", "labelling of randomized synthetic charts against ground truth");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        RunConfig config;
        ModelParams mp;
        if (!f.config.empty()) {
            std::ifstream in(f.config);
            if (!in) throw Error(ErrorKind::Config, "cannot read config file " + f.config);
            apply_json(json::parse(in), config, mp);
        }
        if (app.count("--model")) mp.name = f.model;
        if (app.count("--r1")) mp.r1 = f.r1;
        if (app.count("--r2")) mp.r2 = f.r2;
        if (app.count("--t")) mp.t = f.t;
        config.model = build_model(mp);
        if (app.count("--k")) config.k_list = f.k;
        if (app.count("--k-max")) config.k_max = f.k_max;
        if (app.count("--x")) config.probes.x_schedule = f.x;
        if (app.count("--mu")) config.probes.mu_list = f.mu;
        if (app.count("--delta")) config.probes.delta = f.delta;
        if (app.count("--c-width")) config.probes.c_width = f.c_width;
        if (app.count("--out")) config.output_dir = f.out;
        if (app.count("--seed")) config.seed = f.seed;
        if (app.count("--window")) config.window = interval_of(f.window, "window");
        if (app.count("--strip")) config.strip = interval_of(f.strip, "strip");
        if (app.count("--epsilon")) config.epsilon = f.epsilon;
        if (app.count("--charts")) config.charts = f.charts;
        if (app.count("--threads")) config.threads = f.threads;
        if (app.count("--second-order-inputs")) config.second_order_inputs = parse_source(f.second_order_inputs);
        validate_probes(config.probes);

        if (*spectrum) cmd_spectrum(config, out);
        else if (*label) cmd_label(config, out);
        else if (*inv) cmd_invariants(config, out);
        else if (*poly) cmd_polygon(config, out);
        else if (*dh) cmd_dh(config, out);
        else if (*synth) {
            const std::size_t bad = cmd_synth(config, out);
            if (bad > 0) {
                err << "error: " << bad << " mislabelled synthetic points\n";
                return 4;
            }
        }
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const json::exception& e) {
        err << "error: config: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace semitoric::cli
