#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "semitoric/common.hpp"
#include "semitoric/invariants.hpp"
#include "semitoric/models.hpp"

namespace semitoric::cli {

struct Probes {
    std::vector<double> x_schedule;  // strictly decreasing, positive
    std::vector<double> mu_list;
    std::optional<double> delta;     // per-command default when unset
    double c_width = 1.0;
};

struct RunConfig {
    models::ModelSpec model = models::ModelSpec::spin_oscillator();
    std::optional<std::vector<int>> k_list;  // per-command default when unset
    std::optional<int> k_max;
    Probes probes;
    std::filesystem::path output_dir = ".";
    std::uint64_t seed = 1;
    std::optional<Interval> window;  // J-window for spectrum and label
    std::optional<Interval> strip;   // polygon strip
    double epsilon = 0.0;
    int charts = 5;
    invariants::LowerOrderSource second_order_inputs = invariants::LowerOrderSource::Reference;
    int threads = 0;
};

// k_list after defaults and the k_max cap; throws Config when empty, non-positive or not ascending.
std::vector<int> resolve_k_list(const RunConfig& config, std::vector<int> fallback);

// Each command writes its files into config.output_dir and a one-line summary per file to `log`.
void cmd_spectrum(const RunConfig& config, std::ostream& log);
void cmd_label(const RunConfig& config, std::ostream& log);
void cmd_invariants(const RunConfig& config, std::ostream& log);
void cmd_polygon(const RunConfig& config, std::ostream& log);
void cmd_dh(const RunConfig& config, std::ostream& log);
// Returns the number of mislabelled points over all synthetic charts.
std::size_t cmd_synth(const RunConfig& config, std::ostream& log);

// Parses arguments (argv[0] is the program name), runs the subcommand and maps failures to exit codes:
// 0 success, 2 configuration error, 3 numerical failure, 4 labelling failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace semitoric::cli
