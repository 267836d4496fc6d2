#include <algorithm>
#include <charconv>
#include <ostream>

#include "semitoric/models.hpp"
#include "semitoric/parallel.hpp"

namespace semitoric::models {

std::vector<BlockSpectrum> block_spectra(const ModelSpec& model, int k, Interval j_window,
                                         const SpectrumOptions& options) {
    std::vector<int> ids = block_ids_in(model, k, j_window);
    if (options.reverse_block_order) std::reverse(ids.begin(), ids.end());
    std::vector<BlockSpectrum> out(ids.size());
    parallel_for(ids.size(), options.threads, [&](std::size_t i) {
        const TridiagonalBlock block = build_block(model, k, ids[i]);
        std::vector<double> ev = eigs_sym_tridiagonal(block.diag, block.offdiag, options.method);
        for (std::size_t a = 1; a < ev.size(); ++a)
            if (!(ev[a] > ev[a - 1])) throw Error(ErrorKind::NumericalFailure, "block spectrum is not simple");
        out[i] = {block.block_id, block.j_value, std::move(ev)};
    });
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.block_id < b.block_id; });
    return out;
}

JointSpectrum joint_spectrum(const ModelSpec& model, int k, const Rect& window, const SpectrumOptions& options) {
    JointSpectrum spectrum;
    spectrum.k = k;
    spectrum.window = window;
    for (const BlockSpectrum& b : block_spectra(model, k, window.xs, options)) {
        for (std::size_t i = 0; i < b.eigenvalues.size(); ++i) {
            const JointPoint p{b.j_value, b.eigenvalues[i], b.block_id, static_cast<int>(i)};
            if (window.contains({p.x, p.y})) spectrum.points.push_back(p);
        }
    }
    return spectrum;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void write_spectrum_csv(std::ostream& out, const JointSpectrum& spectrum) {
    out << "k,x,y,block,idx\n";
    for (const JointPoint& p : spectrum.points)
        out << spectrum.k << ',' << format_double(p.x) << ',' << format_double(p.y) << ',' << p.block_id << ','
            << p.index_in_block << '\n';
}

void write_spectrum_json(std::ostream& out, const JointSpectrum& spectrum) {
    out << "{\"k\":" << spectrum.k << ",\"points\":[";
    for (std::size_t i = 0; i < spectrum.points.size(); ++i) {
        const JointPoint& p = spectrum.points[i];
        if (i) out << ',';
        out << "{\"x\":" << format_double(p.x) << ",\"y\":" << format_double(p.y) << ",\"block\":" << p.block_id
            << ",\"idx\":" << p.index_in_block << '}';
    }
    out << "]}\n";
}

}  // namespace semitoric::models
