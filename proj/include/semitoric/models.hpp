#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semitoric/common.hpp"

namespace semitoric::models {

enum class ModelKind { SpinOscillator, CoupledAngularMomenta };

// Spin-oscillator: R^2 x S^2 with J = (u^2+v^2)/2 + z and H = (ux + vy)/2.
// Coupled angular momenta: S^2 x S^2 with radii r1 < r2 and coupling t.
struct ModelSpec {
    ModelKind kind = ModelKind::SpinOscillator;
    double r1 = 1.0;
    double r2 = 2.5;
    double t = 0.5;

    static ModelSpec spin_oscillator() { return {ModelKind::SpinOscillator, 1.0, 1.0, 0.0}; }
    static ModelSpec coupled(double r1 = 1.0, double r2 = 2.5, double t = 0.5) {
        return {ModelKind::CoupledAngularMomenta, r1, r2, t};
    }

    // Throws DimensionMismatch or Config when the model cannot be quantized at this k.
    void validate(int k) const;
    std::string name() const;
};

ModelKind parse_model_kind(const std::string& name);

// Sphere dimensions 2 k r1 and 2 k r2 of the coupled model.
struct SphereDims {
    int n1 = 0;
    int n2 = 0;
};
SphereDims sphere_dims(const ModelSpec& model, int k);

// One J-eigenspace of H as a real symmetric tridiagonal matrix.
//
// block_id increases with the J eigenvalue by exactly one step of hbar:
//   spin-oscillator  block_id = n - l,   J = 1 + block_id / k
//   coupled momenta  block_id = n1 + n2 - 2 - (l1 + l2),   J = -(r1 + r2) + (block_id + 1) / k
struct TridiagonalBlock {
    int block_id = 0;
    double j_value = 0.0;
    std::vector<double> diag;
    std::vector<double> offdiag;

    std::size_t size() const { return diag.size(); }
};

// Range of admissible block ids; the spin-oscillator range is unbounded above.
struct BlockRange {
    int lo = 0;
    std::optional<int> hi;
};
BlockRange block_range(const ModelSpec& model, int k);
double block_j_value(const ModelSpec& model, int k, int block_id);

// Ids of all blocks whose J eigenvalue lies in j_window, ascending.
std::vector<int> block_ids_in(const ModelSpec& model, int k, Interval j_window);

TridiagonalBlock build_block(const ModelSpec& model, int k, int block_id);
std::vector<TridiagonalBlock> build_blocks(const ModelSpec& model, int k, Interval j_window);

enum class EigMethod { QL, Bisection };

// All eigenvalues of the symmetric tridiagonal matrix, ascending.
std::vector<double> eigs_sym_tridiagonal(std::span<const double> diag, std::span<const double> offdiag,
                                         EigMethod method = EigMethod::QL);

struct JointPoint {
    double x = 0.0;
    double y = 0.0;
    int block_id = 0;
    int index_in_block = 0;
};

struct JointSpectrum {
    int k = 1;
    std::vector<JointPoint> points;
    std::optional<Rect> window;

    double hbar() const { return hbar_of(k); }
};

struct SpectrumOptions {
    EigMethod method = EigMethod::QL;
    unsigned threads = 0;  // 0 selects the hardware concurrency
    bool reverse_block_order = false;
};

JointSpectrum joint_spectrum(const ModelSpec& model, int k, const Rect& window, const SpectrumOptions& options = {});

// Eigenvalues of all blocks in the window with provenance; the lowest-level entry point used by the invariants.
struct BlockSpectrum {
    int block_id = 0;
    double j_value = 0.0;
    std::vector<double> eigenvalues;
};
std::vector<BlockSpectrum> block_spectra(const ModelSpec& model, int k, Interval j_window,
                                         const SpectrumOptions& options = {});

struct DenseOracleResult {
    JointSpectrum spectrum;
    double commutator_norm = 0.0;
};

// Dense construction on the full (truncated) product basis followed by simultaneous diagonalization.
// For the spin-oscillator only J-eigenspaces untouched by the truncation n <= n_max are reported.
DenseOracleResult dense_oracle(const ModelSpec& model, int k, int n_max = 60);
JointSpectrum dense_oracle_spectrum(const ModelSpec& model, int k, int n_max = 60);

void write_spectrum_csv(std::ostream& out, const JointSpectrum& spectrum);
void write_spectrum_json(std::ostream& out, const JointSpectrum& spectrum);

// Fixed 17-significant-digit, locale-independent formatting.
std::string format_double(double v);

}  // namespace semitoric::models
