#include <algorithm>
#include <cmath>

#include "semitoric/models.hpp"

namespace semitoric::models {
namespace {

int integral_dimension(double r, int k) {
    const double n = 2.0 * k * r;
    const double rounded = std::round(n);
    if (std::abs(n - rounded) > 1e-9 || rounded < 1)
        throw Error(ErrorKind::DimensionMismatch, "2*k*r = " + std::to_string(n) + " is not a positive integer");
    return static_cast<int>(rounded);
}

void check_same_j(double expected, double actual) {
    if (std::abs(expected - actual) > tolerances().same_j_rel * std::max(1.0, std::abs(expected)))
        throw Error(ErrorKind::NumericalFailure, "basis state has inconsistent J eigenvalue");
}

// Sphere ladder coefficients for a sphere of Hilbert dimension n:
// (X + iY) e_l = (2 beta_l / n) e_{l+1},  (X - iY) e_l = (2 alpha_l / n) e_{l-1}.
double sphere_alpha(int n, int l) { return std::sqrt(static_cast<double>(l) * (n - l)); }
double sphere_beta(int n, int l) { return std::sqrt(static_cast<double>(l + 1) * (n - 1 - l)); }
double sphere_z(int n, int l) { return static_cast<double>(n - 2 * l - 1) / n; }

TridiagonalBlock spin_block(int k, int m) {
    const int sphere_n = 2 * k;
    TridiagonalBlock block;
    block.block_id = m;
    block.j_value = 1.0 + static_cast<double>(m) / k;
    const int l_lo = std::max(0, -m);
    const int size = sphere_n - l_lo;
    block.diag.assign(size, 0.0);
    block.offdiag.resize(size - 1);
    const double scale = 1.0 / (2.0 * std::sqrt(2.0) * k * std::sqrt(static_cast<double>(k)));
    for (int i = 0; i < size; ++i) {
        const int l = l_lo + i;
        const int n = m + l;
        check_same_j(block.j_value, (n + 0.5) / k + sphere_z(sphere_n, l));
        if (i + 1 < size) block.offdiag[i] = scale * std::sqrt(static_cast<double>(n + 1)) * sphere_beta(sphere_n, l);
    }
    return block;
}

TridiagonalBlock coupled_block(const ModelSpec& model, int k, int block_id) {
    const auto [n1, n2] = sphere_dims(model, k);
    const int s = n1 + n2 - 2 - block_id;
    TridiagonalBlock block;
    block.block_id = block_id;
    block.j_value = block_j_value(model, k, block_id);
    const int l1_lo = std::max(0, s - (n2 - 1));
    const int l1_hi = std::min(n1 - 1, s);
    const int size = l1_hi - l1_lo + 1;
    block.diag.resize(size);
    block.offdiag.resize(size - 1);
    const double t = model.t;
    const double lead = (1.0 - t) * (1.0 + n1) / n1;
    const double pre = t * (1.0 + n1) * (1.0 + n2) / (static_cast<double>(n1) * n2);
    for (int i = 0; i < size; ++i) {
        const int l1 = l1_lo + i;
        const int l2 = s - l1;
        const double z1 = sphere_z(n1, l1);
        const double z2 = sphere_z(n2, l2);
        check_same_j(block.j_value, model.r1 * z1 + model.r2 * z2);
        block.diag[i] = lead * z1 + pre * z1 * z2;
        if (i + 1 < size)
            block.offdiag[i] =
                pre * 0.5 * (2.0 * sphere_beta(n1, l1) / n1) * (2.0 * sphere_alpha(n2, l2) / n2);
    }
    return block;
}

}  // namespace

void ModelSpec::validate(int k) const {
    if (k < 1) throw Error(ErrorKind::Config, "k must be a positive integer");
    if (kind == ModelKind::CoupledAngularMomenta) {
        if (!(r1 > 0 && r2 > r1)) throw Error(ErrorKind::Config, "coupled model requires r2 > r1 > 0");
        if (!(t >= 0 && t <= 1)) throw Error(ErrorKind::Config, "coupling t must lie in [0, 1]");
        integral_dimension(r1, k);
        integral_dimension(r2, k);
    }
}

std::string ModelSpec::name() const {
    return kind == ModelKind::SpinOscillator ? "spin-oscillator" : "coupled";
}

ModelKind parse_model_kind(const std::string& name) {
    if (name == "spin-oscillator" || name == "spin" || name == "spinosc") return ModelKind::SpinOscillator;
    if (name == "coupled" || name == "coupled-angular-momenta") return ModelKind::CoupledAngularMomenta;
    throw Error(ErrorKind::Config, "unknown model '" + name + "'");
}

SphereDims sphere_dims(const ModelSpec& model, int k) {
    if (model.kind == ModelKind::SpinOscillator) return {2 * k, 0};
    return {integral_dimension(model.r1, k), integral_dimension(model.r2, k)};
}

BlockRange block_range(const ModelSpec& model, int k) {
    model.validate(k);
    if (model.kind == ModelKind::SpinOscillator) return {-(2 * k - 1), std::nullopt};
    const auto [n1, n2] = sphere_dims(model, k);
    return {0, n1 + n2 - 2};
}

double block_j_value(const ModelSpec& model, int k, int block_id) {
    if (model.kind == ModelKind::SpinOscillator) return 1.0 + static_cast<double>(block_id) / k;
    return -(model.r1 + model.r2) + static_cast<double>(block_id + 1) / k;
}

TridiagonalBlock build_block(const ModelSpec& model, int k, int block_id) {
    const BlockRange range = block_range(model, k);
    if (block_id < range.lo || (range.hi && block_id > *range.hi))
        throw Error(ErrorKind::EmptyWindow, "block id " + std::to_string(block_id) + " out of range");
    return model.kind == ModelKind::SpinOscillator ? spin_block(k, block_id) : coupled_block(model, k, block_id);
}

std::vector<TridiagonalBlock> build_blocks(const ModelSpec& model, int k, Interval j_window) {
    std::vector<TridiagonalBlock> blocks;
    for (int id : block_ids_in(model, k, j_window)) blocks.push_back(build_block(model, k, id));
    return blocks;
}

std::vector<int> block_ids_in(const ModelSpec& model, int k, Interval j_window) {
    if (j_window.empty()) throw Error(ErrorKind::EmptyWindow, "empty J window");
    const BlockRange range = block_range(model, k);
    if (!range.hi && !std::isfinite(j_window.hi))
        throw Error(ErrorKind::Config, "J window must be bounded above for the spin-oscillator");
    const double j0 = block_j_value(model, k, 0);
    const double slack = 1e-9;
    int lo = range.lo;
    if (std::isfinite(j_window.lo))
        lo = std::max(lo, static_cast<int>(std::ceil((j_window.lo - j0) * k - slack)));
    int hi = range.hi.value_or(0);
    if (std::isfinite(j_window.hi)) {
        const int cap = static_cast<int>(std::floor((j_window.hi - j0) * k + slack));
        hi = range.hi ? std::min(hi, cap) : cap;
    }
    std::vector<int> ids;
    for (int id = lo; id <= hi; ++id) ids.push_back(id);
    if (ids.empty()) throw Error(ErrorKind::EmptyWindow, "no block intersects the J window");
    return ids;
}

}  // namespace semitoric::models
