#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>

#include "semitoric/models.hpp"

namespace semitoric::models {
namespace {

using Mat = Eigen::MatrixXcd;
using cd = std::complex<double>;

Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

struct SphereOps {
    Mat x, y, z;
};

// Berezin-Toeplitz operators on a sphere whose Hilbert space has dimension n = 2 k r.
SphereOps sphere_ops(int n) {
    SphereOps ops{Mat::Zero(n, n), Mat::Zero(n, n), Mat::Zero(n, n)};
    const double denom = n;
    for (int l = 0; l < n; ++l) {
        ops.z(l, l) = (n - 2.0 * l - 1.0) / denom;
        if (l > 0) {
            const double a = std::sqrt(static_cast<double>(l) * (n - l)) / denom;
            ops.x(l - 1, l) += a;
            ops.y(l - 1, l) += cd(0, 1) * a;
        }
        if (l + 1 < n) {
            const double b = std::sqrt(static_cast<double>(l + 1) * (n - 1 - l)) / denom;
            ops.x(l + 1, l) += b;
            ops.y(l + 1, l) -= cd(0, 1) * b;
        }
    }
    return ops;
}

double commutator_norm(const Mat& j, const Mat& h, const std::vector<bool>& interior) {
    const Mat c = j * h - h * j;
    double sum = 0.0;
    for (Eigen::Index a = 0; a < c.rows(); ++a)
        for (Eigen::Index b = 0; b < c.cols(); ++b)
            if (interior[a] && interior[b]) sum += std::norm(c(a, b));
    return std::sqrt(sum);
}

}  // namespace

DenseOracleResult dense_oracle(const ModelSpec& model, int k, int n_max) {
    model.validate(k);
    Mat j_op, h_op;
    std::vector<bool> interior;
    int max_complete_block = 0;

    if (model.kind == ModelKind::SpinOscillator) {
        if (n_max < 2 * k) throw Error(ErrorKind::Config, "n_max too small for the oracle");
        const int nb = n_max + 1;
        Mat w = Mat::Zero(nb, nb), d = Mat::Zero(nb, nb), number = Mat::Zero(nb, nb);
        for (int n = 0; n < nb; ++n) {
            number(n, n) = n;
            if (n + 1 < nb) w(n + 1, n) = std::sqrt((n + 1.0) / k);
            if (n > 0) d(n - 1, n) = std::sqrt(static_cast<double>(n) / k);
        }
        const SphereOps s = sphere_ops(2 * k);
        const Mat id_b = Mat::Identity(nb, nb);
        const Mat id_s = Mat::Identity(2 * k, 2 * k);
        j_op = kron((number + 0.5 * id_b) / static_cast<double>(k), id_s) + kron(id_b, s.z);
        h_op = (kron(w + d, s.x) + cd(0, 1) * kron(w - d, s.y)) / (2.0 * std::sqrt(2.0));
        for (int n = 0; n < nb; ++n)
            for (int l = 0; l < 2 * k; ++l) interior.push_back(n < n_max);
        max_complete_block = n_max - (2 * k - 1);
    } else {
        const auto [n1, n2] = sphere_dims(model, k);
        const SphereOps s1 = sphere_ops(n1);
        const SphereOps s2 = sphere_ops(n2);
        const Mat id1 = Mat::Identity(n1, n1);
        const Mat id2 = Mat::Identity(n2, n2);
        j_op = model.r1 * kron(s1.z, id2) + model.r2 * kron(id1, s2.z);
        const double t = model.t;
        const double pre = t * (1.0 + n1) * (1.0 + n2) / (static_cast<double>(n1) * n2);
        h_op = (1.0 - t) * (1.0 + n1) / n1 * kron(s1.z, id2) +
               pre * (kron(s1.x, s2.x) + kron(s1.y, s2.y) + kron(s1.z, s2.z));
        interior.assign(static_cast<std::size_t>(n1) * n2, true);
        max_complete_block = n1 + n2 - 2;
    }

    DenseOracleResult result;
    result.commutator_norm = commutator_norm(j_op, h_op, interior);
    if (result.commutator_norm > tolerances().commutator)
        throw Error(ErrorKind::CommutatorViolation,
                    "||[J,H]|| = " + std::to_string(result.commutator_norm) + " on interior states");

    Eigen::SelfAdjointEigenSolver<Mat> j_solver(j_op);
    const Eigen::VectorXd jv = j_solver.eigenvalues();
    const Mat& vecs = j_solver.eigenvectors();
    const double gap = 0.25 / k;

    result.spectrum.k = k;
    Eigen::Index start = 0;
    while (start < jv.size()) {
        Eigen::Index stop = start + 1;
        while (stop < jv.size() && jv(stop) - jv(stop - 1) < gap) ++stop;
        const double jmean = jv.segment(start, stop - start).mean();
        const Mat basis = vecs.middleCols(start, stop - start);
        const Mat restricted = basis.adjoint() * h_op * basis;
        Eigen::SelfAdjointEigenSolver<Mat> h_solver(restricted, Eigen::EigenvaluesOnly);
        const double base = model.kind == ModelKind::SpinOscillator ? 1.0 : -(model.r1 + model.r2) + 1.0 / k;
        const int id = static_cast<int>(std::lround((jmean - base) * k));
        if (id <= max_complete_block) {
            const Eigen::VectorXd hv = h_solver.eigenvalues();
            for (Eigen::Index i = 0; i < hv.size(); ++i)
                result.spectrum.points.push_back({jmean, hv(i), id, static_cast<int>(i)});
        }
        start = stop;
    }
    std::sort(result.spectrum.points.begin(), result.spectrum.points.end(), [](const JointPoint& a, const JointPoint& b) {
        return a.block_id != b.block_id ? a.block_id < b.block_id : a.index_in_block < b.index_in_block;
    });
    return result;
}

JointSpectrum dense_oracle_spectrum(const ModelSpec& model, int k, int n_max) {
    return dense_oracle(model, k, n_max).spectrum;
}

}  // namespace semitoric::models
