#include "termfpca/fpca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "termfpca/errors.hpp"

namespace termfpca {

CovarianceEstimate estimate_covariance(const SmoothedSample& sample, DiagonalPolicy policy) {
    const Eigen::Index n = sample.n_obs();
    if (n < 2) throw_input("sample-size error: covariance needs at least 2 observations");

    CovarianceEstimate cov;
    cov.grid = sample.grid;
    cov.policy = policy;
    // (1/n) sum_i xi_i(x_j) xi_i(x_l); fixed accumulation order for determinism.
    cov.matrix = sample.centered_values.transpose() * sample.centered_values /
                 static_cast<double>(n);
    cov.matrix = ((cov.matrix + cov.matrix.transpose()) / 2.0).eval();

    if (policy == DiagonalPolicy::interpolate) {
        const Eigen::Index N = cov.matrix.rows();
        Eigen::VectorXd diag(N);
        for (Eigen::Index j = 0; j < N; ++j) {
            double sum = 0.0;
            int cnt = 0;
            if (j > 0) {
                sum += cov.matrix(j - 1, j);
                ++cnt;
            }
            if (j + 1 < N) {
                sum += cov.matrix(j, j + 1);
                ++cnt;
            }
            diag(j) = sum / cnt;
        }
        cov.matrix.diagonal() = diag;
    }
    return cov;
}

namespace {

void apply_sign_convention(Eigen::MatrixXd& psi, const Eigen::VectorXd& w) {
    for (Eigen::Index k = 0; k < psi.cols(); ++k) {
        const double s = (w.array() * psi.col(k).array()).sum();
        if (std::fabs(s) > 1e-10) {
            if (s < 0) psi.col(k) = -psi.col(k);
        } else {
            Eigen::Index imax = 0;
            psi.col(k).cwiseAbs().maxCoeff(&imax);
            if (psi(imax, k) < 0) psi.col(k) = -psi.col(k);
        }
    }
}

}  // namespace

FpcaResult eigendecompose(const CovarianceEstimate& cov, int k_max) {
    const Eigen::Index N = cov.matrix.rows();
    if (k_max < 1 || k_max > N)
        throw_input("argument error: k_max must be in [1, N]");

    const Eigen::VectorXd sw = cov.grid.weights.array().sqrt();
    const Eigen::MatrixXd b = sw.asDiagonal() * cov.matrix * sw.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b);
    if (solver.info() != Eigen::Success)
        throw_numeric("numerical error: eigen-solver failed to converge on the " +
                      std::to_string(N) + "x" + std::to_string(N) +
                      " weighted covariance (max |entry| " +
                      std::to_string(b.cwiseAbs().maxCoeff()) + ")");

    // Ascending from Eigen; flip to nonincreasing.
    Eigen::VectorXd ev = solver.eigenvalues().reverse();
    Eigen::MatrixXd vec = solver.eigenvectors().rowwise().reverse();

    FpcaResult res;
    res.clipped_negative = static_cast<int>((ev.array() < 0.0).count());
    Eigen::VectorXd clipped = ev.cwiseMax(0.0);
    const double total = clipped.sum();

    res.eigenvalues = clipped.head(k_max);
    // Map back by W^{-1/2}: unit Euclidean eigenvectors become unit weighted norm.
    res.eigenfunctions = sw.cwiseInverse().asDiagonal() * vec.leftCols(k_max);
    apply_sign_convention(res.eigenfunctions, cov.grid.weights);
    res.explained_ratio = total > 0 ? (res.eigenvalues / total).eval()
                                    : Eigen::VectorXd::Zero(k_max).eval();
    return res;
}

Eigen::MatrixXd compute_scores(const SmoothedSample& sample, const Eigen::MatrixXd& basis) {
    if (basis.rows() != sample.grid.size())
        throw_input("basis error: basis rows do not match the grid");
    const Eigen::VectorXd& w = sample.grid.weights;
    for (Eigen::Index k = 0; k < basis.cols(); ++k) {
        const double norm2 = (w.array() * basis.col(k).array().square()).sum();
        if (std::fabs(std::sqrt(norm2) - 1.0) > 1e-6)
            throw_input("basis error: column " + std::to_string(k + 1) +
                        " is not unit-norm in the weighted inner product (norm " +
                        std::to_string(std::sqrt(norm2)) + ")");
    }
    return sample.centered_values * w.asDiagonal() * basis;
}

int count_zeros(const Eigen::VectorXd& psi, double tolerance_fraction) {
    if (psi.size() < 3) throw_input("argument error: need at least 3 grid points");
    if (!(tolerance_fraction > 0.0 && tolerance_fraction <= 0.1))
        throw_input("argument error: tolerance_fraction must be in (0, 0.1]");
    const double vmax = psi.cwiseAbs().maxCoeff();
    if (vmax == 0.0)
        throw_numeric("degenerate-function error: all grid values below tolerance");
    const double tol = tolerance_fraction * vmax;

    int changes = 0;
    int last_sign = 0;
    for (Eigen::Index j = 0; j < psi.size(); ++j) {
        if (std::fabs(psi(j)) < tol) continue;
        const int s = psi(j) > 0 ? 1 : -1;
        if (last_sign != 0 && s != last_sign) ++changes;
        last_sign = s;
    }
    return changes;
}

FpcaResult pca_classical(const YieldPanel& panel, int k_max) {
    const Eigen::Index n = panel.rows();
    if (n < 2) throw_input("sample-size error: PCA needs at least 2 observations");
    const Eigen::Index N = panel.cols();
    if (k_max < 1 || k_max > N) throw_input("argument error: k_max must be in [1, N]");

    const Eigen::RowVectorXd mean = panel.values.colwise().mean();
    const Eigen::MatrixXd centered = panel.values.rowwise() - mean;
    const Eigen::MatrixXd c = centered.transpose() * centered / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(c);
    if (solver.info() != Eigen::Success)
        throw_numeric("numerical error: eigen-solver failed on the raw covariance");

    Eigen::VectorXd ev = solver.eigenvalues().reverse();
    Eigen::MatrixXd vec = solver.eigenvectors().rowwise().reverse();

    FpcaResult res;
    res.clipped_negative = static_cast<int>((ev.array() < 0.0).count());
    Eigen::VectorXd clipped = ev.cwiseMax(0.0);
    const double total = clipped.sum();
    res.eigenvalues = clipped.head(k_max);
    res.eigenfunctions = vec.leftCols(k_max);
    apply_sign_convention(res.eigenfunctions,
                          Eigen::VectorXd::Ones(N));  // unweighted convention
    res.scores = centered * res.eigenfunctions;
    res.explained_ratio = total > 0 ? (res.eigenvalues / total).eval()
                                    : Eigen::VectorXd::Zero(k_max).eval();
    return res;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> fpc_effect_curves(const FpcaResult& result,
                                                              const Eigen::VectorXd& mean,
                                                              int k, double scale) {
    if (k < 1 || k > result.eigenfunctions.cols())
        throw_input("argument error: component index out of range");
    const Eigen::VectorXd shift =
        scale * std::sqrt(result.eigenvalues(k - 1)) * result.eigenfunctions.col(k - 1);
    return {mean + shift, mean - shift};
}

Eigen::MatrixXd orthonormalize_columns(Eigen::MatrixXd columns, const RescaledGrid& grid) {
    const Eigen::VectorXd& w = grid.weights;
    for (Eigen::Index k = 0; k < columns.cols(); ++k) {
        for (Eigen::Index j = 0; j < k; ++j) {
            const double pr = (w.array() * columns.col(j).array() * columns.col(k).array()).sum();
            columns.col(k) -= pr * columns.col(j);
        }
        const double n2 = (w.array() * columns.col(k).array().square()).sum();
        if (!(n2 > 1e-24))
            throw_numeric("degeneracy error: column " + std::to_string(k + 1) +
                          " is numerically in the span of the preceding ones");
        columns.col(k) /= std::sqrt(n2);
    }
    return columns;
}

}  // namespace termfpca
