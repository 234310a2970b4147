#pragma once

#include <Eigen/Dense>
#include <utility>

#include "termfpca/bspline.hpp"
#include "termfpca/yield_data.hpp"

namespace termfpca {

/// How the diagonal of the covariance grid is treated. `include` keeps the
/// plain plug-in estimate; `interpolate` replaces each diagonal entry by the
/// mean of its off-diagonal neighbours, discarding the measurement-error
/// ridge the way the upper-triangular restriction does for rough processes.
enum class DiagonalPolicy { include, interpolate };

struct CovarianceEstimate {
    RescaledGrid grid;
    Eigen::MatrixXd matrix;  // symmetric N x N, percent^2
    DiagonalPolicy policy = DiagonalPolicy::include;
};

CovarianceEstimate estimate_covariance(const SmoothedSample& sample, DiagonalPolicy policy);

struct FpcaResult {
    Eigen::VectorXd eigenvalues;      // nonincreasing, clipped at 0
    Eigen::MatrixXd eigenfunctions;   // column k sampled on the grid, unit weighted norm
    Eigen::MatrixXd scores;           // n x K (empty until compute_scores)
    Eigen::VectorXd explained_ratio;  // eigenvalue / total variance
    int clipped_negative = 0;         // count of negative eigenvalues clipped to 0
};

/// Weighted eigenproblem for the covariance kernel: symmetrize with W^{1/2},
/// eigendecompose, map back, normalize in the weighted inner product. Sign
/// convention: sum_j w_j psi_k(x_j) >= 0, falling back to a positive
/// largest-magnitude entry when that sum is near zero.
FpcaResult eigendecompose(const CovarianceEstimate& cov, int k_max);

/// Scores zeta_ik = sum_j w_j xi_i(x_j) psi_k(x_j) against grid-orthonormal
/// basis columns (unit weighted norm within 1e-6).
Eigen::MatrixXd compute_scores(const SmoothedSample& sample, const Eigen::MatrixXd& basis);

/// Strict sign changes of the grid values after zeroing entries smaller than
/// tolerance_fraction times the largest magnitude.
int count_zeros(const Eigen::VectorXd& psi, double tolerance_fraction = 1e-3);

/// Classical PCA on the column-demeaned raw panel (no smoothing, unweighted
/// inner product). Comparison tool only.
FpcaResult pca_classical(const YieldPanel& panel, int k_max);

/// Mean +- scale * sqrt(lambda_k) * psi_k, the perturbed curves of the
/// component-effect plots. k is 1-based.
std::pair<Eigen::VectorXd, Eigen::VectorXd> fpc_effect_curves(const FpcaResult& result,
                                                              const Eigen::VectorXd& mean,
                                                              int k, double scale);

/// Modified Gram-Schmidt of the columns in the grid's weighted inner product.
Eigen::MatrixXd orthonormalize_columns(Eigen::MatrixXd columns, const RescaledGrid& grid);

}  // namespace termfpca
