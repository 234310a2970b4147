#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "termfpca/fpca.hpp"
#include "termfpca/ns_basis.hpp"

namespace termfpca {

/// `syz` sums the strictly upper triangle of Z^2; `modified` sums all
/// off-diagonal entries and widens the simulated null with fourth-moment
/// diagonal terms.
enum class TestVariant { syz, modified };

std::string to_string(TestVariant v);
TestVariant variant_from_string(const std::string& s);

/// Z_kk' = <G_hat, psi_0k (x) psi_0k'>: double quadrature of the covariance
/// kernel against the candidate basis tensor products.
struct ZMatrix {
    Eigen::MatrixXd entries;  // kappa x kappa, symmetric
    int kappa = 0;
    std::string basis_id;
};

ZMatrix compute_z_matrix(const CovarianceEstimate& cov, const Eigen::MatrixXd& basis,
                         int kappa, std::string basis_id = {});

/// S_n = n * sum_{k<k'} Z_kk'^2.
double statistic_syz(const ZMatrix& z, int n_obs);

/// S~_n = n * sum_{k != k'} Z_kk'^2 = 2 * S_n by symmetry.
double statistic_modified(const ZMatrix& z, int n_obs);

/// Weights of the Gaussian quadratic form simulated under the null.
struct NullSpec {
    Eigen::VectorXd lambda_hat;  // ordered by candidate-basis index
    double diag_factor = 0.0;    // (1/n) sum_i ||xi_i^2||^2 - 1 (modified only)
    TestVariant variant = TestVariant::syz;
};

/// n_sims draws of the quadratic form; chi^2(1) variables are independent
/// across index pairs within a draw and the whole vector is determined by
/// the seed. Negative diag_factor contributes zero weight.
std::vector<double> simulate_null(const NullSpec& spec, int n_sims, std::uint64_t seed);

struct TestReport {
    double statistic = 0.0;
    double quantile_1ma = 0.0;
    double p_value = 1.0;
    double alpha = 0.05;
    TestVariant variant = TestVariant::syz;
    double theta = 0.0;
    int kappa = 0;
    int n_obs = 0;
    int n_sims = 0;
    std::uint64_t seed = 0;
    std::string window;
    bool reject = false;
    bool small_sample_warning = false;  // n_obs < 30
};

/// Full test against a candidate basis: scores, lambda_hat, Z matrix,
/// statistic, simulated null quantile (empirical percentile, linear
/// interpolation), and add-one p-value. The candidate basis is
/// re-orthonormalized in the grid's inner product before use, since the
/// closed forms are orthonormal only up to quadrature error on coarse grids.
TestReport run_test(const SmoothedSample& sample, const CovarianceEstimate& cov,
                    const NsBasis& basis, TestVariant variant, double alpha, int kappa,
                    int n_sims, std::uint64_t seed);

/// Same contract for a caller-supplied candidate basis sampled on the grid.
TestReport run_test_with_basis(const SmoothedSample& sample, const CovarianceEstimate& cov,
                               const Eigen::MatrixXd& basis_columns, TestVariant variant,
                               double alpha, int kappa, int n_sims, std::uint64_t seed,
                               std::string basis_id = {});

struct ThetaScanEntry {
    double theta = 0.0;
    std::optional<TestReport> report;  // empty when this theta failed
    std::string error;
};

struct ThetaScan {
    std::vector<ThetaScanEntry> entries;
    double min_p = 1.0;
    double max_p = 0.0;
    double argmin_theta = 0.0;
    double argmax_theta = 0.0;
};

/// One test per theta with a per-theta seed (base seed + index); degenerate
/// thetas are recorded and skipped. tau bounds come from the panel the
/// sample was fitted to.
ThetaScan theta_scan(const SmoothedSample& sample, const CovarianceEstimate& cov,
                     const std::vector<double>& theta_grid, double tau_low, double tau_high,
                     TestVariant variant, double alpha, int kappa, int n_sims,
                     std::uint64_t seed);

/// Empirical percentile with linear interpolation between order statistics.
double empirical_quantile(std::vector<double> draws, double level);

}  // namespace termfpca
