#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "termfpca/yield_data.hpp"

namespace termfpca {

/// Exponential integral Ei(x), principal value, for x != 0 and |x| <= 700.
/// Power series below |x| = 40 on the positive axis, asymptotic expansion
/// beyond, and Ei(-x) = -E1(x) on the negative axis with a continued
/// fraction for large arguments. Relative error <= 1e-12 over
/// |x| in [1e-6, 700].
double exp_integral_ei(double x);

/// Scalars of the closed-form orthonormalization of the level/slope/curvature
/// factor functions on the rescaled maturity interval.
struct NsConstants {
    double theta = 0.0;
    double tau_low = 0.0;
    double tau_high = 0.0;
    double A = 0.0;  // theta * (tau_high - tau_low)
    double B = 0.0;  // theta * tau_low
    double D = 0.0;
    double F = 0.0;
    double H = 0.0;
    double J = 0.0;
    double K = 0.0;
    double L = 0.0;
    double norm2_psi2_tilde = 0.0;
    double norm2_psi3_tilde = 0.0;
};

/// Evaluate the closed-form constants. The assembly runs in extended
/// precision internally: the ten-term expression for ||psi3_tilde||^2
/// cancels by up to ~1e15 at theta = 0.001, which double precision cannot
/// survive. |theta| >= 1e-4, 0 < tau_low < tau_high.
NsConstants compute_constants(double theta, double tau_low, double tau_high);

/// The three orthonormal basis functions sampled on a grid.
struct NsBasis {
    NsConstants constants;
    RescaledGrid grid;
    Eigen::MatrixXd values;  // N x 3: psi01 (== 1), psi02, psi03
};

NsBasis build_basis(const NsConstants& constants, const RescaledGrid& grid);

/// The raw (non-orthonormal) factor functions {1, exp(-(A x + B)),
/// (1 - exp(-(A x + B)))/(A x + B)} sampled at x.
Eigen::MatrixXd ns_raw_columns(double theta, double tau_low, double tau_high,
                               const Eigen::VectorXd& x);

/// Independent check of the closed forms: modified Gram-Schmidt of the raw
/// factor functions with composite-trapezoid inner products. The quadrature
/// runs on the fine grid refined by `refine` subdivisions per interval
/// (refine=1 uses the fine grid itself); the result is sampled back on the
/// fine grid. No exponential integral, no closed-form constants.
Eigen::MatrixXd gram_schmidt_oracle(double theta, double tau_low, double tau_high,
                                    int fine_grid_size, int refine = 16);

/// Yield (percent) of the three-factor exponential-decay curve at maturity
/// tau (years) with decay parameter theta.
double nelson_siegel_curve(double beta0, double beta1, double beta2, double theta,
                           double tau);

/// Four-factor synthetic data generator parameters.
struct SvenssonParams {
    std::array<double, 4> beta{4.0, -2.0, 2.0, 1.0};
    double theta1 = 0.5;
    double theta2 = 0.15;
    std::array<double, 4> beta_spread{0.5, 0.5, 0.3, 0.3};  // per-curve Gaussian sd
};

/// Four-factor curve value at maturity tau for explicit betas.
double svensson_curve(const SvenssonParams& params, const std::array<double, 4>& beta,
                      double tau);

/// n synthetic curves: per-curve betas drawn from Gaussian spreads around the
/// configured means, i.i.d. Gaussian(0, sigma^2) noise per observation point.
/// Fully determined by the seed. Dates are consecutive calendar days from
/// 2000-01-01.
YieldPanel svensson_sample(const SvenssonParams& params, const std::vector<double>& maturities,
                           int n, double sigma, std::uint64_t seed);

}  // namespace termfpca
