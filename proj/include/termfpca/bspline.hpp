#pragma once

#include <Eigen/Dense>
#include <vector>

#include "termfpca/yield_data.hpp"

namespace termfpca {

/// Clamped uniform B-spline space on [0,1].
///
/// n_knots counts the distinct knot values including both endpoints, so the
/// unit interval is split into n_knots-1 uniform subdivisions and the basis
/// dimension is n_knots + order - 2.
struct SplineSpace {
    int order = 0;    // p; polynomial degree p-1
    int n_knots = 0;  // distinct knot values on [0,1], endpoints included
    std::vector<double> knot_vector;  // clamped: p-fold multiplicity at 0 and 1
    int dim = 0;

    std::string describe() const;
};

/// Build the clamped uniform space. 2 <= order <= 6, n_knots >= order.
SplineSpace build_space(int order, int n_knots);

/// All basis values at x in [0,1]; nonnegative, summing to 1.
Eigen::VectorXd eval_basis(const SplineSpace& space, double x);

/// Design matrix: row i = basis values at x(i).
Eigen::MatrixXd design_matrix(const SplineSpace& space, const Eigen::VectorXd& x);

/// Per-observation least-squares spline fits plus grid evaluations.
struct SmoothedSample {
    SplineSpace space;
    Eigen::MatrixXd coefficients;    // n x dim (empty for grid-native samples)
    RescaledGrid grid;
    Eigen::MatrixXd grid_values;     // n x N
    Eigen::VectorXd mean_values;     // N
    Eigen::MatrixXd centered_values; // n x N, rows xi_i = y_i - m

    Eigen::Index n_obs() const { return grid_values.rows(); }

    /// Assemble a sample directly from grid values (no spline behind it);
    /// used by generators and tests that work natively on the grid.
    static SmoothedSample from_grid_values(const RescaledGrid& grid,
                                           const Eigen::MatrixXd& values);
};

/// Least-squares projection of every panel row onto the spline space,
/// observed at the rescaled maturity positions. One QR factorization is
/// shared by all rows.
SmoothedSample fit(const YieldPanel& panel, const SplineSpace& space, const RescaledGrid& grid);

}  // namespace termfpca
