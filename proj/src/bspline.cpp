#include "termfpca/bspline.hpp"

#include <algorithm>
#include <cmath>

#include "termfpca/errors.hpp"

namespace termfpca {

std::string SplineSpace::describe() const {
    return "order " + std::to_string(order) + ", " + std::to_string(n_knots) +
           " knots, dim " + std::to_string(dim);
}

SplineSpace build_space(int order, int n_knots) {
    if (order < 2 || order > 6)
        throw_input("argument error: spline order must be in [2,6], got " +
                    std::to_string(order));
    if (n_knots < order)
        throw_input("argument error: n_knots must be >= order, got " +
                    std::to_string(n_knots));

    SplineSpace s;
    s.order = order;
    s.n_knots = n_knots;
    // p-fold multiplicity at both ends, single interior knots.
    s.knot_vector.reserve(static_cast<std::size_t>(2 * order + n_knots - 2));
    for (int i = 0; i < order; ++i) s.knot_vector.push_back(0.0);
    for (int i = 1; i < n_knots - 1; ++i)
        s.knot_vector.push_back(static_cast<double>(i) / (n_knots - 1));
    for (int i = 0; i < order; ++i) s.knot_vector.push_back(1.0);
    s.dim = static_cast<int>(s.knot_vector.size()) - order;
    if (s.dim != n_knots + order - 2)
        throw_numeric("internal error: spline dimension mismatch for " + s.describe());
    return s;
}

Eigen::VectorXd eval_basis(const SplineSpace& space, double x) {
    if (!(x >= 0.0 && x <= 1.0))
        throw_input("domain error: spline evaluation point outside [0,1]");

    const int p = space.order;
    const auto& t = space.knot_vector;
    const int m = static_cast<int>(t.size());

    // Knot span index i with t[i] <= x < t[i+1]; the last span is closed at 1.
    int span;
    if (x >= 1.0) {
        span = m - p - 1;
    } else {
        auto it = std::upper_bound(t.begin() + (p - 1), t.end() - (p - 1), x);
        span = static_cast<int>(it - t.begin()) - 1;
    }

    // Cox-de Boor triangle for the p nonzero basis values on this span.
    std::vector<double> vals(static_cast<std::size_t>(p), 0.0);
    std::vector<double> left(static_cast<std::size_t>(p)), right(static_cast<std::size_t>(p));
    vals[0] = 1.0;
    for (int j = 1; j < p; ++j) {
        left[static_cast<std::size_t>(j)] = x - t[static_cast<std::size_t>(span + 1 - j)];
        right[static_cast<std::size_t>(j)] = t[static_cast<std::size_t>(span + j)] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double den = right[static_cast<std::size_t>(r + 1)] +
                               left[static_cast<std::size_t>(j - r)];
            const double tmp = vals[static_cast<std::size_t>(r)] / den;
            vals[static_cast<std::size_t>(r)] =
                saved + right[static_cast<std::size_t>(r + 1)] * tmp;
            saved = left[static_cast<std::size_t>(j - r)] * tmp;
        }
        vals[static_cast<std::size_t>(j)] = saved;
    }

    Eigen::VectorXd out = Eigen::VectorXd::Zero(space.dim);
    const int first = span - p + 1;
    for (int j = 0; j < p; ++j) {
        const int idx = first + j;
        if (idx >= 0 && idx < space.dim) out(idx) = vals[static_cast<std::size_t>(j)];
    }
    return out;
}

Eigen::MatrixXd design_matrix(const SplineSpace& space, const Eigen::VectorXd& x) {
    Eigen::MatrixXd d(x.size(), space.dim);
    for (Eigen::Index i = 0; i < x.size(); ++i) d.row(i) = eval_basis(space, x(i)).transpose();
    return d;
}

SmoothedSample SmoothedSample::from_grid_values(const RescaledGrid& grid,
                                                const Eigen::MatrixXd& values) {
    if (values.cols() != grid.size())
        throw_input("argument error: grid values column count does not match grid size");
    SmoothedSample s;
    s.grid = grid;
    s.grid_values = values;
    s.mean_values = values.colwise().mean();
    s.centered_values = values.rowwise() - s.mean_values.transpose();
    return s;
}

SmoothedSample fit(const YieldPanel& panel, const SplineSpace& space, const RescaledGrid& grid) {
    if (panel.cols() < space.dim)
        throw_input("underdetermined error: panel has " + std::to_string(panel.cols()) +
                    " maturities but the spline space (" + space.describe() +
                    ") needs at least " + std::to_string(space.dim));

    const Eigen::VectorXd x = panel.rescaled_abscissae();
    const Eigen::MatrixXd design = design_matrix(space, x);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < space.dim)
        throw_numeric("conditioning error: rank-deficient design matrix for spline space (" +
                      space.describe() + "), rank " + std::to_string(qr.rank()));

    SmoothedSample s;
    s.space = space;
    s.grid = grid;
    // One factorization, all observations: solve for the coefficient matrix.
    s.coefficients = qr.solve(panel.values.transpose()).transpose();  // n x dim

    const Eigen::MatrixXd grid_design = design_matrix(space, grid.points);
    s.grid_values = s.coefficients * grid_design.transpose();         // n x N
    s.mean_values = s.grid_values.colwise().mean();
    s.centered_values = s.grid_values.rowwise() - s.mean_values.transpose();
    return s;
}

}  // namespace termfpca
