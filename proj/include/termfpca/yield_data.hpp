#pragma once

#include <Eigen/Dense>
#include <compare>
#include <iosfwd>
#include <string>
#include <vector>

namespace termfpca {

struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    auto operator<=>(const Date&) const = default;

    /// ISO-8601 rendering, zero-padded (e.g. 2008-09-15).
    std::string to_string() const;
};

/// Dated matrix of zero-coupon yields (percent), one row per date,
/// one column per maturity. Maturities are in years, strictly increasing.
struct YieldPanel {
    std::vector<Date> dates;
    std::vector<double> maturities;
    Eigen::MatrixXd values;  // rows() == dates.size(), cols() == maturities.size()
    std::size_t dropped_rows = 0;  // rows removed at load because of missing cells

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
    double tau_low() const { return maturities.front(); }
    double tau_high() const { return maturities.back(); }

    /// Maturities mapped through the affine rescale to [0,1]:
    /// x_j = (tau_j - tau_low) / (tau_high - tau_low).
    Eigen::VectorXd rescaled_abscissae() const;
};

/// Uniform grid on [0,1] with composite-trapezoid quadrature weights.
struct RescaledGrid {
    Eigen::VectorXd points;   // strictly increasing, points[0]=0, points[N-1]=1
    Eigen::VectorXd weights;  // positive, sum to 1

    Eigen::Index size() const { return points.size(); }
};

/// Parse a CSV yield panel. The date column is auto-detected (ISO-8601 or
/// M/D/YYYY); maturity columns match SVENY<digits> unless an explicit
/// header list is supplied. Rows with any blank or NA maturity cell are
/// dropped; surviving rows are sorted by date.
YieldPanel load_panel(std::istream& source,
                      const std::vector<std::string>& maturity_columns = {});

/// Write a panel as CSV with shortest round-trip number formatting, so that
/// load_panel(serialize_panel(p)) reproduces p bit-exactly.
void serialize_panel(const YieldPanel& panel, std::ostream& out);

/// Uniform n_grid-point grid with trapezoid weights
/// (w_0 = w_{N-1} = 1/(2(N-1)), interior 1/(N-1)).
RescaledGrid rescale(const YieldPanel& panel, int n_grid);

/// Grid construction without a panel (same contract as rescale).
RescaledGrid make_uniform_grid(int n_grid);

/// Sub-panel containing only the given calendar year's rows.
YieldPanel slice_by_year(const YieldPanel& panel, int year);

/// Distinct calendar years present, ascending.
std::vector<int> years_in_panel(const YieldPanel& panel);

/// Day-over-day differences: row i of the result is row i+1 minus row i of
/// the input, dated by the later day. Requires at least 2 rows.
YieldPanel to_differences(const YieldPanel& panel);

}  // namespace termfpca
