#include "termfpca/misspec.hpp"

#include <algorithm>
#include <cmath>

#include "termfpca/errors.hpp"
#include "termfpca/rng.hpp"

namespace termfpca {

std::string to_string(TestVariant v) {
    return v == TestVariant::syz ? "syz" : "modified";
}

TestVariant variant_from_string(const std::string& s) {
    if (s == "syz") return TestVariant::syz;
    if (s == "modified") return TestVariant::modified;
    throw_input("argument error: unknown test variant '" + s + "'");
}

ZMatrix compute_z_matrix(const CovarianceEstimate& cov, const Eigen::MatrixXd& basis,
                         int kappa, std::string basis_id) {
    if (kappa < 1 || kappa > basis.cols())
        throw_input("argument error: kappa exceeds the number of basis columns");
    const Eigen::VectorXd& w = cov.grid.weights;
    if (basis.rows() != cov.grid.size())
        throw_input("basis error: basis rows do not match the covariance grid");
    // Orthonormality in the weighted inner product, within 1e-6.
    for (Eigen::Index k = 0; k < kappa; ++k) {
        for (Eigen::Index l = 0; l <= k; ++l) {
            const double ip = (w.array() * basis.col(k).array() * basis.col(l).array()).sum();
            const double target = k == l ? 1.0 : 0.0;
            if (std::fabs(ip - target) > 1e-6)
                throw_input("basis error: candidate basis not orthonormal on the grid "
                            "(deviation " +
                            std::to_string(std::fabs(ip - target)) + " at pair " +
                            std::to_string(l + 1) + "," + std::to_string(k + 1) + ")");
        }
    }

    ZMatrix z;
    z.kappa = kappa;
    z.basis_id = std::move(basis_id);
    const Eigen::MatrixXd wb = w.asDiagonal() * basis.leftCols(kappa);
    z.entries = wb.transpose() * cov.matrix * wb;
    z.entries = ((z.entries + z.entries.transpose()) / 2.0).eval();
    return z;
}

double statistic_syz(const ZMatrix& z, int n_obs) {
    if (n_obs < 2) throw_input("argument error: n_obs must be at least 2");
    double s = 0.0;
    for (int k = 0; k < z.kappa; ++k)
        for (int l = k + 1; l < z.kappa; ++l) s += z.entries(k, l) * z.entries(k, l);
    return n_obs * s;
}

double statistic_modified(const ZMatrix& z, int n_obs) {
    return 2.0 * statistic_syz(z, n_obs);
}

std::vector<double> simulate_null(const NullSpec& spec, int n_sims, std::uint64_t seed) {
    if (n_sims < 1000) throw_input("argument error: n_sims must be at least 1000");
    if (!spec.lambda_hat.allFinite() || !std::isfinite(spec.diag_factor))
        throw_input("argument error: nonfinite weight in null specification");
    const int kappa = static_cast<int>(spec.lambda_hat.size());

    std::vector<double> weights;
    if (spec.variant == TestVariant::syz) {
        for (int k = 0; k < kappa; ++k)
            for (int l = k + 1; l < kappa; ++l)
                weights.push_back(spec.lambda_hat(k) * spec.lambda_hat(l));
    } else {
        for (int k = 0; k < kappa; ++k)
            for (int l = 0; l < kappa; ++l)
                if (k != l) weights.push_back(spec.lambda_hat(k) * spec.lambda_hat(l));
        const double e = std::max(spec.diag_factor, 0.0);
        for (int k = 0; k < kappa; ++k)
            weights.push_back(spec.lambda_hat(k) * spec.lambda_hat(k) * e);
    }

    Rng rng(seed);
    std::vector<double> draws(static_cast<std::size_t>(n_sims));
    for (auto& d : draws) {
        double s = 0.0;
        for (double wt : weights) s += wt * rng.chi_squared_1();
        d = s;
    }
    return draws;
}

double empirical_quantile(std::vector<double> draws, double level) {
    if (draws.empty()) throw_input("argument error: empty draw vector");
    std::sort(draws.begin(), draws.end());
    const double h = (static_cast<double>(draws.size()) - 1.0) * level;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= draws.size()) return draws.back();
    const double frac = h - static_cast<double>(lo);
    return draws[lo] + frac * (draws[lo + 1] - draws[lo]);
}

TestReport run_test_with_basis(const SmoothedSample& sample, const CovarianceEstimate& cov,
                               const Eigen::MatrixXd& basis_columns, TestVariant variant,
                               double alpha, int kappa, int n_sims, std::uint64_t seed,
                               std::string basis_id) {
    if (!(alpha > 0.0 && alpha <= 0.5))
        throw_input("argument error: alpha must be in (0, 0.5]");
    if (kappa < 2 || kappa > basis_columns.cols())
        throw_input("argument error: kappa must be in [2, #basis columns]");

    const Eigen::MatrixXd basis =
        orthonormalize_columns(basis_columns.leftCols(kappa), sample.grid);
    const Eigen::MatrixXd scores = compute_scores(sample, basis);
    const int n = static_cast<int>(sample.n_obs());

    NullSpec null_spec;
    null_spec.variant = variant;
    null_spec.lambda_hat = scores.array().square().colwise().mean();
    if (variant == TestVariant::modified) {
        const Eigen::VectorXd& w = sample.grid.weights;
        // ||xi_i^2||^2 = sum_j w_j xi_i(x_j)^4
        const Eigen::VectorXd quartic =
            sample.centered_values.array().pow(4).matrix() * w;
        null_spec.diag_factor = quartic.mean() - 1.0;
    }

    const ZMatrix z = compute_z_matrix(cov, basis, kappa, std::move(basis_id));
    const double stat =
        variant == TestVariant::syz ? statistic_syz(z, n) : statistic_modified(z, n);

    const std::vector<double> draws = simulate_null(null_spec, n_sims, seed);
    std::size_t at_least = 0;
    for (double d : draws)
        if (d >= stat) ++at_least;

    TestReport rep;
    rep.statistic = stat;
    rep.quantile_1ma = empirical_quantile(draws, 1.0 - alpha);
    rep.p_value = (1.0 + static_cast<double>(at_least)) / (static_cast<double>(n_sims) + 1.0);
    rep.alpha = alpha;
    rep.variant = variant;
    rep.kappa = kappa;
    rep.n_obs = n;
    rep.n_sims = n_sims;
    rep.seed = seed;
    rep.reject = stat > rep.quantile_1ma;
    rep.small_sample_warning = n < 30;
    return rep;
}

TestReport run_test(const SmoothedSample& sample, const CovarianceEstimate& cov,
                    const NsBasis& basis, TestVariant variant, double alpha, int kappa,
                    int n_sims, std::uint64_t seed) {
    TestReport rep = run_test_with_basis(sample, cov, basis.values, variant, alpha, kappa,
                                         n_sims, seed,
                                         "ns(theta=" + std::to_string(basis.constants.theta) +
                                             ")");
    rep.theta = basis.constants.theta;
    return rep;
}

ThetaScan theta_scan(const SmoothedSample& sample, const CovarianceEstimate& cov,
                     const std::vector<double>& theta_grid, double tau_low, double tau_high,
                     TestVariant variant, double alpha, int kappa, int n_sims,
                     std::uint64_t seed) {
    if (theta_grid.empty()) throw_input("argument error: empty theta grid");

    ThetaScan scan;
    bool any = false;
    for (std::size_t i = 0; i < theta_grid.size(); ++i) {
        ThetaScanEntry entry;
        entry.theta = theta_grid[i];
        try {
            const NsConstants c = compute_constants(theta_grid[i], tau_low, tau_high);
            const NsBasis b = build_basis(c, sample.grid);
            entry.report = run_test(sample, cov, b, variant, alpha, kappa, n_sims,
                                    seed + static_cast<std::uint64_t>(i));
            any = true;
        } catch (const Error& e) {
            entry.error = e.what();
        }
        scan.entries.push_back(std::move(entry));
    }
    if (!any) throw_numeric("numerical error: every theta in the grid failed");

    scan.min_p = 2.0;
    scan.max_p = -1.0;
    for (const auto& e : scan.entries) {
        if (!e.report) continue;
        if (e.report->p_value < scan.min_p) {
            scan.min_p = e.report->p_value;
            scan.argmin_theta = e.theta;
        }
        if (e.report->p_value > scan.max_p) {
            scan.max_p = e.report->p_value;
            scan.argmax_theta = e.theta;
        }
    }
    return scan;
}

}  // namespace termfpca
