#include <doctest.h>

#include <cmath>
#include <random>

#include "termfpca/errors.hpp"
#include "termfpca/fpca.hpp"
#include "termfpca/ns_basis.hpp"

using namespace termfpca;

namespace {

// 60-term power series oracle for Ei, independent of the library path.
double ei_series_oracle(double x) {
    const double gamma = 0.5772156649015329;
    double sum = 0.0, term = 1.0;
    for (int k = 1; k <= 60; ++k) {
        term *= x / k;
        sum += term / k;
    }
    return gamma + std::log(std::fabs(x)) + sum;
}

double max_col_dev_up_to_sign(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    double worst = 0.0;
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
        const double same = (a.col(k) - b.col(k)).cwiseAbs().maxCoeff();
        const double flip = (a.col(k) + b.col(k)).cwiseAbs().maxCoeff();
        worst = std::max(worst, std::min(same, flip));
    }
    return worst;
}

}  // namespace

TEST_CASE("Ei reference values") {
    CHECK(exp_integral_ei(1.0) == doctest::Approx(1.895117816355937).epsilon(1e-14));
    CHECK(exp_integral_ei(-1.0) == doctest::Approx(-0.21938393439552026).epsilon(1e-13));
    // values from the series oracle across the series branch
    for (double x : {0.25, 0.8, 2.0, 5.0, 9.0}) {
        CHECK(exp_integral_ei(x) == doctest::Approx(ei_series_oracle(x)).epsilon(1e-12));
    }
    // large-argument checks against an independently computed table
    CHECK(exp_integral_ei(45.0) == doctest::Approx(7.9439160357044538e17).epsilon(1e-12));
    CHECK(exp_integral_ei(60.0) == doctest::Approx(1.9361822139292765e24).epsilon(1e-12));
    CHECK(exp_integral_ei(-60.0) == doctest::Approx(-1.4358675656812568e-28).epsilon(1e-12));
    CHECK(exp_integral_ei(700.0) == doctest::Approx(1.4509787360525609e301).epsilon(1e-12));
    CHECK(exp_integral_ei(-700.0) == doctest::Approx(-1.4065187662340329e-307).epsilon(1e-12));
    // continuity across the series/asymptotic switch at 40
    CHECK(exp_integral_ei(40.0001) == doctest::Approx(6040306755466866.0).epsilon(1e-12));
    CHECK(exp_integral_ei(39.9999) == doctest::Approx(6039129829130776.0).epsilon(1e-12));
}

TEST_CASE("Ei sign change brackets the known zero") {
    const double x_star = 0.3725074107813668;
    CHECK(exp_integral_ei(x_star - 1e-9) < 0.0);
    CHECK(exp_integral_ei(x_star + 1e-9) > 0.0);
}

TEST_CASE("Ei domain errors") {
    CHECK_THROWS_WITH_AS(exp_integral_ei(0.0), doctest::Contains("singularity"), Error);
    CHECK_THROWS_WITH_AS(exp_integral_ei(701.0), doctest::Contains("overflow"), Error);
    CHECK_THROWS_AS(exp_integral_ei(-701.0), Error);
}

TEST_CASE("Ei derivative identity d/dx Ei = e^x/x") {
    for (double x = 0.5; x <= 5.0; x += 0.37) {
        const double h = 1e-5 * std::max(1.0, x);
        const double num = (exp_integral_ei(x + h) - exp_integral_ei(x - h)) / (2 * h);
        const double exact = std::exp(x) / x;
        CHECK(std::fabs(num - exact) / exact < 1e-6);
    }
}

TEST_CASE("compute_constants at theta=1, tau in [1,30]") {
    const NsConstants c = compute_constants(1.0, 1.0, 30.0);
    CHECK(c.A == 29.0);
    CHECK(c.B == 1.0);
    const double d_expected = (std::exp(-1.0) - std::exp(-30.0)) / 29.0;
    CHECK(c.D == doctest::Approx(d_expected).epsilon(1e-12));
    CHECK(c.D == doctest::Approx(0.0126855).epsilon(1e-4));
    CHECK(c.norm2_psi2_tilde > 0.0);
    CHECK(c.norm2_psi3_tilde > 0.0);
    // self-consistency of the projection scalar
    CHECK(std::fabs(c.D - (std::exp(-c.B) - std::exp(-c.A - c.B)) / c.A) < 1e-12);
}

TEST_CASE("compute_constants with negative theta stays finite") {
    const NsConstants c = compute_constants(-0.1, 1.0, 30.0);
    CHECK(c.A == doctest::Approx(-2.9));
    CHECK(c.B == doctest::Approx(-0.1));
    for (double v : {c.D, c.F, c.H, c.J, c.K, c.L})
        CHECK(std::isfinite(v));
    CHECK(c.norm2_psi2_tilde > 0.0);
    CHECK(c.norm2_psi3_tilde > 0.0);
}

TEST_CASE("compute_constants degeneracy guards") {
    CHECK_THROWS_WITH_AS(compute_constants(1e-6, 1.0, 30.0), doctest::Contains("degeneracy"),
                         Error);
    CHECK_THROWS_AS(compute_constants(0.5, -1.0, 30.0), Error);
    CHECK_THROWS_AS(compute_constants(0.5, 30.0, 1.0), Error);
}

TEST_CASE("build_basis: first column is identically 1") {
    const NsConstants c = compute_constants(0.5, 1.0, 30.0);
    const NsBasis b = build_basis(c, make_uniform_grid(50));
    CHECK((b.values.col(0).array() - 1.0).abs().maxCoeff() == 0.0);
}

TEST_CASE("closed forms match the Gram-Schmidt oracle across the theta grid") {
    const RescaledGrid fine = make_uniform_grid(2000);
    for (double theta : {-0.001, -0.01, -0.1, 0.001, 0.01, 0.1, 0.2, 0.5, 1.0}) {
        CAPTURE(theta);
        const NsConstants c = compute_constants(theta, 1.0, 30.0);
        const NsBasis basis = build_basis(c, fine);
        const Eigen::MatrixXd oracle = gram_schmidt_oracle(theta, 1.0, 30.0, 2000);
        CHECK(max_col_dev_up_to_sign(basis.values, oracle) <= 1e-5);
    }
}

TEST_CASE("oracle output is orthonormal in its own grid inner product") {
    // refine=1 makes the oracle's quadrature the fine grid itself
    const Eigen::MatrixXd q = gram_schmidt_oracle(0.5, 1.0, 30.0, 500, 1);
    const RescaledGrid g = make_uniform_grid(500);
    const Eigen::MatrixXd gram = q.transpose() * g.weights.asDiagonal() * q;
    CHECK((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("closed-form Gram matrix approaches identity as quadrature refines") {
    // The raw closed forms are continuum-orthonormal; on a discrete grid the
    // Gram deviates by the trapezoid error, which shrinks ~h^2.
    const NsConstants c = compute_constants(1.0, 1.0, 30.0);
    auto gram_dev = [&](int n, int refine) {
        const int m = (n - 1) * refine + 1;
        const RescaledGrid g = make_uniform_grid(m);
        const NsBasis b = build_basis(c, g);
        const Eigen::MatrixXd gram = b.values.transpose() * g.weights.asDiagonal() * b.values;
        return (gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    };
    const double at_1k = gram_dev(1000, 1);
    const double at_4k = gram_dev(1000, 4);
    CHECK(at_1k < 5e-4);
    CHECK(at_4k < at_1k / 8.0);         // at least ~h^2 improvement
    CHECK(gram_dev(2000, 16) < 1e-6);   // refined quadrature hits formula accuracy
}

TEST_CASE("grid orthonormalization cleans the coarse-grid Gram to machine precision") {
    const RescaledGrid g = make_uniform_grid(30);
    const NsConstants c = compute_constants(1.0, 1.0, 30.0);
    const Eigen::MatrixXd q = orthonormalize_columns(build_basis(c, g).values, g);
    const Eigen::MatrixXd gram = q.transpose() * g.weights.asDiagonal() * q;
    CHECK((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("slope and curvature shapes have 1 and 2 sign changes") {
    const NsConstants c = compute_constants(0.5, 1.0, 30.0);
    const NsBasis b = build_basis(c, make_uniform_grid(1000));
    CHECK(count_zeros(b.values.col(1)) == 1);
    CHECK(count_zeros(b.values.col(2)) == 2);
    // psi02 is monotone for positive theta
    Eigen::VectorXd d = b.values.col(1).tail(999) - b.values.col(1).head(999);
    CHECK((d.array() <= 0.0).all());
}

TEST_CASE("nelson_siegel_curve values and limits") {
    CHECK(nelson_siegel_curve(5.0, 0.0, 0.0, 0.7, 12.0) == 5.0);
    // tau -> 0+: slope factor -> 1, curvature factor -> 0
    CHECK(nelson_siegel_curve(4.0, -2.0, 2.0, 0.5, 1e-12) ==
          doctest::Approx(4.0 - 2.0).epsilon(1e-9));
    CHECK(nelson_siegel_curve(4.0, -2.0, 2.0, 0.5, 10.0) ==
          doctest::Approx(3.9865241).epsilon(1e-7));
    CHECK_THROWS_AS(nelson_siegel_curve(1, 1, 1, 0.0, 5.0), Error);
    CHECK_THROWS_AS(nelson_siegel_curve(1, 1, 1, 0.5, 0.0), Error);
}

TEST_CASE("maturity-unit invariance of the curve") {
    // exactly representable rescaling: tau = 12 years, tau/12 = 1
    CHECK(nelson_siegel_curve(4.0, -2.0, 2.0, 0.5, 12.0) ==
          nelson_siegel_curve(4.0, -2.0, 2.0, 6.0, 1.0));
    std::mt19937_64 eng(31);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    for (int i = 0; i < 50; ++i) {
        const double theta = u(eng), tau = 1.0 + 29.0 * u(eng) / 2.0;
        const double a = nelson_siegel_curve(4.0, -2.0, 2.0, theta, tau);
        const double b = nelson_siegel_curve(4.0, -2.0, 2.0, 12.0 * theta, tau / 12.0);
        CHECK(std::fabs(a - b) <= 2e-14 * std::fabs(a));
    }
}

TEST_CASE("span property: random curves reconstruct from the basis") {
    // fine grid + refined quadrature so the projection error reflects the
    // formulas, not the rule
    const int n = 2001;
    const RescaledGrid g = make_uniform_grid(n);
    std::mt19937_64 eng(41);
    std::normal_distribution<double> nrm(0.0, 2.0);
    for (double theta : {-0.1, 0.2, 1.0}) {
        const NsConstants c = compute_constants(theta, 1.0, 30.0);
        const NsBasis b = build_basis(c, g);
        const Eigen::MatrixXd q = orthonormalize_columns(b.values, g);
        for (int rep = 0; rep < 30; ++rep) {
            const double b0 = nrm(eng), b1 = nrm(eng), b2 = nrm(eng);
            Eigen::VectorXd y(n);
            for (int j = 0; j < n; ++j)
                y(j) = nelson_siegel_curve(b0, b1, b2, theta, 1.0 + 29.0 * g.points(j));
            const Eigen::Vector3d coords = q.transpose() * g.weights.asDiagonal() * y;
            const Eigen::VectorXd rec = q * coords;
            const double rel = (rec - y).cwiseAbs().maxCoeff() /
                               std::max(1.0, y.cwiseAbs().maxCoeff());
            CHECK(rel <= 1e-6);
        }
    }
}

TEST_CASE("coordinate map (beta0, -beta2, beta1+beta2) in the raw basis") {
    // weighted least squares against {1, u, v}: the curve lies in the span
    // pointwise, so the recovery is exact up to rounding
    const int n = 801;
    const RescaledGrid g = make_uniform_grid(n);
    std::mt19937_64 eng(43);
    std::normal_distribution<double> nrm(0.0, 2.0);
    for (double theta : {0.2, 0.5, 1.0}) {
        const Eigen::MatrixXd raw = ns_raw_columns(theta, 1.0, 30.0, g.points);
        const Eigen::VectorXd sw = g.weights.array().sqrt();
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sw.asDiagonal() * raw);
        for (int rep = 0; rep < 20; ++rep) {
            const double b0 = nrm(eng), b1 = nrm(eng), b2 = nrm(eng);
            Eigen::VectorXd y(n);
            for (int j = 0; j < n; ++j)
                y(j) = nelson_siegel_curve(b0, b1, b2, theta, 1.0 + 29.0 * g.points(j));
            const Eigen::Vector3d alpha = qr.solve(sw.asDiagonal() * y);
            CHECK(alpha(0) == doctest::Approx(b0).epsilon(1e-8));
            CHECK(alpha(1) == doctest::Approx(-b2).epsilon(1e-8));
            CHECK(alpha(2) == doctest::Approx(b1 + b2).epsilon(1e-8));
        }
    }
}

TEST_CASE("svensson_sample determinism and degenerate parameters") {
    std::vector<double> mats{1, 2, 5, 10, 20, 30};
    SvenssonParams p;
    SUBCASE("sigma=0 with zero spreads gives identical rows") {
        p.beta_spread = {0, 0, 0, 0};
        const YieldPanel panel = svensson_sample(p, mats, 3, 0.0, 1);
        CHECK((panel.values.row(0) - panel.values.row(1)).cwiseAbs().maxCoeff() == 0.0);
        CHECK((panel.values.row(0) - panel.values.row(2)).cwiseAbs().maxCoeff() == 0.0);
        CHECK(panel.values(0, 0) ==
              doctest::Approx(svensson_curve(p, p.beta, 1.0)).epsilon(1e-15));
    }
    SUBCASE("same seed, same panel") {
        const YieldPanel a = svensson_sample(p, mats, 10, 0.05, 77);
        const YieldPanel b = svensson_sample(p, mats, 10, 0.05, 77);
        CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
        const YieldPanel c = svensson_sample(p, mats, 10, 0.05, 78);
        CHECK((a.values - c.values).cwiseAbs().maxCoeff() > 0.0);
    }
    SUBCASE("theta1 == theta2 is degenerate") {
        p.theta2 = p.theta1;
        CHECK_THROWS_WITH_AS(svensson_sample(p, mats, 3, 0.0, 1),
                             doctest::Contains("degeneracy"), Error);
    }
}
