#include <doctest.h>

#include <random>

#include "termfpca/bspline.hpp"
#include "termfpca/errors.hpp"
#include "termfpca/ns_basis.hpp"

using namespace termfpca;

namespace {

YieldPanel panel_from_values(const Eigen::MatrixXd& values, double tau_low, double tau_high) {
    YieldPanel p;
    p.values = values;
    for (Eigen::Index j = 0; j < values.cols(); ++j)
        p.maturities.push_back(tau_low + (tau_high - tau_low) * static_cast<double>(j) /
                                             static_cast<double>(values.cols() - 1));
    for (Eigen::Index i = 0; i < values.rows(); ++i)
        p.dates.push_back({2000, 1, 1 + static_cast<int>(i)});
    return p;
}

}  // namespace

TEST_CASE("build_space: dimension bookkeeping") {
    const SplineSpace cubic = build_space(4, 30);
    CHECK(cubic.dim == 32);
    CHECK(cubic.knot_vector.size() == 36);
    CHECK(cubic.knot_vector.front() == 0.0);
    CHECK(cubic.knot_vector[3] == 0.0);
    CHECK(cubic.knot_vector[4] > 0.0);
    CHECK(cubic.knot_vector.back() == 1.0);

    const SplineSpace linear = build_space(2, 30);
    CHECK(linear.dim == 30);

    CHECK_THROWS_AS(build_space(4, 3), Error);
    CHECK_THROWS_AS(build_space(1, 10), Error);
    CHECK_THROWS_AS(build_space(7, 10), Error);
}

TEST_CASE("eval_basis: clamped boundaries") {
    for (int order : {2, 3, 4, 6}) {
        const SplineSpace s = build_space(order, 12);
        const Eigen::VectorXd at0 = eval_basis(s, 0.0);
        CHECK(at0(0) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(at0.tail(s.dim - 1).cwiseAbs().maxCoeff() == 0.0);
        const Eigen::VectorXd at1 = eval_basis(s, 1.0);
        CHECK(at1(s.dim - 1) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(at1.head(s.dim - 1).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("eval_basis: linear hats on a single interval") {
    const SplineSpace s = build_space(2, 2);
    REQUIRE(s.dim == 2);
    const Eigen::VectorXd v = eval_basis(s, 0.25);
    CHECK(v(0) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(v(1) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("eval_basis rejects points outside [0,1]") {
    const SplineSpace s = build_space(4, 10);
    CHECK_THROWS_AS(eval_basis(s, -0.01), Error);
    CHECK_THROWS_AS(eval_basis(s, 1.01), Error);
}

TEST_CASE("partition of unity at 1000 random points") {
    std::mt19937_64 eng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int order : {2, 4, 5}) {
        const SplineSpace s = build_space(order, 17);
        for (int i = 0; i < 1000; ++i) {
            const Eigen::VectorXd v = eval_basis(s, u(eng));
            CHECK(v.minCoeff() >= 0.0);
            CHECK(std::fabs(v.sum() - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("fit reproduces constants exactly") {
    const Eigen::MatrixXd values = Eigen::MatrixXd::Constant(4, 30, 5.0);
    const YieldPanel p = panel_from_values(values, 1.0, 30.0);
    const RescaledGrid g = make_uniform_grid(30);
    for (int order : {2, 4}) {
        const SmoothedSample s = fit(p, build_space(order, 20), g);
        CHECK((s.grid_values.array() - 5.0).abs().maxCoeff() < 1e-12);
        CHECK(s.centered_values.cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("fit reproduces cubic polynomials to rounding") {
    Eigen::MatrixXd values(2, 30);
    for (int j = 0; j < 30; ++j) {
        const double x = j / 29.0;
        values(0, j) = 1.0 + 2.0 * x - 3.0 * x * x + 0.5 * x * x * x;
        values(1, j) = -0.25 + x * x;
    }
    const YieldPanel p = panel_from_values(values, 1.0, 30.0);
    const SmoothedSample s = fit(p, build_space(4, 12), make_uniform_grid(30));
    // residual at the abscissae
    const Eigen::MatrixXd at_obs =
        s.coefficients * design_matrix(s.space, p.rescaled_abscissae()).transpose();
    CHECK((at_obs - values).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("fit approximates smooth four-factor curves on a fine grid") {
    // noise-free synthetic curves observed densely enough for 30 knots
    std::vector<double> maturities(60);
    for (int j = 0; j < 60; ++j) maturities[static_cast<std::size_t>(j)] = 1.0 + 29.0 * j / 59.0;
    SvenssonParams params;
    params.beta_spread = {0, 0, 0, 0};
    const YieldPanel p = svensson_sample(params, maturities, 2, 0.0, 99);
    const RescaledGrid fine = make_uniform_grid(1000);
    const SmoothedSample s = fit(p, build_space(4, 30), fine);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < fine.size(); ++j) {
        const double tau = 1.0 + 29.0 * fine.points(j);
        worst = std::max(worst, std::fabs(s.grid_values(0, j) -
                                          svensson_curve(params, params.beta, tau)));
    }
    CHECK(worst <= 1e-3);
}

TEST_CASE("fit: underdetermined and mismatched spaces error") {
    const Eigen::MatrixXd values = Eigen::MatrixXd::Constant(3, 10, 5.0);
    const YieldPanel p = panel_from_values(values, 1.0, 30.0);
    CHECK_THROWS_WITH_AS(fit(p, build_space(4, 30), make_uniform_grid(30)),
                         doctest::Contains("underdetermined"), Error);
}

TEST_CASE("least-squares optimality: coefficient perturbations never improve RSS") {
    std::mt19937_64 eng(5);
    std::normal_distribution<double> nrm(4.0, 1.0);
    Eigen::MatrixXd values(1, 30);
    for (int j = 0; j < 30; ++j) values(0, j) = nrm(eng);
    const YieldPanel p = panel_from_values(values, 1.0, 30.0);
    const SplineSpace space = build_space(4, 10);
    const SmoothedSample s = fit(p, space, make_uniform_grid(30));

    const Eigen::MatrixXd design = design_matrix(space, p.rescaled_abscissae());
    const Eigen::VectorXd base_res = design * s.coefficients.row(0).transpose() -
                                     values.row(0).transpose();
    const double base_rss = base_res.squaredNorm();
    for (Eigen::Index k = 0; k < space.dim; ++k) {
        for (double eps : {1e-4, -1e-4}) {
            Eigen::VectorXd c = s.coefficients.row(0).transpose();
            c(k) += eps;
            CHECK((design * c - values.row(0).transpose()).squaredNorm() >= base_rss - 1e-15);
        }
    }
}

TEST_CASE("fit is linear in the data") {
    std::mt19937_64 eng(17);
    std::normal_distribution<double> nrm(0.0, 1.0);
    Eigen::MatrixXd a(3, 30), b(3, 30);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 30; ++j) {
            a(i, j) = nrm(eng);
            b(i, j) = nrm(eng);
        }
    const SplineSpace space = build_space(4, 14);
    const RescaledGrid g = make_uniform_grid(30);
    const double ca = 1.75, cb = -0.4;
    const SmoothedSample fa = fit(panel_from_values(a, 1, 30), space, g);
    const SmoothedSample fb = fit(panel_from_values(b, 1, 30), space, g);
    const SmoothedSample fab = fit(panel_from_values(ca * a + cb * b, 1, 30), space, g);
    CHECK((fab.coefficients - ca * fa.coefficients - cb * fb.coefficients)
              .cwiseAbs()
              .maxCoeff() < 1e-9);
}

TEST_CASE("refitting smoothed values reproduces coefficients") {
    std::mt19937_64 eng(23);
    std::normal_distribution<double> nrm(4.0, 0.7);
    Eigen::MatrixXd values(2, 30);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 30; ++j) values(i, j) = nrm(eng);
    YieldPanel p = panel_from_values(values, 1.0, 30.0);
    const SplineSpace space = build_space(4, 12);
    const RescaledGrid g = make_uniform_grid(30);
    const SmoothedSample s1 = fit(p, space, g);

    // sample the fitted splines at the original abscissae and refit
    YieldPanel p2 = p;
    p2.values = s1.coefficients * design_matrix(space, p.rescaled_abscissae()).transpose();
    const SmoothedSample s2 = fit(p2, space, g);
    CHECK((s1.coefficients - s2.coefficients).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("grid values equal the basis expansion of the coefficients") {
    std::mt19937_64 eng(29);
    std::normal_distribution<double> nrm(3.0, 1.0);
    Eigen::MatrixXd values(2, 30);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 30; ++j) values(i, j) = nrm(eng);
    const SmoothedSample s =
        fit(panel_from_values(values, 1.0, 30.0), build_space(3, 15), make_uniform_grid(41));
    for (Eigen::Index j = 0; j < s.grid.size(); ++j) {
        const Eigen::VectorXd basis = eval_basis(s.space, s.grid.points(j));
        CHECK(s.grid_values(0, j) ==
              doctest::Approx(s.coefficients.row(0).dot(basis)).epsilon(1e-10));
    }
    // exact centering
    CHECK(s.centered_values.colwise().mean().cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("from_grid_values centers the data") {
    const RescaledGrid g = make_uniform_grid(5);
    Eigen::MatrixXd v(2, 5);
    v << 1, 2, 3, 4, 5, 3, 4, 5, 6, 7;
    const SmoothedSample s = SmoothedSample::from_grid_values(g, v);
    CHECK(s.mean_values(0) == 2.0);
    CHECK(s.centered_values(0, 0) == -1.0);
    CHECK(s.centered_values(1, 0) == 1.0);
    CHECK(s.coefficients.size() == 0);
}
