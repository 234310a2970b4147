#include "termfpca/ns_basis.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "termfpca/errors.hpp"
#include "termfpca/rng.hpp"

#if defined(__GNUC__) && defined(__SIZEOF_FLOAT128__) && !defined(__clang__)
#include <quadmath.h>
#define TERMFPCA_HAVE_FLOAT128 1
#endif

namespace termfpca {

namespace {

#ifdef TERMFPCA_HAVE_FLOAT128
using wide = __float128;
inline wide w_exp(wide x) { return expq(x); }
inline wide w_log(wide x) { return logq(x); }
inline wide w_abs(wide x) { return fabsq(x); }
// 2^-112; avoids the Q literal extension
constexpr wide kWideEps = 0x1p-112;
// Euler-Mascheroni, split across two doubles for quad accuracy.
constexpr wide kGamma = wide(0x1.2788cfc6fb619p-1) + wide(-0x1.6cb90701fbfabp-58);
#else
using wide = long double;
inline wide w_exp(wide x) { return std::exp(x); }
inline wide w_log(wide x) { return std::log(x); }
inline wide w_abs(wide x) { return std::fabs(x); }
constexpr wide kWideEps = std::numeric_limits<long double>::epsilon();
const wide kGamma = 0.5772156649015328606065120900824024L;
#endif

// Ei(x) for x > 0 via the ascending series gamma + ln x + sum x^k/(k k!).
// All terms are positive, so no cancellation.
wide ei_series_positive(wide x) {
    wide sum = 0.0;
    wide term = 1.0;
    for (int k = 1; k < 400; ++k) {
        term *= x / k;
        const wide add = term / k;
        sum += add;
        if (add < sum * kWideEps) break;
    }
    return kGamma + w_log(x) + sum;
}

// E1(z) for 0 < z <= 1 via the alternating series; cancellation is bounded
// by a factor e at z = 1.
wide e1_series(wide z) {
    wide sum = 0.0;
    wide term = 1.0;
    int sign = 1;
    for (int k = 1; k < 80; ++k) {
        term *= z / k;
        const wide add = term / k;
        sum += sign > 0 ? add : -add;
        sign = -sign;
        if (add < w_abs(sum) * kWideEps && k > 3) break;
    }
    return -kGamma - w_log(z) + sum;
}

// E1(z) for z > 1 via the modified Lentz continued fraction
// E1(z) = e^{-z} / (z + 1 - 1/(z + 3 - 4/(z + 5 - 9/(...)))).
wide e1_continued_fraction(wide z) {
    const wide tiny = 1e-60;
    wide b = z + 1.0;
    wide c = 1.0 / tiny;
    wide d = 1.0 / b;
    wide h = d;
    for (int i = 1; i <= 300; ++i) {
        const wide a = -static_cast<wide>(i) * static_cast<wide>(i);
        b += 2.0;
        d = a * d + b;
        if (w_abs(d) < tiny) d = tiny;
        c = b + a / c;
        if (w_abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const wide del = d * c;
        h *= del;
        if (w_abs(del - 1.0) < kWideEps) break;
    }
    return h * w_exp(-z);
}

// Ei(x) for x > 40: asymptotic expansion e^x/x * sum k!/x^k truncated at the
// smallest term.
wide ei_asymptotic(wide x) {
    wide sum = 1.0;
    wide term = 1.0;
    for (int k = 1; k < 200; ++k) {
        const wide next = term * k / x;
        if (next >= term) break;  // series started diverging
        term = next;
        sum += term;
        if (term < sum * kWideEps) break;
    }
    return w_exp(x) / x * sum;
}

wide ei_wide(wide x) {
    if (x > 0) return x <= 40.0 ? ei_series_positive(x) : ei_asymptotic(x);
    const wide z = -x;
    return z <= 1.0 ? -e1_series(z) : -e1_continued_fraction(z);
}

// (1 - e^{-w}) / w, stable for all w != 0; 4-term Taylor branch near 0.
double phi_decay(double w) {
    if (std::fabs(w) < 1e-8) return 1.0 - w / 2.0 + w * w / 6.0 - w * w * w / 24.0;
    return -std::expm1(-w) / w;
}

constexpr double kThetaFloor = 1e-4;

void check_theta_domain(double theta, double tau_low, double tau_high) {
    if (!(tau_low > 0.0) || !(tau_high > tau_low))
        throw_input("argument error: need 0 < tau_low < tau_high");
    if (std::fabs(theta) < kThetaFloor)
        throw_input("degeneracy error: |theta| below floor " + std::to_string(kThetaFloor) +
                    " (factor functions collinear with the constant)");
}

}  // namespace

double exp_integral_ei(double x) {
    if (x == 0.0) throw_input("singularity error: Ei is undefined at x = 0");
    if (!(std::fabs(x) <= 700.0))
        throw_numeric("overflow error: |x| > 700 in exponential integral");
    return static_cast<double>(ei_wide(static_cast<wide>(x)));
}

NsConstants compute_constants(double theta, double tau_low, double tau_high) {
    check_theta_domain(theta, tau_low, tau_high);

    const wide A = static_cast<wide>(theta) * (static_cast<wide>(tau_high) - static_cast<wide>(tau_low));
    const wide B = static_cast<wide>(theta) * static_cast<wide>(tau_low);
    if (w_abs(B) < 1e-10)
        throw_input("degeneracy error: |B| too small, log|B| ill-defined");

    const wide D = (w_exp(-B) - w_exp(-A - B)) / A;
    const wide n2p2 = (w_exp(-2 * B) - w_exp(-2 * (A + B))) / (2 * A) - D * D;
    if (!(static_cast<double>(n2p2) > 1e-14))
        throw_numeric("degeneracy error: ||psi2_tilde||^2 <= 1e-14, basis collinear");

    const wide F = (w_log(w_abs(A + B)) - w_log(w_abs(B))) / A;
    const wide ei_mAB = ei_wide(-A - B);
    const wide ei_mB = ei_wide(-B);
    const wide ei_m2AB = ei_wide(-2 * A - 2 * B);
    const wide ei_m2B = ei_wide(-2 * B);
    const wide H = (ei_mAB - ei_mB) / A;
    const wide J = (D + 1) * H - D * F - (ei_m2AB - ei_m2B) / A;
    const wide K = -J / n2p2;
    const wide L = -F + H + J * D / n2p2;

    const wide n2p3 = 1 / (B * (A + B)) + 2 * w_exp(-A - B) / (A * (A + B)) + 2 * ei_mAB / A
                    - 2 * w_exp(-B) / (A * B) - 2 * ei_mB / A
                    - w_exp(-2 * A - 2 * B) / (A * (A + B)) - 2 * ei_m2AB / A
                    + w_exp(-2 * B) / (A * B) + 2 * ei_m2B / A
                    + K * K * (w_exp(-2 * B) - w_exp(-2 * (A + B))) / (2 * A) + L * L
                    + 2 * K * (H - (ei_m2AB - ei_m2B) / A)
                    + 2 * L * (F - H) + 2 * K * L * D;
    if (!(static_cast<double>(n2p3) > 1e-14))
        throw_numeric("degeneracy error: ||psi3_tilde||^2 <= 1e-14, basis collinear");

    NsConstants c;
    c.theta = theta;
    c.tau_low = tau_low;
    c.tau_high = tau_high;
    c.A = static_cast<double>(A);
    c.B = static_cast<double>(B);
    c.D = static_cast<double>(D);
    c.F = static_cast<double>(F);
    c.H = static_cast<double>(H);
    c.J = static_cast<double>(J);
    c.K = static_cast<double>(K);
    c.L = static_cast<double>(L);
    c.norm2_psi2_tilde = static_cast<double>(n2p2);
    c.norm2_psi3_tilde = static_cast<double>(n2p3);
    return c;
}

NsBasis build_basis(const NsConstants& constants, const RescaledGrid& grid) {
    NsBasis basis;
    basis.constants = constants;
    basis.grid = grid;
    const Eigen::Index n = grid.size();
    basis.values.resize(n, 3);
    const double s2 = std::sqrt(constants.norm2_psi2_tilde);
    const double s3 = std::sqrt(constants.norm2_psi3_tilde);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double w = constants.A * grid.points(j) + constants.B;
        const double u = std::exp(-w);
        basis.values(j, 0) = 1.0;
        basis.values(j, 1) = (u - constants.D) / s2;
        basis.values(j, 2) = (phi_decay(w) + constants.K * u + constants.L) / s3;
    }
    return basis;
}

Eigen::MatrixXd ns_raw_columns(double theta, double tau_low, double tau_high,
                               const Eigen::VectorXd& x) {
    const double A = theta * (tau_high - tau_low);
    const double B = theta * tau_low;
    Eigen::MatrixXd raw(x.size(), 3);
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double w = A * x(j) + B;
        raw(j, 0) = 1.0;
        raw(j, 1) = std::exp(-w);
        raw(j, 2) = phi_decay(w);
    }
    return raw;
}

Eigen::MatrixXd gram_schmidt_oracle(double theta, double tau_low, double tau_high,
                                    int fine_grid_size, int refine) {
    check_theta_domain(theta, tau_low, tau_high);
    if (fine_grid_size < 200)
        throw_input("argument error: fine_grid_size must be at least 200");
    if (refine < 1) throw_input("argument error: refine must be at least 1");

    const int m = (fine_grid_size - 1) * refine + 1;
    Eigen::VectorXd xq(m), wq(m);
    const double h = 1.0 / (m - 1);
    for (int j = 0; j < m; ++j) {
        xq(j) = static_cast<double>(j) / (m - 1);
        wq(j) = (j == 0 || j == m - 1) ? h / 2.0 : h;
    }
    xq(m - 1) = 1.0;

    Eigen::MatrixXd q = ns_raw_columns(theta, tau_low, tau_high, xq);
    Eigen::Matrix3d coef = Eigen::Matrix3d::Identity();  // ortho columns in raw coords
    for (int k = 0; k < 3; ++k) {
        for (int j = 0; j < k; ++j) {
            const double pr = (wq.array() * q.col(j).array() * q.col(k).array()).sum();
            q.col(k) -= pr * q.col(j);
            coef.col(k) -= pr * coef.col(j);
        }
        const double n2 = (wq.array() * q.col(k).array().square()).sum();
        if (!(n2 > 1e-30))
            throw_numeric("degeneracy error: Gram-Schmidt norm vanished at column " +
                          std::to_string(k + 1));
        const double nk = std::sqrt(n2);
        q.col(k) /= nk;
        coef.col(k) /= nk;
    }

    Eigen::VectorXd xs(fine_grid_size);
    for (int j = 0; j < fine_grid_size; ++j)
        xs(j) = static_cast<double>(j) / (fine_grid_size - 1);
    xs(fine_grid_size - 1) = 1.0;
    return ns_raw_columns(theta, tau_low, tau_high, xs) * coef;
}

double nelson_siegel_curve(double beta0, double beta1, double beta2, double theta, double tau) {
    if (theta == 0.0) throw_input("argument error: theta must be nonzero");
    if (!(tau > 0.0)) throw_input("argument error: tau must be positive");
    const double z = theta * tau;
    const double slope = phi_decay(z);
    return beta0 + beta1 * slope + beta2 * (slope - std::exp(-z));
}

double svensson_curve(const SvenssonParams& params, const std::array<double, 4>& beta,
                      double tau) {
    const double z1 = params.theta1 * tau;
    const double z2 = params.theta2 * tau;
    const double s1 = phi_decay(z1);
    return beta[0] + beta[1] * s1 + beta[2] * (s1 - std::exp(-z1)) +
           beta[3] * (phi_decay(z2) - std::exp(-z2));
}

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

Date next_day(Date d) {
    static const int dim[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int days = dim[d.month - 1];
    if (d.month == 2 && is_leap(d.year)) days = 29;
    if (++d.day > days) {
        d.day = 1;
        if (++d.month > 12) {
            d.month = 1;
            ++d.year;
        }
    }
    return d;
}

}  // namespace

YieldPanel svensson_sample(const SvenssonParams& params, const std::vector<double>& maturities,
                           int n, double sigma, std::uint64_t seed) {
    if (params.theta1 == 0.0 || params.theta2 == 0.0 || params.theta1 == params.theta2)
        throw_input("degeneracy error: need distinct nonzero theta1, theta2");
    if (n < 1) throw_input("argument error: n must be at least 1");
    if (sigma < 0.0) throw_input("argument error: sigma must be nonnegative");
    if (maturities.size() < 4)
        throw_input("argument error: need at least 4 maturities");
    for (std::size_t j = 0; j < maturities.size(); ++j) {
        if (!(maturities[j] > 0.0) || (j > 0 && !(maturities[j] > maturities[j - 1])))
            throw_input("argument error: maturities must be positive and strictly increasing");
    }

    Rng rng(seed);
    YieldPanel panel;
    panel.maturities = maturities;
    panel.values.resize(n, static_cast<Eigen::Index>(maturities.size()));
    panel.dates.reserve(static_cast<std::size_t>(n));
    Date d{2000, 1, 1};
    for (int i = 0; i < n; ++i) {
        std::array<double, 4> beta;
        for (int k = 0; k < 4; ++k)
            beta[static_cast<std::size_t>(k)] =
                params.beta[static_cast<std::size_t>(k)] +
                params.beta_spread[static_cast<std::size_t>(k)] * rng.normal();
        for (std::size_t j = 0; j < maturities.size(); ++j)
            panel.values(i, static_cast<Eigen::Index>(j)) =
                svensson_curve(params, beta, maturities[j]) + sigma * rng.normal();
        panel.dates.push_back(d);
        d = next_day(d);
    }
    return panel;
}

}  // namespace termfpca
