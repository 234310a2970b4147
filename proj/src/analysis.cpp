#include "termfpca/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "termfpca/errors.hpp"
#include "termfpca/format.hpp"
#include "termfpca/ns_basis.hpp"
#include "termfpca/rng.hpp"
#include "termfpca/svg.hpp"
#include "termfpca/yield_data.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace termfpca {

namespace {
constexpr const char* kVersion = "termfpca 1.0.0";
}

void RunConfig::validate() const {
    if (spline_order < 2 || spline_order > 6)
        throw_input("config error: spline.order must be in [2,6]");
    if (spline_knots < spline_order)
        throw_input("config error: spline.knots must be >= spline.order");
    if (grid_size < 2) throw_input("config error: grid size must be >= 2");
    if (kappa < 2 || kappa > 3)
        throw_input("config error: kappa must be 2 or 3 for the three-function basis");
    if (!(alpha > 0.0 && alpha <= 0.5)) throw_input("config error: alpha must be in (0, 0.5]");
    if (n_sims < 1000) throw_input("config error: sims must be >= 1000");
    if (theta_grid.empty()) throw_input("config error: theta grid is empty");
    for (double t : theta_grid)
        if (!std::isfinite(t)) throw_input("config error: nonfinite theta in grid");
}

namespace {

json config_to_json_obj(const RunConfig& c) {
    json j;
    j["input"] = c.input_path;
    j["output_dir"] = c.output_dir;
    j["spline"]["order"] = c.spline_order;
    j["spline"]["knots"] = c.spline_knots;
    j["grid"] = c.grid_size;
    j["kappa"] = c.kappa;
    j["alpha"] = c.alpha;
    j["sims"] = c.n_sims;
    j["seed"] = c.seed;
    j["theta_grid"] = c.theta_grid;
    j["variant"] = to_string(c.variant);
    j["diagonal_policy"] = c.diagonal_policy == DiagonalPolicy::include ? "include" : "interpolate";
    j["by_year"] = c.by_year;
    j["differences"] = c.differences;
    j["maturity_cols"] = c.maturity_cols;
    return j;
}

RunConfig config_from_json_obj(const json& j) {
    RunConfig c;
    c.input_path = j.at("input").get<std::string>();
    c.output_dir = j.at("output_dir").get<std::string>();
    c.spline_order = j.at("spline").at("order").get<int>();
    c.spline_knots = j.at("spline").at("knots").get<int>();
    c.grid_size = j.at("grid").get<int>();
    c.kappa = j.at("kappa").get<int>();
    c.alpha = j.at("alpha").get<double>();
    c.n_sims = j.at("sims").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.theta_grid = j.at("theta_grid").get<std::vector<double>>();
    c.variant = variant_from_string(j.at("variant").get<std::string>());
    const auto pol = j.at("diagonal_policy").get<std::string>();
    if (pol == "include") c.diagonal_policy = DiagonalPolicy::include;
    else if (pol == "interpolate") c.diagonal_policy = DiagonalPolicy::interpolate;
    else throw_input("config error: unknown diagonal policy '" + pol + "'");
    c.by_year = j.at("by_year").get<bool>();
    c.differences = j.at("differences").get<bool>();
    c.maturity_cols = j.at("maturity_cols").get<std::vector<std::string>>();
    return c;
}

}  // namespace

std::string RunConfig::to_json() const { return config_to_json_obj(*this).dump(2); }

RunConfig RunConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw_input(std::string("config error: bad JSON: ") + e.what());
    }
    return config_from_json_obj(j);
}

std::string RunManifest::to_json() const {
    json j;
    j["version"] = artifact_version;
    j["config"] = config_to_json_obj(config);
    j["outputs"] = outputs;
    j["warnings"] = warnings;
    j["timings"] = timings_ms;
    return j.dump(2);
}

int clamp_knots(int requested_knots, int order, int n_cols) {
    const int max_knots = n_cols - order + 2;  // dim = knots + order - 2 <= n_cols
    if (max_knots < order)
        throw_input("underdetermined error: " + std::to_string(n_cols) +
                    " maturity columns cannot support order-" + std::to_string(order) +
                    " splines");
    return std::min(requested_knots, max_knots);
}

namespace {

int thread_cap(std::size_t n_jobs) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("TERMFPCA_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(v));
    }
    return static_cast<int>(std::min<std::size_t>(hw, n_jobs));
}

void write_text_file(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw_io("I/O error: cannot open '" + path.string() + "' for writing");
    out << body;
    if (!out) throw_io("I/O error: write failed for '" + path.string() + "'");
}

struct WindowOutcome {
    std::vector<std::string> files;     // paths relative to output_dir
    std::vector<std::string> warnings;
    double min_p = 1.0, max_p = 0.0;
    double argmin_theta = 0.0, argmax_theta = 0.0;
    double elapsed_ms = 0.0;
};

std::string percent_label(double ratio) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f%%", 100.0 * ratio);
    return buf;
}

WindowOutcome analyze_window(const YieldPanel& panel, const std::string& window,
                             const RunConfig& cfg, const fs::path& out_root) {
    const auto t0 = std::chrono::steady_clock::now();
    WindowOutcome res;
    const fs::path dir = out_root / window;
    fs::create_directories(dir);
    auto rel = [&](const std::string& name) { return window + "/" + name; };

    const int eff_knots = clamp_knots(cfg.spline_knots, cfg.spline_order,
                                      static_cast<int>(panel.cols()));
    if (eff_knots != cfg.spline_knots)
        res.warnings.push_back(window + ": spline.knots reduced from " +
                               std::to_string(cfg.spline_knots) + " to " +
                               std::to_string(eff_knots) +
                               " (basis dimension cannot exceed the maturity count)");

    const SplineSpace space = build_space(cfg.spline_order, eff_knots);
    const RescaledGrid grid = rescale(panel, cfg.grid_size);
    const SmoothedSample sample = fit(panel, space, grid);
    const CovarianceEstimate cov = estimate_covariance(sample, cfg.diagonal_policy);

    const int k_max = static_cast<int>(std::min<Eigen::Index>(grid.size(), 10));
    const FpcaResult fpca = eigendecompose(cov, k_max);
    if (fpca.clipped_negative > 0 && cfg.diagonal_policy == DiagonalPolicy::interpolate)
        res.warnings.push_back(window + ": " + std::to_string(fpca.clipped_negative) +
                               " negative eigenvalues clipped to 0 under the interpolate policy");
    if (panel.rows() < 30)
        res.warnings.push_back(window + ": small-sample warning, only " +
                               std::to_string(panel.rows()) + " observations");

    // --- covariance heatmap ---
    {
        HeatmapSpec spec;
        spec.title = "Covariance estimate, window " + window;
        spec.matrix = cov.matrix;
        emit_svg(spec, (dir / "covariance.svg").string());
        res.files.push_back(rel("covariance.svg"));
    }

    // --- eigenfunction lines with explained-variance annotations ---
    {
        LinePlotSpec spec;
        spec.title = "Functional principal components, window " + window;
        spec.x_label = "rescaled maturity";
        spec.y_label = "loading";
        const int k_plot = std::min(3, static_cast<int>(fpca.eigenfunctions.cols()));
        for (int k = 0; k < k_plot; ++k) {
            LineSeries s;
            s.label = "FPC" + std::to_string(k + 1) + " (" +
                      percent_label(fpca.explained_ratio(k)) + ")";
            s.x.assign(grid.points.data(), grid.points.data() + grid.size());
            s.y.assign(fpca.eigenfunctions.col(k).data(),
                       fpca.eigenfunctions.col(k).data() + grid.size());
            spec.series.push_back(std::move(s));
        }
        emit_svg(spec, (dir / "eigenfunctions.svg").string());
        res.files.push_back(rel("eigenfunctions.svg"));
    }

    // --- component effect plots: mean +- sqrt(lambda_k) psi_k ---
    const int k_eff = std::min(4, static_cast<int>(fpca.eigenfunctions.cols()));
    for (int k = 1; k <= k_eff; ++k) {
        auto [up, down] = fpc_effect_curves(fpca, sample.mean_values, k, 1.0);
        LinePlotSpec spec;
        spec.title = "Effect of FPC" + std::to_string(k) + ", window " + window;
        spec.x_label = "rescaled maturity";
        spec.y_label = "yield (percent)";
        std::vector<double> xs(grid.points.data(), grid.points.data() + grid.size());
        spec.series.push_back({"mean", xs, {sample.mean_values.data(),
                                            sample.mean_values.data() + grid.size()}});
        spec.series.push_back({"mean + sqrt(lambda) psi", xs, {up.data(), up.data() + grid.size()}});
        spec.series.push_back({"mean - sqrt(lambda) psi", xs,
                               {down.data(), down.data() + grid.size()}});
        const std::string name = "effects_k" + std::to_string(k) + ".svg";
        emit_svg(spec, (dir / name).string());
        res.files.push_back(rel(name));
    }

    // --- zero counts ---
    {
        std::string csv = "component,eigenvalue,explained_ratio,zero_count\n";
        for (int k = 0; k < k_eff; ++k) {
            int zc = -1;
            try {
                zc = count_zeros(fpca.eigenfunctions.col(k));
            } catch (const Error&) {
                // degenerate eigenfunction; leave the count empty
            }
            csv += std::to_string(k + 1) + "," + format_double(fpca.eigenvalues(k)) + "," +
                   format_double(fpca.explained_ratio(k)) + "," +
                   (zc >= 0 ? std::to_string(zc) : std::string()) + "\n";
        }
        write_text_file(dir / "zero_counts.csv", csv);
        res.files.push_back(rel("zero_counts.csv"));
    }

    // --- scores: FPC scores plus candidate-basis scores at the first theta ---
    {
        const int k_sc = std::min(cfg.kappa, static_cast<int>(fpca.eigenfunctions.cols()));
        const Eigen::MatrixXd fpc_scores =
            compute_scores(sample, fpca.eigenfunctions.leftCols(k_sc));
        Eigen::MatrixXd ns_scores;
        bool have_ns = false;
        try {
            const NsConstants c =
                compute_constants(cfg.theta_grid.front(), panel.tau_low(), panel.tau_high());
            const NsBasis nb = build_basis(c, grid);
            ns_scores = compute_scores(
                sample, orthonormalize_columns(nb.values.leftCols(cfg.kappa), grid));
            have_ns = true;
        } catch (const Error& e) {
            res.warnings.push_back(window +
                                   ": candidate-basis scores omitted: " + std::string(e.what()));
        }
        std::string csv = "date";
        for (int k = 1; k <= k_sc; ++k) csv += ",fpc" + std::to_string(k);
        if (have_ns)
            for (int k = 1; k <= cfg.kappa; ++k) csv += ",ns" + std::to_string(k);
        csv += "\n";
        for (Eigen::Index i = 0; i < sample.n_obs(); ++i) {
            csv += panel.dates[static_cast<std::size_t>(i)].to_string();
            for (int k = 0; k < k_sc; ++k) csv += "," + format_double(fpc_scores(i, k));
            if (have_ns)
                for (int k = 0; k < cfg.kappa; ++k) csv += "," + format_double(ns_scores(i, k));
            csv += "\n";
        }
        write_text_file(dir / "scores.csv", csv);
        res.files.push_back(rel("scores.csv"));
    }

    // --- theta scan: p-value table and bar chart ---
    {
        const ThetaScan scan =
            theta_scan(sample, cov, cfg.theta_grid, panel.tau_low(), panel.tau_high(),
                       cfg.variant, cfg.alpha, cfg.kappa, cfg.n_sims, cfg.seed);
        std::string csv = "window,theta,variant,kappa,n_obs,statistic,quantile,p_value,reject\n";
        BarChartSpec bars;
        bars.title = "Misspecification test p-values, window " + window;
        bars.y_label = "p-value";
        bars.legend_primary = to_string(cfg.variant) + " variant";
        bars.reference_line = cfg.alpha;
        for (const auto& e : scan.entries) {
            if (!e.report) {
                res.warnings.push_back(window + ": theta " + format_double(e.theta) +
                                       " failed: " + e.error);
                continue;
            }
            const TestReport& r = *e.report;
            csv += window + "," + format_double(e.theta) + "," + to_string(r.variant) + "," +
                   std::to_string(r.kappa) + "," + std::to_string(r.n_obs) + "," +
                   format_double(r.statistic) + "," + format_double(r.quantile_1ma) + "," +
                   format_double(r.p_value) + "," + (r.reject ? "true" : "false") + "\n";
            bars.labels.push_back(format_double(e.theta));
            bars.values.push_back(r.p_value);
        }
        write_text_file(dir / "pvalues.csv", csv);
        res.files.push_back(rel("pvalues.csv"));
        emit_svg(bars, (dir / "pvalues.svg").string());
        res.files.push_back(rel("pvalues.svg"));
        res.min_p = scan.min_p;
        res.max_p = scan.max_p;
        res.argmin_theta = scan.argmin_theta;
        res.argmax_theta = scan.argmax_theta;
    }

    std::sort(res.files.begin(), res.files.end());
    res.elapsed_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    return res;
}

}  // namespace

RunManifest cmd_analyze(const RunConfig& cfg) {
    cfg.validate();

    const fs::path out_root(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(out_root, ec);
    if (ec) throw_io("I/O error: cannot create output directory '" + cfg.output_dir + "'");
    {
        // Fail before computing anything if the directory is not writable.
        const fs::path probe = out_root / ".write_probe";
        std::ofstream p(probe);
        if (!p) throw_io("I/O error: output directory '" + cfg.output_dir + "' is not writable");
        p.close();
        fs::remove(probe, ec);
    }

    std::ifstream in(cfg.input_path);
    if (!in) throw_input("input error: cannot open '" + cfg.input_path + "'");
    YieldPanel panel = load_panel(in, cfg.maturity_cols);
    if (cfg.differences) panel = to_differences(panel);

    struct Job {
        std::string window;
        YieldPanel panel;
    };
    std::vector<Job> jobs;
    jobs.push_back({"full", panel});
    if (cfg.by_year)
        for (int y : years_in_panel(panel)) jobs.push_back({std::to_string(y), slice_by_year(panel, y)});

    std::vector<WindowOutcome> outcomes(jobs.size());
    std::vector<std::string> job_errors(jobs.size());
    std::atomic<std::size_t> next{0};
    const int n_threads = thread_cap(jobs.size());
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                outcomes[i] = analyze_window(jobs[i].panel, jobs[i].window, cfg, out_root);
            } catch (const std::exception& e) {
                job_errors[i] = e.what();
            }
        }
    };
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < jobs.size(); ++i)
        if (!job_errors[i].empty())
            throw_numeric("window '" + jobs[i].window + "' failed: " + job_errors[i]);

    RunManifest manifest;
    manifest.artifact_version = kVersion;
    manifest.config = cfg;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const auto& o = outcomes[i];
        manifest.outputs.insert(manifest.outputs.end(), o.files.begin(), o.files.end());
        manifest.warnings.insert(manifest.warnings.end(), o.warnings.begin(), o.warnings.end());
        manifest.timings_ms[jobs[i].window] = o.elapsed_ms;
    }

    if (cfg.by_year) {
        std::string csv = "year,min_p,argmin_theta,max_p,argmax_theta\n";
        BarChartSpec bars;
        bars.title = "Yearly p-value range over the theta grid";
        bars.y_label = "p-value";
        bars.legend_primary = "min over theta";
        bars.legend_secondary = "max over theta";
        bars.reference_line = cfg.alpha;
        for (std::size_t i = 1; i < jobs.size(); ++i) {
            const auto& o = outcomes[i];
            csv += jobs[i].window + "," + format_double(o.min_p) + "," +
                   format_double(o.argmin_theta) + "," + format_double(o.max_p) + "," +
                   format_double(o.argmax_theta) + "\n";
            bars.labels.push_back(jobs[i].window.size() >= 4 ? jobs[i].window.substr(2)
                                                             : jobs[i].window);
            bars.values.push_back(o.min_p);
            bars.values_secondary.push_back(o.max_p);
        }
        write_text_file(out_root / "yearly_pvalues.csv", csv);
        manifest.outputs.push_back("yearly_pvalues.csv");
        emit_svg(bars, (out_root / "yearly_pvalues.svg").string());
        manifest.outputs.push_back("yearly_pvalues.svg");
    }

    std::sort(manifest.outputs.begin(), manifest.outputs.end());
    std::sort(manifest.warnings.begin(), manifest.warnings.end());
    write_text_file(out_root / "manifest.json", manifest.to_json() + "\n");
    return manifest;
}

// ---------------------------------------------------------------------------
// Selftest
// ---------------------------------------------------------------------------

namespace {

// Double-precision constants assembly with an injectable exponential
// integral. Used only by the selftest so a corrupted Ei is observable; the
// library path assembles in extended precision instead.
NsConstants constants_with_ei(double theta, double tau_low, double tau_high,
                              const std::function<double(double)>& ei) {
    const double a = theta * (tau_high - tau_low);
    const double b = theta * tau_low;
    NsConstants c;
    c.theta = theta;
    c.tau_low = tau_low;
    c.tau_high = tau_high;
    c.A = a;
    c.B = b;
    c.D = (std::exp(-b) - std::exp(-a - b)) / a;
    c.norm2_psi2_tilde = (std::exp(-2 * b) - std::exp(-2 * (a + b))) / (2 * a) - c.D * c.D;
    c.F = (std::log(std::fabs(a + b)) - std::log(std::fabs(b))) / a;
    const double ei_mab = ei(-a - b), ei_mb = ei(-b);
    const double ei_m2ab = ei(-2 * a - 2 * b), ei_m2b = ei(-2 * b);
    c.H = (ei_mab - ei_mb) / a;
    c.J = (c.D + 1) * c.H - c.D * c.F - (ei_m2ab - ei_m2b) / a;
    c.K = -c.J / c.norm2_psi2_tilde;
    c.L = -c.F + c.H + c.J * c.D / c.norm2_psi2_tilde;
    c.norm2_psi3_tilde =
        1 / (b * (a + b)) + 2 * std::exp(-a - b) / (a * (a + b)) + 2 * ei_mab / a -
        2 * std::exp(-b) / (a * b) - 2 * ei_mb / a - std::exp(-2 * a - 2 * b) / (a * (a + b)) -
        2 * ei_m2ab / a + std::exp(-2 * b) / (a * b) + 2 * ei_m2b / a +
        c.K * c.K * (std::exp(-2 * b) - std::exp(-2 * (a + b))) / (2 * a) + c.L * c.L +
        2 * c.K * (c.H - (ei_m2ab - ei_m2b) / a) + 2 * c.L * (c.F - c.H) + 2 * c.K * c.L * c.D;
    if (!(c.norm2_psi2_tilde > 0) || !(c.norm2_psi3_tilde > 0))
        throw_numeric("degeneracy error: nonpositive squared norm in constants");
    return c;
}

// chi-squared(3) CDF in closed form: erf(sqrt(x/2)) - sqrt(2x/pi) e^{-x/2}.
double chi2_3_cdf(double x) {
    if (x <= 0) return 0.0;
    return std::erf(std::sqrt(x / 2.0)) -
           std::sqrt(2.0 * x / M_PI) * std::exp(-x / 2.0);
}

SelftestReport::Check check_gram_schmidt(const std::function<double(double)>& ei) {
    SelftestReport::Check c{"closed-form basis vs Gram-Schmidt oracle", false, ""};
    double worst = 0.0;
    for (double theta : {-0.1, 0.2, 1.0}) {
        const NsConstants k = constants_with_ei(theta, 1.0, 30.0, ei);
        const RescaledGrid g = make_uniform_grid(2000);
        const NsBasis basis = build_basis(k, g);
        const Eigen::MatrixXd oracle = gram_schmidt_oracle(theta, 1.0, 30.0, 2000, 16);
        for (int col = 0; col < 3; ++col) {
            const double same = (basis.values.col(col) - oracle.col(col)).cwiseAbs().maxCoeff();
            const double flipped = (basis.values.col(col) + oracle.col(col)).cwiseAbs().maxCoeff();
            worst = std::max(worst, std::min(same, flipped));
        }
    }
    c.passed = worst <= 1e-5;
    c.detail = "max column deviation " + format_double(worst) + " (tol 1e-5)";
    return c;
}

SelftestReport::Check check_z_duality(std::uint64_t seed) {
    SelftestReport::Check c{"Z-matrix duality (quadrature vs scores)", false, ""};
    Rng rng(seed);
    const RescaledGrid g = make_uniform_grid(10);
    Eigen::MatrixXd vals(20, 10);
    for (Eigen::Index i = 0; i < vals.rows(); ++i)
        for (Eigen::Index j = 0; j < vals.cols(); ++j) vals(i, j) = rng.normal();
    const SmoothedSample s = SmoothedSample::from_grid_values(g, vals);
    const CovarianceEstimate cov = estimate_covariance(s, DiagonalPolicy::include);
    Eigen::MatrixXd raw(10, 3);
    for (Eigen::Index i = 0; i < 10; ++i)
        for (Eigen::Index j = 0; j < 3; ++j) raw(i, j) = rng.normal();
    const Eigen::MatrixXd basis = orthonormalize_columns(raw, g);
    const ZMatrix z = compute_z_matrix(cov, basis, 3);
    const Eigen::MatrixXd scores = compute_scores(s, basis);
    const Eigen::MatrixXd score_form = scores.transpose() * scores / 20.0;
    const double dev = (z.entries - score_form).cwiseAbs().maxCoeff();
    c.passed = dev <= 1e-9;
    c.detail = "max |quadrature - score form| = " + format_double(dev) + " (tol 1e-9)";
    return c;
}

SelftestReport::Check check_chi2_null(std::uint64_t seed) {
    SelftestReport::Check c{"chi-squared(3) null sanity", false, ""};
    NullSpec spec;
    spec.lambda_hat = Eigen::VectorXd::Ones(3);
    spec.variant = TestVariant::syz;
    std::vector<double> draws = simulate_null(spec, 100000, seed);
    const double q95 = empirical_quantile(draws, 0.95);
    std::sort(draws.begin(), draws.end());
    double ks = 0.0;
    const double n = static_cast<double>(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i) {
        const double f = chi2_3_cdf(draws[i]);
        ks = std::max(ks, std::fabs(f - static_cast<double>(i) / n));
        ks = std::max(ks, std::fabs(static_cast<double>(i + 1) / n - f));
    }
    const bool ok_q = std::fabs(q95 - 7.814727903251178) <= 0.15;
    c.passed = ok_q && ks <= 0.01;
    c.detail = "95th pct " + format_double(q95) + " (target 7.8147 +- 0.15), KS " +
               format_double(ks) + " (tol 0.01)";
    return c;
}

SelftestReport::Check check_zero_counts(std::uint64_t seed) {
    SelftestReport::Check c{"synthetic factor-curve zero counts", false, ""};
    std::vector<double> maturities(30);
    for (int j = 0; j < 30; ++j) maturities[static_cast<std::size_t>(j)] = j + 1.0;
    const SplineSpace space = build_space(4, 20);
    int ok = 0, okev = 0;
    const int reps = 10;
    for (int r = 0; r < reps; ++r) {
        const YieldPanel panel =
            svensson_sample(SvenssonParams{}, maturities, 800, 0.05, seed + static_cast<std::uint64_t>(r));
        const RescaledGrid grid = rescale(panel, 30);
        const SmoothedSample sm = fit(panel, space, grid);
        const CovarianceEstimate cov = estimate_covariance(sm, DiagonalPolicy::include);
        const FpcaResult f = eigendecompose(cov, 10);
        const bool zc_ok = count_zeros(f.eigenfunctions.col(0)) == 0 &&
                           count_zeros(f.eigenfunctions.col(1)) == 1 &&
                           count_zeros(f.eigenfunctions.col(2)) == 2;
        ok += zc_ok;
        okev += f.explained_ratio.head(3).sum() >= 0.95;
    }
    c.passed = ok >= 9 && okev == reps;
    c.detail = "zero counts (0,1,2) in " + std::to_string(ok) + "/10, explained>=0.95 in " +
               std::to_string(okev) + "/10";
    return c;
}

SelftestReport::Check check_size(std::uint64_t seed) {
    SelftestReport::Check c{"test size calibration under the null", false, ""};
    const RescaledGrid grid = make_uniform_grid(30);
    const NsConstants k = compute_constants(0.5, 1.0, 30.0);
    const Eigen::MatrixXd basis =
        orthonormalize_columns(build_basis(k, grid).values, grid);
    const Eigen::Vector3d sd(2.0, 1.0, 0.5);  // score standard deviations
    int rejects = 0;
    const int reps = 60;
    for (int r = 0; r < reps; ++r) {
        Rng rng(seed + 1000 + static_cast<std::uint64_t>(r));
        Eigen::MatrixXd curves(300, grid.size());
        for (Eigen::Index i = 0; i < curves.rows(); ++i) {
            Eigen::Vector3d sc;
            for (int kk = 0; kk < 3; ++kk) sc(kk) = sd(kk) * rng.normal();
            curves.row(i) = (basis * sc).transpose();
        }
        const SmoothedSample s = SmoothedSample::from_grid_values(grid, curves);
        const CovarianceEstimate cov = estimate_covariance(s, DiagonalPolicy::include);
        const TestReport rep =
            run_test_with_basis(s, cov, basis, TestVariant::syz, 0.05, 3, 3000,
                                seed + 77 + static_cast<std::uint64_t>(r));
        rejects += rep.reject;
    }
    c.passed = rejects <= 8;  // binomial(60, 0.05): P(X > 8) ~ 0.004
    c.detail = std::to_string(rejects) + "/60 rejections at alpha=0.05 (pass: <= 8)";
    return c;
}

}  // namespace

SelftestReport cmd_selftest(std::uint64_t seed, const SelftestHooks& hooks) {
    const std::function<double(double)> ei =
        hooks.ei ? hooks.ei : std::function<double(double)>(exp_integral_ei);
    SelftestReport rep;
    rep.checks.push_back(check_gram_schmidt(ei));
    rep.checks.push_back(check_z_duality(seed));
    rep.checks.push_back(check_chi2_null(seed + 1));
    rep.checks.push_back(check_zero_counts(seed + 2));
    rep.checks.push_back(check_size(seed + 3));
    return rep;
}

}  // namespace termfpca
