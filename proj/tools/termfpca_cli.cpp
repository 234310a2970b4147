// Command-line front end: analyze, selftest, gen-svensson.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "termfpca/analysis.hpp"
#include "termfpca/errors.hpp"
#include "termfpca/ns_basis.hpp"
#include "termfpca/yield_data.hpp"

namespace {

int run(int argc, char** argv) {
    CLI::App app{"Yield-curve factor-basis diagnostics: functional PCA and "
                 "misspecification tests for the level/slope/curvature basis"};
    app.require_subcommand(1);

    termfpca::RunConfig cfg;
    std::string variant = "modified";
    std::string diag = "include";
    auto* analyze = app.add_subcommand("analyze", "Run the full pipeline on a yield CSV");
    analyze->add_option("--input", cfg.input_path, "Input CSV panel")->required();
    analyze->add_option("--out", cfg.output_dir, "Output directory")->required();
    analyze->add_flag("--by-year", cfg.by_year, "Also analyze each calendar year");
    analyze->add_option("--variant", variant, "Test variant: syz|modified")
        ->check(CLI::IsMember({"syz", "modified"}));
    analyze->add_option("--kappa", cfg.kappa, "Number of candidate basis functions");
    analyze->add_option("--alpha", cfg.alpha, "Significance level");
    analyze->add_option("--sims", cfg.n_sims, "Null-distribution Monte Carlo draws");
    analyze->add_option("--seed", cfg.seed, "Base RNG seed");
    analyze->add_option("--theta-grid", cfg.theta_grid, "Decay parameters to scan")
        ->delimiter(',');
    analyze->add_option("--order", cfg.spline_order, "Spline order (degree + 1)");
    analyze->add_option("--knots", cfg.spline_knots, "Uniform knot count");
    analyze->add_option("--grid", cfg.grid_size, "Evaluation grid size");
    analyze->add_option("--diag", diag, "Covariance diagonal policy: include|interpolate")
        ->check(CLI::IsMember({"include", "interpolate"}));
    analyze->add_flag("--differences", cfg.differences,
                      "Analyze day-over-day yield differences");
    analyze->add_option("--maturity-cols", cfg.maturity_cols,
                        "Explicit maturity column names")
        ->delimiter(',');

    std::uint64_t selftest_seed = 42;
    auto* selftest = app.add_subcommand("selftest", "Run the built-in oracle checks");
    selftest->add_option("--seed", selftest_seed, "RNG seed");

    std::string gen_out;
    int gen_n = 2000;
    double gen_sigma = 0.05;
    std::uint64_t gen_seed = 42;
    auto* gen = app.add_subcommand("gen-svensson", "Write a synthetic yield panel CSV");
    gen->add_option("--out", gen_out, "Output CSV path")->required();
    gen->add_option("--n", gen_n, "Number of curves");
    gen->add_option("--sigma", gen_sigma, "Observation noise standard deviation");
    gen->add_option("--seed", gen_seed, "RNG seed");

    CLI11_PARSE(app, argc, argv);

    if (analyze->parsed()) {
        cfg.variant = termfpca::variant_from_string(variant);
        cfg.diagonal_policy = diag == "include" ? termfpca::DiagonalPolicy::include
                                                : termfpca::DiagonalPolicy::interpolate;
        const termfpca::RunManifest manifest = termfpca::cmd_analyze(cfg);
        std::printf("wrote %zu files under %s (%zu warnings)\n", manifest.outputs.size(),
                    cfg.output_dir.c_str(), manifest.warnings.size());
        for (const auto& w : manifest.warnings) std::printf("  warning: %s\n", w.c_str());
        return 0;
    }

    if (selftest->parsed()) {
        const termfpca::SelftestReport rep = termfpca::cmd_selftest(selftest_seed);
        for (const auto& c : rep.checks)
            std::printf("%s  %s: %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                        c.detail.c_str());
        return rep.all_passed() ? 0 : 2;
    }

    // gen-svensson
    std::vector<double> maturities(30);
    for (int j = 0; j < 30; ++j) maturities[static_cast<std::size_t>(j)] = j + 1.0;
    const termfpca::YieldPanel panel = termfpca::svensson_sample(
        termfpca::SvenssonParams{}, maturities, gen_n, gen_sigma, gen_seed);
    std::ofstream out(gen_out, std::ios::binary | std::ios::trunc);
    if (!out) termfpca::throw_io("I/O error: cannot open '" + gen_out + "' for writing");
    termfpca::serialize_panel(panel, out);
    std::printf("wrote %d synthetic curves to %s\n", gen_n, gen_out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const termfpca::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
