#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "termfpca/fpca.hpp"
#include "termfpca/misspec.hpp"

namespace termfpca {

struct RunConfig {
    std::string input_path;
    std::string output_dir;
    int spline_order = 4;
    int spline_knots = 30;
    int grid_size = 30;
    int kappa = 3;
    double alpha = 0.05;
    int n_sims = 100000;
    std::uint64_t seed = 42;
    std::vector<double> theta_grid{-0.1, -0.01, -0.001, 0.001, 0.01, 0.1, 0.2, 0.5, 1.0};
    TestVariant variant = TestVariant::modified;
    DiagonalPolicy diagonal_policy = DiagonalPolicy::include;
    bool by_year = false;
    bool differences = false;
    std::vector<std::string> maturity_cols;

    bool operator==(const RunConfig&) const = default;

    /// Range checks for every numeric field; input error on violation.
    void validate() const;

    std::string to_json() const;
    static RunConfig from_json(const std::string& text);
};

struct RunManifest {
    std::string artifact_version;
    RunConfig config;
    std::vector<std::string> outputs;           // relative paths, sorted
    std::vector<std::string> warnings;          // sorted
    std::map<std::string, double> timings_ms;   // per window

    std::string to_json() const;
};

/// Full pipeline: per window (full sample, plus each year when by_year),
/// smooth, estimate the covariance, decompose, run the theta scan, and emit
/// the CSV/SVG outputs plus manifest.json in output_dir.
RunManifest cmd_analyze(const RunConfig& config);

struct SelftestHooks {
    /// Replacement exponential integral, for fault-injection tests.
    std::function<double(double)> ei;
};

struct SelftestReport {
    struct Check {
        std::string name;
        bool passed = false;
        std::string detail;
    };
    std::vector<Check> checks;

    bool all_passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }
};

/// Built-in oracle suite: closed forms vs Gram-Schmidt, Z-matrix duality,
/// chi-squared(3) null sanity, synthetic zero counts, size calibration.
SelftestReport cmd_selftest(std::uint64_t seed, const SelftestHooks& hooks = {});

/// Effective knot count for a panel: the basis dimension may not exceed the
/// number of observed maturities, so knots shrink to cols - order + 2 when
/// necessary.
int clamp_knots(int requested_knots, int order, int n_cols);

}  // namespace termfpca
