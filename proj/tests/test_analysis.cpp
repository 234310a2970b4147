#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "termfpca/analysis.hpp"
#include "termfpca/errors.hpp"
#include "termfpca/ns_basis.hpp"
#include "termfpca/yield_data.hpp"

using namespace termfpca;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_synthetic_csv(const fs::path& dir, int n, std::uint64_t seed) {
    std::vector<double> mats(30);
    for (int j = 0; j < 30; ++j) mats[static_cast<std::size_t>(j)] = j + 1.0;
    const YieldPanel panel = svensson_sample(SvenssonParams{}, mats, n, 0.05, seed);
    fs::create_directories(dir);
    const fs::path csv = dir / "panel.csv";
    std::ofstream out(csv, std::ios::binary);
    serialize_panel(panel, out);
    return csv;
}

std::set<std::string> files_under(const fs::path& root) {
    std::set<std::string> found;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file())
            found.insert(fs::relative(e.path(), root).generic_string());
    return found;
}

RunConfig small_config(const fs::path& csv, const fs::path& out) {
    RunConfig cfg;
    cfg.input_path = csv.string();
    cfg.output_dir = out.string();
    cfg.n_sims = 2000;
    cfg.theta_grid = {0.2, 0.5};
    return cfg;
}

}  // namespace

TEST_CASE("config validation and JSON round-trip") {
    RunConfig cfg;
    cfg.input_path = "x.csv";
    cfg.output_dir = "out";
    cfg.validate();

    SUBCASE("round-trip equality") {
        cfg.theta_grid = {-0.1, 0.5};
        cfg.variant = TestVariant::syz;
        cfg.diagonal_policy = DiagonalPolicy::interpolate;
        cfg.by_year = true;
        cfg.maturity_cols = {"Y1", "Y2"};
        const RunConfig back = RunConfig::from_json(cfg.to_json());
        CHECK(back == cfg);
    }
    SUBCASE("bad ranges rejected") {
        RunConfig bad = cfg;
        bad.kappa = 5;
        CHECK_THROWS_AS(bad.validate(), Error);
        bad = cfg;
        bad.alpha = 0.0;
        CHECK_THROWS_AS(bad.validate(), Error);
        bad = cfg;
        bad.n_sims = 10;
        CHECK_THROWS_AS(bad.validate(), Error);
        bad = cfg;
        bad.spline_knots = 2;
        CHECK_THROWS_AS(bad.validate(), Error);
    }
    SUBCASE("bad JSON rejected") {
        CHECK_THROWS_AS(RunConfig::from_json("{not json"), Error);
    }
}

TEST_CASE("clamp_knots honors the basis-dimension bound") {
    CHECK(clamp_knots(30, 4, 30) == 28);   // dim 32 -> 30
    CHECK(clamp_knots(20, 4, 30) == 20);   // already fine
    CHECK(clamp_knots(30, 2, 30) == 30);   // linear: dim 30 == cols
    CHECK_THROWS_AS(clamp_knots(10, 5, 6), Error);
}

TEST_CASE("cmd_analyze produces the documented tree and a complete manifest") {
    const fs::path tmp = fs::temp_directory_path() / "termfpca_test_analyze";
    fs::remove_all(tmp);
    const fs::path csv = write_synthetic_csv(tmp, 80, 11);
    RunConfig cfg = small_config(csv, tmp / "out");
    const RunManifest manifest = cmd_analyze(cfg);

    // the knot clamp fires at the defaults (order 4, 30 knots, 30 columns)
    bool clamp_warned = false;
    for (const auto& w : manifest.warnings)
        clamp_warned |= w.find("reduced from 30 to 28") != std::string::npos;
    CHECK(clamp_warned);

    const std::set<std::string> on_disk = files_under(tmp / "out");
    std::set<std::string> expected(manifest.outputs.begin(), manifest.outputs.end());
    expected.insert("manifest.json");
    CHECK(on_disk == expected);  // completeness and no orphans

    for (const auto& name :
         {"full/covariance.svg", "full/eigenfunctions.svg", "full/effects_k1.svg",
          "full/effects_k4.svg", "full/zero_counts.csv", "full/scores.csv",
          "full/pvalues.csv", "full/pvalues.svg"})
        CHECK(expected.count(name));

    const std::string pvals = read_file(tmp / "out/full/pvalues.csv");
    CHECK(pvals.rfind("window,theta,variant,kappa,n_obs,statistic,quantile,p_value,reject",
                      0) == 0);
    // one row per theta
    CHECK(std::count(pvals.begin(), pvals.end(), '\n') == 3);
    fs::remove_all(tmp);
}

TEST_CASE("cmd_analyze by-year emits yearly aggregates and per-year windows") {
    const fs::path tmp = fs::temp_directory_path() / "termfpca_test_byyear";
    fs::remove_all(tmp);
    // 400 days from 2000-01-01 cross into 2001
    const fs::path csv = write_synthetic_csv(tmp, 400, 21);
    RunConfig cfg = small_config(csv, tmp / "out");
    cfg.by_year = true;
    cfg.theta_grid = {0.5};
    const RunManifest manifest = cmd_analyze(cfg);

    std::set<std::string> outs(manifest.outputs.begin(), manifest.outputs.end());
    CHECK(outs.count("yearly_pvalues.csv"));
    CHECK(outs.count("yearly_pvalues.svg"));
    CHECK(outs.count("2000/pvalues.csv"));
    CHECK(outs.count("2001/pvalues.csv"));

    const std::string yearly = read_file(tmp / "out/yearly_pvalues.csv");
    CHECK(yearly.rfind("year,min_p,argmin_theta,max_p,argmax_theta", 0) == 0);
    CHECK(std::count(yearly.begin(), yearly.end(), '\n') == 3);  // header + 2 years
    fs::remove_all(tmp);
}

TEST_CASE("cmd_analyze is deterministic: identical trees for identical config") {
    const fs::path tmp = fs::temp_directory_path() / "termfpca_test_determinism";
    fs::remove_all(tmp);
    const fs::path csv = write_synthetic_csv(tmp, 60, 31);

    RunConfig cfg1 = small_config(csv, tmp / "out1");
    RunConfig cfg2 = small_config(csv, tmp / "out2");
    cmd_analyze(cfg1);
    cmd_analyze(cfg2);

    const std::set<std::string> f1 = files_under(tmp / "out1");
    const std::set<std::string> f2 = files_under(tmp / "out2");
    CHECK(f1 == f2);
    for (const auto& rel : f1) {
        if (rel == "manifest.json") continue;  // carries wall-clock timings
        CHECK_MESSAGE(read_file(tmp / "out1" / rel) == read_file(tmp / "out2" / rel),
                      "file differs: ", rel);
    }
    fs::remove_all(tmp);
}

TEST_CASE("cmd_analyze input validation") {
    RunConfig cfg;
    cfg.input_path = "/nonexistent/panel.csv";
    cfg.output_dir = (fs::temp_directory_path() / "termfpca_noinput").string();
    cfg.n_sims = 2000;
    CHECK_THROWS_WITH_AS(cmd_analyze(cfg), doctest::Contains("cannot open"), Error);
    fs::remove_all(cfg.output_dir);
}

TEST_CASE("selftest passes with the real exponential integral") {
    const SelftestReport rep = cmd_selftest(42);
    for (const auto& c : rep.checks) {
        CAPTURE(c.name);
        CAPTURE(c.detail);
        CHECK(c.passed);
    }
    CHECK(rep.all_passed());
}

TEST_CASE("selftest catches a corrupted exponential integral") {
    SelftestHooks hooks;
    hooks.ei = [](double x) { return exp_integral_ei(x) * (1.0 + 1e-3); };
    const SelftestReport rep = cmd_selftest(42, hooks);
    bool gram_failed = false;
    for (const auto& c : rep.checks)
        if (c.name.find("Gram-Schmidt") != std::string::npos) gram_failed = !c.passed;
    CHECK(gram_failed);
    CHECK_FALSE(rep.all_passed());
}

TEST_CASE("selftest size calibration is stable across seeds") {
    // the size check is the only stochastic-boundary one; exercise it via
    // full selftests at several seeds
    int passes = 0;
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        const SelftestReport rep = cmd_selftest(seed);
        bool ok = true;
        for (const auto& c : rep.checks)
            if (c.name.find("size calibration") != std::string::npos) ok = c.passed;
        passes += ok;
    }
    CHECK(passes >= 4);
}
