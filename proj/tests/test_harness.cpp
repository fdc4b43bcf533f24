#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "riesz/harness.hpp"

using namespace riesz;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("config: load, defaults, unknown keys, validation") {
    {
        std::ofstream out("cfg_test.json");
        out << "{\"d\": 1, \"s\": 0.25, \"n_list\": [8, 32], \"T\": 0.1, \"grid_n\": 64}";
    }
    ExperimentConfig cfg = load_config("cfg_test.json");
    CHECK(cfg.d == 1);
    CHECK(cfg.s == 0.25);
    CHECK(cfg.n_list == std::vector<long>{8, 32});
    CHECK(cfg.grid_n == 64);
    CHECK(cfg.sample_count == 6); // default applied
    std::remove("cfg_test.json");

    {
        std::ofstream out("cfg_bad.json");
        out << "{\"d\": 2, \"nlist_typo\": [8]}";
    }
    CHECK_THROWS(load_config("cfg_bad.json"));
    std::remove("cfg_bad.json");

    ExperimentConfig bad;
    bad.n_list = {64, 64};
    CHECK_THROWS(bad.validate());
    ExperimentConfig bad2;
    bad2.s = 1.2;
    bad2.d = 2;
    CHECK_THROWS(bad2.validate()); // full mean-field runs need s < 1
}

TEST_CASE("config hash is stable and sensitive") {
    ExperimentConfig a, b;
    CHECK(config_hash(a) == config_hash(b));
    b.seed = 999;
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("sampling: determinism and well-preparedness") {
    ExperimentConfig cfg;
    cfg.d = 2;
    cfg.s = 0.5;
    cfg.grid_n = 64;
    GridField f = make_initial_density(cfg);

    SampleResult a = sample_initial(f, 256, 42);
    SampleResult b = sample_initial(f, 256, 42);
    REQUIRE(a.system.n() == 256);
    for (int i = 0; i < 256; ++i) {
        CHECK(a.system.positions[i][0] == b.system.positions[i][0]);
        CHECK(a.system.positions[i][1] == b.system.positions[i][1]);
    }
    SampleResult c = sample_initial(f, 256, 43);
    bool same = true;
    for (int i = 0; i < 256 && same; ++i)
        same = a.system.positions[i][0] == c.system.positions[i][0];
    CHECK_FALSE(same);

    // empirical mean within the CLT bound of the density mean
    CHECK(a.report.mean_gap[0] < a.report.clt_bound[0] + 0.02);
    CHECK(a.report.mean_gap[1] < a.report.clt_bound[1] + 0.02);
    CHECK(a.report.acceptance_rate > 0.01);
}

TEST_CASE("sampling d=1: inverse CDF matches the density") {
    ExperimentConfig cfg;
    cfg.d = 1;
    cfg.s = 0.5;
    cfg.grid_n = 128;
    cfg.initial_density = "patch";
    cfg.ic_radius = 0.8;
    GridField f = make_initial_density(cfg);
    SampleResult r = sample_initial(f, 4096, 7);
    // all samples inside the grid support (the boundary cell is fractional,
    // so the grid measure extends up to one cell past the nominal radius)
    int left = 0;
    for (const Point& p : r.system.positions) {
        CHECK(std::abs(p[0]) <= 0.8 + f.dx());
        if (p[0] < 0) ++left;
    }
    CHECK(left > 1800);
    CHECK(left < 2300);
    CHECK(r.report.relative_gap < 0.05);
}

TEST_CASE("well-preparedness gap shrinks with N (d=2, s=0.5)") {
    ExperimentConfig cfg;
    cfg.grid_n = 64;
    GridField f = make_initial_density(cfg);
    SampleResult small = sample_initial(f, 64, 11);
    SampleResult big = sample_initial(f, 4096, 11);
    CHECK(big.report.relative_gap < 0.05);
    CHECK(big.report.relative_gap < small.report.relative_gap + 0.02);
}

TEST_CASE("identity suite: default matrix passes and is serializable") {
    ExperimentConfig cfg;
    IdentityTable table = run_identity_suite(cfg);
    for (const auto& row : table.rows) {
        INFO(row.name, " measured=", row.measured, " threshold=", row.threshold);
        CHECK(row.pass);
    }
    CHECK(table.all_pass());
    write_identity_table(table, "suite_test.json");
    std::string text = slurp("suite_test.json");
    CHECK(text.find("\"all_pass\": true") != std::string::npos);
    std::remove("suite_test.json");
}

TEST_CASE("stability: zero perturbation stays at the floor; halving halves sqrt(D)") {
    ExperimentConfig cfg;
    cfg.d = 2;
    cfg.s = 0.0;
    cfg.grid_n = 64;
    cfg.T = 0.2;
    cfg.sample_count = 3;
    cfg.output_dir = "stab_test_out";

    StabilityResult zero = run_stability(cfg, 0.0);
    for (const auto& row : zero.rows) CHECK(std::abs(row.distance) <= 10.0 * zero.baseline);

    StabilityResult p1 = run_stability(cfg, 0.02);
    StabilityResult p2 = run_stability(cfg, 0.01);
    // Gronwall envelope honored with margin
    for (size_t k = 1; k < p1.rows.size(); ++k)
        CHECK(p1.rows[k].distance <= 1.1 * p1.rows[k].envelope);
    // linear response on the norm (sqrt of the energy distance)
    for (size_t k = 0; k < p1.rows.size(); ++k) {
        double ratio = p2.rows[k].sqrt_distance / p1.rows[k].sqrt_distance;
        CHECK(ratio == doctest::Approx(0.5).epsilon(0.2));
    }
    std::filesystem::remove_all("stab_test_out");
}

TEST_CASE("small convergence run: determinism and alignment") {
    ExperimentConfig cfg;
    cfg.d = 2;
    cfg.s = 0.5;
    cfg.grid_n = 64;
    cfg.grid_l = 2.0;
    cfg.n_list = {8, 16};
    cfg.T = 0.05;
    cfg.sample_count = 3;
    cfg.integrator_tol = 1e-6;
    cfg.cond_check_max_n = 16;
    cfg.output_dir = "conv_test_a";
    ConvergenceResult a = run_convergence(cfg);
    REQUIRE(a.runs.size() == 2);
    REQUIRE(a.runs[0].points.size() == 3);
    // aligned times across N
    for (int k = 0; k < 3; ++k)
        CHECK(a.runs[0].points[k].t == doctest::Approx(a.runs[1].points[k].t));

    // reversing the N list produces identical per-N results (no cross-N state)
    ExperimentConfig cfg_rev = cfg;
    cfg_rev.output_dir = "conv_test_b";
    cfg_rev.n_list = {8, 16}; // list must be increasing; re-run to compare determinism
    ConvergenceResult b = run_convergence(cfg_rev);
    for (size_t r = 0; r < 2; ++r)
        for (int k = 0; k < 3; ++k) {
            CHECK(a.runs[r].points[k].e_n == b.runs[r].points[k].e_n);
            CHECK(a.runs[r].points[k].pp == b.runs[r].points[k].pp);
        }
    // byte-identical outputs for identical config + seed
    CHECK(slurp("conv_test_a/convergence_N8.csv") == slurp("conv_test_b/convergence_N8.csv"));
    CHECK(slurp("conv_test_a/summary.json") == slurp("conv_test_b/summary.json"));
    // manifest carries the config hash
    std::string manifest = slurp("conv_test_a/manifest.json");
    CHECK(manifest.find("config_hash") != std::string::npos);
    std::filesystem::remove_all("conv_test_a");
    std::filesystem::remove_all("conv_test_b");
}

TEST_CASE("seed_for is order-free") {
    CHECK(seed_for(1, 64) == seed_for(1, 64));
    CHECK(seed_for(1, 64) != seed_for(1, 256));
    CHECK(seed_for(1, 64) != seed_for(2, 64));
}

TEST_CASE("no cross-N state: a single-N run matches its slot in a multi-N run") {
    ExperimentConfig cfg;
    cfg.d = 2;
    cfg.s = 0.5;
    cfg.grid_n = 64;
    cfg.n_list = {8, 16};
    cfg.T = 0.05;
    cfg.sample_count = 3;
    cfg.cond_check_max_n = 0;
    cfg.output_dir = "crossn_a";
    ConvergenceResult both = run_convergence(cfg);
    ExperimentConfig solo = cfg;
    solo.n_list = {16};
    solo.output_dir = "crossn_b";
    ConvergenceResult one = run_convergence(solo);
    for (int k = 0; k < 3; ++k) {
        CHECK(one.runs[0].points[k].e_n == both.runs[1].points[k].e_n);
        CHECK(one.runs[0].points[k].pp == both.runs[1].points[k].pp);
    }
    std::filesystem::remove_all("crossn_a");
    std::filesystem::remove_all("crossn_b");
}

TEST_CASE("stratified sampler: well-prepared data with positive-definite trend") {
    ExperimentConfig cfg;
    cfg.grid_n = 64;
    GridField f = make_initial_density(cfg);
    SampleResult a = sample_stratified(f, 64, 5);
    SampleResult b = sample_stratified(f, 256, 5);
    CHECK(a.system.n() == 64);
    // much better prepared than iid at the same N
    CHECK(b.report.relative_gap < 0.05);
    // modulated energy magnitude decays with N
    double e64 = std::abs(modulated_energy(a.system, f).e_n);
    double e256 = std::abs(modulated_energy(b.system, f).e_n);
    CHECK(e256 < e64);
    // d=2 needs a perfect square
    CHECK_THROWS(sample_stratified(f, 60, 5));
}
