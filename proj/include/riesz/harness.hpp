#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "riesz/balls.hpp"
#include "riesz/dynamics.hpp"
#include "riesz/grid.hpp"
#include "riesz/modenergy.hpp"

namespace riesz {

/// Experiment description; JSON config files use exactly these field names.
struct ExperimentConfig {
    std::string experiment = "convergence"; // convergence | stability | suite
    int d = 2;
    double s = 0.5;
    std::string initial_density = "bump"; // patch | bump | two_bumps
    double ic_radius = 1.0;
    double ic_offset = 0.6;
    std::vector<long> n_list{64, 256, 1024, 4096};
    double T = 0.5;
    double integrator_tol = 1e-6;
    double grid_l = 2.0;
    int grid_n = 256;
    std::vector<double> eta_schedule;  // defect-check etas; empty: skip
    double radius_override = 0.0;      // 0: radius_schedule(N, s)
    std::uint64_t seed = 12345;
    std::string output_dir = "out";
    double alpha = 1.0;
    double beta = 0.0;
    std::string potential;             // "" or "quadratic:<k>"
    int sample_count = 6;
    double pde_cfl = 0.5;
    long cond_check_max_n = 512;
    std::string pair_convention = "ordered";
    double perturbation = 0.01;        // stability runs
    std::string sampler = "iid";       // iid | stratified

    void validate() const;
};

ExperimentConfig load_config(const std::string& path);
std::string config_canonical_json(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

GridField make_initial_density(const ExperimentConfig& cfg);

/// Deterministic uniforms; distributions are hand-rolled so outputs are
/// identical across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    double uniform() { return (gen_() >> 11) * 0x1.0p-53; }
    std::mt19937_64& raw() { return gen_; }

private:
    std::mt19937_64 gen_;
};

/// Derived per-N seed, independent of the position of N in the list.
std::uint64_t seed_for(std::uint64_t seed, long n);

/// Random configuration on a jittered lattice: uniformly spread with a
/// guaranteed minimal separation (used by randomized identity checks).
std::vector<Point> jittered_lattice(Rng& rng, int d, int n, double span);

struct WellPreparedness {
    double discrete_energy;  // N^-2 H_N at the sample
    double continuum_energy; // iint g dmu dmu
    double relative_gap;
    double mean_gap[2];  // |empirical mean - density mean| per axis
    double clt_bound[2]; // 3 sigma / sqrt(N) per axis
    double acceptance_rate;
};

struct SampleResult {
    ParticleSystem system;
    WellPreparedness report;
};

/// Inverse-CDF sampling for d = 1, rejection sampling for d = 2; the report
/// carries the initial-energy convergence check.
SampleResult sample_initial(const GridField& field, long n, std::uint64_t seed);

/// Quadrature-optimal (well-prepared) samples: jittered midpoint inverse-CDF
/// for d = 1; equal-mass column strata with conditional inverse-CDF for
/// d = 2 (n must be a perfect square there). Gives E_N > 0 decaying in N.
SampleResult sample_stratified(const GridField& field, long n, std::uint64_t seed);

struct ConvergencePoint {
    double t = 0;
    double e_n = 0, pp = 0, pf = 0, ff = 0;
    double hn_per_n2 = 0;
    double energy_gap = 0; // |N^-2 H_N - ff|
    double eta_n = 0;
    double ball_radius = 0;
    double cond2 = 0;
    bool cond1_done = false;
    double cond1_eta = 0, cond1_value = 0;
};

struct ConvergenceRun {
    long n = 0;
    WellPreparedness prep;
    std::vector<ConvergencePoint> points;
    double bound_ratio = 0; // max_t E_N(t) / (E_N(0) + N^-0.2)
};

struct ConvergenceResult {
    std::vector<ConvergenceRun> runs;
    double fitted_exponent = 0;     // log E_N(T) vs log N, largest three N
    double fitted_exponent_all = 0; // over the whole list
    double holder_quotient_final = 0;
};

ConvergenceResult run_convergence(const ExperimentConfig& cfg);

struct StabilityRow {
    double t, distance, sqrt_distance, envelope, hess_sup;
};

struct StabilityResult {
    double perturbation = 0;
    double baseline = 0; // grid self-distance floor
    std::vector<StabilityRow> rows;
};

StabilityResult run_stability(const ExperimentConfig& cfg, double perturbation);

struct IdentityRow {
    std::string name;
    double measured;
    double threshold;
    bool pass;
};

struct IdentityTable {
    std::vector<IdentityRow> rows;
    bool all_pass() const;
};

/// Aggregated module-level identities with measured errors; failures are
/// data, not exceptions.
IdentityTable run_identity_suite(const ExperimentConfig& cfg);
void write_identity_table(const IdentityTable& table, const std::string& path);
void print_identity_table(const IdentityTable& table);

void ensure_dir(const std::string& path);
void write_manifest(const ExperimentConfig& cfg, const std::string& path);

extern const char* kVersion;

} // namespace riesz
