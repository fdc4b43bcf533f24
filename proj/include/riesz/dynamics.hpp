#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "riesz/kernel.hpp"

namespace riesz {

/// External confinement potential; the Hessian sup-norm bound mirrors the
/// regularity hypothesis the mean-field statement needs from V.
struct Potential {
    std::function<double(const Point&)> value;
    std::function<Point(const Point&)> gradient;
    double hessian_sup_bound = -1.0; // < 0: unset (runs warn)
    std::string name;
};

/// Isotropic quadratic confinement V = 0.5 k |x|^2.
Potential quadratic_potential(double k);

enum class PairConvention {
    ordered,   // grad_i H_N = 2 sum_{j != i} grad g_s(x_i - x_j); literal gradient
    unordered, // half of the above; matches the paper's s = 0 identities
};

struct PairwiseEnergy {
    double raw;           // H_N (+ sum_i V(x_i) if a potential is set)
    double per_n2;        // raw / N^2
    double interaction;   // Riesz part only
};

/// N distinct particles with the gradient/conservative flow parameters.
struct ParticleSystem {
    KernelSpec spec;
    std::vector<Point> positions;
    double t = 0.0;
    double alpha = 1.0;                 // gradient weight
    double beta = 0.0;                  // conservative weight (d = 2 only)
    std::shared_ptr<Potential> potential; // optional
    PairConvention pair_convention = PairConvention::ordered;

    int n() const { return static_cast<int>(positions.size()); }
    void validate() const; // distinctness, alpha/beta coupling, d/beta coupling
};

PairwiseEnergy pairwise_energy(const ParticleSystem& sys);

/// Right-hand side of the flow: v_i = -(alpha/N) grad_i H_N
/// - (beta/N) perp(grad_i H_N) - grad V(x_i).
std::vector<Point> velocities(const ParticleSystem& sys);

/// Optional cell-list accelerator (d = 2): pair forces beyond the cutoff are
/// dropped, so this is an approximation for screened settings and stays
/// disabled by default everywhere. Agrees with velocities() as the cutoff
/// covers the configuration diameter.
std::vector<Point> velocities_cell_list(const ParticleSystem& sys, double cutoff);

struct TrajectoryRecord {
    int d = 1;
    int n = 0;
    std::vector<double> times;
    std::vector<std::vector<Point>> positions;  // per sample
    std::vector<std::vector<Point>> velocities; // per sample
    std::vector<double> energy;                 // H_N (+V) per sample
    std::vector<double> min_distance;           // eta_N per sample
    std::vector<Point> center_of_mass;          // per sample
    std::vector<double> dispersion;             // N^-2 sum_{i!=j} |x_ij|^2
    long accepted_steps = 0;
    long rejected_steps = 0;
};

struct IntegrateOptions {
    double tol = 1e-8;          // local error tolerance (embedded RK pair)
    double sample_dt = 0.0;     // sampling cadence; 0 means (t_end - t0)/200
    double max_dt = 0.0;        // 0 means no cap
    double guard_factor = 0.25; // reject a step shrinking any pair below this
};

/// Adaptive embedded Runge-Kutta (Dormand-Prince 4(5)) with the collision
/// guard. Samples are taken exactly at the cadence times via dense steps.
/// Throws on step-size underflow, carrying the diagnostic state in the message.
TrajectoryRecord integrate(ParticleSystem& sys, double t_end, const IntegrateOptions& opt = {});

/// max over sample intervals of |dH/dt + N sum |v|^2| / (N sum |v|^2),
/// with dH/dt by finite differences and the dissipation by trapezoid.
/// Record must come from alpha = 1, beta = 0, no potential.
double dissipation_residual(const TrajectoryRecord& rec);

/// Generalized identity for alpha > 0, beta arbitrary, no potential:
/// dH/dt = -(N/alpha) sum |v_grad|^2 = -N alpha/(alpha^2+beta^2) sum |v|^2.
double dissipation_residual_general(const TrajectoryRecord& rec, double alpha, double beta);

/// Least-squares slope of N^-2 sum_{i!=j} |x_ij|^2 over time (s = 0 flows).
double dispersion_rate(const TrajectoryRecord& rec);

/// Convention-consistent dispersion constant: 4(N-1)/(N c) for ordered
/// pairs, 2(N-1)/(N c) for unordered.
double dispersion_constant(const KernelSpec& spec, int n, PairConvention conv);

/// CSV writers (schemas: trajectory "t,i,x1[,x2],v1[,v2]"; scalar series
/// "t,H_N,eta_N,com_1[,com_2],dispersion").
void write_trajectory_csv(const TrajectoryRecord& rec, const std::string& path);
void write_scalar_series_csv(const TrajectoryRecord& rec, const std::string& path);

} // namespace riesz
