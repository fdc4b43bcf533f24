#pragma once

#include <span>
#include <vector>

#include "riesz/balls.hpp"
#include "riesz/dynamics.hpp"
#include "riesz/grid.hpp"
#include "riesz/quadrature.hpp"

namespace riesz {

struct EtaValue {
    double eta;
    double e_eta;   // E_{N,eta}
    double defect;  // E_{N,eta} - E_N - g_s(eta)/N
};

/// The renormalized modulated energy E_N = pp - pf + ff and its
/// eta-approximations. The assembly identity holds by construction.
struct ModulatedEnergyReport {
    int n = 0;
    int d = 1;
    double s = 0.0;
    double t = 0.0;
    double e_n = 0.0;
    double pp = 0.0; // (1/N^2) sum_{i != j} g_s(x_i - x_j)
    double pf = 0.0; // (2/N) sum_i h(x_i)
    double ff = 0.0; // field self-energy
    std::vector<EtaValue> eta_values; // sorted by decreasing eta
};

/// pp by direct double sum, pf by cubic interpolation of the cached grid
/// potential at the particles, ff by field_energy. Throws on spec mismatch
/// or a particle outside the grid's interpolation region.
ModulatedEnergyReport modulated_energy(const ParticleSystem& particles, const GridField& field);

/// Cross-check mode: pf by direct summation of g_s against the cells.
double pf_direct_sum(const ParticleSystem& particles, const GridField& field);

/// E_{N,eta} = int |xi|^gamma |grad(h_{N,eta} - h)|^2 (plane integral in the
/// Coulomb case d=2, s=0), assembled as pp_eta - pf_eta + ff with the exact
/// smeared-charge pairings. Requires 0 < 2 eta < min(1, eta_N).
double eta_approx(const ParticleSystem& particles, const GridField& field, double eta);

/// Appends (eta, E_eta, defect) rows for each eta, keeping the list sorted
/// by decreasing eta.
void append_eta_values(ModulatedEnergyReport& report, const ParticleSystem& particles,
                       const GridField& field, const std::vector<double>& etas);

/// int_{region x R} |xi|^gamma |grad h_{N,eta}|^2 over the extended balls
/// B'(y, r) of the region, via the Green identity: enclosed smeared-charge
/// pairings plus a weighted boundary integral. Charges carry weight 1/N.
/// Truncation spheres must not cross region boundaries.
double region_energy(const std::vector<Point>& pts, const KernelSpec& spec, double eta,
                     std::span<const Ball> region, double quad_rel_tol = 1e-8);

double region_energy_ball(const std::vector<Point>& pts, const KernelSpec& spec, double eta,
                          const Point& center, double radius, double quad_rel_tol = 1e-8);

/// Discrete L^p norm, over window cells outside the balls, of the
/// xi-integrated gradient gap between h_N and h. Admissible range
/// 1 <= p < 2d/(s+d). A convergence diagnostic; cost grows with the window.
double lp_gradient_distance(const ParticleSystem& particles, const GridField& field,
                            const BallCollection& balls, double p, double window_halfwidth);

void write_report_json(const ModulatedEnergyReport& report, const std::string& path);

} // namespace riesz
