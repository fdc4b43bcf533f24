#pragma once

#include <complex>
#include <memory>
#include <string>
#include <vector>

#include "riesz/kernel.hpp"

namespace riesz {

class PotentialSolver;

/// Nonnegative cell-averaged probability density on the uniform grid over
/// [-L, L]^d, with the cached Riesz potential h = g_s * mu and its gradient.
struct GridField {
    KernelSpec spec;
    double L = 1.0; // box half-width
    int n = 0;      // cells per axis (power of two)
    double t = 0.0;
    std::vector<double> values; // size n^d, row-major for d = 2

    GridField(const KernelSpec& sp, double L_, int n_);

    double dx() const { return 2.0 * L / n; }
    double cell_volume() const { return spec.d() == 1 ? dx() : dx() * dx(); }
    size_t cells() const { return values.size(); }
    double center_coord(int i) const { return -L + (i + 0.5) * dx(); }
    Point cell_center(size_t idx) const;
    size_t index(int ix, int iy = 0) const { return static_cast<size_t>(iy) * n + ix; }

    double mass() const;
    double support_radius() const;
    /// nonnegativity, unit mass to 1e-10, support margin >= 10% of L.
    /// Pass require_unit_mass = false for non-probability fields (the patch
    /// benchmark carries mass pi R0^2 rho0); the transport solver only needs
    /// nonnegativity and the support margin.
    void validate(bool require_unit_mass = true) const;
    /// scale values so the mass is exactly 1
    void normalize();

    /// Riesz potential of the current values (computed on demand, cached).
    const std::vector<double>& potential() const;
    const std::vector<double>& grad_potential(int axis) const;
    void invalidate_cache();

    /// Cubic (Catmull-Rom) interpolation of the cached potential at x.
    double interp_potential(const Point& x) const;
    double interp_value(const Point& x) const; // bilinear density lookup

    std::shared_ptr<const PotentialSolver> solver() const;

private:
    mutable std::shared_ptr<const PotentialSolver> solver_;
    mutable bool cache_valid_ = false;
    mutable std::vector<double> h_, gx_, gy_;
};

/// Free-space convolution with g_s by zero-padded FFT on the 2x grid; the
/// kernel's singular cell carries its analytic cell average. Gradients and
/// second derivatives by spectral differentiation with a 2/3-rule filter.
class PotentialSolver {
public:
    PotentialSolver(const KernelSpec& spec, double L, int n);

    std::vector<double> potential(const std::vector<double>& cell_values) const;
    void gradient(const std::vector<double>& cell_values,
                  std::vector<double>& gx, std::vector<double>& gy) const;
    std::vector<double> second_derivative(const std::vector<double>& cell_values,
                                          int a, int b) const;

    /// Energy bilinear form: int h[v] v dx over the grid (signed values ok).
    double energy(const std::vector<double>& cell_values) const;

    const KernelSpec& spec() const { return spec_; }
    double L() const { return L_; }
    int n() const { return n_; }

private:
    KernelSpec spec_;
    double L_, dx_;
    int n_, m_; // m = 2n padded size
    std::vector<std::complex<double>> kernel_hat_;
    std::vector<double> wavenumber_; // signed k per padded index, 2/3-masked via mask_
    std::vector<char> mask_;

    std::vector<std::complex<double>> forward(const std::vector<double>& vals) const;
    std::vector<double> inverse_crop(std::vector<std::complex<double>> spec_grid) const;
};

/// Analytic average of g_s over one grid cell centered at the singularity.
double singular_cell_average(const KernelSpec& spec, double dx);

// --- transport scheme (finite-volume upwind, positivity preserving) ---

struct PdeStepInfo {
    double dt = 0.0;
    double max_speed = 0.0;
    double clipped_mass = 0.0;
};

/// Upwind flavors: donor-cell is the plain first-order scheme; the limited
/// scheme adds minmod-reconstructed face values and SSP-RK2 in time (still
/// monotone and positivity preserving), which keeps the expanding-patch
/// front sharp enough for first-order L1 convergence.
enum class TransportScheme { donor_cell, limited };

/// Velocity coefficients of the transported flow: u = -(grad_coeff grad h +
/// perp_coeff perp(grad h)). The mixed 2D flow and the ordered-pair factor 2
/// of the particle convention both enter here; the default is the plain
/// gradient flow.
struct FlowCoefficients {
    double grad_coeff = 1.0;
    double perp_coeff = 0.0;
};

/// One conservative upwind step with face-interpolated velocity u = -grad h.
/// dt is used as given; callers cap it (see pde_solve). Returns the advanced
/// field plus step info; mass is conserved by telescoping and renormalized
/// after clipping.
GridField pde_step(const GridField& field, double dt, PdeStepInfo* info = nullptr,
                   TransportScheme scheme = TransportScheme::limited,
                   const FlowCoefficients& flow = {});

struct FieldSeriesRow {
    double t, mass, energy, sup_grad_h, sup_hess_h, support_radius;
};

struct PdeSolveResult {
    GridField field;
    std::vector<FieldSeriesRow> series;
    double clipped_mass_total = 0.0;
    long steps = 0;
};

/// March to t_end with dt = cfl * dx / max_x sum_a |u_a|; series rows at
/// roughly `series_rows` evenly spaced times (always t0 and t_end).
PdeSolveResult pde_solve(const GridField& field, double t_end, double cfl,
                         int series_rows = 21,
                         TransportScheme scheme = TransportScheme::limited,
                         const FlowCoefficients& flow = {});

/// Self-similar expanding patch, the d=2 Coulomb benchmark solution:
/// rho(t) = rho0/(1+rho0 t), R(t) = R0 sqrt(1+rho0 t), rasterized with
/// area-exact boundary cells.
GridField patch_exact(double rho0, double R0, double t, double L, int n);

/// int h dmu over the grid (self-cell handled analytically by the solver).
double field_energy(const GridField& field);
/// Energy of the signed difference mu1 - mu2 (the squared energy distance;
/// may be slightly negative at grid resolution, reported raw).
double field_distance(const GridField& f1, const GridField& f2);

struct FieldDiagnostics {
    double energy;
    double sup_grad_h;
    double sup_hess_h;
    double holder_sigma;
    double holder_quotient; // discrete C^sigma seminorm (pairs within 8 dx)
    double sup_value;
    double mass;
    double support_radius;
    double ratio; // sup_hess_h / (||mu||_L1 + ||mu||_C^sigma)
    double grad_mu_lp;
    double grad_mu_p;
};

FieldDiagnostics diagnostics(const GridField& field, double sigma, double lp_exponent = 4.0);

// --- initial-condition library ---

GridField ic_uniform_patch(const KernelSpec& spec, double L, int n, double radius);
GridField ic_smooth_bump(const KernelSpec& spec, double L, int n, double radius);
GridField ic_two_bumps(const KernelSpec& spec, double L, int n, double radius, double offset);

/// Area of the intersection of the disc B(0, R) with an axis-aligned box.
double disc_box_overlap(double R, double x0, double x1, double y0, double y1);

// --- IO ---

/// Flat binary container: header {d:u32, s:f64, L:f64, n:u32, t:f64} in
/// little-endian order, then row-major f64 cell values.
void write_field_binary(const GridField& field, const std::string& path);
GridField read_field_binary(const std::string& path);

void write_field_series_csv(const std::vector<FieldSeriesRow>& rows, const std::string& path);

/// L1 grid norm of the difference (same grid required).
double l1_distance(const GridField& a, const GridField& b);

} // namespace riesz
