#pragma once

#include <optional>

#include "riesz/geom.hpp"

namespace riesz {

/// Closed-form Riesz kernels g_s on R^d (d = 1 or 2, 0 <= s < d), their
/// gradients, the eta-truncation, and the extension to R^d x R with weight
/// |xi|^gamma, gamma = s+1-d. Single source of kernel truth.
///
/// Conventions:
///   g_s(x) = c^-1 |x|^-s        (s > 0)
///   g_0(x) = -c^-1 log|x|       (s = 0, c = 2*pi on the relevant plane)
/// c = c_{d,s} is normalized so that -div(|xi|^gamma grad g_s) is a unit
/// Dirac mass on the extended space (plain -Laplace g_0 = delta_0 on R^2 in
/// the Coulomb case d=2, s=0, where no extension is used).
class KernelSpec {
public:
    KernelSpec(int d, double s);

    int d() const { return d_; }
    double s() const { return s_; }
    double c() const { return c_; }

    /// Extension regime: s > d-2, i.e. everything except Coulomb d=2, s=0.
    bool extended() const { return gamma_.has_value(); }
    /// Weight exponent gamma = s+1-d; throws if not in the extension regime.
    double gamma() const;

    /// Kernel value at distance r > 0.
    double g(double r) const;
    /// Gradient of g_s at x != 0 (on R^d).
    Point grad_g(const Point& x) const;
    /// Radial derivative dg/dr at r > 0.
    double dg_dr(double r) const;

    /// Truncated kernel g_{s,eta} = min(g_s(eta), g_s) on R^d x R.
    double g_truncated(double eta, const Point& x, double xi) const;
    /// Gradient of the truncated kernel in R^{d+1}: zero on {|(x,xi)| < eta},
    /// the extended-kernel gradient outside. Returned as (grad_x, d/dxi).
    void grad_g_truncated(double eta, const Point& x, double xi,
                          Point& grad_x, double& grad_xi) const;

    /// Extended kernel g_s(x,xi) = c^-1 |(x,xi)|^-s (or the log form for
    /// s=0, d=1). Rejected in the pure-Coulomb regime d=2, s=0.
    double extended_g(const Point& x, double xi) const;

    /// Weighted sphere measure int_{dB'_t} |xi|^gamma dsigma, computed by
    /// quadrature. Equals t^{s+1} c_{d,s} / s for s > 0.
    double sphere_weight_integral(double t) const;

    /// Quadrature flux of |xi|^gamma grad g_s . n through dB'_t (through
    /// dB_t on the plane in the Coulomb case). Equals -1 by normalization.
    double flux_through_sphere(double t) const;

    /// Positive part used by condition (cond2): g_s^+(t) = c^-1 t^-s for
    /// s > 0 and c^-1 (-log t) v 0 for s = 0.
    double g_plus(double t) const;

private:
    int d_;
    double s_;
    double c_;
    std::optional<double> gamma_;
};

/// c_{d,s} = s * omega_{d-1} * B((s+2-d)/2, d/2) for s > 0 (omega_0 = 2,
/// omega_1 = 2*pi); 2*pi for s = 0 (fundamental-solution constant of the
/// relevant 2D plane). Throws on out-of-range (d, s).
double normalization_constant(int d, double s);

/// Measure of the unit sphere S^{d-1}: omega_0 = 2, omega_1 = 2*pi.
double unit_sphere_measure(int d);

// Singularity guard: evaluation closer than this to a charge is rejected;
// callers must use truncated kernels near charges.
inline constexpr double kKernelEvalMinDist = 1e-14;

} // namespace riesz
