#include "riesz/kernel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "riesz/quadrature.hpp"

namespace riesz {

double unit_sphere_measure(int d) {
    if (d == 1) return 2.0;
    if (d == 2) return 2.0 * M_PI;
    throw std::invalid_argument("unit_sphere_measure: d must be 1 or 2");
}

namespace {

double beta_fn(double a, double b) {
    return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

void check_range(int d, double s) {
    if (d != 1 && d != 2) throw std::invalid_argument("kernel: d must be 1 or 2");
    if (!(s >= 0.0 && s < d)) throw std::invalid_argument("kernel: 0 <= s < d required");
}

} // namespace

double normalization_constant(int d, double s) {
    check_range(d, s);
    if (s == 0.0) return 2.0 * M_PI; // -div(|xi|^gamma grad g_0) = delta_0 on the plane
    // c_{d,s} = s * omega_{d-1} * B((s+2-d)/2, d/2), evaluated via log-gamma
    return s * unit_sphere_measure(d) * beta_fn(0.5 * (s + 2.0 - d), 0.5 * d);
}

KernelSpec::KernelSpec(int d, double s) : d_(d), s_(s) {
    check_range(d, s);
    c_ = normalization_constant(d, s);
    if (s > d - 2.0) gamma_ = s + 1.0 - d;
}

double KernelSpec::gamma() const {
    if (!gamma_) throw std::logic_error("KernelSpec: no extension weight in the Coulomb regime");
    return *gamma_;
}

double KernelSpec::g(double r) const {
    if (!(r > 0.0)) throw std::invalid_argument("g: r > 0 required");
    if (s_ == 0.0) return -std::log(r) / c_;
    return std::pow(r, -s_) / c_;
}

double KernelSpec::dg_dr(double r) const {
    if (!(r > 0.0)) throw std::invalid_argument("dg_dr: r > 0 required");
    if (s_ == 0.0) return -1.0 / (c_ * r);
    return -s_ * std::pow(r, -s_ - 1.0) / c_;
}

Point KernelSpec::grad_g(const Point& x) const {
    double r2 = norm2(x, d_);
    if (r2 < kKernelEvalMinDist * kKernelEvalMinDist)
        throw std::invalid_argument("grad_g: evaluation at the singularity");
    if (s_ == 0.0) return scale(x, -1.0 / (c_ * r2));
    double f = -s_ * std::pow(r2, -0.5 * s_ - 1.0) / c_;
    return scale(x, f);
}

double KernelSpec::g_truncated(double eta, const Point& x, double xi) const {
    if (!(eta > 0.0)) throw std::invalid_argument("g_truncated: eta > 0 required");
    double r = std::sqrt(norm2(x, d_) + xi * xi);
    if (r <= eta) return g(eta);
    return g(r);
}

void KernelSpec::grad_g_truncated(double eta, const Point& x, double xi,
                                  Point& grad_x, double& grad_xi) const {
    if (!(eta > 0.0)) throw std::invalid_argument("grad_g_truncated: eta > 0 required");
    double r2 = norm2(x, d_) + xi * xi;
    if (r2 <= eta * eta) {
        grad_x = {0.0, 0.0};
        grad_xi = 0.0;
        return;
    }
    double f = (s_ == 0.0) ? -1.0 / (c_ * r2) : -s_ * std::pow(r2, -0.5 * s_ - 1.0) / c_;
    grad_x = scale(x, f);
    grad_xi = f * xi;
}

double KernelSpec::extended_g(const Point& x, double xi) const {
    if (!extended())
        throw std::invalid_argument("extended_g: no extension in the Coulomb case d=2, s=0");
    double r = std::sqrt(norm2(x, d_) + xi * xi);
    if (r < kKernelEvalMinDist)
        throw std::invalid_argument("extended_g: evaluation at the singularity");
    return g(r);
}

double KernelSpec::sphere_weight_integral(double t) const {
    if (!(t > 0.0)) throw std::invalid_argument("sphere_weight_integral: t > 0 required");
    if (!extended())
        throw std::invalid_argument("sphere_weight_integral: extension regime required");
    double gm = *gamma_;
    // int_{dB'_t} |xi|^gamma = t^{s+1} omega_{d-1} int_0^pi sin^{d-1} |cos|^gamma
    if (d_ == 2) {
        // angular integral reduces to int_{-1}^{1} |u|^gamma du; evaluate by
        // the weighted Gauss rule (constant integrand against weight u^gamma)
        QuadratureRule q = gauss_jacobi01(16, 0.0, gm);
        double angular = 0.0;
        for (double w : q.weights) angular += w;
        return std::pow(t, s_ + 1.0) * unit_sphere_measure(2) * 2.0 * angular;
    }
    // d = 1: 2 int_0^{2pi half...} -> 4 int_0^{pi/2} cos^gamma, with
    // u = cos(theta): int_0^1 u^gamma (1-u)^{-1/2} (1+u)^{-1/2} du
    QuadratureRule q = gauss_jacobi01(24, -0.5, gm);
    double angular = 0.0;
    for (size_t i = 0; i < q.nodes.size(); ++i)
        angular += q.weights[i] / std::sqrt(1.0 + q.nodes[i]);
    return std::pow(t, s_ + 1.0) * 2.0 * 2.0 * angular;
}

double KernelSpec::flux_through_sphere(double t) const {
    if (!(t > 0.0)) throw std::invalid_argument("flux_through_sphere: t > 0 required");
    if (!extended()) {
        // Coulomb d=2, s=0: plain flux through the circle of radius t
        return dg_dr(t) * 2.0 * M_PI * t;
    }
    return dg_dr(t) * sphere_weight_integral(t);
}

double KernelSpec::g_plus(double t) const {
    if (!(t > 0.0)) return std::numeric_limits<double>::infinity();
    if (s_ == 0.0) return std::max(-std::log(t), 0.0) / c_;
    return std::pow(t, -s_) / c_;
}

double min_pair_distance(const std::vector<Point>& pts, int d) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < pts.size(); ++i)
        for (size_t j = i + 1; j < pts.size(); ++j)
            best = std::min(best, dist(pts[i], pts[j], d));
    return best;
}

} // namespace riesz
