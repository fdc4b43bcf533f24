#include "riesz/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

namespace riesz {

namespace {

// Newton iteration on P_n; standard Gauss-Legendre construction.
QuadratureRule legendre_impl(int n) {
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double eps = 1e-15;
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < eps) break;
        }
        rule.nodes[i] = -z;
        rule.nodes[n - 1 - i] = z;
        rule.weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        rule.weights[n - 1 - i] = rule.weights[i];
    }
    return rule;
}

} // namespace

QuadratureRule gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n >= 1 required");
    return legendre_impl(n);
}

// Nodes by Newton iteration on the Jacobi polynomial recurrence, weights by
// the Gamma-function formula (classical gaujac construction).
QuadratureRule gauss_jacobi(int n, double alf, double bet) {
    if (n < 1) throw std::invalid_argument("gauss_jacobi: n >= 1 required");
    if (alf <= -1.0 || bet <= -1.0)
        throw std::invalid_argument("gauss_jacobi: alpha, beta > -1 required");

    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double tol = 1e-14;
    double alfbet = alf + bet;
    std::vector<double> x(n);

    for (int i = 0; i < n; ++i) {
        double z;
        if (i == 0) {
            double an = alf / n, bn = bet / n;
            double r1 = (1.0 + alf) * (2.78 / (4.0 + n * n) + 0.768 * an / n);
            double r2 = 1.0 + 1.48 * an + 0.96 * bn + 0.452 * an * an + 0.83 * an * bn;
            z = 1.0 - r1 / r2;
        } else if (i == 1) {
            double r1 = (4.1 + alf) / ((1.0 + alf) * (1.0 + 0.156 * alf));
            double r2 = 1.0 + 0.06 * (n - 8.0) * (1.0 + 0.12 * alf) / n;
            double r3 = 1.0 + 0.012 * bet * (1.0 + 0.25 * std::abs(alf)) / n;
            z = x[0] - (1.0 - x[0]) * r1 * r2 * r3;
        } else if (i == 2) {
            double r1 = (1.67 + 0.28 * alf) / (1.0 + 0.37 * alf);
            double r2 = 1.0 + 0.22 * (n - 8.0) / n;
            double r3 = 1.0 + 8.0 * bet / ((6.28 + bet) * n * n);
            z = x[1] - (x[0] - x[1]) * r1 * r2 * r3;
        } else if (i == n - 2) {
            double r1 = (1.0 + 0.235 * bet) / (0.766 + 0.119 * bet);
            double r2 = 1.0 / (1.0 + 0.639 * (n - 4.0) / (1.0 + 0.71 * (n - 4.0)));
            double r3 = 1.0 / (1.0 + 20.0 * alf / ((7.5 + alf) * n * n));
            z = x[i - 1] + (x[i - 1] - x[i - 2]) * r1 * r2 * r3;
        } else if (i == n - 1) {
            double r1 = (1.0 + 0.37 * bet) / (1.67 + 0.28 * bet);
            double r2 = 1.0 / (1.0 + 0.22 * (n - 8.0) / n);
            double r3 = 1.0 / (1.0 + 8.0 * alf / ((6.28 + alf) * n * n));
            z = x[i - 1] + (x[i - 1] - x[i - 2]) * r1 * r2 * r3;
        } else {
            z = 3.0 * x[i - 1] - 3.0 * x[i - 2] + x[i - 3];
        }

        double p1 = 0.0, p2 = 0.0, pp = 0.0, temp = 0.0;
        for (int it = 0; it < 200; ++it) {
            temp = 2.0 + alfbet;
            p1 = (alf - bet + temp * z) / 2.0;
            p2 = 1.0;
            for (int j = 2; j <= n; ++j) {
                double p3 = p2;
                p2 = p1;
                temp = 2.0 * j + alfbet;
                double a = 2.0 * j * (j + alfbet) * (temp - 2.0);
                double b = (temp - 1.0) * (alf * alf - bet * bet + temp * (temp - 2.0) * z);
                double c = 2.0 * (j - 1 + alf) * (j - 1 + bet) * temp;
                p1 = (b * p2 - c * p3) / a;
            }
            pp = (n * (alf - bet - temp * z) * p1 + 2.0 * (n + alf) * (n + bet) * p2) /
                 (temp * (1.0 - z * z));
            double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < tol) break;
        }
        x[i] = z;
        rule.nodes[i] = z;
        rule.weights[i] =
            std::exp(std::lgamma(alf + n) + std::lgamma(bet + n) - std::lgamma(n + 1.0) -
                     std::lgamma(n + alfbet + 1.0)) *
            temp * std::pow(2.0, alfbet) / (pp * p2);
    }
    // Recurrence delivers nodes in decreasing order; flip to increasing.
    std::reverse(rule.nodes.begin(), rule.nodes.end());
    std::reverse(rule.weights.begin(), rule.weights.end());
    return rule;
}

QuadratureRule gauss_jacobi01(int n, double alpha, double beta) {
    // x = (1+t)/2 maps the weight (1-t)^alpha (1+t)^beta on [-1,1] to
    // x^beta (1-x)^alpha on [0,1] with an overall factor 2^{-alpha-beta-1}.
    QuadratureRule r = gauss_jacobi(n, alpha, beta);
    double f = std::pow(2.0, -alpha - beta - 1.0);
    for (int i = 0; i < n; ++i) {
        r.nodes[i] = 0.5 * (1.0 + r.nodes[i]);
        r.weights[i] *= f;
    }
    return r;
}

QuadratureRule mapped(const QuadratureRule& rule, double a, double b) {
    QuadratureRule r = rule;
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (size_t i = 0; i < r.nodes.size(); ++i) {
        r.nodes[i] = mid + half * r.nodes[i];
        r.weights[i] *= half;
    }
    return r;
}

namespace {

const QuadratureRule& gl15() {
    static QuadratureRule r = gauss_legendre(15);
    return r;
}
const QuadratureRule& gl31() {
    static QuadratureRule r = gauss_legendre(31);
    return r;
}

double panel(const std::function<double(double)>& f, const QuadratureRule& q, double a, double b) {
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (size_t i = 0; i < q.nodes.size(); ++i) s += q.weights[i] * f(mid + half * q.nodes[i]);
    return half * s;
}

double adaptive_rec(const std::function<double(double)>& f, double a, double b, double tol,
                    double scale, int depth, double& unresolved) {
    double coarse = panel(f, gl15(), a, b);
    double fine = panel(f, gl31(), a, b);
    double err = std::abs(fine - coarse);
    if (err <= tol * (std::abs(fine) + scale) || depth <= 0) {
        if (depth <= 0) unresolved += err;
        return fine;
    }
    double m = 0.5 * (a + b);
    return adaptive_rec(f, a, m, tol, scale, depth - 1, unresolved) +
           adaptive_rec(f, m, b, tol, scale, depth - 1, unresolved);
}

} // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol, double abs_scale, int max_depth) {
    if (!(b >= a)) throw std::invalid_argument("integrate_adaptive: b >= a required");
    if (a == b) return 0.0;
    double unresolved = 0.0;
    double v = adaptive_rec(f, a, b, rel_tol, abs_scale, max_depth, unresolved);
    if (unresolved > 50.0 * rel_tol * (std::abs(v) + abs_scale)) {
        char buf[128];
        std::snprintf(buf, sizeof(buf),
                      "integrate_adaptive: tolerance not met, achieved %.3e", unresolved);
        throw QuadratureError(buf, unresolved);
    }
    return v;
}

ExtendedQuadrature::ExtendedQuadrature(int d, double gamma, double rel_tol)
    : d_(d), gamma_(gamma), rel_tol_(rel_tol) {
    if (d != 1 && d != 2) throw std::invalid_argument("ExtendedQuadrature: d must be 1 or 2");
    if (gamma <= -1.0 || gamma >= 1.0)
        throw std::invalid_argument("ExtendedQuadrature: gamma in (-1,1) required");
    jacobi01_ = gauss_jacobi01(16, 0.0, gamma);
    jacobi01_hi_ = gauss_jacobi01(24, 0.0, gamma);
}

double ExtendedQuadrature::xi_axis_01(const std::function<double(double)>& f) const {
    double s = 0.0;
    for (size_t i = 0; i < jacobi01_.nodes.size(); ++i)
        s += jacobi01_.weights[i] * f(jacobi01_.nodes[i]);
    return s;
}

namespace {

// int_0^1 u^gamma f(u) du, adaptive: Jacobi pair on the current weighted
// panel; on disagreement split at 1/2, keeping the weighted rule on the
// singular left part and absorbing the (smooth) weight on the right.
double weighted_left_adaptive(const std::function<double(double)>& f, double gamma,
                              const QuadratureRule& lo, const QuadratureRule& hi, double tol,
                              double scale, int depth) {
    auto apply = [&](const QuadratureRule& q) {
        double s = 0.0;
        for (size_t i = 0; i < q.nodes.size(); ++i) s += q.weights[i] * f(q.nodes[i]);
        return s;
    };
    double a = apply(lo), b = apply(hi);
    if (std::abs(b - a) <= tol * (std::abs(b) + scale) || depth <= 0) return b;
    // left: u = v/2, weight u^gamma du = (1/2)^{gamma+1} v^gamma dv
    double left = std::pow(0.5, gamma + 1.0) *
                  weighted_left_adaptive([&](double v) { return f(0.5 * v); }, gamma, lo, hi,
                                         tol, scale * 2.0, depth - 1);
    double right = integrate_adaptive(
        [&](double u) { return std::pow(u, gamma) * f(u); }, 0.5, 1.0, tol, scale, 24);
    return left + right;
}

} // namespace

double ExtendedQuadrature::sphere(
    const std::array<double, 2>& y, double r,
    const std::function<double(const std::array<double, 2>&, double)>& F,
    double abs_scale) const {
    if (d_ == 1) {
        // Circle of radius r around (y0, 0) in R^2; psi measured from the
        // horizontal axis, xi = r sin(psi). Integrand assumed even in xi.
        // Quadrant substitution u = sin(psi) gives the Jacobi weight
        // u^gamma (1-u)^{-1/2} with the smooth factor (1+u)^{-1/2}.
        static thread_local int cached_n = 0;
        static thread_local double cached_gamma = -2.0;
        static thread_local QuadratureRule qr_lo, qr_hi;
        if (cached_gamma != gamma_ || cached_n == 0) {
            qr_lo = gauss_jacobi01(20, -0.5, gamma_);
            qr_hi = gauss_jacobi01(30, -0.5, gamma_);
            cached_gamma = gamma_;
            cached_n = 20;
        }
        auto quadrant = [&](double sign_x, const QuadratureRule& q) {
            // psi in (0, pi/2): x = y0 + sign_x * r cos(psi), xi = r sin(psi)
            double s = 0.0;
            for (size_t i = 0; i < q.nodes.size(); ++i) {
                double u = q.nodes[i];
                double cospsi = std::sqrt(1.0 - u * u);
                std::array<double, 2> x{y[0] + sign_x * r * cospsi, 0.0};
                s += q.weights[i] * F(x, r * u) / std::sqrt(1.0 + u);
            }
            return s;
        };
        double inner_scale = abs_scale / (2.0 * std::pow(r, gamma_ + 1.0) + 1e-300);
        double lo = quadrant(+1.0, qr_lo) + quadrant(-1.0, qr_lo);
        double hi = quadrant(+1.0, qr_hi) + quadrant(-1.0, qr_hi);
        double val = 2.0 * std::pow(r, gamma_ + 1.0) * hi; // both xi signs
        if (std::abs(hi - lo) > rel_tol_ * (std::abs(hi) + inner_scale) * 50.0) {
            // fall back to an adaptive sweep in psi on the (bounded-weight)
            // integrand; gamma >= 0 for d = 1 so |sin psi|^gamma is C^0
            double v = integrate_adaptive(
                [&](double psi) {
                    std::array<double, 2> x{y[0] + r * std::cos(psi), 0.0};
                    double xi = r * std::sin(psi);
                    return std::pow(std::abs(std::sin(psi)), gamma_) * F(x, xi);
                },
                0.0, 2.0 * M_PI, rel_tol_, inner_scale, 24);
            return std::pow(r, gamma_ + 1.0) * v;
        }
        return val;
    }

    // d = 2: sphere of radius r around (y, 0) in R^3, u = xi / r in [0,1]
    // (integrand even in xi), horizontal circle integral at each latitude.
    double inner_scale = abs_scale / (2.0 * std::pow(r, gamma_ + 2.0) + 1e-300);
    auto latitude = [&](double u) {
        double rho = r * std::sqrt(std::max(0.0, 1.0 - u * u));
        return integrate_adaptive(
            [&](double phi) {
                std::array<double, 2> x{y[0] + rho * std::cos(phi), y[1] + rho * std::sin(phi)};
                return F(x, r * u);
            },
            0.0, 2.0 * M_PI, rel_tol_, inner_scale, 22);
    };
    double I = weighted_left_adaptive(latitude, gamma_, jacobi01_, jacobi01_hi_, rel_tol_,
                                      inner_scale, 12);
    return 2.0 * std::pow(r, gamma_ + 2.0) * I;
}

double ExtendedQuadrature::fiber(const std::function<double(double)>& f, double r) const {
    // xi = r u/(1-u); int_0^inf xi^gamma f = r^{gamma+1} int_0^1 u^gamma
    // (1-u)^{-gamma-2} f(xi(u)) du, convergent through the decay of f.
    static thread_local double cached_gamma = -2.0;
    static thread_local QuadratureRule q;
    if (cached_gamma != gamma_) {
        q = gauss_jacobi01(40, 0.0, gamma_);
        cached_gamma = gamma_;
    }
    double acc = 0.0;
    for (size_t i = 0; i < q.nodes.size(); ++i) {
        double u = q.nodes[i];
        double xi = r * u / (1.0 - u);
        double v = f(xi) * std::pow(1.0 - u, -gamma_ - 2.0);
        if (!std::isfinite(v)) continue; // envelope negligible past the tail
        double contrib = q.weights[i] * v;
        if (std::abs(contrib) < 1e-12 * std::abs(acc)) continue;
        acc += contrib;
    }
    return std::pow(r, gamma_ + 1.0) * acc;
}

} // namespace riesz
