#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

namespace riesz {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Legendre rule with n nodes on [-1, 1].
QuadratureRule gauss_legendre(int n);

/// Gauss-Jacobi rule with n nodes on [-1, 1] against the weight
/// (1-x)^alpha (1+x)^beta, alpha, beta > -1.
QuadratureRule gauss_jacobi(int n, double alpha, double beta);

/// Gauss rule with n nodes on [0, 1] against the weight x^beta (1-x)^alpha.
QuadratureRule gauss_jacobi01(int n, double alpha, double beta);

/// Map a rule on [-1,1] to [a,b] (plain Legendre-type weights only).
QuadratureRule mapped(const QuadratureRule& rule, double a, double b);

/// Adaptive Gauss-Legendre integration of f over [a,b]: bisects panels until
/// the local 15- vs 31-point estimates agree to tol (relative to the
/// accumulated integral plus `scale`). Throws QuadratureError on failure.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol, double abs_scale = 0.0, int max_depth = 30);

class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& msg, double achieved)
        : std::runtime_error(msg), achieved_error(achieved) {}
    double achieved_error;
};

/// Node/weight sets for integrals over R^d x R with weight |xi|^gamma:
/// weighted rules on spheres dB'(y,r) and the unbounded xi-fiber rule.
/// Rules are cached per (d, gamma) at construction.
class ExtendedQuadrature {
public:
    ExtendedQuadrature(int d, double gamma, double rel_tol = 1e-8);

    int d() const { return d_; }
    double gamma() const { return gamma_; }
    double rel_tol() const { return rel_tol_; }

    /// int_0^1 u^gamma f(u) du (Gauss-Jacobi in the weighted variable).
    double xi_axis_01(const std::function<double(double)>& f) const;

    /// int_0^inf |xi|^gamma f(xi) dxi via the substitution xi = r u/(1-u),
    /// u in [0,1), with weighted Gauss nodes; r sets the resolved scale.
    /// f must decay fast enough for the integral to converge.
    double fiber(const std::function<double(double)>& f, double r) const;

    /// Weighted surface integral over the sphere of radius r centered at
    /// (y,0) in R^{d+1}: int |xi|^gamma F dsigma. F receives the extended
    /// point (x, xi). Adaptive in the angular directions; abs_scale sets the
    /// absolute error floor (result magnitudes below it need not resolve).
    double sphere(const std::array<double, 2>& y, double r,
                  const std::function<double(const std::array<double, 2>&, double)>& F,
                  double abs_scale = 0.0) const;

    const QuadratureRule& jacobi01() const { return jacobi01_; }

private:
    int d_;
    double gamma_;
    double rel_tol_;
    QuadratureRule jacobi01_;   // weight u^gamma on [0,1]
    QuadratureRule jacobi01_hi_; // refined, for error estimation
};

} // namespace riesz
