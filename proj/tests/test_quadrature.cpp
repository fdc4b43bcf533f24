#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "riesz/kernel.hpp"
#include "riesz/quadrature.hpp"

using namespace riesz;

TEST_CASE("Gauss-Legendre integrates polynomials exactly") {
    QuadratureRule q = gauss_legendre(8);
    for (int k = 0; k <= 15; ++k) {
        double got = 0.0;
        for (size_t i = 0; i < q.nodes.size(); ++i) got += q.weights[i] * std::pow(q.nodes[i], k);
        double want = k % 2 == 1 ? 0.0 : 2.0 / (k + 1);
        CHECK(got == doctest::Approx(want).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("Gauss-Jacobi weighted moments on [0,1]") {
    // weight u^beta: int_0^1 u^beta u^k du = 1/(beta+k+1); exact to degree 2n-1
    for (double beta : {-0.5, 0.0, 0.25, 0.5}) {
        QuadratureRule q = gauss_jacobi01(12, 0.0, beta);
        for (int k = 0; k <= 20; ++k) {
            double got = 0.0;
            for (size_t i = 0; i < q.nodes.size(); ++i)
                got += q.weights[i] * std::pow(q.nodes[i], k);
            CHECK(got == doctest::Approx(1.0 / (beta + k + 1)).epsilon(1e-11));
        }
    }
}

TEST_CASE("Gauss-Jacobi with both exponents") {
    // weight u^0.25 (1-u)^-0.5 against f = 1: B(1.25, 0.5)
    QuadratureRule q = gauss_jacobi01(16, -0.5, 0.25);
    double got = 0.0;
    for (double w : q.weights) got += w;
    double want = std::exp(std::lgamma(1.25) + std::lgamma(0.5) - std::lgamma(1.75));
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("adaptive integration") {
    double got = integrate_adaptive([](double x) { return std::sin(x); }, 0.0, M_PI, 1e-12);
    CHECK(got == doctest::Approx(2.0).epsilon(1e-12));
    // endpoint algebraic singularity in the derivative
    got = integrate_adaptive([](double x) { return std::sqrt(x); }, 0.0, 1.0, 1e-10);
    CHECK(got == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("weighted sphere rule reproduces the sphere weight integral") {
    for (auto [d, s] : std::vector<std::pair<int, double>>{{1, 0.25}, {1, 0.5}, {2, 0.5}, {2, 0.9}}) {
        KernelSpec k(d, s);
        ExtendedQuadrature quad(d, k.gamma(), 1e-9);
        for (double r : {0.3, 1.0, 2.5}) {
            double got = quad.sphere(point1(0.4), r,
                                     [](const Point&, double) { return 1.0; });
            CHECK(got == doctest::Approx(k.sphere_weight_integral(r)).epsilon(1e-8));
        }
    }
}

TEST_CASE("weighted sphere rule on a nonconstant integrand") {
    // int over the sphere of |xi|^gamma xi^2: compare against an independent
    // 1D reduction (d = 2: 2 r^{gamma+4} * 2pi * int_0^1 u^{gamma+2} du)
    KernelSpec k(2, 0.5);
    double gamma = k.gamma();
    ExtendedQuadrature quad(2, gamma, 1e-9);
    double r = 1.7;
    double got = quad.sphere(point2(0.0, 0.0), r,
                             [](const Point&, double xi) { return xi * xi; });
    double want = 2.0 * std::pow(r, gamma + 4.0) * 2.0 * M_PI / (gamma + 3.0);
    CHECK(got == doctest::Approx(want).epsilon(1e-8));
}

TEST_CASE("fiber rule integrates against the weight") {
    // int_0^inf xi^gamma exp(-xi) dxi = Gamma(gamma+1)
    KernelSpec k(2, 0.5);
    ExtendedQuadrature quad(2, k.gamma(), 1e-8);
    double got = quad.fiber([](double xi) { return std::exp(-xi); }, 1.0);
    CHECK(got == doctest::Approx(std::tgamma(k.gamma() + 1.0)).epsilon(1e-6));
}
