#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "riesz/kernel.hpp"
#include "riesz/quadrature.hpp"

using namespace riesz;

TEST_CASE("normalization constant: closed forms") {
    // B(s/2, 1) = 2/s collapses c_{2,s} to 4*pi for every 0 < s < 2
    for (double s : {0.1, 0.5, 0.9, 1.0, 1.3, 1.9})
        CHECK(normalization_constant(2, s) == doctest::Approx(4.0 * M_PI).epsilon(1e-13));
    // fundamental-solution constant of the 2D plane
    CHECK(normalization_constant(2, 0.0) == doctest::Approx(2.0 * M_PI));
    CHECK(normalization_constant(1, 0.0) == doctest::Approx(2.0 * M_PI));
    // gamma-function evaluation, cross-checked below by flux quadrature
    CHECK(normalization_constant(1, 0.5) == doctest::Approx(2.396280).epsilon(1e-6));
}

TEST_CASE("normalization constant: range checks") {
    CHECK_THROWS(normalization_constant(3, 0.5));
    CHECK_THROWS(normalization_constant(2, 2.0));
    CHECK_THROWS(normalization_constant(1, 1.0));
    CHECK_THROWS(normalization_constant(1, -0.1));
}

TEST_CASE("kernel values and gradients") {
    KernelSpec k2(2, 0.5);
    CHECK(k2.g(1.0) == doctest::Approx(1.0 / k2.c()));
    KernelSpec k0(2, 0.0);
    CHECK(k0.g(1.0) == doctest::Approx(0.0));

    Point g = k2.grad_g(point2(1.0, 0.0));
    CHECK(g[0] == doctest::Approx(-0.5 / (4.0 * M_PI)).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(0.0));

    CHECK_THROWS(k2.g(0.0));
    CHECK_THROWS(k2.grad_g(point2(0.0, 0.0)));
}

TEST_CASE("gradient matches centered finite differences") {
    for (auto [d, s] : std::vector<std::pair<int, double>>{{1, 0.0}, {1, 0.5}, {2, 0.0}, {2, 0.7}}) {
        KernelSpec k(d, s);
        Point x = d == 1 ? point1(0.7) : point2(0.4, -0.6);
        double h = 1e-5;
        Point g = k.grad_g(x);
        for (int c = 0; c < d; ++c) {
            Point xp = x, xm = x;
            xp[c] += h;
            xm[c] -= h;
            double fd = (k.g(norm(xp, d)) - k.g(norm(xm, d))) / (2.0 * h);
            CHECK(g[c] == doctest::Approx(fd).epsilon(1e-7));
        }
    }
}

TEST_CASE("truncated kernel") {
    KernelSpec k(2, 0.5);
    double eta = 0.1;
    // plateau region: value g(eta), gradient zero
    CHECK(k.g_truncated(eta, point2(eta / 2, 0.0), 0.0) == doctest::Approx(k.g(eta)));
    Point gx;
    double gxi;
    k.grad_g_truncated(eta, point2(eta / 4, 0.0), eta / 4, gx, gxi);
    CHECK(gx[0] == 0.0);
    CHECK(gxi == 0.0);
    // outside the plateau
    CHECK(k.g_truncated(eta, point2(2 * eta, 0.0), 0.0) == doctest::Approx(k.g(2 * eta)));
    // continuity at the plateau edge
    double lo = k.g_truncated(eta, point2(eta * (1 - 1e-13), 0.0), 0.0);
    double hi = k.g_truncated(eta, point2(eta * (1 + 1e-13), 0.0), 0.0);
    CHECK(std::abs(lo - hi) < 1e-12);
    // g_truncated <= g pointwise, equality outside the eta-ball
    for (double r : {0.01, 0.05, 0.2, 1.0, 3.0}) {
        CHECK(k.g_truncated(eta, point2(r, 0.0), 0.0) <= k.g(r) + 1e-15);
        if (r > eta) CHECK(k.g_truncated(eta, point2(r, 0.0), 0.0) == doctest::Approx(k.g(r)));
    }
}

TEST_CASE("extended kernel") {
    KernelSpec k1(1, 0.0);
    CHECK(k1.extended_g(point1(1.0), 0.0) == doctest::Approx(0.0));
    KernelSpec k2(2, 0.5);
    CHECK(k2.extended_g(point2(0.0, 0.0), 1.0) == doctest::Approx(1.0 / (4.0 * M_PI)));
    // radial symmetry
    double a = k2.extended_g(point2(0.6, 0.0), 0.8);
    double b = k2.extended_g(point2(0.0, 1.0), 0.0);
    CHECK(a == doctest::Approx(b));
    // no extension in the pure-Coulomb case
    KernelSpec coulomb(2, 0.0);
    CHECK_THROWS(coulomb.extended_g(point2(1.0, 0.0), 0.0));
    CHECK_FALSE(coulomb.extended());
    CHECK(k2.gamma() == doctest::Approx(-0.5));
    CHECK(KernelSpec(1, 0.25).gamma() == doctest::Approx(0.25));
}

TEST_CASE("sphere weight integral: closed form t^{s+1} c/s") {
    KernelSpec k2(2, 0.5);
    CHECK(k2.sphere_weight_integral(1.0) == doctest::Approx(8.0 * M_PI).epsilon(1e-10));
    // scaling value(2t)/value(t) = 2^{s+1}
    CHECK(k2.sphere_weight_integral(2.0) / k2.sphere_weight_integral(1.0) ==
          doctest::Approx(std::pow(2.0, 1.5)).epsilon(1e-12));
    KernelSpec k1(1, 0.5);
    CHECK(k1.sphere_weight_integral(1.0) == doctest::Approx(k1.c() / 0.5).epsilon(1e-10));
}

TEST_CASE("flux identity: defining property of c_{d,s}") {
    for (auto [d, s] : std::vector<std::pair<int, double>>{
             {1, 0.0}, {1, 0.25}, {1, 0.5}, {1, 0.9}, {2, 0.5}, {2, 0.9}, {2, 1.5}}) {
        KernelSpec k(d, s);
        for (double t : {0.1, 1.0, 10.0})
            CHECK(k.flux_through_sphere(t) == doctest::Approx(-1.0).epsilon(1e-8));
    }
    // Coulomb plane flux
    KernelSpec coulomb(2, 0.0);
    CHECK(coulomb.flux_through_sphere(0.3) == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("g_plus positive part") {
    KernelSpec k(2, 0.0);
    CHECK(k.g_plus(0.5) == doctest::Approx(-std::log(0.5) / (2.0 * M_PI)));
    CHECK(k.g_plus(2.0) == 0.0);
    KernelSpec ks(1, 0.5);
    CHECK(ks.g_plus(4.0) == doctest::Approx(0.5 / ks.c()));
}
