#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "riesz/dynamics.hpp"

using namespace riesz;

namespace {

ParticleSystem make_system(int d, double s, std::vector<Point> pts) {
    return ParticleSystem{KernelSpec(d, s), std::move(pts)};
}

std::vector<Point> random_points(int d, int n, unsigned seed, double span = 1.0) {
    std::mt19937_64 gen(seed);
    auto u = [&] { return span * ((gen() >> 11) * 0x1.0p-53 - 0.5); };
    std::vector<Point> pts;
    for (int i = 0; i < n; ++i) pts.push_back(d == 1 ? point1(u()) : point2(u(), u()));
    return pts;
}

} // namespace

TEST_CASE("pairwise energy closed forms") {
    KernelSpec k(2, 0.5);
    // two points at distance 1: ordered pairs count twice
    auto sys = make_system(2, 0.5, {point2(0, 0), point2(1, 0)});
    CHECK(pairwise_energy(sys).raw == doctest::Approx(2.0 / k.c()));
    // equilateral triangle side 1
    auto tri = make_system(2, 0.5,
                           {point2(0, 0), point2(1, 0), point2(0.5, std::sqrt(3.0) / 2)});
    CHECK(pairwise_energy(tri).raw == doctest::Approx(6.0 / k.c()));
    // 1D three points {0,1,2}
    KernelSpec k1(1, 0.5);
    auto line = make_system(1, 0.5, {point1(0), point1(1), point1(2)});
    CHECK(pairwise_energy(line).raw ==
          doctest::Approx(2.0 / k1.c() * (1.0 + 1.0 + std::pow(2.0, -0.5))));
    CHECK(pairwise_energy(line).per_n2 == doctest::Approx(pairwise_energy(line).raw / 9.0));
}

TEST_CASE("pairwise energy rejects coincident points") {
    auto sys = make_system(2, 0.5, {point2(0, 0), point2(0, 0)});
    CHECK_THROWS(sys.validate());
}

TEST_CASE("velocities: two-body closed form and antisymmetry") {
    auto sys = make_system(2, 0.5, {point2(0, 0), point2(1, 0)});
    auto v = velocities(sys);
    // v1 = -(1/N) grad_1 H_N = -grad g(x1-x2) = -(s/c) e1, pointing away from x2
    CHECK(v[0][0] == doctest::Approx(-0.5 / (4.0 * M_PI)).epsilon(1e-12));
    CHECK(v[0][1] == doctest::Approx(0.0));
    CHECK(v[1][0] == doctest::Approx(-v[0][0]));
    CHECK(v[1][1] == doctest::Approx(0.0));

    // sum of velocities vanishes for beta = 0, no potential
    auto many = make_system(2, 0.5, random_points(2, 9, 42));
    auto vm = velocities(many);
    double sx = 0, sy = 0;
    for (auto& w : vm) {
        sx += w[0];
        sy += w[1];
    }
    CHECK(sx == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(sy == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

    // single particle does not move
    auto one = make_system(2, 0.5, {point2(0.3, 0.4)});
    CHECK(velocities(one)[0][0] == 0.0);
}

TEST_CASE("velocities match finite differences of H_N / N") {
    for (auto [d, s] : std::vector<std::pair<int, double>>{{1, 0.5}, {2, 0.0}, {2, 0.7}}) {
        auto sys = make_system(d, s, random_points(d, 5, 7u + d));
        auto v = velocities(sys);
        double h = 1e-6;
        int n = sys.n();
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < d; ++c) {
                ParticleSystem p = sys, m = sys;
                p.positions[i][c] += h;
                m.positions[i][c] -= h;
                double fd = (pairwise_energy(p).raw - pairwise_energy(m).raw) / (2.0 * h * n);
                CHECK(v[i][c] == doctest::Approx(-fd).epsilon(5e-5));
            }
    }
}

TEST_CASE("pair convention halves the force") {
    auto sys = make_system(2, 0.5, random_points(2, 4, 11));
    auto vo = velocities(sys);
    sys.pair_convention = PairConvention::unordered;
    auto vu = velocities(sys);
    for (int i = 0; i < sys.n(); ++i)
        for (int c = 0; c < 2; ++c) CHECK(vu[i][c] == doctest::Approx(0.5 * vo[i][c]));
}

TEST_CASE("mixed flow: perp term is orthogonal, alpha=0 with beta rejected") {
    auto sys = make_system(2, 0.5, random_points(2, 5, 3));
    sys.beta = 0.7;
    auto v = velocities(sys); // alpha=1, beta=0.7 valid
    CHECK(v.size() == 5);
    sys.alpha = 0.0;
    CHECK_THROWS(sys.validate());
    ParticleSystem sys1 = make_system(1, 0.5, random_points(1, 3, 5));
    sys1.beta = 0.1; // beta requires d = 2
    CHECK_THROWS(sys1.validate());
}

TEST_CASE("integrate: symmetric pair stays mirror-symmetric") {
    auto sys = make_system(2, 0.5, {point2(-0.5, 0), point2(0.5, 0)});
    IntegrateOptions opt;
    opt.tol = 1e-10;
    opt.sample_dt = 0.1;
    ParticleSystem moving = sys;
    TrajectoryRecord rec = integrate(moving, 1.0, opt);
    for (size_t k = 0; k < rec.times.size(); ++k) {
        CHECK(std::abs(rec.positions[k][0][0] + rec.positions[k][1][0]) < 1e-9);
        CHECK(std::abs(rec.positions[k][0][1]) < 1e-12);
    }
}

TEST_CASE("integrate: H_N nonincreasing along the gradient flow") {
    auto sys = make_system(2, 0.5, random_points(2, 6, 99));
    IntegrateOptions opt;
    opt.tol = 1e-8;
    opt.sample_dt = 0.02;
    ParticleSystem moving = sys;
    TrajectoryRecord rec = integrate(moving, 0.4, opt);
    for (size_t k = 0; k + 1 < rec.energy.size(); ++k)
        CHECK(rec.energy[k + 1] <= rec.energy[k] + 1e-10);
    // eta_N stays positive
    for (double m : rec.min_distance) CHECK(m > 0.0);
    // H_N nonincreasing with a conservative term too (alpha > 0, beta != 0)
    ParticleSystem mixed = sys;
    mixed.beta = 0.5;
    TrajectoryRecord rec2 = integrate(mixed, 0.4, opt);
    for (size_t k = 0; k + 1 < rec2.energy.size(); ++k)
        CHECK(rec2.energy[k + 1] <= rec2.energy[k] + 1e-10);
}

TEST_CASE("integrate matches a fixed-step RK4 reference") {
    // d=1, N=3, s=0.5 over [0, 0.1]; reference dt = 1e-5
    auto sys = make_system(1, 0.5, {point1(-0.31), point1(0.05), point1(0.42)});
    ParticleSystem moving = sys;
    IntegrateOptions opt;
    opt.tol = 1e-11;
    opt.sample_dt = 0.1;
    TrajectoryRecord rec = integrate(moving, 0.1, opt);

    ParticleSystem ref = sys;
    const double dt = 1e-5;
    for (int step = 0; step < 10000; ++step) {
        auto k1 = velocities(ref);
        ParticleSystem t2 = ref;
        for (int i = 0; i < 3; ++i) t2.positions[i][0] += 0.5 * dt * k1[i][0];
        auto k2 = velocities(t2);
        ParticleSystem t3 = ref;
        for (int i = 0; i < 3; ++i) t3.positions[i][0] += 0.5 * dt * k2[i][0];
        auto k3 = velocities(t3);
        ParticleSystem t4 = ref;
        for (int i = 0; i < 3; ++i) t4.positions[i][0] += dt * k3[i][0];
        auto k4 = velocities(t4);
        for (int i = 0; i < 3; ++i)
            ref.positions[i][0] +=
                dt / 6.0 * (k1[i][0] + 2.0 * k2[i][0] + 2.0 * k3[i][0] + k4[i][0]);
    }
    for (int i = 0; i < 3; ++i)
        CHECK(moving.positions[i][0] == doctest::Approx(ref.positions[i][0]).epsilon(1e-6));
}

TEST_CASE("dissipation identity residual") {
    auto sys = make_system(2, 0.5, random_points(2, 4, 2024));
    IntegrateOptions opt;
    opt.tol = 1e-8;
    opt.sample_dt = 1e-3;
    ParticleSystem moving = sys;
    TrajectoryRecord rec = integrate(moving, 0.2, opt);
    CHECK(dissipation_residual(rec) < 1e-4);

    // residual shrinks under tolerance refinement (finer sampling)
    IntegrateOptions fine = opt;
    fine.tol = 1e-10;
    fine.sample_dt = 2e-4;
    ParticleSystem moving2 = sys;
    TrajectoryRecord rec2 = integrate(moving2, 0.2, fine);
    CHECK(dissipation_residual(rec2) < dissipation_residual(rec));

    // generalized identity with a conservative part
    ParticleSystem mixed = sys;
    mixed.alpha = 0.8;
    mixed.beta = 0.6;
    TrajectoryRecord rec3 = integrate(mixed, 0.2, fine);
    CHECK(dissipation_residual_general(rec3, 0.8, 0.6) < 1e-4);
}

TEST_CASE("dispersion identity, s = 0") {
    // N=2, d=2: slope = 4(N-1)/(N c) = 1/pi; |x1-x2|^2 = r0^2 + (2/pi) t
    auto sys = make_system(2, 0.0, {point2(-0.25, 0), point2(0.25, 0)});
    IntegrateOptions opt;
    opt.tol = 1e-11;
    opt.sample_dt = 0.01;
    ParticleSystem moving = sys;
    TrajectoryRecord rec = integrate(moving, 0.5, opt);
    CHECK(dispersion_rate(rec) == doctest::Approx(1.0 / M_PI).epsilon(1e-6));
    double r2 = norm2(sub(moving.positions[0], moving.positions[1]), 2);
    CHECK(r2 == doctest::Approx(0.25 + 2.0 / M_PI * 0.5).epsilon(1e-6));

    // slope independent of the configuration; center of mass pinned
    auto sys8 = make_system(2, 0.0, random_points(2, 8, 5));
    ParticleSystem m8 = sys8;
    TrajectoryRecord rec8 = integrate(m8, 0.5, opt);
    CHECK(dispersion_rate(rec8) ==
          doctest::Approx(dispersion_constant(sys8.spec, 8, PairConvention::ordered))
              .epsilon(1e-6));
    Point com0 = rec8.center_of_mass.front(), com1 = rec8.center_of_mass.back();
    CHECK(std::abs(com0[0] - com1[0]) < 1e-10);
    CHECK(std::abs(com0[1] - com1[1]) < 1e-10);

    // unordered convention halves the constant
    CHECK(dispersion_constant(sys8.spec, 8, PairConvention::unordered) ==
          doctest::Approx(0.5 * dispersion_constant(sys8.spec, 8, PairConvention::ordered)));
}

TEST_CASE("potential term and Hessian bound warning path") {
    auto sys = make_system(2, 0.5, random_points(2, 3, 31));
    sys.potential = std::make_shared<Potential>(quadratic_potential(2.0));
    double e = pairwise_energy(sys).raw;
    double inter = pairwise_energy(sys).interaction;
    double vsum = 0.0;
    for (auto& p : sys.positions) vsum += sys.potential->value(p);
    CHECK(e == doctest::Approx(inter + vsum));
    // velocities include -grad V
    auto v = velocities(sys);
    ParticleSystem noV = sys;
    noV.potential.reset();
    auto v0 = velocities(noV);
    for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 2; ++c)
            CHECK(v[i][c] == doctest::Approx(v0[i][c] - 2.0 * sys.positions[i][c]));
}

TEST_CASE("cell-list accelerator agrees with direct summation at full cutoff") {
    auto sys = make_system(2, 0.5, random_points(2, 40, 7));
    auto direct = velocities(sys);
    auto fast = velocities_cell_list(sys, 10.0); // cutoff covers everything
    for (int i = 0; i < sys.n(); ++i)
        for (int c = 0; c < 2; ++c)
            CHECK(fast[i][c] == doctest::Approx(direct[i][c]).epsilon(1e-12));
    // a short cutoff drops far pairs: still finite, close but not equal
    auto screened = velocities_cell_list(sys, 0.3);
    bool differs = false;
    for (int i = 0; i < sys.n() && !differs; ++i)
        differs = std::abs(screened[i][0] - direct[i][0]) > 1e-9;
    CHECK(differs);
    CHECK_THROWS(velocities_cell_list(make_system(1, 0.5, random_points(1, 4, 9)), 1.0));
}

TEST_CASE("trajectory csv writers produce the documented schemas") {
    auto sys = make_system(2, 0.5, {point2(-0.5, 0), point2(0.5, 0)});
    IntegrateOptions opt;
    opt.sample_dt = 0.05;
    ParticleSystem moving = sys;
    TrajectoryRecord rec = integrate(moving, 0.1, opt);
    write_trajectory_csv(rec, "traj_test.csv");
    write_scalar_series_csv(rec, "scalars_test.csv");
    std::FILE* f = std::fopen("traj_test.csv", "rb");
    REQUIRE(f);
    char line[256];
    REQUIRE(std::fgets(line, sizeof line, f));
    CHECK(std::string(line) == "t,i,x1,x2,v1,v2\n");
    std::fclose(f);
    f = std::fopen("scalars_test.csv", "rb");
    REQUIRE(f);
    REQUIRE(std::fgets(line, sizeof line, f));
    CHECK(std::string(line) == "t,H_N,eta_N,com_1,com_2,dispersion\n");
    std::fclose(f);
    std::remove("traj_test.csv");
    std::remove("scalars_test.csv");
}
