#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "riesz/modenergy.hpp"

using namespace riesz;

namespace {

std::vector<Point> random_points(int d, int n, unsigned seed, double span = 1.0) {
    std::mt19937_64 gen(seed);
    auto u = [&] { return span * ((gen() >> 11) * 0x1.0p-53 - 0.5); };
    std::vector<Point> pts;
    for (int i = 0; i < n; ++i) pts.push_back(d == 1 ? point1(u()) : point2(u(), u()));
    return pts;
}

// jittered lattice: random-looking but with a guaranteed minimal separation
std::vector<Point> separated_points(int d, int n, unsigned seed, double span = 1.0) {
    std::mt19937_64 gen(seed);
    auto u = [&] { return (gen() >> 11) * 0x1.0p-53 - 0.5; };
    std::vector<Point> pts;
    if (d == 1) {
        double h = span / n;
        for (int i = 0; i < n; ++i)
            pts.push_back(point1(-0.5 * span + (i + 0.5 + 0.3 * u()) * h));
    } else {
        int side = 1;
        while (side * side < n) ++side;
        double h = span / side;
        for (int i = 0; i < side * side && static_cast<int>(pts.size()) < n; ++i) {
            int ix = i % side, iy = i / side;
            pts.push_back(point2(-0.5 * span + (ix + 0.5 + 0.3 * u()) * h,
                                 -0.5 * span + (iy + 0.5 + 0.3 * u()) * h));
        }
    }
    return pts;
}

} // namespace

TEST_CASE("modulated energy: single particle") {
    KernelSpec spec(2, 0.0);
    GridField f = ic_uniform_patch(spec, 2.0, 256, 1.0);
    ParticleSystem sys{spec, {point2(0.0, 0.0)}};
    ModulatedEnergyReport rep = modulated_energy(sys, f);
    CHECK(rep.pp == 0.0);
    CHECK(rep.e_n == doctest::Approx(rep.ff - rep.pf).epsilon(1e-15));
    // uniform unit disc: I(mu) = 1/(8 pi), h(0) = 1/(4 pi)
    CHECK(rep.ff == doctest::Approx(1.0 / (8.0 * M_PI)).epsilon(1e-3));
    CHECK(rep.pf == doctest::Approx(2.0 / (4.0 * M_PI)).epsilon(1e-3));
    CHECK(rep.e_n == doctest::Approx(1.0 / (8.0 * M_PI) - 2.0 / (4.0 * M_PI)).epsilon(2e-3));
}

TEST_CASE("modulated energy: assembly identity and errors") {
    KernelSpec spec(2, 0.5);
    GridField f = ic_smooth_bump(spec, 2.0, 64, 0.8);
    ParticleSystem sys{spec, random_points(2, 12, 5, 0.8)};
    ModulatedEnergyReport rep = modulated_energy(sys, f);
    CHECK(rep.e_n == rep.pp - rep.pf + rep.ff); // exact by construction

    // spec mismatch rejected
    ParticleSystem wrong{KernelSpec(2, 0.7), random_points(2, 3, 6, 0.5)};
    CHECK_THROWS(modulated_energy(wrong, f));
    // particle outside the grid support region rejected
    ParticleSystem outside{spec, {point2(1.999, 0.0)}};
    CHECK_THROWS(modulated_energy(outside, f));
}

TEST_CASE("pf interpolation agrees with the direct-sum cross-check") {
    KernelSpec spec(2, 0.5);
    GridField f = ic_smooth_bump(spec, 2.0, 128, 0.8);
    ParticleSystem sys{spec, random_points(2, 6, 77, 0.9)};
    ModulatedEnergyReport rep = modulated_energy(sys, f);
    double direct = pf_direct_sum(sys, f);
    CHECK(rep.pf == doctest::Approx(direct).epsilon(5e-3));
}

TEST_CASE("eta approximation: defect identity against a quadrature oracle") {
    // defect = (2/N) sum mu(x_i) * int_{B_eta}(g - g_eta); the radial integral
    // is evaluated here independently by adaptive quadrature
    for (auto [d, s] : std::vector<std::pair<int, double>>{{1, 0.5}, {2, 0.5}, {2, 0.0}}) {
        KernelSpec spec(d, s);
        GridField f = ic_smooth_bump(spec, 2.0, d == 1 ? 256 : 64, 0.8);
        ParticleSystem sys{spec, separated_points(d, 4, 11u + d, 0.8)};
        double eta = 0.01;
        double e_eta = eta_approx(sys, f, eta);
        ModulatedEnergyReport rep = modulated_energy(sys, f);
        double defect = e_eta - rep.e_n - spec.g(eta) / sys.n();

        // substitution r = v^2 makes the radial integrand bounded at 0
        double omega = unit_sphere_measure(d);
        double radial = integrate_adaptive(
            [&](double v) {
                double r = v * v;
                if (r == 0.0) return 0.0;
                return (spec.g(r) - spec.g(eta)) * omega * std::pow(r, d - 1.0) * 2.0 * v;
            },
            0.0, std::sqrt(eta), 1e-12, 1e-12);
        double mu_sum = 0.0;
        for (const Point& x : sys.positions) mu_sum += f.interp_value(x);
        CHECK(defect == doctest::Approx(2.0 / sys.n() * mu_sum * radial).epsilon(1e-9));
        CHECK(defect > 0.0);
    }
}

TEST_CASE("eta approximation: defect decays as eta drops, translation invariance") {
    KernelSpec spec(2, 0.5);
    GridField f = ic_smooth_bump(spec, 2.0, 64, 0.8);
    for (unsigned seed : {1u, 2u, 3u}) {
        ParticleSystem sys{spec, separated_points(2, 8, seed, 0.9)};
        ModulatedEnergyReport rep = modulated_energy(sys, f);
        append_eta_values(rep, sys, f, {0.02, 0.01, 0.005});
        REQUIRE(rep.eta_values.size() == 3);
        CHECK(rep.eta_values[0].eta == 0.02); // sorted decreasing
        CHECK(rep.eta_values[1].defect < rep.eta_values[0].defect);
        CHECK(rep.eta_values[2].defect < rep.eta_values[1].defect);
        // defect at least halves when eta halves (here it scales like eta^{d-s})
        CHECK(rep.eta_values[1].defect < 0.5 * rep.eta_values[0].defect + 1e-14);
    }
    // admissibility: eta too large vs eta_N rejected
    ParticleSystem tight{spec, {point2(0, 0), point2(0.015, 0)}};
    CHECK_THROWS(eta_approx(tight, f, 0.01));
}

TEST_CASE("region energy: single-charge annulus closed form") {
    // g(eta) - g(r), exact for a centered charge
    for (auto [d, s] : std::vector<std::pair<int, double>>{
             {1, 0.0}, {1, 0.25}, {1, 0.5}, {2, 0.0}, {2, 0.5}, {2, 0.9}}) {
        KernelSpec spec(d, s);
        std::vector<Point> one{d == 1 ? point1(0.2) : point2(0.2, -0.1)};
        for (double eta : {0.01, 0.05})
            for (double r : {0.5, 1.0}) {
                double got = region_energy_ball(one, spec, eta, one[0], r, 1e-9);
                double want = spec.g(eta) - spec.g(r);
                CHECK(got == doctest::Approx(want).epsilon(1e-6));
            }
    }
    // spec worked example: d=2, s=0.5, eta=0.01, r=1 -> 9/(4 pi)
    KernelSpec spec(2, 0.5);
    std::vector<Point> one{point2(0, 0)};
    CHECK(region_energy_ball(one, spec, 0.01, point2(0, 0), 1.0) ==
          doctest::Approx(9.0 / (4.0 * M_PI)).epsilon(1e-6));
}

TEST_CASE("region energy: plateau-only ball is zero, boundary crossings rejected") {
    KernelSpec spec(2, 0.5);
    std::vector<Point> one{point2(0, 0)};
    CHECK(region_energy_ball(one, spec, 0.1, point2(0, 0), 0.05) == 0.0);
    CHECK_THROWS(region_energy_ball(one, spec, 0.1, point2(0, 0), 0.1)); // sphere touches boundary
    std::vector<Point> two{point2(0, 0), point2(0.6, 0)};
    CHECK_THROWS(region_energy_ball(two, spec, 0.1, point2(0, 0), 0.55)); // straddles charge 2
}

TEST_CASE("region energy: two far charges, ball around one") {
    KernelSpec spec(2, 0.5);
    std::vector<Point> two{point2(0, 0), point2(10.0, 0)};
    double eta = 0.01, r = 1.0;
    double got = region_energy_ball(two, spec, eta, point2(0, 0), r, 1e-9);
    // per-charge weight 1/N: the self part contributes (g(eta)-g(r))/N^2
    double single = (spec.g(eta) - spec.g(r)) / 4.0;
    CHECK(got == doctest::Approx(single).epsilon(0.01));
}

TEST_CASE("region energy: nonnegative and additive over a collection") {
    for (auto [d, s] : std::vector<std::pair<int, double>>{{1, 0.5}, {2, 0.5}, {2, 0.0}}) {
        KernelSpec spec(d, s);
        std::vector<Point> pts = random_points(d, 5, 17u + d, 1.0);
        double eta_n = min_pair_distance(pts, d);
        double eta = 0.2 * eta_n;
        std::vector<Ball> balls;
        for (const Point& p : pts) balls.push_back({p, 0.45 * eta_n, 1});
        double total = region_energy(pts, spec, eta, balls, 1e-7);
        CHECK(total >= 0.0);
        double sum = 0.0;
        for (const Ball& b : balls)
            sum += region_energy_ball(pts, spec, eta, b.center, b.r, 1e-7);
        CHECK(total == doctest::Approx(sum).epsilon(1e-12));
    }
}

TEST_CASE("lp gradient distance: admissibility and monotonicity in the balls") {
    KernelSpec spec(2, 0.5);
    GridField f = ic_smooth_bump(spec, 2.0, 64, 0.8);
    ParticleSystem sys{spec, random_points(2, 8, 23, 0.7)};
    BallCollection none;
    none.d = 2;
    CHECK_THROWS(lp_gradient_distance(sys, f, none, 1.7, 1.0)); // p >= 2d/(s+d) = 1.6

    double full = lp_gradient_distance(sys, f, none, 1.2, 1.0);
    CHECK(full > 0.0);

    double eta_n = min_pair_distance(sys.positions, 2);
    BallCollection small = grow_and_merge(sys.positions, 2, 0.05, eta_n);
    double outside = lp_gradient_distance(sys, f, small, 1.2, 1.0);
    CHECK(outside <= full);

    BallCollection everything;
    everything.d = 2;
    everything.balls.push_back({point2(0, 0), 10.0, sys.n()});
    everything.total_radius = 10.0;
    CHECK(lp_gradient_distance(sys, f, everything, 1.2, 1.0) == 0.0);
}

TEST_CASE("lp gradient distance: mollified empirical measure self-consistency") {
    // field = sum of narrow normalized bumps at the particle positions; the
    // gradient gap outside the balls shrinks as the mollification scale
    // approaches the cell size
    KernelSpec spec(2, 0.5);
    std::vector<Point> pts{point2(-0.5, -0.5), point2(0.5, -0.5), point2(-0.5, 0.5),
                           point2(0.5, 0.5)};
    ParticleSystem sys{spec, pts};
    double eta_n = min_pair_distance(pts, 2);
    BallCollection balls = grow_and_merge(pts, 2, 0.2, eta_n);

    auto mollified = [&](double scale) {
        GridField f(spec, 2.0, 64);
        for (size_t c = 0; c < f.values.size(); ++c) {
            Point x = f.cell_center(c);
            for (const Point& p : pts) {
                double q = norm2(sub(x, p), 2) / (scale * scale);
                if (q < 1.0) f.values[c] += std::exp(-1.0 / (1.0 - q));
            }
        }
        f.normalize();
        return f;
    };
    double wide = lp_gradient_distance(sys, mollified(0.45), balls, 1.2, 1.2);
    double narrow = lp_gradient_distance(sys, mollified(0.2), balls, 1.2, 1.2);
    CHECK(narrow < wide);
}

TEST_CASE("report json serialization") {
    KernelSpec spec(2, 0.5);
    GridField f = ic_smooth_bump(spec, 2.0, 64, 0.8);
    ParticleSystem sys{spec, separated_points(2, 4, 3, 0.8)};
    ModulatedEnergyReport rep = modulated_energy(sys, f);
    append_eta_values(rep, sys, f, {0.01});
    write_report_json(rep, "report_test.json");
    std::FILE* fp = std::fopen("report_test.json", "rb");
    REQUIRE(fp);
    char buf[1024];
    size_t n = std::fread(buf, 1, sizeof buf - 1, fp);
    buf[n] = 0;
    std::fclose(fp);
    std::string text(buf);
    CHECK(text.find("\"N\": 4") != std::string::npos);
    CHECK(text.find("\"eta\"") != std::string::npos);
    std::remove("report_test.json");
}
