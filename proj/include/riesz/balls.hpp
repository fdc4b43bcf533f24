#pragma once

#include <string>
#include <vector>

#include "riesz/kernel.hpp"

namespace riesz {

struct Ball {
    Point center;
    double r;
    int count = 0; // particles covered
};

struct MergeEvent {
    std::vector<Ball> parents; // ball states consumed by this merge
    Point center;
    double r;
    double growth_factor; // cumulative factor applied before this cascade
};

/// Disjoint balls covering all input particles, built by the growth-and-merge
/// process: radii grow by a common factor, tangent clusters merge into
/// B(sum a_i r_i / sum r_i, sum r_i), and growth stops at total radius R.
struct BallCollection {
    int d = 1;
    std::vector<Ball> balls;
    double total_radius = 0.0;
    std::vector<MergeEvent> merges;

    /// index of the ball containing x (balls are disjoint), or -1
    int containing(const Point& x) const;
    /// disjointness, coverage, total-radius exactness, merge-center rule
    void check_invariants(const std::vector<Point>& pts) const;
};

struct GrowMergeOptions {
    double r0 = 0.0; // 0: default min(eta_N/4, R_target/(2N))
};

BallCollection grow_and_merge(const std::vector<Point>& pts, int d, double R_target,
                              double eta_N, const GrowMergeOptions& opt = {});

/// N^-2 sum_i g_s^+(dist(x_i, boundary of its ball)); +inf for a point on a
/// boundary (s > 0). Throws if some point is uncovered.
double check_cond2(const std::vector<Point>& pts, const KernelSpec& spec,
                   const BallCollection& balls);

/// For each eta: region energy of the collection minus g_s(eta)/N. Eta is
/// admissible when 2 eta < eta_N and every truncation sphere fits inside its
/// ball.
std::vector<std::pair<double, double>> check_cond1(const std::vector<Point>& pts,
                                                   const KernelSpec& spec,
                                                   const BallCollection& balls,
                                                   const std::vector<double>& etas,
                                                   double quad_rel_tol = 1e-8);

struct LowerBoundResult {
    double lhs;   // region energy over the collection
    double rhs;   // (1/N)(g_s(eta) - g_s(R/N))
    double slack; // lhs - rhs
    std::vector<double> per_ball_slack; // against (n_m/N^2)(g_s(eta)-g_s(R/N))
};

/// Proven for s <= 1 only; eta < min(eta_N, R/N) required.
LowerBoundResult lower_bound_check(const std::vector<Point>& pts, const KernelSpec& spec,
                                   const BallCollection& balls, double eta,
                                   double quad_rel_tol = 1e-8);

/// Total-radius schedule N^-(1-s)/(2s) for 0 < s < 1 (geometric midpoint of
/// the admissible window in exponent), N^-1/2 for s = 0; s >= 1 rejected.
double radius_schedule(long n, double s);

void write_balls_json(const BallCollection& balls, const std::string& path);

} // namespace riesz
