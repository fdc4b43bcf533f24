#include "riesz/balls.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "riesz/modenergy.hpp"

namespace riesz {

int BallCollection::containing(const Point& x) const {
    for (size_t m = 0; m < balls.size(); ++m)
        if (dist(x, balls[m].center, d) <= balls[m].r * (1.0 + 1e-12)) return static_cast<int>(m);
    return -1;
}

void BallCollection::check_invariants(const std::vector<Point>& pts) const {
    double sum = 0.0;
    for (const Ball& b : balls) sum += b.r;
    if (std::abs(sum - total_radius) > 1e-12 * std::max(1.0, total_radius))
        throw std::logic_error("BallCollection: total radius mismatch");
    for (size_t a = 0; a < balls.size(); ++a)
        for (size_t b = a + 1; b < balls.size(); ++b) {
            double gap = dist(balls[a].center, balls[b].center, d) - balls[a].r - balls[b].r;
            if (gap < -1e-12 * std::max(1.0, total_radius))
                throw std::logic_error("BallCollection: balls overlap");
        }
    for (const Point& p : pts)
        if (containing(p) < 0) throw std::logic_error("BallCollection: uncovered point");
    for (const MergeEvent& e : merges) {
        // the logged result must satisfy the radius-weighted merge rule
        if (e.parents.size() < 2) throw std::logic_error("BallCollection: malformed merge event");
        double rs = 0.0;
        Point c{0.0, 0.0};
        for (const Ball& p : e.parents) {
            rs += p.r;
            c = add(c, scale(p.center, p.r));
        }
        c = scale(c, 1.0 / rs);
        if (std::abs(rs - e.r) > 1e-12 * std::max(1.0, rs) ||
            dist(c, e.center, d) > 1e-12 * std::max(1.0, total_radius))
            throw std::logic_error("BallCollection: merge-center rule violated");
    }
}

BallCollection grow_and_merge(const std::vector<Point>& pts, int d, double R_target,
                              double eta_N, const GrowMergeOptions& opt) {
    const size_t n = pts.size();
    if (n == 0) throw std::invalid_argument("grow_and_merge: no points");
    if (!(R_target > 0.0)) throw std::invalid_argument("grow_and_merge: R_target > 0 required");
    if (n > 1 && !(eta_N > 0.0))
        throw std::invalid_argument("grow_and_merge: eta_N > 0 required");

    double r0 = opt.r0;
    if (r0 <= 0.0)
        r0 = n > 1 ? std::min(eta_N / 4.0, R_target / (2.0 * n)) : R_target / 2.0;
    if (n > 1 && !(r0 < eta_N / 2.0))
        throw std::invalid_argument("grow_and_merge: r0 < eta_N/2 required");
    if (R_target < n * r0)
        throw std::invalid_argument("grow_and_merge: R_target >= N*r0 required");

    BallCollection out;
    out.d = d;
    out.balls.reserve(n);
    for (const Point& p : pts) out.balls.push_back({p, r0, 1});

    double cumulative = 1.0;
    auto& balls = out.balls;

    auto sum_radii = [&] {
        double s = 0.0;
        for (const Ball& b : balls) s += b.r;
        return s;
    };

    while (true) {
        double sumr = sum_radii();
        double alpha_stop = R_target / sumr;
        double alpha_star = std::numeric_limits<double>::infinity();
        for (size_t a = 0; a < balls.size(); ++a)
            for (size_t b = a + 1; b < balls.size(); ++b) {
                double al = dist(balls[a].center, balls[b].center, d) / (balls[a].r + balls[b].r);
                alpha_star = std::min(alpha_star, al);
            }

        if (alpha_star > alpha_stop * (1.0 + 1e-12)) {
            // no event before the target: final scale solves sum r = R exactly
            for (Ball& b : balls) b.r *= alpha_stop;
            break;
        }

        // grow to the tangency event, then cascade merges until disjoint
        cumulative *= alpha_star;
        for (Ball& b : balls) b.r *= alpha_star;
        bool merged_any = true;
        while (merged_any) {
            merged_any = false;
            for (size_t a = 0; a < balls.size() && !merged_any; ++a)
                for (size_t b = a + 1; b < balls.size() && !merged_any; ++b) {
                    double sep = dist(balls[a].center, balls[b].center, d);
                    if (sep <= (balls[a].r + balls[b].r) * (1.0 + 1e-12)) {
                        double rs = balls[a].r + balls[b].r;
                        Point c = scale(add(scale(balls[a].center, balls[a].r),
                                            scale(balls[b].center, balls[b].r)),
                                        1.0 / rs);
                        MergeEvent e;
                        e.parents = {balls[a], balls[b]};
                        e.center = c;
                        e.r = rs;
                        e.growth_factor = cumulative;
                        out.merges.push_back(e);
                        Ball nb{c, rs, balls[a].count + balls[b].count};
                        balls.erase(balls.begin() + b);
                        balls.erase(balls.begin() + a);
                        balls.push_back(nb);
                        merged_any = true;
                    }
                }
        }
        if (std::abs(sum_radii() - R_target) <= 1e-12 * R_target) break;
    }

    out.total_radius = sum_radii();
    out.check_invariants(pts);
    return out;
}

double check_cond2(const std::vector<Point>& pts, const KernelSpec& spec,
                   const BallCollection& balls) {
    const size_t n = pts.size();
    double total = 0.0;
    for (const Point& p : pts) {
        int m = balls.containing(p);
        if (m < 0) throw std::invalid_argument("check_cond2: uncovered point");
        double dist_boundary = balls.balls[m].r - dist(p, balls.balls[m].center, balls.d);
        if (dist_boundary <= 0.0) return std::numeric_limits<double>::infinity();
        total += spec.g_plus(dist_boundary);
    }
    return total / (static_cast<double>(n) * static_cast<double>(n));
}

std::vector<std::pair<double, double>> check_cond1(const std::vector<Point>& pts,
                                                   const KernelSpec& spec,
                                                   const BallCollection& balls,
                                                   const std::vector<double>& etas,
                                                   double quad_rel_tol) {
    const size_t n = pts.size();
    double eta_n = n > 1 ? min_pair_distance(pts, spec.d())
                         : std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, double>> out;
    for (double eta : etas) {
        if (!(eta > 0.0 && 2.0 * eta < eta_n))
            throw std::invalid_argument("check_cond1: eta must satisfy 2 eta < eta_N");
        for (const Point& p : pts) {
            int m = balls.containing(p);
            if (m < 0) throw std::invalid_argument("check_cond1: uncovered point");
            if (balls.balls[m].r - dist(p, balls.balls[m].center, balls.d) < eta)
                throw std::invalid_argument(
                    "check_cond1: truncation sphere does not fit inside its ball");
        }
        double value = region_energy(pts, spec, eta, balls.balls, quad_rel_tol) -
                       spec.g(eta) / static_cast<double>(n);
        out.emplace_back(eta, value);
    }
    return out;
}

LowerBoundResult lower_bound_check(const std::vector<Point>& pts, const KernelSpec& spec,
                                   const BallCollection& balls, double eta,
                                   double quad_rel_tol) {
    if (spec.s() > 1.0)
        throw std::invalid_argument("lower_bound_check: bound only holds for s <= 1");
    const size_t n = pts.size();
    double eta_n = n > 1 ? min_pair_distance(pts, spec.d())
                         : std::numeric_limits<double>::infinity();
    double rn = balls.total_radius / static_cast<double>(n);
    if (!(eta > 0.0 && eta < std::min(eta_n, rn)))
        throw std::invalid_argument("lower_bound_check: need eta < min(eta_N, R/N)");

    LowerBoundResult res;
    double unit = spec.g(eta) - spec.g(rn);
    res.rhs = unit / static_cast<double>(n);
    res.lhs = 0.0;
    res.per_ball_slack.resize(balls.balls.size());
    double n2 = static_cast<double>(n) * static_cast<double>(n);
    for (size_t m = 0; m < balls.balls.size(); ++m) {
        const Ball& b = balls.balls[m];
        double e = region_energy_ball(pts, spec, eta, b.center, b.r, quad_rel_tol);
        res.lhs += e;
        res.per_ball_slack[m] = e - b.count / n2 * unit;
    }
    res.slack = res.lhs - res.rhs;
    return res;
}

double radius_schedule(long n, double s) {
    if (!(s >= 0.0 && s < 1.0)) throw std::invalid_argument("radius_schedule: 0 <= s < 1 required");
    if (n < 1) throw std::invalid_argument("radius_schedule: N >= 1 required");
    double nn = static_cast<double>(n);
    if (s == 0.0) return 1.0 / std::sqrt(nn);
    return std::pow(nn, -(1.0 - s) / (2.0 * s));
}

void write_balls_json(const BallCollection& bc, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::fprintf(f, "{\"R\": %.17g,\n \"balls\": [", bc.total_radius);
    for (size_t m = 0; m < bc.balls.size(); ++m) {
        const Ball& b = bc.balls[m];
        if (bc.d == 1)
            std::fprintf(f, "%s{\"center\": [%.17g], \"r\": %.17g}", m == 0 ? "" : ", ",
                         b.center[0], b.r);
        else
            std::fprintf(f, "%s{\"center\": [%.17g, %.17g], \"r\": %.17g}", m == 0 ? "" : ", ",
                         b.center[0], b.center[1], b.r);
    }
    std::fprintf(f, "],\n \"merges\": [");
    auto put_point = [&](const Point& p) {
        if (bc.d == 1)
            std::fprintf(f, "[%.17g]", p[0]);
        else
            std::fprintf(f, "[%.17g, %.17g]", p[0], p[1]);
    };
    for (size_t k = 0; k < bc.merges.size(); ++k) {
        const MergeEvent& e = bc.merges[k];
        std::fprintf(f, "%s{\"parents\": [", k == 0 ? "" : ", ");
        for (size_t j = 0; j < e.parents.size(); ++j) {
            std::fprintf(f, "%s{\"center\": ", j == 0 ? "" : ", ");
            put_point(e.parents[j].center);
            std::fprintf(f, ", \"r\": %.17g}", e.parents[j].r);
        }
        std::fprintf(f, "], \"center\": ");
        put_point(e.center);
        std::fprintf(f, ", \"r\": %.17g, \"growth\": %.17g}", e.r, e.growth_factor);
    }
    std::fprintf(f, "]}\n");
    std::fclose(f);
}

} // namespace riesz
