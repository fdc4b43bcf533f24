#include "riesz/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "riesz/parallel.hpp"

namespace riesz {

Potential quadratic_potential(double k) {
    Potential p;
    p.value = [k](const Point& x) { return 0.5 * k * (x[0] * x[0] + x[1] * x[1]); };
    p.gradient = [k](const Point& x) { return Point{k * x[0], k * x[1]}; };
    p.hessian_sup_bound = std::abs(k);
    p.name = "quadratic";
    return p;
}

void ParticleSystem::validate() const {
    if (positions.empty()) throw std::invalid_argument("ParticleSystem: N >= 1 required");
    if (beta != 0.0) {
        if (spec.d() != 2) throw std::invalid_argument("ParticleSystem: beta requires d = 2");
        if (!(alpha > 0.0))
            throw std::invalid_argument("ParticleSystem: alpha > 0 required when beta != 0");
    }
    if (!(alpha >= 0.0)) throw std::invalid_argument("ParticleSystem: alpha >= 0 required");
    if (positions.size() > 1) {
        double m = min_pair_distance(positions, spec.d());
        if (!(m > 0.0)) throw std::invalid_argument("ParticleSystem: coincident points");
    }
}

namespace {

// s-specialized pair kernels: g at squared distance and the scalar w with
// grad g(x) = w(r^2) x.
struct PairKernel {
    double s;
    double inv_c;
    double g(double r2) const {
        if (s == 0.0) return -0.5 * inv_c * std::log(r2);
        if (s == 0.5) return inv_c / std::sqrt(std::sqrt(r2));
        return inv_c * std::pow(r2, -0.5 * s);
    }
    double w(double r2) const {
        if (s == 0.0) return -inv_c / r2;
        if (s == 0.5) return -0.5 * inv_c / (r2 * std::sqrt(std::sqrt(r2)));
        return -s * inv_c * std::pow(r2, -0.5 * s - 1.0);
    }
};

double interaction_energy(const std::vector<Point>& x, int d, const PairKernel& k) {
    // ordered-pair sum: each unordered pair counted twice
    size_t n = x.size();
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (size_t j = i + 1; j < n; ++j) {
            double dx = x[i][0] - x[j][0];
            double r2 = dx * dx;
            if (d > 1) {
                double dy = x[i][1] - x[j][1];
                r2 += dy * dy;
            }
            if (r2 <= 0.0) throw std::invalid_argument("pairwise_energy: coincident points");
            row += k.g(r2);
        }
        total += row;
    }
    return 2.0 * total;
}

void pair_gradients(const std::vector<Point>& x, int d, const PairKernel& k, double factor,
                    std::vector<Point>& grad) {
    size_t n = x.size();
    grad.assign(n, Point{0.0, 0.0});
    parallel_for(0, static_cast<long>(n), [&](long i) {
        double gx = 0.0, gy = 0.0;
        double xi0 = x[i][0], xi1 = x[i][1];
        if (d == 1) {
            for (size_t j = 0; j < n; ++j) {
                if (static_cast<long>(j) == i) continue;
                double dx = xi0 - x[j][0];
                double r2 = dx * dx;
                gx += k.w(r2) * dx;
            }
        } else {
            for (size_t j = 0; j < n; ++j) {
                if (static_cast<long>(j) == i) continue;
                double dx = xi0 - x[j][0];
                double dy = xi1 - x[j][1];
                double w = k.w(dx * dx + dy * dy);
                gx += w * dx;
                gy += w * dy;
            }
        }
        grad[i] = {factor * gx, factor * gy};
    });
}

} // namespace

PairwiseEnergy pairwise_energy(const ParticleSystem& sys) {
    PairKernel k{sys.spec.s(), 1.0 / sys.spec.c()};
    double inter = interaction_energy(sys.positions, sys.spec.d(), k);
    double raw = inter;
    if (sys.potential && sys.potential->value)
        for (const Point& p : sys.positions) raw += sys.potential->value(p);
    double n = static_cast<double>(sys.n());
    return {raw, raw / (n * n), inter};
}

std::vector<Point> velocities(const ParticleSystem& sys) {
    const int n = sys.n();
    const int d = sys.spec.d();
    PairKernel k{sys.spec.s(), 1.0 / sys.spec.c()};
    double factor = sys.pair_convention == PairConvention::ordered ? 2.0 : 1.0;
    std::vector<Point> grad;
    pair_gradients(sys.positions, d, k, factor, grad);
    std::vector<Point> v(n);
    double a = sys.alpha / n, b = sys.beta / n;
    for (int i = 0; i < n; ++i) {
        Point vi = scale(grad[i], -a);
        if (b != 0.0) vi = sub(vi, scale(perp(grad[i]), b));
        if (sys.potential && sys.potential->gradient)
            vi = sub(vi, sys.potential->gradient(sys.positions[i]));
        v[i] = vi;
    }
    return v;
}

std::vector<Point> velocities_cell_list(const ParticleSystem& sys, double cutoff) {
    sys.validate();
    if (sys.spec.d() != 2)
        throw std::invalid_argument("velocities_cell_list: d = 2 only");
    if (!(cutoff > 0.0)) throw std::invalid_argument("velocities_cell_list: cutoff > 0");
    const int n = sys.n();
    PairKernel k{sys.spec.s(), 1.0 / sys.spec.c()};
    double factor = sys.pair_convention == PairConvention::ordered ? 2.0 : 1.0;

    double xlo = sys.positions[0][0], xhi = xlo, ylo = sys.positions[0][1], yhi = ylo;
    for (const Point& p : sys.positions) {
        xlo = std::min(xlo, p[0]);
        xhi = std::max(xhi, p[0]);
        ylo = std::min(ylo, p[1]);
        yhi = std::max(yhi, p[1]);
    }
    int bx = std::max(1, static_cast<int>((xhi - xlo) / cutoff) + 1);
    int by = std::max(1, static_cast<int>((yhi - ylo) / cutoff) + 1);
    std::vector<std::vector<int>> bins(static_cast<size_t>(bx) * by);
    auto bin_of = [&](const Point& p) {
        int ix = std::min(bx - 1, static_cast<int>((p[0] - xlo) / cutoff));
        int iy = std::min(by - 1, static_cast<int>((p[1] - ylo) / cutoff));
        return static_cast<size_t>(iy) * bx + ix;
    };
    for (int i = 0; i < n; ++i) bins[bin_of(sys.positions[i])].push_back(i);

    double cut2 = cutoff * cutoff;
    std::vector<Point> v(n);
    double a = sys.alpha / n, b = sys.beta / n;
    parallel_for(0, n, [&](long i) {
        const Point& xi = sys.positions[i];
        int cx = std::min(bx - 1, static_cast<int>((xi[0] - xlo) / cutoff));
        int cy = std::min(by - 1, static_cast<int>((xi[1] - ylo) / cutoff));
        double gxv = 0.0, gyv = 0.0;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                int nx = cx + dx, ny = cy + dy;
                if (nx < 0 || ny < 0 || nx >= bx || ny >= by) continue;
                for (int j : bins[static_cast<size_t>(ny) * bx + nx]) {
                    if (j == static_cast<int>(i)) continue;
                    double ddx = xi[0] - sys.positions[j][0];
                    double ddy = xi[1] - sys.positions[j][1];
                    double r2 = ddx * ddx + ddy * ddy;
                    if (r2 > cut2) continue;
                    double w = factor * k.w(r2);
                    gxv += w * ddx;
                    gyv += w * ddy;
                }
            }
        Point g{gxv, gyv};
        Point vi = scale(g, -a);
        if (b != 0.0) vi = sub(vi, scale(perp(g), b));
        if (sys.potential && sys.potential->gradient)
            vi = sub(vi, sys.potential->gradient(xi));
        v[i] = vi;
    });
    return v;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double A21 = 1.0 / 5.0;
constexpr double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0;
constexpr double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0;
constexpr double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0, A53 = 64448.0 / 6561.0,
                 A54 = -212.0 / 729.0;
constexpr double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0,
                 A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0;
constexpr double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0,
                 B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0;
constexpr double E1 = 35.0 / 384.0 - 5179.0 / 57600.0, E3 = 500.0 / 1113.0 - 7571.0 / 16695.0,
                 E4 = 125.0 / 192.0 - 393.0 / 640.0, E5 = -2187.0 / 6784.0 + 92097.0 / 339200.0,
                 E6 = 11.0 / 84.0 - 187.0 / 2100.0, E7 = -1.0 / 40.0;

struct RhsEval {
    const ParticleSystem* sys;
    std::vector<Point> operator()(const std::vector<Point>& x) const {
        ParticleSystem tmp = *sys;
        tmp.positions = x;
        return velocities(tmp);
    }
};

std::vector<Point> axpy(const std::vector<Point>& x, double h,
                        std::initializer_list<std::pair<double, const std::vector<Point>*>> terms) {
    std::vector<Point> y = x;
    for (auto& [c, k] : terms) {
        double hc = h * c;
        for (size_t i = 0; i < y.size(); ++i) {
            y[i][0] += hc * (*k)[i][0];
            y[i][1] += hc * (*k)[i][1];
        }
    }
    return y;
}

// min over pairs of (end distance) / (start distance)
double worst_pair_shrink(const std::vector<Point>& a, const std::vector<Point>& b, int d) {
    size_t n = a.size();
    double worst = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            double r0 = dist(a[i], a[j], d);
            double r1 = dist(b[i], b[j], d);
            worst = std::min(worst, r1 / r0);
        }
    return worst;
}

double dispersion_value(const std::vector<Point>& x, int d) {
    size_t n = x.size();
    double s = 0.0;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) s += norm2(sub(x[i], x[j]), d);
    return 2.0 * s / (static_cast<double>(n) * static_cast<double>(n));
}

Point center_of_mass(const std::vector<Point>& x) {
    Point c{0.0, 0.0};
    for (const Point& p : x) c = add(c, p);
    return scale(c, 1.0 / x.size());
}

} // namespace

TrajectoryRecord integrate(ParticleSystem& sys, double t_end, const IntegrateOptions& opt) {
    sys.validate();
    if (!(t_end > sys.t)) throw std::invalid_argument("integrate: t_end > t required");
    if (!(opt.tol > 0.0)) throw std::invalid_argument("integrate: tol > 0 required");
    if (sys.potential && sys.potential->hessian_sup_bound < 0.0)
        std::fprintf(stderr, "warning: potential '%s' has no Hessian sup-norm bound set\n",
                     sys.potential->name.c_str());

    const int n = sys.n();
    const int d = sys.spec.d();
    const double t0 = sys.t;
    double sample_dt = opt.sample_dt > 0.0 ? opt.sample_dt : (t_end - t0) / 200.0;

    TrajectoryRecord rec;
    rec.d = d;
    rec.n = n;
    RhsEval rhs{&sys};

    auto take_sample = [&](const std::vector<Point>& x, double t) {
        ParticleSystem snap = sys;
        snap.positions = x;
        snap.t = t;
        rec.times.push_back(t);
        rec.positions.push_back(x);
        rec.velocities.push_back(velocities(snap));
        rec.energy.push_back(pairwise_energy(snap).raw);
        rec.min_distance.push_back(n > 1 ? min_pair_distance(x, d)
                                         : std::numeric_limits<double>::infinity());
        rec.center_of_mass.push_back(center_of_mass(x));
        rec.dispersion.push_back(dispersion_value(x, d));
    };

    std::vector<Point> x = sys.positions;
    double t = t0;
    take_sample(x, t);

    std::vector<Point> k1 = rhs(x);
    double vmax = 0.0;
    for (const Point& v : k1) vmax = std::max(vmax, norm(v, d));
    double dt = vmax > 0.0 ? 0.01 * min_pair_distance(x, d) / vmax : sample_dt;
    if (n == 1) dt = sample_dt;
    dt = std::min(dt, sample_dt);
    bool k1_fresh = true;

    // cadence times from an integer index; the last one snaps to t_end
    long sample_idx = 0;
    auto cadence = [&] {
        double next = t0 + (sample_idx + 1) * sample_dt;
        return next > t_end - 0.5 * sample_dt ? t_end : next;
    };
    double next_sample = cadence();
    const double dt_floor = 1e-14 * (t_end - t0);

    while (t < t_end - 1e-15 * (t_end - t0)) {
        double target = std::min(next_sample, t_end);
        bool clipped = false;
        if (t + dt >= target - 1e-15 * (t_end - t0)) {
            dt = target - t;
            clipped = true;
        }
        if (opt.max_dt > 0.0 && dt > opt.max_dt) dt = opt.max_dt;

        if (!k1_fresh) k1 = rhs(x);
        auto x2 = axpy(x, dt, {{A21, &k1}});
        auto k2 = rhs(x2);
        auto x3 = axpy(x, dt, {{A31, &k1}, {A32, &k2}});
        auto k3 = rhs(x3);
        auto x4 = axpy(x, dt, {{A41, &k1}, {A42, &k2}, {A43, &k3}});
        auto k4 = rhs(x4);
        auto x5 = axpy(x, dt, {{A51, &k1}, {A52, &k2}, {A53, &k3}, {A54, &k4}});
        auto k5 = rhs(x5);
        auto x6 = axpy(x, dt, {{A61, &k1}, {A62, &k2}, {A63, &k3}, {A64, &k4}, {A65, &k5}});
        auto k6 = rhs(x6);
        auto xnew = axpy(x, dt, {{B1, &k1}, {B3, &k3}, {B4, &k4}, {B5, &k5}, {B6, &k6}});
        auto k7 = rhs(xnew);

        // embedded error estimate, scaled per component
        double err = 0.0;
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < d; ++c) {
                double e = dt * (E1 * k1[i][c] + E3 * k3[i][c] + E4 * k4[i][c] +
                                 E5 * k5[i][c] + E6 * k6[i][c] + E7 * k7[i][c]);
                err = std::max(err, std::abs(e));
            }

        bool guard_ok = n < 2 || worst_pair_shrink(x, xnew, d) >= opt.guard_factor;

        if (!guard_ok) {
            rec.rejected_steps++;
            dt *= 0.5;
            if (dt < dt_floor) {
                std::ostringstream oss;
                oss << "integrate: step-size underflow (distance collapse) at t=" << t
                    << ", min pair distance=" << min_pair_distance(x, d);
                throw std::runtime_error(oss.str());
            }
            continue;
        }
        if (err > opt.tol) {
            rec.rejected_steps++;
            double shrink = 0.9 * std::pow(opt.tol / err, 0.2);
            dt *= std::clamp(shrink, 0.1, 0.9);
            if (dt < dt_floor) {
                std::ostringstream oss;
                oss << "integrate: step-size underflow (error control) at t=" << t;
                throw std::runtime_error(oss.str());
            }
            continue;
        }

        // accept; clipped steps land exactly on their target time
        rec.accepted_steps++;
        t = clipped ? target : t + dt;
        x = std::move(xnew);
        k1 = std::move(k7); // FSAL
        k1_fresh = true;

        if (clipped && t == next_sample) {
            take_sample(x, t);
            ++sample_idx;
            next_sample = cadence();
        } else if (clipped && t >= t_end) {
            take_sample(x, t);
        }

        double grow = err > 0.0 ? 0.9 * std::pow(opt.tol / err, 0.2) : 5.0;
        dt *= std::clamp(grow, 0.2, 5.0);
        if (!(dt > 0.0)) dt = dt_floor * 10.0;
    }

    if (std::abs(rec.times.back() - t_end) > 1e-12 * (t_end - t0)) take_sample(x, t);

    sys.positions = x;
    sys.t = t;
    return rec;
}

namespace {

double sum_speed2(const std::vector<Point>& v, int d) {
    double s = 0.0;
    for (const Point& p : v) s += norm2(p, d);
    return s;
}

} // namespace

double dissipation_residual(const TrajectoryRecord& rec) {
    return dissipation_residual_general(rec, 1.0, 0.0);
}

double dissipation_residual_general(const TrajectoryRecord& rec, double alpha, double beta) {
    if (rec.times.size() < 2) return 0.0;
    double factor = rec.n * alpha / (alpha * alpha + beta * beta);
    double worst = 0.0;
    for (size_t k = 0; k + 1 < rec.times.size(); ++k) {
        double dt = rec.times[k + 1] - rec.times[k];
        double dH = (rec.energy[k + 1] - rec.energy[k]) / dt;
        double diss = 0.5 * factor *
                      (sum_speed2(rec.velocities[k], rec.d) + sum_speed2(rec.velocities[k + 1], rec.d));
        if (diss == 0.0) {
            if (std::abs(dH) > 0.0) worst = std::max(worst, std::numeric_limits<double>::infinity());
            continue;
        }
        worst = std::max(worst, std::abs(dH + diss) / diss);
    }
    return worst;
}

double dispersion_rate(const TrajectoryRecord& rec) {
    size_t m = rec.times.size();
    if (m < 2) throw std::invalid_argument("dispersion_rate: need at least 2 samples");
    double st = 0.0, sd = 0.0, stt = 0.0, std_ = 0.0;
    for (size_t k = 0; k < m; ++k) {
        st += rec.times[k];
        sd += rec.dispersion[k];
        stt += rec.times[k] * rec.times[k];
        std_ += rec.times[k] * rec.dispersion[k];
    }
    double denom = m * stt - st * st;
    return (m * std_ - st * sd) / denom;
}

double dispersion_constant(const KernelSpec& spec, int n, PairConvention conv) {
    double base = 4.0 * (n - 1.0) / (n * spec.c());
    return conv == PairConvention::ordered ? base : 0.5 * base;
}

namespace {

void fput(std::FILE* f, double v, bool comma = true) {
    std::fprintf(f, "%.17g%s", v, comma ? "," : "");
}

} // namespace

void write_trajectory_csv(const TrajectoryRecord& rec, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::fprintf(f, rec.d == 1 ? "t,i,x1,v1\n" : "t,i,x1,x2,v1,v2\n");
    for (size_t k = 0; k < rec.times.size(); ++k)
        for (int i = 0; i < rec.n; ++i) {
            fput(f, rec.times[k]);
            std::fprintf(f, "%d,", i);
            fput(f, rec.positions[k][i][0], rec.d == 2);
            if (rec.d == 2) fput(f, rec.positions[k][i][1]);
            if (rec.d == 1) {
                std::fprintf(f, ",");
                fput(f, rec.velocities[k][i][0], false);
            } else {
                fput(f, rec.velocities[k][i][0]);
                fput(f, rec.velocities[k][i][1], false);
            }
            std::fprintf(f, "\n");
        }
    std::fclose(f);
}

void write_scalar_series_csv(const TrajectoryRecord& rec, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::fprintf(f, rec.d == 1 ? "t,H_N,eta_N,com_1,dispersion\n"
                               : "t,H_N,eta_N,com_1,com_2,dispersion\n");
    for (size_t k = 0; k < rec.times.size(); ++k) {
        fput(f, rec.times[k]);
        fput(f, rec.energy[k]);
        fput(f, rec.min_distance[k]);
        fput(f, rec.center_of_mass[k][0]);
        if (rec.d == 2) fput(f, rec.center_of_mass[k][1]);
        fput(f, rec.dispersion[k], false);
        std::fprintf(f, "\n");
    }
    std::fclose(f);
}

} // namespace riesz
