#include "riesz/modenergy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "riesz/fft.hpp"
#include "riesz/parallel.hpp"

namespace riesz {

namespace {

void check_specs(const ParticleSystem& particles, const GridField& field) {
    if (particles.spec.d() != field.spec.d() || particles.spec.s() != field.spec.s())
        throw std::invalid_argument("modulated_energy: particle/field kernel spec mismatch");
}

void check_inside(const ParticleSystem& particles, const GridField& field) {
    double lim = field.L - 2.5 * field.dx();
    for (const Point& x : particles.positions)
        for (int c = 0; c < field.spec.d(); ++c)
            if (std::abs(x[c]) > lim)
                throw std::invalid_argument("modulated_energy: particle outside grid support region");
}

double particle_particle(const ParticleSystem& particles) {
    const KernelSpec& spec = particles.spec;
    const auto& x = particles.positions;
    const int d = spec.d();
    size_t n = x.size();
    double total = 0.0;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) total += spec.g(dist(x[i], x[j], d));
    double nn = static_cast<double>(n);
    return 2.0 * total / (nn * nn);
}

// int over the R^d ball of radius eta of (g_{s,eta} - g_s); the exact
// first-order eta-approximation correction to the cross term.
double truncation_moment(const KernelSpec& spec, double eta) {
    int d = spec.d();
    double s = spec.s();
    double w = unit_sphere_measure(d) / spec.c();
    if (s == 0.0) return -w * std::pow(eta, d) / (d * static_cast<double>(d));
    return -w * std::pow(eta, d - s) * s / (d * (d - s));
}

} // namespace

ModulatedEnergyReport modulated_energy(const ParticleSystem& particles, const GridField& field) {
    check_specs(particles, field);
    particles.validate();
    field.validate();
    check_inside(particles, field);

    ModulatedEnergyReport rep;
    rep.n = particles.n();
    rep.d = particles.spec.d();
    rep.s = particles.spec.s();
    rep.t = particles.t;
    rep.pp = particle_particle(particles);
    double sum_h = 0.0;
    for (const Point& x : particles.positions) sum_h += field.interp_potential(x);
    rep.pf = 2.0 * sum_h / rep.n;
    rep.ff = field_energy(field);
    rep.e_n = rep.pp - rep.pf + rep.ff;
    return rep;
}

double pf_direct_sum(const ParticleSystem& particles, const GridField& field) {
    check_specs(particles, field);
    const KernelSpec& spec = particles.spec;
    double vol = field.cell_volume();
    double half_cell = 0.5 * field.dx();
    double total = 0.0;
    for (const Point& x : particles.positions) {
        double hx = 0.0;
        for (size_t c = 0; c < field.values.size(); ++c) {
            if (field.values[c] == 0.0) continue;
            double r = dist(x, field.cell_center(c), spec.d());
            hx += (r < half_cell ? singular_cell_average(spec, field.dx()) : spec.g(r)) *
                  field.values[c];
        }
        total += hx * vol;
    }
    return 2.0 * total / particles.n();
}

double eta_approx(const ParticleSystem& particles, const GridField& field, double eta) {
    check_specs(particles, field);
    const KernelSpec& spec = particles.spec;
    double eta_n = particles.n() > 1
                       ? min_pair_distance(particles.positions, spec.d())
                       : std::numeric_limits<double>::infinity();
    if (!(eta > 0.0 && 2.0 * eta < std::min(1.0, eta_n)))
        throw std::invalid_argument("eta_approx: need 0 < 2 eta < min(1, eta_N)");

    ModulatedEnergyReport rep = modulated_energy(particles, field);
    double mu_sum = 0.0;
    for (const Point& x : particles.positions) mu_sum += field.interp_value(x);
    double pf_eta = rep.pf + 2.0 / rep.n * truncation_moment(spec, eta) * mu_sum;
    return rep.pp + spec.g(eta) / rep.n - pf_eta + rep.ff;
}

void append_eta_values(ModulatedEnergyReport& report, const ParticleSystem& particles,
                       const GridField& field, const std::vector<double>& etas) {
    for (double eta : etas) {
        double e_eta = eta_approx(particles, field, eta);
        double defect = e_eta - report.e_n - particles.spec.g(eta) / report.n;
        report.eta_values.push_back({eta, e_eta, defect});
    }
    std::sort(report.eta_values.begin(), report.eta_values.end(),
              [](const EtaValue& a, const EtaValue& b) { return a.eta > b.eta; });
}

// ------------------------------------------------------------- region energy

namespace {

struct TruncatedField {
    const std::vector<Point>* pts;
    const KernelSpec* spec;
    double eta;
    double inv_n;

    double h(const Point& x, double xi) const {
        double acc = 0.0;
        for (const Point& z : *pts) acc += spec->g_truncated(eta, sub(x, z), xi);
        return acc * inv_n;
    }
    // h and the full (d+1)-gradient dotted with a unit normal
    double h_dn(const Point& x, double xi, const Point& n_x, double n_xi) const {
        double hval = 0.0, dn = 0.0;
        for (const Point& z : *pts) {
            Point gx;
            double gxi;
            spec->grad_g_truncated(eta, sub(x, z), xi, gx, gxi);
            hval += spec->g_truncated(eta, sub(x, z), xi);
            dn += dot(gx, n_x, spec->d()) + gxi * n_xi;
        }
        return hval * inv_n * dn * inv_n;
    }
};

} // namespace

double region_energy_ball(const std::vector<Point>& pts, const KernelSpec& spec, double eta,
                          const Point& center, double radius, double quad_rel_tol) {
    if (!(eta > 0.0 && radius > 0.0))
        throw std::invalid_argument("region_energy: eta, radius > 0 required");
    const int d = spec.d();
    const size_t n = pts.size();
    const double nn = static_cast<double>(n);
    const double margin = 1e-9 * std::max(radius, eta);

    std::vector<char> enclosed(n, 0);
    bool all_plateau = true;
    for (size_t i = 0; i < n; ++i) {
        double delta = dist(pts[i], center, d);
        if (delta >= std::abs(radius - eta) - margin && delta <= radius + eta + margin)
            throw std::invalid_argument(
                "region_energy: truncation sphere crosses the region boundary");
        enclosed[i] = (radius > eta && delta < radius - eta) ? 1 : 0;
        if (!(delta + radius < eta)) all_plateau = false;
    }
    if (all_plateau) return 0.0; // region inside every plateau: gradient vanishes

    // enclosed smeared-charge pairings: <nu_i, h_{N,eta}> = g(eta) + sum g(r_ij)
    double interior = 0.0;
    for (size_t i = 0; i < n; ++i) {
        if (!enclosed[i]) continue;
        double s = spec.g(eta);
        for (size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double r = dist(pts[i], pts[j], d);
            if (r < 2.0 * eta)
                throw std::invalid_argument("region_energy: overlapping truncation spheres");
            s += spec.g(r);
        }
        interior += s;
    }
    interior /= nn * nn;

    TruncatedField f{&pts, &spec, eta, 1.0 / nn};
    // natural magnitude of the result: the smeared self-energy scale
    double result_scale = std::abs(spec.g(eta)) / (nn * nn) + std::abs(interior) + 1e-30;
    double boundary;
    if (spec.extended()) {
        ExtendedQuadrature quad(d, spec.gamma(), quad_rel_tol);
        boundary = quad.sphere(center, radius,
                               [&](const Point& x, double xi) {
                                   Point n_x = scale(sub(x, center), 1.0 / radius);
                                   double n_xi = xi / radius;
                                   return f.h_dn(x, xi, n_x, n_xi);
                               },
                               result_scale);
    } else {
        // Coulomb d=2, s=0: plain circle integral on the plane
        boundary = radius * integrate_adaptive(
                                [&](double phi) {
                                    Point x{center[0] + radius * std::cos(phi),
                                            center[1] + radius * std::sin(phi)};
                                    Point n_x{std::cos(phi), std::sin(phi)};
                                    return f.h_dn(x, 0.0, n_x, 0.0);
                                },
                                0.0, 2.0 * M_PI, quad_rel_tol, result_scale / radius, 24);
    }
    return interior + boundary;
}

double region_energy(const std::vector<Point>& pts, const KernelSpec& spec, double eta,
                     std::span<const Ball> region, double quad_rel_tol) {
    std::vector<double> per_ball(region.size(), 0.0);
    parallel_for(0, static_cast<long>(region.size()), [&](long m) {
        per_ball[m] = region_energy_ball(pts, spec, eta, region[m].center, region[m].r,
                                         quad_rel_tol);
    });
    double total = 0.0;
    for (double v : per_ball) total += v;
    return total;
}

// ---------------------------------------------------- L^p gradient distance

namespace {

// Extended-space gradient of the grid potential at fixed xi > 0, via FFT
// convolution with the (smooth) gradient kernel on the padded grid.
struct ExtendedGradientTable {
    int d, n, m;
    double L, dx;
    std::vector<double> gx, gy, gxi; // on the n-grid

    ExtendedGradientTable(const GridField& field, double xi) {
        const KernelSpec& spec = field.spec;
        d = spec.d();
        n = field.n;
        m = 2 * n;
        L = field.L;
        dx = field.dx();
        double vol = field.cell_volume();
        auto offset = [&](int j) { return (j <= m / 2 ? j : j - m) * dx; };
        if (d == 1) {
            std::vector<cplx> mu(m, cplx(0.0));
            for (int i = 0; i < n; ++i) mu[i] = field.values[i] * vol;
            fft(mu, false);
            for (int comp = 0; comp < 2; ++comp) {
                std::vector<cplx> k(m);
                for (int j = 0; j < m; ++j) {
                    Point off = point1(offset(j));
                    Point gxv;
                    double gxiv;
                    spec.grad_g_truncated(1e-300, off, xi, gxv, gxiv);
                    k[j] = comp == 0 ? gxv[0] : gxiv;
                }
                fft(k, false);
                for (int j = 0; j < m; ++j) k[j] *= mu[j];
                fft(k, true);
                auto& dst = comp == 0 ? gx : gxi;
                dst.resize(n);
                for (int i = 0; i < n; ++i) dst[i] = k[i].real();
            }
            gy.assign(n, 0.0);
            return;
        }
        std::vector<cplx> mu(static_cast<size_t>(m) * m, cplx(0.0));
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x)
                mu[static_cast<size_t>(y) * m + x] = field.values[static_cast<size_t>(y) * n + x] * vol;
        fft2(mu, m, m, false);
        for (int comp = 0; comp < 3; ++comp) {
            std::vector<cplx> k(static_cast<size_t>(m) * m);
            for (int jy = 0; jy < m; ++jy)
                for (int jx = 0; jx < m; ++jx) {
                    Point off = point2(offset(jx), offset(jy));
                    Point gxv;
                    double gxiv;
                    spec.grad_g_truncated(1e-300, off, xi, gxv, gxiv);
                    k[static_cast<size_t>(jy) * m + jx] =
                        comp == 0 ? gxv[0] : (comp == 1 ? gxv[1] : gxiv);
                }
            fft2(k, m, m, false);
            for (size_t i = 0; i < k.size(); ++i) k[i] *= mu[i];
            fft2(k, m, m, true);
            auto& dst = comp == 0 ? gx : (comp == 1 ? gy : gxi);
            dst.resize(static_cast<size_t>(n) * n);
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x)
                    dst[static_cast<size_t>(y) * n + x] = k[static_cast<size_t>(y) * m + x].real();
        }
    }
};

} // namespace

double lp_gradient_distance(const ParticleSystem& particles, const GridField& field,
                            const BallCollection& balls, double p, double window_halfwidth) {
    check_specs(particles, field);
    const KernelSpec& spec = particles.spec;
    const int d = spec.d();
    double p_max = 2.0 * d / (spec.s() + d);
    if (!(p >= 1.0 && p < p_max))
        throw std::invalid_argument("lp_gradient_distance: need 1 <= p < 2d/(s+d)");

    const int n = field.n;
    const double inv_n = 1.0 / particles.n();
    std::vector<size_t> cells;
    for (size_t c = 0; c < field.values.size(); ++c) {
        Point x = field.cell_center(c);
        bool in_window = std::abs(x[0]) <= window_halfwidth &&
                         (d == 1 || std::abs(x[1]) <= window_halfwidth);
        if (in_window && balls.containing(x) < 0) cells.push_back(c);
    }
    if (cells.empty()) return 0.0;

    double acc = 0.0;
    if (!spec.extended()) {
        // Coulomb d=2, s=0: plane gradients, cached grid gradient
        const std::vector<double>& gx = field.grad_potential(0);
        const std::vector<double>& gy = field.grad_potential(1);
        for (size_t c : cells) {
            Point x = field.cell_center(c);
            Point gn{0.0, 0.0};
            for (const Point& z : particles.positions) gn = add(gn, spec.grad_g(sub(x, z)));
            gn = scale(gn, inv_n);
            double gap = std::hypot(gn[0] - gx[c], gn[1] - gy[c]);
            acc += std::pow(gap, p) * field.cell_volume();
        }
        return std::pow(acc, 1.0 / p);
    }

    // extension regime: w(x)^2 = 2 int_0^inf xi^gamma |grad(h_N - h)(x,xi)|^2
    ExtendedQuadrature quad(d, spec.gamma(), 1e-8);
    const QuadratureRule& rule = quad.jacobi01();
    double r_scale = field.dx();
    std::vector<ExtendedGradientTable> tables;
    tables.reserve(rule.nodes.size());
    for (double u : rule.nodes) tables.emplace_back(field, r_scale * u / (1.0 - u));

    std::vector<double> gap2(cells.size(), 0.0);
    parallel_for(0, static_cast<long>(cells.size()), [&](long ci) {
        size_t c = cells[ci];
        Point x = field.cell_center(c);
        double total = 0.0;
        for (size_t q = 0; q < rule.nodes.size(); ++q) {
            double u = rule.nodes[q];
            double xi = r_scale * u / (1.0 - u);
            Point gn{0.0, 0.0};
            double gn_xi = 0.0;
            for (const Point& z : particles.positions) {
                Point g;
                double gz;
                spec.grad_g_truncated(1e-300, sub(x, z), xi, g, gz);
                gn = add(gn, g);
                gn_xi += gz;
            }
            const ExtendedGradientTable& tb = tables[q];
            double ex = gn[0] * inv_n - tb.gx[c];
            double ey = d == 2 ? gn[1] * inv_n - tb.gy[c] : 0.0;
            double exi = gn_xi * inv_n - tb.gxi[c];
            double integrand = (ex * ex + ey * ey + exi * exi) *
                               std::pow(1.0 - u, -spec.gamma() - 2.0);
            if (std::isfinite(integrand)) total += rule.weights[q] * integrand;
        }
        gap2[ci] = 2.0 * std::pow(r_scale, spec.gamma() + 1.0) * total;
    });
    for (double g2 : gap2) acc += std::pow(std::sqrt(std::max(0.0, g2)), p) * field.cell_volume();
    return std::pow(acc, 1.0 / p);
}

void write_report_json(const ModulatedEnergyReport& rep, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::fprintf(f, "{\"N\": %d, \"d\": %d, \"s\": %.17g, \"t\": %.17g,\n", rep.n, rep.d, rep.s,
                 rep.t);
    std::fprintf(f, " \"E_N\": %.17g, \"pp\": %.17g, \"pf\": %.17g, \"ff\": %.17g,\n", rep.e_n,
                 rep.pp, rep.pf, rep.ff);
    std::fprintf(f, " \"eta\": [");
    for (size_t i = 0; i < rep.eta_values.size(); ++i) {
        const EtaValue& e = rep.eta_values[i];
        std::fprintf(f, "%s{\"eta\": %.17g, \"E_eta\": %.17g, \"defect\": %.17g}",
                     i == 0 ? "" : ", ", e.eta, e.e_eta, e.defect);
    }
    std::fprintf(f, "]}\n");
    std::fclose(f);
}

} // namespace riesz
