#include "riesz/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

#include "riesz/fft.hpp"
#include "riesz/parallel.hpp"
#include "riesz/quadrature.hpp"

namespace riesz {

// ---------------------------------------------------------------- GridField

GridField::GridField(const KernelSpec& sp, double L_, int n_) : spec(sp), L(L_), n(n_) {
    if (!(L > 0.0)) throw std::invalid_argument("GridField: L > 0 required");
    if (!is_pow2(n)) throw std::invalid_argument("GridField: n must be a power of two");
    values.assign(spec.d() == 1 ? n : static_cast<size_t>(n) * n, 0.0);
}

Point GridField::cell_center(size_t idx) const {
    if (spec.d() == 1) return point1(center_coord(static_cast<int>(idx)));
    int ix = static_cast<int>(idx % n), iy = static_cast<int>(idx / n);
    return point2(center_coord(ix), center_coord(iy));
}

double GridField::mass() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * cell_volume();
}

double GridField::support_radius() const {
    double vmax = 0.0;
    for (double v : values) vmax = std::max(vmax, v);
    if (vmax == 0.0) return 0.0;
    double r = 0.0;
    for (size_t i = 0; i < values.size(); ++i)
        if (values[i] > 1e-14 * vmax) r = std::max(r, norm(cell_center(i), spec.d()));
    return r;
}

void GridField::validate(bool require_unit_mass) const {
    for (double v : values)
        if (v < 0.0) throw std::invalid_argument("GridField: negative density value");
    if (require_unit_mass && std::abs(mass() - 1.0) > 1e-10)
        throw std::invalid_argument("GridField: mass must be 1 within 1e-10");
    if (support_radius() > 0.9 * L + 1e-12)
        throw std::invalid_argument("GridField: support must stay 10% of L away from the boundary");
}

void GridField::normalize() {
    double m = mass();
    if (!(m > 0.0)) throw std::invalid_argument("GridField: cannot normalize zero mass");
    for (double& v : values) v /= m;
    invalidate_cache();
}

void GridField::invalidate_cache() { cache_valid_ = false; }

std::shared_ptr<const PotentialSolver> GridField::solver() const {
    if (!solver_ || solver_->n() != n || solver_->L() != L)
        solver_ = std::make_shared<PotentialSolver>(spec, L, n);
    return solver_;
}

const std::vector<double>& GridField::potential() const {
    if (!cache_valid_) {
        auto sv = solver();
        h_ = sv->potential(values);
        sv->gradient(values, gx_, gy_);
        cache_valid_ = true;
    }
    return h_;
}

const std::vector<double>& GridField::grad_potential(int axis) const {
    potential();
    return axis == 0 ? gx_ : gy_;
}

namespace {

// Catmull-Rom weights for fractional coordinate u in [0,1].
inline void cr_weights(double u, double w[4]) {
    double u2 = u * u, u3 = u2 * u;
    w[0] = 0.5 * (-u3 + 2.0 * u2 - u);
    w[1] = 0.5 * (3.0 * u3 - 5.0 * u2 + 2.0);
    w[2] = 0.5 * (-3.0 * u3 + 4.0 * u2 + u);
    w[3] = 0.5 * (u3 - u2);
}

} // namespace

double GridField::interp_potential(const Point& x) const {
    const std::vector<double>& h = potential();
    const double hx = dx();
    auto locate = [&](double c, int& i0, double& u) {
        double s = (c + L) / hx - 0.5; // cell-center coordinates
        double fl = std::floor(s);
        i0 = static_cast<int>(fl);
        u = s - fl;
        if (i0 < 1 || i0 > n - 3)
            throw std::invalid_argument("interp_potential: point too close to the box edge");
    };
    int ix;
    double ux;
    locate(x[0], ix, ux);
    double wx[4];
    cr_weights(ux, wx);
    if (spec.d() == 1) {
        double v = 0.0;
        for (int a = 0; a < 4; ++a) v += wx[a] * h[ix - 1 + a];
        return v;
    }
    int iy;
    double uy;
    locate(x[1], iy, uy);
    double wy[4];
    cr_weights(uy, wy);
    double v = 0.0;
    for (int b = 0; b < 4; ++b) {
        double row = 0.0;
        for (int a = 0; a < 4; ++a) row += wx[a] * h[index(ix - 1 + a, iy - 1 + b)];
        v += wy[b] * row;
    }
    return v;
}

double GridField::interp_value(const Point& x) const {
    const double hx = dx();
    auto locate = [&](double c, int& i0, double& u) {
        double s = (c + L) / hx - 0.5;
        double fl = std::floor(s);
        i0 = std::clamp(static_cast<int>(fl), 0, n - 2);
        u = std::clamp(s - fl, 0.0, 1.0);
    };
    int ix;
    double ux;
    locate(x[0], ix, ux);
    if (spec.d() == 1) return (1.0 - ux) * values[ix] + ux * values[ix + 1];
    int iy;
    double uy;
    locate(x[1], iy, uy);
    return (1.0 - ux) * (1.0 - uy) * values[index(ix, iy)] +
           ux * (1.0 - uy) * values[index(ix + 1, iy)] +
           (1.0 - ux) * uy * values[index(ix, iy + 1)] +
           ux * uy * values[index(ix + 1, iy + 1)];
}

// ---------------------------------------------------------- singular cell

double singular_cell_average(const KernelSpec& spec, double dx) {
    double a = 0.5 * dx;
    double s = spec.s();
    double invc = 1.0 / spec.c();
    if (spec.d() == 1) {
        if (s == 0.0) return invc * (1.0 - std::log(a));
        return invc * std::pow(a, -s) / (1.0 - s);
    }
    if (s == 0.0) {
        // mean over the square of -log|x|: -(log a + (log 2 + pi/2 - 3)/2)
        return -invc * (std::log(a) + 0.5 * (std::log(2.0) + 0.5 * M_PI - 3.0));
    }
    // octant reduction: mean = (2 a^-s / (2-s)) * int_0^{pi/4} cos(th)^{s-2} dth
    double I = integrate_adaptive([s](double th) { return std::pow(std::cos(th), s - 2.0); },
                                  0.0, 0.25 * M_PI, 1e-13);
    return invc * 2.0 * std::pow(a, -s) / (2.0 - s) * I;
}

// ------------------------------------------------------------ PotentialSolver

PotentialSolver::PotentialSolver(const KernelSpec& spec, double L, int n)
    : spec_(spec), L_(L), n_(n), m_(2 * n) {
    if (!is_pow2(n)) throw std::invalid_argument("PotentialSolver: n must be a power of two");
    dx_ = 2.0 * L / n;
    const int d = spec_.d();

    // kernel samples on the padded torus; signed offset per index
    auto offset = [&](int j) { return (j <= m_ / 2 ? j : j - m_) * dx_; };
    if (d == 1) {
        std::vector<cplx> k(m_);
        for (int j = 0; j < m_; ++j) {
            double r = std::abs(offset(j));
            k[j] = (j == 0) ? singular_cell_average(spec_, dx_) : spec_.g(r);
        }
        fft(k, false);
        kernel_hat_ = std::move(k);
    } else {
        std::vector<cplx> k(static_cast<size_t>(m_) * m_);
        for (int jy = 0; jy < m_; ++jy)
            for (int jx = 0; jx < m_; ++jx) {
                double ox = offset(jx), oy = offset(jy);
                double r = std::hypot(ox, oy);
                k[static_cast<size_t>(jy) * m_ + jx] =
                    (jx == 0 && jy == 0) ? singular_cell_average(spec_, dx_) : spec_.g(r);
            }
        fft2(k, m_, m_, false);
        kernel_hat_ = std::move(k);
    }

    // signed wavenumbers with the 2/3-rule de-aliasing mask
    wavenumber_.resize(m_);
    mask_.resize(m_);
    for (int j = 0; j < m_; ++j) {
        int js = j <= m_ / 2 ? j : j - m_;
        wavenumber_[j] = 2.0 * M_PI * js / (m_ * dx_);
        mask_[j] = (std::abs(js) <= m_ / 3 && j != m_ / 2) ? 1 : 0;
    }
}

std::vector<cplx> PotentialSolver::forward(const std::vector<double>& vals) const {
    const int d = spec_.d();
    double vol = d == 1 ? dx_ : dx_ * dx_;
    if (d == 1) {
        std::vector<cplx> a(m_, cplx(0.0));
        for (int i = 0; i < n_; ++i) a[i] = vals[i] * vol;
        fft(a, false);
        return a;
    }
    std::vector<cplx> a(static_cast<size_t>(m_) * m_, cplx(0.0));
    for (int y = 0; y < n_; ++y)
        for (int x = 0; x < n_; ++x)
            a[static_cast<size_t>(y) * m_ + x] = vals[static_cast<size_t>(y) * n_ + x] * vol;
    fft2(a, m_, m_, false);
    return a;
}

std::vector<double> PotentialSolver::inverse_crop(std::vector<cplx> spec_grid) const {
    const int d = spec_.d();
    if (d == 1) {
        fft(spec_grid, true);
        std::vector<double> out(n_);
        for (int i = 0; i < n_; ++i) out[i] = spec_grid[i].real();
        return out;
    }
    fft2(spec_grid, m_, m_, true);
    std::vector<double> out(static_cast<size_t>(n_) * n_);
    for (int y = 0; y < n_; ++y)
        for (int x = 0; x < n_; ++x)
            out[static_cast<size_t>(y) * n_ + x] = spec_grid[static_cast<size_t>(y) * m_ + x].real();
    return out;
}

std::vector<double> PotentialSolver::potential(const std::vector<double>& vals) const {
    auto a = forward(vals);
    for (size_t i = 0; i < a.size(); ++i) a[i] *= kernel_hat_[i];
    return inverse_crop(std::move(a));
}

void PotentialSolver::gradient(const std::vector<double>& vals,
                               std::vector<double>& gx, std::vector<double>& gy) const {
    const int d = spec_.d();
    auto a = forward(vals);
    for (size_t i = 0; i < a.size(); ++i) a[i] *= kernel_hat_[i];
    if (d == 1) {
        auto ax = a;
        for (int j = 0; j < m_; ++j)
            ax[j] *= mask_[j] ? cplx(0.0, wavenumber_[j]) : cplx(0.0);
        gx = inverse_crop(std::move(ax));
        gy.assign(n_, 0.0);
        return;
    }
    auto ax = a;
    for (int y = 0; y < m_; ++y)
        for (int x = 0; x < m_; ++x) {
            size_t i = static_cast<size_t>(y) * m_ + x;
            ax[i] *= (mask_[x] && mask_[y]) ? cplx(0.0, wavenumber_[x]) : cplx(0.0);
        }
    gx = inverse_crop(std::move(ax));
    for (int y = 0; y < m_; ++y)
        for (int x = 0; x < m_; ++x) {
            size_t i = static_cast<size_t>(y) * m_ + x;
            a[i] *= (mask_[x] && mask_[y]) ? cplx(0.0, wavenumber_[y]) : cplx(0.0);
        }
    gy = inverse_crop(std::move(a));
}

std::vector<double> PotentialSolver::second_derivative(const std::vector<double>& vals,
                                                       int a_axis, int b_axis) const {
    const int d = spec_.d();
    auto a = forward(vals);
    for (size_t i = 0; i < a.size(); ++i) a[i] *= kernel_hat_[i];
    if (d == 1) {
        for (int j = 0; j < m_; ++j)
            a[j] *= mask_[j] ? cplx(-wavenumber_[j] * wavenumber_[j], 0.0) : cplx(0.0);
        return inverse_crop(std::move(a));
    }
    for (int y = 0; y < m_; ++y)
        for (int x = 0; x < m_; ++x) {
            size_t i = static_cast<size_t>(y) * m_ + x;
            if (mask_[x] && mask_[y]) {
                double ka = a_axis == 0 ? wavenumber_[x] : wavenumber_[y];
                double kb = b_axis == 0 ? wavenumber_[x] : wavenumber_[y];
                a[i] *= -ka * kb;
            } else {
                a[i] = 0.0;
            }
        }
    return inverse_crop(std::move(a));
}

double PotentialSolver::energy(const std::vector<double>& vals) const {
    auto h = potential(vals);
    double vol = spec_.d() == 1 ? dx_ : dx_ * dx_;
    double e = 0.0;
    for (size_t i = 0; i < vals.size(); ++i) e += h[i] * vals[i];
    return e * vol;
}

// ------------------------------------------------------------------ transport

namespace {

inline double minmod(double a, double b) {
    if (a > 0.0 && b > 0.0) return std::min(a, b);
    if (a < 0.0 && b < 0.0) return std::max(a, b);
    return 0.0;
}

// superbee: compressive TVD slope, keeps contact fronts sharp
inline double superbee(double a, double b) {
    if (a * b <= 0.0) return 0.0;
    double s1 = minmod(2.0 * a, b);
    double s2 = minmod(a, 2.0 * b);
    return std::abs(s1) > std::abs(s2) ? s1 : s2;
}

// One forward-Euler upwind update using the field's own velocity; the face
// value comes from the upwind cell, with an optional limited slope. The cell
// velocity is u = -(gc grad h + pc perp(grad h)).
std::vector<double> euler_update(const GridField& field, double dt, bool limited,
                                 const FlowCoefficients& flow, double& max_speed) {
    const int d = field.spec.d();
    const int n = field.n;
    const double hx = field.dx();
    const std::vector<double>& gx_raw = field.grad_potential(0);
    const std::vector<double>& gy_raw = field.grad_potential(1);
    const std::vector<double>& mu = field.values;
    const double gc = flow.grad_coeff, pc = flow.perp_coeff;
    if (d == 1 && pc != 0.0)
        throw std::invalid_argument("pde_step: perp flow requires d = 2");

    std::vector<double> ux(mu.size()), uy;
    if (d == 1) {
        for (size_t i = 0; i < mu.size(); ++i) ux[i] = -gc * gx_raw[i];
    } else {
        uy.resize(mu.size());
        for (size_t i = 0; i < mu.size(); ++i) {
            ux[i] = -(gc * gx_raw[i] - pc * gy_raw[i]);
            uy[i] = -(gc * gy_raw[i] + pc * gx_raw[i]);
        }
    }
    max_speed = 0.0;
    for (size_t i = 0; i < mu.size(); ++i) {
        double sp = std::abs(ux[i]) + (d == 2 ? std::abs(uy[i]) : 0.0);
        max_speed = std::max(max_speed, sp);
    }
    if (!std::isfinite(max_speed)) throw std::runtime_error("pde_step: velocity blow-up");

    std::vector<double> nu = mu;
    auto face_value = [&](double at0, double atm1, double atp1, bool take_left_half) {
        // reconstruct inside the upwind cell: center at0, neighbors atm1/atp1
        if (!limited) return at0;
        double s = superbee(at0 - atm1, atp1 - at0);
        return take_left_half ? at0 + 0.5 * s : at0 - 0.5 * s;
    };

    if (d == 1) {
        for (int i = 1; i < n; ++i) {
            double uf = 0.5 * (ux[i - 1] + ux[i]);
            double up;
            if (uf > 0.0)
                up = face_value(mu[i - 1], i >= 2 ? mu[i - 2] : mu[i - 1], mu[i], true);
            else
                up = face_value(mu[i], mu[i - 1], i + 1 < n ? mu[i + 1] : mu[i], false);
            double F = uf * up;
            nu[i - 1] -= dt / hx * F;
            nu[i] += dt / hx * F;
        }
        return nu;
    }

    for (int y = 0; y < n; ++y)
        for (int i = 1; i < n; ++i) {
            size_t il = field.index(i - 1, y), ir = field.index(i, y);
            double uf = 0.5 * (ux[il] + ux[ir]);
            double up;
            if (uf > 0.0)
                up = face_value(mu[il], i >= 2 ? mu[field.index(i - 2, y)] : mu[il], mu[ir], true);
            else
                up = face_value(mu[ir], mu[il], i + 1 < n ? mu[field.index(i + 1, y)] : mu[ir],
                                false);
            double F = uf * up;
            nu[il] -= dt / hx * F;
            nu[ir] += dt / hx * F;
        }
    for (int j = 1; j < n; ++j)
        for (int x = 0; x < n; ++x) {
            size_t il = field.index(x, j - 1), ir = field.index(x, j);
            double uf = 0.5 * (uy[il] + uy[ir]);
            double up;
            if (uf > 0.0)
                up = face_value(mu[il], j >= 2 ? mu[field.index(x, j - 2)] : mu[il], mu[ir], true);
            else
                up = face_value(mu[ir], mu[il], j + 1 < n ? mu[field.index(x, j + 1)] : mu[ir],
                                false);
            double F = uf * up;
            nu[il] -= dt / hx * F;
            nu[ir] += dt / hx * F;
        }
    return nu;
}

} // namespace

GridField pde_step(const GridField& field, double dt, PdeStepInfo* info, TransportScheme scheme,
                   const FlowCoefficients& flow) {
    GridField out = field;
    out.invalidate_cache();
    out.t = field.t + dt;
    double max_speed = 0.0;

    if (dt == 0.0) {
        euler_update(field, 0.0, false, flow, max_speed);
        if (info) *info = {0.0, max_speed, 0.0};
        return out;
    }

    if (scheme == TransportScheme::donor_cell) {
        out.values = euler_update(field, dt, false, flow, max_speed);
    } else {
        // SSP-RK2 (Heun): convex combination of two Euler stages keeps the
        // limited scheme positivity preserving under the same CFL
        GridField stage = field;
        stage.invalidate_cache();
        stage.values = euler_update(field, dt, true, flow, max_speed);
        stage.t = field.t + dt;
        double stage_speed = 0.0;
        std::vector<double> second = euler_update(stage, dt, true, flow, stage_speed);
        for (size_t i = 0; i < out.values.size(); ++i)
            out.values[i] = 0.5 * (field.values[i] + second[i]);
    }

    double clipped = 0.0;
    for (double& v : out.values)
        if (v < 0.0) {
            clipped -= v * out.cell_volume();
            v = 0.0;
        }
    if (clipped > 0.0) {
        double m0 = field.mass();
        double m1 = out.mass();
        if (m1 > 0.0)
            for (double& v : out.values) v *= m0 / m1;
    }
    if (info) *info = {dt, max_speed, clipped};
    return out;
}

PdeSolveResult pde_solve(const GridField& field, double t_end, double cfl, int series_rows,
                         TransportScheme scheme, const FlowCoefficients& flow) {
    if (!(cfl > 0.0 && cfl <= 1.0)) throw std::invalid_argument("pde_solve: cfl in (0,1] required");
    field.validate(/*require_unit_mass=*/false);
    PdeSolveResult res{field, {}, 0.0, 0};
    GridField& f = res.field;
    const double t0 = field.t;
    if (!(t_end >= t0)) throw std::invalid_argument("pde_solve: t_end >= t required");

    double series_dt = series_rows > 1 ? (t_end - t0) / (series_rows - 1) : (t_end - t0);
    double next_row = t0;

    auto emit = [&](const GridField& g) {
        FieldSeriesRow row;
        row.t = g.t;
        row.mass = g.mass();
        auto sv = g.solver();
        row.energy = sv->energy(g.values);
        const std::vector<double>& gx = g.grad_potential(0);
        const std::vector<double>& gy = g.grad_potential(1);
        double sg = 0.0;
        for (size_t i = 0; i < g.values.size(); ++i)
            sg = std::max(sg, std::hypot(gx[i], g.spec.d() == 2 ? gy[i] : 0.0));
        row.sup_grad_h = sg;
        double sh = 0.0;
        for (int a = 0; a < g.spec.d(); ++a)
            for (int b = a; b < g.spec.d(); ++b) {
                auto hab = sv->second_derivative(g.values, a, b);
                for (double v : hab) sh = std::max(sh, std::abs(v));
            }
        row.sup_hess_h = sh;
        row.support_radius = g.support_radius();
        res.series.push_back(row);
    };

    emit(f);
    next_row += series_dt;

    // |u_x|+|u_y| <= (|gc|+|pc|)(|h_x|+|h_y|) bounds the CFL speed
    const double speed_scale = std::abs(flow.grad_coeff) + std::abs(flow.perp_coeff);
    while (f.t < t_end - 1e-14 * (t_end - t0 + 1.0)) {
        const std::vector<double>& gx = f.grad_potential(0);
        const std::vector<double>& gy = f.grad_potential(1);
        double max_speed = 0.0;
        for (size_t i = 0; i < f.values.size(); ++i)
            max_speed = std::max(max_speed,
                                 std::abs(gx[i]) + (f.spec.d() == 2 ? std::abs(gy[i]) : 0.0));
        max_speed *= speed_scale;
        if (!std::isfinite(max_speed)) throw std::runtime_error("pde_solve: velocity blow-up");
        double dt = max_speed > 0.0 ? cfl * f.dx() / max_speed : (t_end - f.t);
        dt = std::min(dt, t_end - f.t);
        if (next_row - f.t > 0) dt = std::min(dt, next_row - f.t);
        PdeStepInfo info;
        f = pde_step(f, dt, &info, scheme, flow);
        res.clipped_mass_total += info.clipped_mass;
        res.steps++;
        if (f.t >= next_row - 1e-14 * (t_end - t0 + 1.0)) {
            emit(f);
            next_row += series_dt;
        }
    }
    if (res.series.empty() || res.series.back().t < f.t - 1e-14) emit(f);
    return res;
}

// ------------------------------------------------------------------ patch

double disc_box_overlap(double R, double x0, double x1, double y0, double y1) {
    if (x0 >= R || x1 <= -R || y0 >= R || y1 <= -R) return 0.0;
    auto chord = [&](double x) {
        if (std::abs(x) >= R) return 0.0;
        double s = std::sqrt(R * R - x * x);
        double lo = std::max(y0, -s), hi = std::min(y1, s);
        return std::max(0.0, hi - lo);
    };
    double a = std::max(x0, -R), b = std::min(x1, R);
    if (a >= b) return 0.0;
    // split at the x where the arc crosses y0 or y1 so each piece is smooth
    std::vector<double> cuts{a, b};
    for (double yy : {y0, y1})
        if (std::abs(yy) < R) {
            double xc = std::sqrt(R * R - yy * yy);
            for (double c : {-xc, xc})
                if (c > a && c < b) cuts.push_back(c);
        }
    std::sort(cuts.begin(), cuts.end());
    double area = 0.0;
    for (size_t k = 0; k + 1 < cuts.size(); ++k)
        area += integrate_adaptive(chord, cuts[k], cuts[k + 1], 1e-13, R * R * 1e-6);
    return area;
}

GridField patch_exact(double rho0, double R0, double t, double L, int n) {
    if (!(rho0 > 0.0 && R0 > 0.0)) throw std::invalid_argument("patch_exact: rho0, R0 > 0");
    KernelSpec spec(2, 0.0);
    double rho = rho0 / (1.0 + rho0 * t);
    double R = R0 * std::sqrt(1.0 + rho0 * t);
    GridField f(spec, L, n);
    f.t = t;
    double hx = f.dx();
    parallel_for(0, static_cast<long>(f.values.size()), [&](long idx) {
        int ix = static_cast<int>(idx % n), iy = static_cast<int>(idx / n);
        double x0 = -L + ix * hx, y0 = -L + iy * hx;
        double cx = x0 + 0.5 * hx, cy = y0 + 0.5 * hx;
        double rc = std::hypot(cx, cy);
        if (rc < R - hx) {
            f.values[idx] = rho;
        } else if (rc > R + hx) {
            f.values[idx] = 0.0;
        } else {
            f.values[idx] = rho * disc_box_overlap(R, x0, x0 + hx, y0, y0 + hx) / (hx * hx);
        }
    });
    return f;
}

// ------------------------------------------------------------------ energies

double field_energy(const GridField& field) {
    // uses the cached potential: repeated evaluations on a snapshot are cheap
    const std::vector<double>& h = field.potential();
    double e = 0.0;
    for (size_t i = 0; i < field.values.size(); ++i) e += h[i] * field.values[i];
    return e * field.cell_volume();
}

double field_distance(const GridField& f1, const GridField& f2) {
    if (f1.n != f2.n || f1.L != f2.L || f1.spec.d() != f2.spec.d() || f1.spec.s() != f2.spec.s())
        throw std::invalid_argument("field_distance: grid/spec mismatch");
    std::vector<double> diff(f1.values.size());
    for (size_t i = 0; i < diff.size(); ++i) diff[i] = f1.values[i] - f2.values[i];
    return f1.solver()->energy(diff);
}

// ---------------------------------------------------------------- diagnostics

FieldDiagnostics diagnostics(const GridField& field, double sigma, double lp_exponent) {
    if (!(sigma > 0.0 && sigma <= 1.0))
        throw std::invalid_argument("diagnostics: sigma in (0,1] required");
    FieldDiagnostics d{};
    d.holder_sigma = sigma;
    d.mass = field.mass();
    d.support_radius = field.support_radius();
    d.energy = field_energy(field);

    auto sv = field.solver();
    const std::vector<double>& gx = field.grad_potential(0);
    const std::vector<double>& gy = field.grad_potential(1);
    for (size_t i = 0; i < field.values.size(); ++i)
        d.sup_grad_h = std::max(d.sup_grad_h,
                                std::hypot(gx[i], field.spec.d() == 2 ? gy[i] : 0.0));
    for (int a = 0; a < field.spec.d(); ++a)
        for (int b = a; b < field.spec.d(); ++b) {
            auto hab = sv->second_derivative(field.values, a, b);
            for (double v : hab) d.sup_hess_h = std::max(d.sup_hess_h, std::abs(v));
        }

    for (double v : field.values) d.sup_value = std::max(d.sup_value, v);

    // discrete Hoelder quotient over cell pairs within 8 dx
    const int n = field.n;
    const double hx = field.dx();
    const int w = 8;
    double quot = 0.0;
    if (field.spec.d() == 1) {
        for (int i = 0; i < n; ++i)
            for (int k = 1; k <= w && i + k < n; ++k)
                quot = std::max(quot, std::abs(field.values[i + k] - field.values[i]) /
                                          std::pow(k * hx, sigma));
    } else {
        std::vector<double> local(n);
        parallel_blocks(0, n, [&](long yb, long ye) {
            for (long y = yb; y < ye; ++y) {
                double best = 0.0;
                for (int x = 0; x < n; ++x) {
                    double v0 = field.values[field.index(x, static_cast<int>(y))];
                    for (int ddy = 0; ddy <= w; ++ddy) {
                        if (y + ddy >= n) break;
                        int xlo = ddy == 0 ? 1 : -w;
                        for (int ddx = xlo; ddx <= w; ++ddx) {
                            int xx = x + ddx;
                            if (xx < 0 || xx >= n) continue;
                            double r = hx * std::hypot(static_cast<double>(ddx), static_cast<double>(ddy));
                            if (r > w * hx) continue;
                            double dv = std::abs(field.values[field.index(xx, static_cast<int>(y) + ddy)] - v0);
                            best = std::max(best, dv / std::pow(r, sigma));
                        }
                    }
                }
                local[y] = best;
            }
        });
        for (double v : local) quot = std::max(quot, v);
    }
    d.holder_quotient = quot;
    d.ratio = d.sup_hess_h / (d.mass + d.sup_value + quot);

    // discrete ||grad mu||_Lp (centered differences)
    d.grad_mu_p = lp_exponent;
    double acc = 0.0;
    if (field.spec.d() == 1) {
        for (int i = 1; i + 1 < n; ++i) {
            double g = (field.values[i + 1] - field.values[i - 1]) / (2.0 * hx);
            acc += std::pow(std::abs(g), lp_exponent) * hx;
        }
    } else {
        for (int y = 1; y + 1 < n; ++y)
            for (int x = 1; x + 1 < n; ++x) {
                double gxx = (field.values[field.index(x + 1, y)] - field.values[field.index(x - 1, y)]) / (2.0 * hx);
                double gyy = (field.values[field.index(x, y + 1)] - field.values[field.index(x, y - 1)]) / (2.0 * hx);
                acc += std::pow(std::hypot(gxx, gyy), lp_exponent) * hx * hx;
            }
    }
    d.grad_mu_lp = std::pow(acc, 1.0 / lp_exponent);
    return d;
}

// ------------------------------------------------------------- initial data

GridField ic_uniform_patch(const KernelSpec& spec, double L, int n, double radius) {
    GridField f(spec, L, n);
    double hx = f.dx();
    if (spec.d() == 1) {
        for (int i = 0; i < n; ++i) {
            double x0 = -L + i * hx, x1 = x0 + hx;
            double lo = std::max(x0, -radius), hi = std::min(x1, radius);
            f.values[i] = std::max(0.0, hi - lo) / hx;
        }
    } else {
        for (size_t idx = 0; idx < f.values.size(); ++idx) {
            int ix = static_cast<int>(idx % n), iy = static_cast<int>(idx / n);
            double x0 = -L + ix * hx, y0 = -L + iy * hx;
            f.values[idx] = disc_box_overlap(radius, x0, x0 + hx, y0, y0 + hx) / (hx * hx);
        }
    }
    f.normalize();
    return f;
}

GridField ic_smooth_bump(const KernelSpec& spec, double L, int n, double radius) {
    GridField f(spec, L, n);
    for (size_t idx = 0; idx < f.values.size(); ++idx) {
        Point c = f.cell_center(idx);
        double q = norm2(c, spec.d()) / (radius * radius);
        f.values[idx] = q < 1.0 ? std::exp(-1.0 / (1.0 - q)) : 0.0;
    }
    f.normalize();
    return f;
}

GridField ic_two_bumps(const KernelSpec& spec, double L, int n, double radius, double offset) {
    GridField f(spec, L, n);
    for (size_t idx = 0; idx < f.values.size(); ++idx) {
        Point c = f.cell_center(idx);
        for (double sgn : {-1.0, 1.0}) {
            Point shifted = c;
            shifted[0] -= sgn * offset;
            double q = norm2(shifted, spec.d()) / (radius * radius);
            if (q < 1.0) f.values[idx] += std::exp(-1.0 / (1.0 - q));
        }
    }
    f.normalize();
    return f;
}

// ------------------------------------------------------------------------ IO

void write_field_binary(const GridField& field, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open " + path);
    uint32_t d = static_cast<uint32_t>(field.spec.d());
    double s = field.spec.s(), L = field.L, t = field.t;
    uint32_t n = static_cast<uint32_t>(field.n);
    std::fwrite(&d, sizeof d, 1, f);
    std::fwrite(&s, sizeof s, 1, f);
    std::fwrite(&L, sizeof L, 1, f);
    std::fwrite(&n, sizeof n, 1, f);
    std::fwrite(&t, sizeof t, 1, f);
    std::fwrite(field.values.data(), sizeof(double), field.values.size(), f);
    std::fclose(f);
}

GridField read_field_binary(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open " + path);
    uint32_t d = 0, n = 0;
    double s = 0, L = 0, t = 0;
    if (std::fread(&d, sizeof d, 1, f) != 1 || std::fread(&s, sizeof s, 1, f) != 1 ||
        std::fread(&L, sizeof L, 1, f) != 1 || std::fread(&n, sizeof n, 1, f) != 1 ||
        std::fread(&t, sizeof t, 1, f) != 1) {
        std::fclose(f);
        throw std::runtime_error("truncated field file " + path);
    }
    GridField out(KernelSpec(static_cast<int>(d), s), L, static_cast<int>(n));
    out.t = t;
    size_t cnt = out.values.size();
    if (std::fread(out.values.data(), sizeof(double), cnt, f) != cnt) {
        std::fclose(f);
        throw std::runtime_error("truncated field file " + path);
    }
    std::fclose(f);
    return out;
}

void write_field_series_csv(const std::vector<FieldSeriesRow>& rows, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::fprintf(f, "t,mass,energy,sup_grad_h,sup_hess_h,support_radius\n");
    for (const auto& r : rows)
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.mass, r.energy,
                     r.sup_grad_h, r.sup_hess_h, r.support_radius);
    std::fclose(f);
}

double l1_distance(const GridField& a, const GridField& b) {
    if (a.n != b.n || a.L != b.L) throw std::invalid_argument("l1_distance: grid mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) s += std::abs(a.values[i] - b.values[i]);
    return s * a.cell_volume();
}

} // namespace riesz
