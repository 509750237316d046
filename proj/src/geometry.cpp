#include "vortopo/geometry.hpp"

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <mutex>
#include <numeric>

namespace vortopo {

namespace detail {

bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

namespace {

// 7-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr double kGlx[7] = {-0.9491079123427585, -0.7415311855993945,
                            -0.4058451513773972, 0.0,
                            0.4058451513773972,  0.7415311855993945,
                            0.9491079123427585};
constexpr double kGlw[7] = {0.1294849661688697, 0.2797053914892766,
                            0.3818300505051189, 0.4179591836734694,
                            0.3818300505051189, 0.2797053914892766,
                            0.1294849661688697};

// Cyclic tridiagonal solve (Thomas + Sherman-Morrison). diag/lower/upper have
// size n; lower[i] couples row i to i-1 (cyclically), upper[i] to i+1.
std::vector<double> solve_cyclic_tridiagonal(std::vector<double> a,
                                             std::vector<double> b,
                                             std::vector<double> c,
                                             std::vector<double> rhs) {
    const std::size_t n = b.size();
    auto thomas = [](std::vector<double> lo, std::vector<double> di,
                     std::vector<double> up, std::vector<double> r) {
        const std::size_t m = di.size();
        for (std::size_t i = 1; i < m; ++i) {
            const double w = lo[i] / di[i - 1];
            di[i] -= w * up[i - 1];
            r[i] -= w * r[i - 1];
        }
        std::vector<double> x(m);
        x[m - 1] = r[m - 1] / di[m - 1];
        for (std::size_t i = m - 1; i-- > 0;) x[i] = (r[i] - up[i] * x[i + 1]) / di[i];
        return x;
    };
    // Sherman-Morrison correction for the cyclic couplings a[0] and c[n-1].
    const double alpha = a[0], beta = c[n - 1];
    const double gamma = -b[0];
    std::vector<double> bmod = b;
    bmod[0] -= gamma;
    bmod[n - 1] -= alpha * beta / gamma;
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = beta;
    std::vector<double> lo = a, up = c;
    lo[0] = 0.0;
    up[n - 1] = 0.0;
    const std::vector<double> x = thomas(lo, bmod, up, rhs);
    const std::vector<double> z = thomas(lo, bmod, up, u);
    const double fact = (x[0] + alpha * x[n - 1] / gamma) /
                        (1.0 + z[0] + alpha * z[n - 1] / gamma);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - fact * z[i];
    return out;
}

}  // namespace

PeriodicCurve::PeriodicCurve(const std::vector<Vec3>& nodes) : y_(nodes) {
    const std::size_t m = nodes.size();
    if (m < 3) throw ValidationError("periodic curve needs at least 3 nodes");
    u_.resize(m);
    u_[0] = 0.0;
    for (std::size_t k = 1; k < m; ++k)
        u_[k] = u_[k - 1] + (nodes[k] - nodes[k - 1]).norm();
    period_ = u_[m - 1] + (nodes[0] - nodes[m - 1]).norm();
    if (!(period_ > 0.0)) throw ValidationError("degenerate (zero-length) curve");

    // Periodic cubic spline: solve for second derivatives per coordinate.
    auto h = [&](std::size_t k) {
        return (k + 1 < m ? u_[k + 1] : period_) - u_[k];
    };
    std::vector<double> lower(m), diag(m), upper(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double hprev = h((k + m - 1) % m);
        const double hk = h(k);
        lower[k] = hprev / 6.0;
        diag[k] = (hprev + hk) / 3.0;
        upper[k] = hk / 6.0;
    }
    m_.assign(m, Vec3::Zero());
    for (int c = 0; c < 3; ++c) {
        std::vector<double> rhs(m);
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t kp = (k + 1) % m, km = (k + m - 1) % m;
            const double hprev = h(km), hk = h(k);
            rhs[k] = (y_[kp][c] - y_[k][c]) / hk - (y_[k][c] - y_[km][c]) / hprev;
        }
        const std::vector<double> sol =
            solve_cyclic_tridiagonal(lower, diag, upper, rhs);
        for (std::size_t k = 0; k < m; ++k) m_[k][c] = sol[k];
    }

    cum_.resize(m + 1);
    cum_[0] = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double ua = u_[k];
        const double ub = (k + 1 < m) ? u_[k + 1] : period_;
        cum_[k + 1] = cum_[k] + segment_arc(k, ua, ub);
    }
}

std::size_t PeriodicCurve::segment_of(double u) const {
    const std::size_t m = y_.size();
    const auto it = std::upper_bound(u_.begin(), u_.end(), u);
    std::size_t k = static_cast<std::size_t>(it - u_.begin());
    return (k == 0) ? 0 : std::min(k - 1, m - 1);
}

Vec3 PeriodicCurve::position(double u) const {
    const std::size_t m = y_.size();
    u -= period_ * std::floor(u / period_);
    const std::size_t k = segment_of(u);
    const std::size_t kp = (k + 1) % m;
    const double ua = u_[k];
    const double ub = (k + 1 < m) ? u_[k + 1] : period_;
    const double hseg = ub - ua;
    const double A = (ub - u) / hseg, B = (u - ua) / hseg;
    return A * y_[k] + B * y_[kp] +
           ((A * A * A - A) * m_[k] + (B * B * B - B) * m_[kp]) *
               (hseg * hseg / 6.0);
}

Vec3 PeriodicCurve::derivative(double u) const {
    const std::size_t m = y_.size();
    u -= period_ * std::floor(u / period_);
    const std::size_t k = segment_of(u);
    const std::size_t kp = (k + 1) % m;
    const double ua = u_[k];
    const double ub = (k + 1 < m) ? u_[k + 1] : period_;
    const double hseg = ub - ua;
    const double A = (ub - u) / hseg, B = (u - ua) / hseg;
    return (y_[kp] - y_[k]) / hseg +
           ((1.0 - 3.0 * A * A) * m_[k] + (3.0 * B * B - 1.0) * m_[kp]) *
               (hseg / 6.0);
}

double PeriodicCurve::segment_arc(std::size_t k, double ua, double ub) const {
    double s = 0.0;
    const double mid = 0.5 * (ua + ub), half = 0.5 * (ub - ua);
    for (int g = 0; g < 7; ++g)
        s += kGlw[g] * derivative(mid + half * kGlx[g]).norm();
    return s * half;
}

double PeriodicCurve::total_arc_length() const { return cum_.back(); }

double PeriodicCurve::arc_length_to(double u) const {
    const std::size_t m = y_.size();
    const double wraps = std::floor(u / period_);
    u -= period_ * wraps;
    const std::size_t k = segment_of(u);
    return wraps * cum_.back() + cum_[k] + segment_arc(k, u_[k], u);
}

double PeriodicCurve::u_at_arc_length(double s) const {
    const double total = cum_.back();
    const double wraps = std::floor(s / total);
    s -= total * wraps;
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
    std::size_t k = (it == cum_.begin()) ? 0 : static_cast<std::size_t>(it - cum_.begin()) - 1;
    k = std::min(k, y_.size() - 1);
    const double ua = u_[k];
    const double ub = (k + 1 < y_.size()) ? u_[k + 1] : period_;
    double u = ua + (ub - ua) * std::clamp((s - cum_[k]) /
                                           std::max(cum_[k + 1] - cum_[k], 1e-300),
                                           0.0, 1.0);
    // Newton with bisection safety on f(u) = arc(ua, u) - (s - cum_[k]).
    double lo = ua, hi = ub;
    for (int it2 = 0; it2 < 60; ++it2) {
        const double f = segment_arc(k, ua, u) - (s - cum_[k]);
        if (std::abs(f) < 1e-14 * total) break;
        (f > 0.0 ? hi : lo) = u;
        const double speed = derivative(u).norm();
        double un = u - f / std::max(speed, 1e-300);
        if (!(un > lo && un < hi)) un = 0.5 * (lo + hi);
        if (std::abs(un - u) < 1e-16 * period_) {
            u = un;
            break;
        }
        u = un;
    }
    return u + wraps * period_;
}

std::vector<Vec3> periodic_derivative(const std::vector<Vec3>& x, double length) {
    const std::size_t n = x.size();
    const double h = length / static_cast<double>(n);
    std::vector<Vec3> d(n);
    if (is_power_of_two(n) && n >= 8) {
        // Spectral: FFT each coordinate, multiply by ik, inverse FFT.
        static std::mutex plan_mutex;
        std::vector<std::complex<double>> buf(n);
        fftw_plan fwd, bwd;
        {
            std::lock_guard<std::mutex> lock(plan_mutex);
            fwd = fftw_plan_dft_1d(static_cast<int>(n),
                                   reinterpret_cast<fftw_complex*>(buf.data()),
                                   reinterpret_cast<fftw_complex*>(buf.data()),
                                   FFTW_FORWARD, FFTW_ESTIMATE);
            bwd = fftw_plan_dft_1d(static_cast<int>(n),
                                   reinterpret_cast<fftw_complex*>(buf.data()),
                                   reinterpret_cast<fftw_complex*>(buf.data()),
                                   FFTW_BACKWARD, FFTW_ESTIMATE);
        }
        for (int c = 0; c < 3; ++c) {
            for (std::size_t k = 0; k < n; ++k) buf[k] = x[k][c];
            fftw_execute(fwd);
            for (std::size_t k = 0; k < n; ++k) {
                double freq = (k <= n / 2) ? static_cast<double>(k)
                                           : static_cast<double>(k) - static_cast<double>(n);
                if (k == n / 2) freq = 0.0;  // Nyquist mode has no odd derivative
                const double wk = 2.0 * pi * freq / length;
                buf[k] *= std::complex<double>(0.0, wk) / static_cast<double>(n);
            }
            fftw_execute(bwd);
            for (std::size_t k = 0; k < n; ++k) d[k][c] = buf[k].real();
        }
        {
            std::lock_guard<std::mutex> lock(plan_mutex);
            fftw_destroy_plan(fwd);
            fftw_destroy_plan(bwd);
        }
    } else {
        // 4th-order central differences on the periodic samples.
        for (std::size_t k = 0; k < n; ++k) {
            const Vec3& xp1 = x[(k + 1) % n];
            const Vec3& xm1 = x[(k + n - 1) % n];
            const Vec3& xp2 = x[(k + 2) % n];
            const Vec3& xm2 = x[(k + n - 2) % n];
            d[k] = (8.0 * (xp1 - xm1) - (xp2 - xm2)) / (12.0 * h);
        }
    }
    return d;
}

}  // namespace detail

Filament make_torus_knot(const TorusKnotParams& p) {
    if (p.p < 1 || p.q < 1)
        throw ValidationError("torus knot windings p, q must be >= 1");
    if (!(std::abs(p.a) < p.r0))
        throw ValidationError("torus knot requires |a| < r0");
    if (p.p > p.q)
        throw ValidationError("torus knot z-amplitude sqrt(1-(p/q)^2) requires p <= q");
    if (p.n_points < 8) throw ValidationError("torus knot needs n_points >= 8");

    const double ratio = static_cast<double>(p.p) / static_cast<double>(p.q);
    const double zamp = std::sqrt(std::max(0.0, 1.0 - ratio * ratio));
    Filament f;
    f.gamma = p.gamma;
    f.id = p.id;
    f.points.resize(p.n_points);
    for (int k = 0; k < p.n_points; ++k) {
        const double theta = 2.0 * pi * k / p.n_points;
        const double r = p.r0 + p.a * std::sin(p.q * theta);
        const double alpha =
            p.p * theta + ratio * (p.a / p.r0) * std::cos(p.q * theta);
        f.points[k] = Vec3(r * std::cos(alpha), r * std::sin(alpha),
                           zamp * std::cos(p.q * theta));
    }
    validate_filament(f);
    return f;
}

Filament make_circle(const Vec3& center, double radius, const Vec3& normal,
                     int n_points, double gamma, int id) {
    if (!(radius > 0.0)) throw ValidationError("circle radius must be positive");
    if (!(normal.norm() > 0.0)) throw ValidationError("circle normal must be nonzero");
    if (n_points < 8) throw ValidationError("circle needs n_points >= 8");
    const Vec3 axis = normal.normalized();
    const Vec3 ref = (std::abs(axis.x()) < 0.9) ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 u = (ref - ref.dot(axis) * axis).normalized();
    const Vec3 w = axis.cross(u);
    Filament f;
    f.gamma = gamma;
    f.id = id;
    f.points.resize(n_points);
    for (int k = 0; k < n_points; ++k) {
        const double theta = 2.0 * pi * k / n_points;
        f.points[k] = center + radius * (std::cos(theta) * u + std::sin(theta) * w);
    }
    return f;
}

Vec3 parallel_transport(const Vec3& u, const Vec3& x0, const Vec3& t0,
                        const Vec3& x1, const Vec3& t1) {
    // Double reflection (Wang et al. rotation-minimizing frames).
    const Vec3 e1 = x1 - x0;
    const double e1n2 = e1.squaredNorm();
    if (e1n2 <= 0.0) return u;
    const Vec3 uL = u - (2.0 * u.dot(e1) / e1n2) * e1;
    const Vec3 tL = t0 - (2.0 * t0.dot(e1) / e1n2) * e1;
    const Vec3 e2 = t1 - tL;
    const double e2n2 = e2.squaredNorm();
    if (e2n2 <= 0.0) return uL;
    return uL - (2.0 * uL.dot(e2) / e2n2) * e2;
}

std::vector<Filament> make_bundle(const Filament& center, int n_satellites,
                                  double offset) {
    validate_filament(center);
    if (n_satellites < 1) throw ValidationError("bundle needs n_satellites >= 1");
    if (!(offset > 0.0)) throw ValidationError("bundle offset must be positive");
    const FrenetData fr = frenet(center);
    const double rc = fr.min_curvature_radius();
    if (offset >= rc)
        throw ValidationError(
            "bundle offset " + std::to_string(offset) +
            " exceeds the minimum radius of curvature " + std::to_string(rc) +
            "; satellites would self-intersect");

    const std::size_t n = center.size();
    // Parallel-transport frame seeded by the principal normal.
    std::vector<Vec3> u(n), w(n);
    u[0] = fr.n[0];
    for (std::size_t k = 1; k < n; ++k) {
        u[k] = parallel_transport(u[k - 1], center.points[k - 1], fr.t[k - 1],
                                  center.points[k], fr.t[k]);
        u[k] = (u[k] - u[k].dot(fr.t[k]) * fr.t[k]).normalized();
    }
    // Holonomy: distribute the closure defect linearly so satellites close.
    const Vec3 u_close =
        parallel_transport(u[n - 1], center.points[n - 1], fr.t[n - 1],
                           center.points[0], fr.t[0]);
    const double defect =
        std::atan2(u_close.cross(u[0]).dot(fr.t[0]), u_close.dot(u[0]));
    const double total = fr.total_length();
    for (std::size_t k = 0; k < n; ++k) {
        const double ang = defect * fr.sigma[k] / total;
        const Vec3 uk = u[k];
        const Vec3 wk = fr.t[k].cross(uk);
        u[k] = std::cos(ang) * uk + std::sin(ang) * wk;
        w[k] = fr.t[k].cross(u[k]);
    }

    std::vector<Filament> out;
    out.reserve(static_cast<std::size_t>(n_satellites) + 1);
    out.push_back(center);
    for (int m = 0; m < n_satellites; ++m) {
        const double phi = 2.0 * pi * m / n_satellites;
        Filament sat;
        sat.gamma = center.gamma;
        sat.id = center.id + m + 1;
        sat.points.resize(n);
        for (std::size_t k = 0; k < n; ++k)
            sat.points[k] = center.points[k] +
                            offset * (std::cos(phi) * u[k] + std::sin(phi) * w[k]);
        out.push_back(std::move(sat));
    }
    return out;
}

Filament resample_arclength(const Filament& f, int n) {
    validate_filament(f);
    if (n < 8) throw ValidationError("resample needs n >= 8");
    const detail::PeriodicCurve curve(f.points);
    const double total = curve.total_arc_length();
    Filament out;
    out.gamma = f.gamma;
    out.id = f.id;
    out.points.resize(n);
    for (int k = 0; k < n; ++k) {
        const double s = total * static_cast<double>(k) / static_cast<double>(n);
        out.points[k] = curve.position(curve.u_at_arc_length(s));
    }
    return out;
}

double arc_length(const Filament& f) {
    validate_filament(f);
    return detail::PeriodicCurve(f.points).total_arc_length();
}

double FrenetData::arc_step() const {
    return sigma.size() >= 2 ? sigma[1] - sigma[0] : 0.0;
}

double FrenetData::total_length() const {
    return sigma.empty() ? 0.0 : sigma.back() + arc_step();
}

double FrenetData::total_torsion() const {
    KahanSum s;
    for (double tk : tau) s.add(tk);
    return s.value() * arc_step() / (2.0 * pi);
}

double FrenetData::min_curvature_radius() const {
    double kmax = 0.0;
    for (double k : kappa) kmax = std::max(kmax, k);
    return kmax > 0.0 ? 1.0 / kmax : std::numeric_limits<double>::infinity();
}

FrenetData frenet(const Filament& f) {
    validate_filament(f);
    const std::size_t n = f.size();
    double lmin = f.min_segment_length(), lmax = f.max_segment_length();
    if ((lmax - lmin) / lmax > 5e-3)
        throw ValidationError(
            "frenet requires a uniform-arclength filament (segment spread " +
            std::to_string((lmax - lmin) / lmax) + "); resample first");

    const double total = arc_length(f);
    const double h = total / static_cast<double>(n);

    FrenetData fr;
    fr.sigma.resize(n);
    for (std::size_t k = 0; k < n; ++k) fr.sigma[k] = h * static_cast<double>(k);

    const std::vector<Vec3> xp = detail::periodic_derivative(f.points, total);
    fr.t.resize(n);
    for (std::size_t k = 0; k < n; ++k) fr.t[k] = xp[k].normalized();

    const std::vector<Vec3> tp = detail::periodic_derivative(fr.t, total);
    fr.kappa.resize(n);
    fr.n.resize(n);
    fr.degenerate.assign(n, 0);
    const double kappa_floor = 1e-8 / total;
    std::size_t anchor = n;
    for (std::size_t k = 0; k < n; ++k) {
        fr.kappa[k] = tp[k].norm();
        if (fr.kappa[k] >= kappa_floor) {
            fr.n[k] = tp[k] / fr.kappa[k];
            if (anchor == n) anchor = k;
        } else {
            fr.degenerate[k] = 1;
        }
    }
    if (anchor == n)
        throw ValidationError("curve has no resolvable curvature anywhere");
    // Propagate n through flagged (straight/inflection) stretches.
    for (std::size_t step = 1; step < n; ++step) {
        const std::size_t k = (anchor + step) % n;
        const std::size_t km = (anchor + step - 1) % n;
        if (fr.degenerate[k]) {
            fr.n[k] = parallel_transport(fr.n[km], f.points[km], fr.t[km],
                                         f.points[k], fr.t[k]);
        }
        fr.n[k] = (fr.n[k] - fr.n[k].dot(fr.t[k]) * fr.t[k]).normalized();
    }
    fr.n[anchor] =
        (fr.n[anchor] - fr.n[anchor].dot(fr.t[anchor]) * fr.t[anchor]).normalized();

    fr.b.resize(n);
    for (std::size_t k = 0; k < n; ++k) fr.b[k] = fr.t[k].cross(fr.n[k]);

    const std::vector<Vec3> bp = detail::periodic_derivative(fr.b, total);
    fr.tau.resize(n);
    for (std::size_t k = 0; k < n; ++k) fr.tau[k] = -bp[k].dot(fr.n[k]);
    return fr;
}

}  // namespace vortopo
