#include "vortopo/topology.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace vortopo {

namespace {

// Midpoints and segment vectors of a closed polyline.
struct SegmentCloud {
    std::vector<Vec3> mid, seg;
    explicit SegmentCloud(const Filament& f) {
        const std::size_t n = f.size();
        mid.resize(n);
        seg.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            mid[i] = f.midpoint(i);
            seg[i] = f.segment(i);
        }
    }
};

// (1/4pi) sum over segment pairs of (mi - mj).(di x dj)/|mi - mj|^3.
// Row-major partials keep the summation order independent of thread count.
double gauss_double_sum(const SegmentCloud& a, const SegmentCloud& b) {
    const std::size_t na = a.mid.size(), nb = b.mid.size();
    std::vector<double> partial(na, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t is = 0; is < static_cast<std::ptrdiff_t>(na); ++is) {
        const std::size_t i = static_cast<std::size_t>(is);
        KahanSum row;
        const Vec3 mi = a.mid[i], di = a.seg[i];
        for (std::size_t j = 0; j < nb; ++j) {
            const Vec3 r = mi - b.mid[j];
            const double r2 = r.squaredNorm();
            row.add(r.dot(di.cross(b.seg[j])) / (r2 * std::sqrt(r2)));
        }
        partial[i] = row.value();
    }
    KahanSum total;
    for (double p : partial) total.add(p);
    return total.value() / (4.0 * pi);
}

// True when some node of a is within `threshold` of some node of b,
// via a uniform spatial hash (O(na + nb)).
bool any_nodes_within(const Filament& a, const Filament& b, double threshold) {
    if (!(threshold > 0.0)) return false;
    const double cell = threshold;
    auto key = [cell](const Vec3& p) {
        const auto q = [cell](double x) {
            return static_cast<std::int64_t>(std::floor(x / cell));
        };
        std::uint64_t h = 1469598103934665603ull;
        for (std::int64_t v : {q(p.x()), q(p.y()), q(p.z())}) {
            h ^= static_cast<std::uint64_t>(v);
            h *= 1099511628211ull;
        }
        return h;
    };
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> bins;
    bins.reserve(b.size() * 2);
    for (std::size_t j = 0; j < b.size(); ++j) bins[key(b.points[j])].push_back(j);
    const double t2 = threshold * threshold;
    for (const Vec3& p : a.points) {
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = -1; dz <= 1; ++dz) {
                    const Vec3 shifted = p + cell * Vec3(dx, dy, dz);
                    const auto it = bins.find(key(shifted));
                    if (it == bins.end()) continue;
                    for (std::size_t j : it->second)
                        if ((b.points[j] - p).squaredNorm() <= t2) return true;
                }
    }
    return false;
}

int checked_round(double raw, double tol, const char* what) {
    const double r = std::round(raw);
    if (std::abs(raw - r) > tol)
        throw ToleranceError(std::string(what) + " = " + std::to_string(raw) +
                             " is " + std::to_string(std::abs(raw - r)) +
                             " away from an integer (tolerance " +
                             std::to_string(tol) + "); refine the curves");
    return static_cast<int>(r);
}

constexpr double kGlx7[7] = {-0.9491079123427585, -0.7415311855993945,
                             -0.4058451513773972, 0.0,
                             0.4058451513773972,  0.7415311855993945,
                             0.9491079123427585};
constexpr double kGlw7[7] = {0.1294849661688697, 0.2797053914892766,
                             0.3818300505051189, 0.4179591836734694,
                             0.3818300505051189, 0.2797053914892766,
                             0.1294849661688697};

template <typename F>
double gl7_panels(F&& f, double a, double b, int panels) {
    KahanSum s;
    const double w = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * w;
        for (int g = 0; g < 7; ++g)
            s.add(kGlw7[g] * f(mid + 0.5 * w * kGlx7[g]));
    }
    return s.value() * 0.5 * w;
}

}  // namespace

int Framing::winding() const {
    return static_cast<int>(std::llround(winding_raw()));
}

Framing make_framing(Filament base, FrenetData frame, std::vector<double> theta,
                     double epsilon, const std::vector<Filament>* others) {
    const std::size_t n = base.size();
    if (theta.size() != n + 1)
        throw ValidationError("framing needs n+1 theta samples (closure value last)");
    for (std::size_t k = 0; k < n; ++k)
        if (!(std::abs(theta[k + 1] - theta[k]) < pi))
            throw ValidationError("framing theta jumps by >= pi at node " +
                                  std::to_string(k) + "; theta must be unwrapped");
    const double w = (theta.back() - theta.front()) / (2.0 * pi);
    if (std::abs(w - std::round(w)) > 1e-6)
        throw ValidationError("framing closure winding " + std::to_string(w) +
                              " is not an integer within 1e-6");
    if (!(epsilon > 0.0)) throw ValidationError("framing epsilon must be positive");
    const double rc = frame.min_curvature_radius();
    if (!(epsilon < 0.5 * rc))
        throw ValidationError("framing epsilon " + std::to_string(epsilon) +
                              " >= half the min radius of curvature " +
                              std::to_string(rc));
    if (others) {
        for (const Filament& o : *others) {
            const double d = min_distance(base, o);
            if (d > 0.0 && !(epsilon < 0.5 * d))
                throw ValidationError(
                    "framing epsilon " + std::to_string(epsilon) +
                    " >= half the min distance " + std::to_string(d) +
                    " to filament id " + std::to_string(o.id));
        }
    }
    Framing fr;
    fr.base = std::move(base);
    fr.frame = std::move(frame);
    fr.theta = std::move(theta);
    fr.epsilon = epsilon;
    return fr;
}

Framing frenet_framing(const Filament& base, double epsilon, double angle) {
    FrenetData fd = frenet(base);
    std::vector<double> theta(base.size() + 1, angle);
    return make_framing(base, std::move(fd), std::move(theta), epsilon);
}

Framing winding_framing(const Filament& base, double epsilon, int k) {
    FrenetData fd = frenet(base);
    const std::size_t n = base.size();
    std::vector<double> theta(n + 1);
    for (std::size_t i = 0; i <= n; ++i)
        theta[i] = 2.0 * pi * k * static_cast<double>(i) / static_cast<double>(n);
    return make_framing(base, std::move(fd), std::move(theta), epsilon);
}

LinkResult linking_number(const Filament& fi, const Filament& fj) {
    validate_filament(fi);
    validate_filament(fj);
    const double hmax = std::max(fi.max_segment_length(), fj.max_segment_length());
    const double band = 3.0 * hmax;
    // Cheap node-hash screen first; the exact O(n^2) distance only runs when
    // nodes come near the band.
    const double screen =
        band + 0.5 * (fi.max_segment_length() + fj.max_segment_length());
    if (any_nodes_within(fi, fj, screen)) {
        const double d = min_distance(fi, fj);
        if (!(d > band))
            throw ValidationError(
                "curves too close for the linking quadrature: min distance " +
                std::to_string(d) + " <= 3 x max segment length " +
                std::to_string(band));
    }
    const SegmentCloud a(fi), b(fj);
    LinkResult res;
    res.raw = gauss_double_sum(a, b);
    res.rounded = static_cast<int>(std::llround(res.raw));
    return res;
}

namespace {

// Exact Gauss integral over one segment pair (Klenin & Langowski method 1a):
// the signed solid-angle of the tetrahedron spanned by the two segments.
double pair_gauss_integral(const Vec3& p1, const Vec3& p2, const Vec3& p3,
                           const Vec3& p4) {
    const Vec3 r12 = p2 - p1, r34 = p4 - p3, r13 = p3 - p1, r14 = p4 - p1,
               r23 = p3 - p2, r24 = p4 - p2;
    auto unit = [](const Vec3& v) {
        const double n = v.norm();
        return n > 1e-300 ? Vec3(v / n) : Vec3(Vec3::Zero());
    };
    const Vec3 n1 = unit(r13.cross(r14)), n2 = unit(r14.cross(r24)),
               n3 = unit(r24.cross(r23)), n4 = unit(r23.cross(r13));
    auto asins = [](double x) { return std::asin(std::clamp(x, -1.0, 1.0)); };
    const double omega = asins(n1.dot(n2)) + asins(n2.dot(n3)) +
                         asins(n3.dot(n4)) + asins(n4.dot(n1));
    const double s = r34.cross(r12).dot(r13);
    if (s > 0.0) return omega;
    if (s < 0.0) return -omega;
    return 0.0;
}

}  // namespace

double writhe(const Filament& f) {
    validate_filament(f);
    const std::size_t n = f.size();
    // Identical and edge-adjacent pairs are excluded; for the remaining pairs
    // the segment-pair Gauss integral is evaluated in closed form, so the
    // refinement error is the inscribed-polygon error alone.
    std::vector<double> partial(n, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t is = 0; is < static_cast<std::ptrdiff_t>(n); ++is) {
        const std::size_t i = static_cast<std::size_t>(is);
        KahanSum row;
        const Vec3& p1 = f.points[i];
        const Vec3& p2 = f.points[(i + 1) % n];
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;
            row.add(pair_gauss_integral(p1, p2, f.points[j], f.points[(j + 1) % n]));
        }
        partial[i] = row.value();
    }
    KahanSum total;
    for (double p : partial) total.add(p);
    return total.value() / (2.0 * pi);
}

TwistDetail twist_detail(const Framing& fr) {
    const std::size_t n = fr.size();
    const double h = fr.frame.arc_step();
    TwistDetail out;
    out.total_torsion = fr.frame.total_torsion();
    out.winding = fr.winding_raw();
    out.twist = out.total_torsion + out.winding;

    // Ribbon form (1/2pi) closed integral of (N x N').t as a cross-check.
    std::vector<Vec3> N(n);
    for (std::size_t k = 0; k < n; ++k) N[k] = fr.spanwise(k);
    const std::vector<Vec3> Np =
        detail::periodic_derivative(N, h * static_cast<double>(n));
    KahanSum s;
    for (std::size_t k = 0; k < n; ++k) s.add(N[k].cross(Np[k]).dot(fr.frame.t[k]));
    out.twist_ribbon = s.value() * h / (2.0 * pi);
    return out;
}

double twist(const Framing& fr) { return twist_detail(fr).twist; }

Filament push_off(const Framing& fr) {
    const std::size_t n = fr.size();
    Filament star;
    star.gamma = fr.base.gamma;
    star.id = fr.base.id;
    star.points.resize(n);
    for (std::size_t k = 0; k < n; ++k)
        star.points[k] = fr.base.points[k] + fr.epsilon * fr.spanwise(k);
    const double d_base = min_distance(fr.base, star);
    if (!(d_base > 0.3 * fr.epsilon))
        throw ValidationError("push-off curve crosses the base curve (distance " +
                              std::to_string(d_base) + " at epsilon " +
                              std::to_string(fr.epsilon) + ")");
    const double d_self = min_self_distance(star);
    const double d_floor = 0.3 * std::min(fr.epsilon, min_self_distance(fr.base));
    if (!(d_self > d_floor))
        throw ValidationError("push-off curve self-intersects (min self distance " +
                              std::to_string(d_self) + ")");
    return star;
}

LinkResult self_linking_raw(const Framing& fr, double round_tol) {
    const Filament star = push_off(fr);
    // Refine both curves so the segment scale sits well under epsilon.
    const double L = arc_length(fr.base);
    const int n_fine = static_cast<int>(std::clamp(
        std::ceil(L / (fr.epsilon / 20.0)), static_cast<double>(fr.base.size()),
        40000.0));
    const Filament base_f = resample_arclength(fr.base, n_fine);
    const Filament star_f = resample_arclength(star, n_fine);
    LinkResult lk = linking_number(base_f, star_f);
    lk.rounded = checked_round(lk.raw, round_tol, "self-linking Gauss integral");
    return lk;
}

int self_linking(const Framing& fr, double round_tol) {
    return self_linking_raw(fr, round_tol).rounded;
}

HelicityReport assemble_helicity(const std::vector<Filament>& filaments,
                                 const std::vector<Framing>& framings,
                                 double round_tol) {
    const std::size_t n = filaments.size();
    if (framings.size() != n)
        throw ValidationError("assemble_helicity needs one framing per filament");
    HelicityReport rep;
    rep.round_tol = round_tol;
    rep.lk_raw = Eigen::MatrixXd::Zero(n, n);
    rep.lk = Eigen::MatrixXi::Zero(n, n);
    rep.wr.resize(n);
    rep.tw.resize(n);
    rep.sl.resize(n);
    rep.gammas.resize(n);
    KahanSum total;
    for (std::size_t i = 0; i < n; ++i) {
        rep.gammas[i] = filaments[i].gamma;
        rep.wr[i] = writhe(filaments[i]);
        rep.tw[i] = twist(framings[i]);
        const double sl_raw = rep.wr[i] + rep.tw[i];
        rep.sl[i] = checked_round(sl_raw, round_tol, "wr + tw (Calugareanu sum)");
        total.add(filaments[i].gamma * filaments[i].gamma * sl_raw);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const LinkResult lk = linking_number(filaments[i], filaments[j]);
            checked_round(lk.raw, round_tol, "linking Gauss integral");
            rep.lk_raw(i, j) = rep.lk_raw(j, i) = lk.raw;
            rep.lk(i, j) = rep.lk(j, i) = lk.rounded;
            total.add(2.0 * filaments[i].gamma * filaments[j].gamma * lk.raw);
        }
    }
    rep.total = total.value();
    return rep;
}

double calugareanu_local_integral(const CalugareanuProbe& p) {
    if (!(p.epsilon > 0.0) || !(p.arc_halfwidth > p.epsilon))
        throw ValidationError("probe requires 0 < epsilon < arc_halfwidth");
    const double tw = p.tau0 + p.theta_prime;
    const double eps = p.epsilon, k = p.kappa0;
    const double sth = std::sin(p.theta0), cth = std::cos(p.theta0);
    auto integrand_h = [&](double h) {
        const double g = eps * eps * tw + eps * h * k * sth -
                         eps * eps * h * k * k * sth * cth;
        const double den = h * h + eps * eps - eps * h * h * k * cth;
        return g / (den * std::sqrt(den));
    };
    // h = eps sinh(u) concentrates nodes where the kernel peaks.
    const double umax = std::asinh(p.arc_halfwidth / eps);
    auto integrand_u = [&](double u) {
        const double h = eps * std::sinh(u);
        return integrand_h(h) * eps * std::cosh(u);
    };
    const int panels = std::max(48, static_cast<int>(8.0 * umax));
    return gl7_panels(integrand_u, -umax, umax, panels);
}

std::pair<double, double> calugareanu_order_of_limits(const CalugareanuProbe& p) {
    const double k = p.kappa0;
    const double sth = std::sin(p.theta0), cth = std::cos(p.theta0);
    const double tw = p.tau0 + p.theta_prime;
    // eps-normalized local integrand of the Calugareanu kernel.
    auto value = [&](double eps, double h) {
        const double g = eps * eps * tw + eps * h * k * sth -
                         eps * eps * h * k * k * sth * cth;
        const double den = h * h + eps * eps - eps * h * h * k * cth;
        return eps * g / (den * std::sqrt(den));
    };
    const double H = p.arc_halfwidth;
    const double eps_first = value(1e-8 * H, 1e-3 * H);   // eps -> 0 at fixed h
    const double h_first = value(p.epsilon, 1e-8 * p.epsilon);  // h -> 0 at fixed eps
    return {eps_first, h_first};
}

double kernel_integral(double T) {
    if (!(T > 0.0)) throw ValidationError("kernel integral needs T > 0");
    const double umax = std::asinh(T);
    auto f = [](double u) {
        const double c = std::cosh(u);
        return 1.0 / (c * c);
    };
    const int panels = std::max(48, static_cast<int>(8.0 * umax));
    return gl7_panels(f, -umax, umax, panels);
}

double kernel_tail_integral(double T) {
    if (!(T > 0.0)) throw ValidationError("kernel tail integral needs T > 0");
    const double umax = std::asinh(T);
    auto f = [](double u) {
        const double s = std::sinh(u), c = std::cosh(u);
        return s * s * s * s / (c * c);
    };
    const int panels = std::max(96, static_cast<int>(16.0 * umax));
    return gl7_panels(f, -umax, umax, panels) / (T * T);
}

}  // namespace vortopo
