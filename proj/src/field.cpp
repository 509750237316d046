#include "vortopo/field.hpp"

#include <algorithm>
#include <cmath>

namespace vortopo {

namespace {

constexpr double kGlx4[4] = {-0.8611363115940526, -0.3399810435848563,
                             0.3399810435848563, 0.8611363115940526};
constexpr double kGlw4[4] = {0.3478548451374538, 0.6521451548625461,
                             0.6521451548625461, 0.3478548451374538};

struct FieldKernel {
    std::vector<Vec3> mid, seg;
    std::vector<double> gamma_over_4pi;
    std::vector<std::size_t> fil_of_seg;
    double max_segment = 0.0;

    explicit FieldKernel(const std::vector<Filament>& filaments) {
        std::size_t total = 0;
        for (const auto& f : filaments) total += f.size();
        mid.reserve(total);
        seg.reserve(total);
        gamma_over_4pi.reserve(total);
        fil_of_seg.reserve(total);
        for (std::size_t fi = 0; fi < filaments.size(); ++fi) {
            const Filament& f = filaments[fi];
            const double g = f.gamma / (4.0 * pi);
            for (std::size_t k = 0; k < f.size(); ++k) {
                mid.push_back(f.midpoint(k));
                seg.push_back(f.segment(k));
                gamma_over_4pi.push_back(g);
                fil_of_seg.push_back(fi);
                max_segment = std::max(max_segment, seg.back().norm());
            }
        }
    }

    Vec3 velocity(const Vec3& r) const {
        Vec3 vx = Vec3::Zero(), vc = Vec3::Zero();  // Kahan-compensated
        for (std::size_t k = 0; k < mid.size(); ++k) {
            const Vec3 d = mid[k] - r;
            const double d2 = d.squaredNorm();
            const Vec3 term = (gamma_over_4pi[k] / (d2 * std::sqrt(d2))) *
                              d.cross(seg[k]);
            const Vec3 y = term - vc;
            const Vec3 t = vx + y;
            vc = (t - vx) - y;
            vx = t;
        }
        return vx;
    }
};

// Adaptive straight-segment line integral of v along a -> b: composite GL4,
// panel count doubling until the increment settles below tol.
double line_integral(const FieldKernel& kern, const Vec3& a, const Vec3& b,
                     double tol) {
    const Vec3 d = b - a;
    double prev = 0.0;
    for (int panels = 2; panels <= 256; panels *= 2) {
        KahanSum s;
        for (int p = 0; p < panels; ++p) {
            const double lo = static_cast<double>(p) / panels;
            const double w = 1.0 / panels;
            for (int g = 0; g < 4; ++g) {
                const double t = lo + 0.5 * w * (1.0 + kGlx4[g]);
                s.add(kGlw4[g] * kern.velocity(a + t * d).dot(d) * 0.5 * w);
            }
        }
        const double cur = s.value();
        if (panels > 2 && std::abs(cur - prev) < tol) return cur;
        prev = cur;
    }
    return prev;
}

double max_abs_gamma(const std::vector<Filament>& filaments) {
    double g = 1.0;
    for (const auto& f : filaments) g = std::max(g, std::abs(f.gamma));
    return g;
}

}  // namespace

Vec3 biot_savart_unchecked(const std::vector<Filament>& filaments, const Vec3& r) {
    return FieldKernel(filaments).velocity(r);
}

VelocitySample biot_savart_velocity(const std::vector<Filament>& filaments,
                                    const Vec3& r) {
    for (const auto& f : filaments) {
        const double excl = 2.0 * f.max_segment_length();
        const double d = min_distance(f, r);
        if (d <= excl)
            throw ValidationError(
                "evaluation point is " + std::to_string(d) +
                " from filament id " + std::to_string(f.id) +
                " (needs > 2 segment lengths = " + std::to_string(excl) + ")");
    }
    VelocitySample s;
    s.position = r;
    s.v = biot_savart_unchecked(filaments, r);
    return s;
}

double circulation(const std::vector<Filament>& filaments,
                   const std::vector<Vec3>& loop) {
    if (loop.size() < 3) throw ValidationError("circulation loop needs >= 3 nodes");
    for (const auto& f : filaments) {
        const double excl = 2.0 * f.max_segment_length();
        for (const Vec3& p : loop)
            if (min_distance(f, p) <= excl)
                throw ValidationError("circulation loop node too close to filament id " +
                                      std::to_string(f.id));
    }
    const FieldKernel kern(filaments);
    const double tol = 1e-7 * max_abs_gamma(filaments);
    KahanSum s;
    for (std::size_t k = 0; k < loop.size(); ++k)
        s.add(line_integral(kern, loop[k], loop[(k + 1) % loop.size()], tol));
    return s.value();
}

PhasePath phase_along_path(const std::vector<Filament>& filaments,
                           const std::vector<Vec3>& path, double phi0) {
    if (path.size() < 2) throw ValidationError("phase path needs >= 2 waypoints");
    for (const auto& f : filaments) {
        const double excl = 2.0 * f.max_segment_length();
        const std::size_t nf = f.size();
        for (std::size_t leg = 0; leg + 1 < path.size(); ++leg) {
            for (std::size_t s = 0; s < nf; ++s) {
                if (segment_segment_distance(path[leg], path[leg + 1], f.points[s],
                                             f.points[(s + 1) % nf]) <= excl)
                    throw ValidationError(
                        "path crosses within the exclusion distance of filament id " +
                        std::to_string(f.id));
            }
        }
    }
    const FieldKernel kern(filaments);
    const double tol = 1e-6 * max_abs_gamma(filaments);
    PhasePath out;
    out.waypoints = path;
    out.reference_value = phi0;
    out.phi.resize(path.size());
    out.phi[0] = phi0;
    for (std::size_t k = 1; k < path.size(); ++k)
        out.phi[k] = out.phi[k - 1] + line_integral(kern, path[k - 1], path[k], tol);
    return out;
}

double default_pushoff_epsilon(const std::vector<Filament>& filaments,
                               std::size_t target_index) {
    if (target_index >= filaments.size())
        throw ValidationError("target index out of range");
    const Filament& target = filaments[target_index];
    const FrenetData fr = frenet(target);
    double bound = fr.min_curvature_radius();
    for (std::size_t j = 0; j < filaments.size(); ++j) {
        if (j == target_index) continue;
        bound = std::min(bound, 0.5 * min_distance(target, filaments[j]));
    }
    return 0.1 * bound;
}

VectorGrid velocity_field_on_grid(const std::vector<Filament>& filaments,
                                  const GridSpec& spec) {
    if (spec.shape[0] < 2 || spec.shape[1] < 2 || spec.shape[2] < 2)
        throw ValidationError("grid needs at least 2 cells per axis");
    VectorGrid grid;
    grid.spec = spec;
    const std::size_t nc = spec.cell_count();
    grid.data.assign(3 * nc, 0.0);
    grid.mask.assign(nc, 0);
    if (filaments.empty()) return grid;

    // Mask near-core cells by rasterizing each segment's neighborhood.
    for (const auto& f : filaments) {
        const double excl = 2.0 * f.max_segment_length();
        const int pad = static_cast<int>(std::ceil(excl / spec.spacing)) + 1;
        for (std::size_t s = 0; s < f.size(); ++s) {
            const Vec3 a = f.points[s];
            const Vec3 b = f.points[(s + 1) % f.size()];
            const Vec3 lo = a.cwiseMin(b), hi = a.cwiseMax(b);
            int i0[3], i1[3];
            for (int c = 0; c < 3; ++c) {
                i0[c] = std::max(0, static_cast<int>(std::floor(
                                        (lo[c] - spec.origin[c]) / spec.spacing)) -
                                        pad);
                i1[c] = std::min(spec.shape[c] - 1,
                                 static_cast<int>(std::ceil(
                                     (hi[c] - spec.origin[c]) / spec.spacing)) +
                                     pad);
            }
            for (int iz = i0[2]; iz <= i1[2]; ++iz)
                for (int iy = i0[1]; iy <= i1[1]; ++iy)
                    for (int ix = i0[0]; ix <= i1[0]; ++ix) {
                        const Vec3 p = spec.point(ix, iy, iz);
                        if (segment_point_distance(a, b, p) <= excl)
                            grid.mask[spec.index(ix, iy, iz)] = 1;
                    }
        }
    }

    const FieldKernel kern(filaments);
    const int nx = spec.shape[0], ny = spec.shape[1], nz = spec.shape[2];
#pragma omp parallel for schedule(static)
    for (int iz = 0; iz < nz; ++iz)
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                const std::size_t i = spec.index(ix, iy, iz);
                if (grid.mask[i]) continue;
                const Vec3 v = kern.velocity(spec.point(ix, iy, iz));
                grid.data[i] = v.x();
                grid.data[nc + i] = v.y();
                grid.data[2 * nc + i] = v.z();
            }
    return grid;
}

Framing seifert_framing(const std::vector<Filament>& filaments,
                        std::size_t target_index, double epsilon,
                        double phi_ref) {
    if (target_index >= filaments.size())
        throw ValidationError("target index out of range");
    const Filament& target = filaments[target_index];
    validate_filament(target);
    const FrenetData fr = frenet(target);
    const double gamma = target.gamma;
    if (gamma == 0.0)
        throw ValidationError("seifert framing needs a nonzero target circulation");

    // Refine every filament so segment scale sits well under epsilon. The
    // midpoint Biot-Savart field at distance eps carries (h/eps)^2 ripple,
    // and the closure winding needs the circle quantum to ~1e-7 relative.
    std::vector<Filament> refined;
    refined.reserve(filaments.size());
    for (const auto& f : filaments) {
        const double L = arc_length(f);
        const int n_fine = static_cast<int>(
            std::clamp(std::ceil(L / (epsilon / 10.0)),
                       static_cast<double>(f.size()), 16384.0));
        refined.push_back(resample_arclength(f, n_fine));
    }
    const FieldKernel kern(refined);
    // The winding closure must come out integer to 1e-6, and base-chain
    // errors accumulate over n legs.
    const double leg_tol = 1e-11 * std::abs(gamma);

    const std::size_t n = target.size();
    constexpr int M = 64;  // angular scan resolution per node

    // Phase around the epsilon-circle at node k, accumulated from angle 0.
    // Returns M+1 cumulative values; cum[M]-cum[0] is one quantum of the
    // target circulation plus quadrature noise.
    auto circle_phases = [&](std::size_t k) {
        std::vector<double> cum(M + 1, 0.0);
        const Vec3 center = target.points[k];
        const Vec3 en = fr.n[k], eb = fr.b[k];
        for (int j = 0; j < M; ++j) {
            const double t0 = 2.0 * pi * j / M;
            const double dt = 2.0 * pi / M;
            double inc = 0.0;
            for (int g = 0; g < 4; ++g) {
                const double th = t0 + 0.5 * dt * (1.0 + kGlx4[g]);
                const Vec3 pos =
                    center + epsilon * (std::cos(th) * en + std::sin(th) * eb);
                const Vec3 dpos = epsilon * (-std::sin(th) * en + std::cos(th) * eb);
                inc += kGlw4[g] * kern.velocity(pos).dot(dpos) * 0.5 * dt;
            }
            cum[j + 1] = cum[j] + inc;
        }
        return cum;
    };

    // Root of psi(theta) + q*theta/2pi + base = phi_ref (mod gamma) nearest to
    // guess, where psi is the periodic remainder interpolated from the scan.
    auto solve_theta = [&](const std::vector<double>& cum, double base,
                           double guess, double max_jump) {
        const double q = cum[M] - cum[0];
        if (!(std::abs(q) > 0.25 * std::abs(gamma)))
            throw ValidationError(
                "no continuous seifert branch: circle winding " +
                std::to_string(q) + " lost the target quantum (epsilon too "
                "large or curve under-resolved)");
        auto psi = [&](double th) {
            double w = th - 2.0 * pi * std::floor(th / (2.0 * pi));
            const double x = w / (2.0 * pi) * M;
            const int j = std::min(static_cast<int>(x), M - 1);
            const double fx = x - j;
            // Catmull-Rom through the cumulative scan minus the linear part.
            auto val = [&](int idx) {
                int ii = ((idx % M) + M) % M;
                const double wrapped = cum[ii] + q * static_cast<double>(idx - ii) / M;
                return wrapped - q * static_cast<double>(idx) / M;
            };
            const double p0 = val(j - 1), p1 = val(j), p2 = val(j + 1), p3 = val(j + 2);
            const double a0 = -0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3;
            const double a1 = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3;
            const double a2 = -0.5 * p0 + 0.5 * p2;
            return ((a0 * fx + a1) * fx + a2) * fx + p1;
        };
        auto phi_at = [&](double th) { return base + psi(th) + q * th / (2.0 * pi); };
        const double m = std::round((phi_at(guess) - phi_ref) / gamma);
        const double C = phi_ref + m * gamma;
        double th = guess;
        for (int it = 0; it < 40; ++it) {
            const double f = phi_at(th) - C;
            const double dpsi = (psi(th + 1e-4) - psi(th - 1e-4)) / 2e-4;
            const double fp = q / (2.0 * pi) + dpsi;
            const double step = f / fp;
            th -= step;
            if (std::abs(step) < 1e-12) break;
        }
        if (!(std::abs(th - guess) < max_jump))
            throw ValidationError("seifert branch tracking jumped by >= pi; "
                                  "increase node count or reduce epsilon");
        return th;
    };

    std::vector<double> theta(n + 1, 0.0);
    std::vector<double> cum0;  // node-0 scan reused for the closure solve
    double base = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) {
            const Vec3 a = target.points[k - 1] + epsilon * fr.n[k - 1];
            const Vec3 b = target.points[k] + epsilon * fr.n[k];
            base += line_integral(kern, a, b, leg_tol);
        }
        const std::vector<double> cum = circle_phases(k);
        if (k == 0) {
            cum0 = cum;
            // Any root works at the seed node; the 2pi*m offset of theta
            // cancels from every observable.
            const double q = cum[M] - cum[0];
            const double guess = 2.0 * pi * (phi_ref - base) / q;
            theta[0] = solve_theta(cum, base, guess, 2.0 * pi);
        } else {
            theta[k] = solve_theta(cum, base, theta[k - 1], pi);
        }
    }
    {
        // Close the chain back to node 0 with the cached node-0 scan.
        const Vec3 a = target.points[n - 1] + epsilon * fr.n[n - 1];
        const Vec3 b = target.points[0] + epsilon * fr.n[0];
        base += line_integral(kern, a, b, leg_tol);
        theta[n] = solve_theta(cum0, base, theta[n - 1], pi);
    }

    std::vector<Filament> others;
    for (std::size_t j = 0; j < filaments.size(); ++j)
        if (j != target_index) others.push_back(filaments[j]);
    return make_framing(target, fr, std::move(theta), epsilon,
                        others.empty() ? nullptr : &others);
}

}  // namespace vortopo
