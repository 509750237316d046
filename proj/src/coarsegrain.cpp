#include "vortopo/coarsegrain.hpp"

#include "vortopo/geometry.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>

namespace vortopo {

namespace {

std::vector<double> wavenumbers(int n, double box) {
    std::vector<double> k(n);
    for (int i = 0; i < n; ++i) {
        const int f = (i <= n / 2) ? i : i - n;
        k[i] = 2.0 * pi * f / box;
    }
    return k;
}

}  // namespace

VorticityGrid coarse_vorticity(const std::vector<Filament>& filaments,
                               const GridSpec& spec, double kernel_width) {
    if (!(kernel_width >= 2.0 * spec.spacing))
        throw ValidationError("kernel_width must be >= 2 x grid spacing");
    VorticityGrid out;
    out.spec = spec;
    out.kernel_width = kernel_width;
    const std::size_t nc = spec.cell_count();
    out.data.assign(3 * nc, 0.0);
    if (filaments.empty()) return out;

    const Vec3 lo = spec.origin;
    const Vec3 hi = spec.origin + spec.spacing * Vec3(spec.shape[0] - 1,
                                                      spec.shape[1] - 1,
                                                      spec.shape[2] - 1);
    const double cut = 4.0 * kernel_width;
    for (const auto& f : filaments) {
        const auto [blo, bhi] = f.bounding_box();
        for (int a = 0; a < 3; ++a)
            if (blo[a] < lo[a] || bhi[a] > hi[a])
                throw ValidationError("filament id " + std::to_string(f.id) +
                                      " lies outside the grid bounding box");
    }

    const double inv2w2 = 1.0 / (2.0 * kernel_width * kernel_width);
    // Deposit each segment Gamma * ds with a truncated Gaussian that is
    // renormalized on the grid so every deposit integrates to exactly
    // Gamma * ds.
    for (const auto& f : filaments) {
        // Segments at roughly half the grid spacing keep the line integral of
        // the deposited field faithful to the curve.
        const double L = arc_length(f);
        const int n_fine = static_cast<int>(
            std::clamp(std::ceil(L / (0.5 * spec.spacing)),
                       static_cast<double>(f.size()), 20000.0));
        const Filament g = resample_arclength(f, n_fine);
        for (std::size_t s = 0; s < g.size(); ++s) {
            const Vec3 mid = g.midpoint(s);
            const Vec3 amount = g.gamma * g.segment(s);
            int i0[3], i1[3];
            for (int a = 0; a < 3; ++a) {
                i0[a] = std::max(0, static_cast<int>(std::ceil(
                                        (mid[a] - cut - spec.origin[a]) / spec.spacing)));
                i1[a] = std::min(spec.shape[a] - 1,
                                 static_cast<int>(std::floor(
                                     (mid[a] + cut - spec.origin[a]) / spec.spacing)));
            }
            double wsum = 0.0;
            for (int iz = i0[2]; iz <= i1[2]; ++iz)
                for (int iy = i0[1]; iy <= i1[1]; ++iy)
                    for (int ix = i0[0]; ix <= i1[0]; ++ix) {
                        const double r2 = (spec.point(ix, iy, iz) - mid).squaredNorm();
                        if (r2 > cut * cut) continue;
                        wsum += std::exp(-r2 * inv2w2);
                    }
            if (!(wsum > 0.0)) continue;
            const double dV = spec.spacing * spec.spacing * spec.spacing;
            const double norm = 1.0 / (wsum * dV);
            for (int iz = i0[2]; iz <= i1[2]; ++iz)
                for (int iy = i0[1]; iy <= i1[1]; ++iy)
                    for (int ix = i0[0]; ix <= i1[0]; ++ix) {
                        const double r2 = (spec.point(ix, iy, iz) - mid).squaredNorm();
                        if (r2 > cut * cut) continue;
                        const double w = std::exp(-r2 * inv2w2) * norm;
                        const std::size_t i = spec.index(ix, iy, iz);
                        out.data[i] += w * amount.x();
                        out.data[nc + i] += w * amount.y();
                        out.data[2 * nc + i] += w * amount.z();
                    }
        }
    }
    return out;
}

VectorGrid velocity_from_vorticity(const VorticityGrid& omega) {
    const GridSpec& spec = omega.spec;
    const int nx = spec.shape[0], ny = spec.shape[1], nz = spec.shape[2];
    const std::size_t nc = spec.cell_count();

    VectorGrid out;
    out.spec = spec;
    out.data.assign(3 * nc, 0.0);

    // v = F^-1 [ i k x omega_hat / |k|^2 ]  (solenoidal inverse curl on the
    // periodic grid).
    std::array<std::vector<std::complex<double>>, 3> what;
    static std::mutex plan_mutex;
    fftw_plan fwd, bwd;
    std::vector<std::complex<double>> buf(nc);
    {
        std::lock_guard<std::mutex> lock(plan_mutex);
        auto* b = reinterpret_cast<fftw_complex*>(buf.data());
        fwd = fftw_plan_dft_3d(nz, ny, nx, b, b, FFTW_FORWARD,
                               FFTW_ESTIMATE | FFTW_UNALIGNED);
        bwd = fftw_plan_dft_3d(nz, ny, nx, b, b, FFTW_BACKWARD,
                               FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < nc; ++i) buf[i] = omega.data[c * nc + i];
        fftw_execute_dft(fwd, reinterpret_cast<fftw_complex*>(buf.data()),
                         reinterpret_cast<fftw_complex*>(buf.data()));
        what[c] = buf;
    }
    const std::vector<double> kx = wavenumbers(nx, nx * spec.spacing);
    const std::vector<double> ky = wavenumbers(ny, ny * spec.spacing);
    const std::vector<double> kz = wavenumbers(nz, nz * spec.spacing);
    std::array<std::vector<std::complex<double>>, 3> vhat;
    for (int c = 0; c < 3; ++c) vhat[c].assign(nc, {0.0, 0.0});
    std::size_t idx = 0;
    for (int iz = 0; iz < nz; ++iz)
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix, ++idx) {
                const double k2 =
                    kx[ix] * kx[ix] + ky[iy] * ky[iy] + kz[iz] * kz[iz];
                if (k2 == 0.0) continue;
                const std::complex<double> I(0.0, 1.0);
                const std::complex<double> wx = what[0][idx], wy = what[1][idx],
                                           wz = what[2][idx];
                vhat[0][idx] = I * (ky[iy] * wz - kz[iz] * wy) / k2;
                vhat[1][idx] = I * (kz[iz] * wx - kx[ix] * wz) / k2;
                vhat[2][idx] = I * (kx[ix] * wy - ky[iy] * wx) / k2;
            }
    for (int c = 0; c < 3; ++c) {
        buf = vhat[c];
        fftw_execute_dft(bwd, reinterpret_cast<fftw_complex*>(buf.data()),
                         reinterpret_cast<fftw_complex*>(buf.data()));
        const double inv = 1.0 / static_cast<double>(nc);
        for (std::size_t i = 0; i < nc; ++i) out.data[c * nc + i] = buf[i].real() * inv;
    }
    {
        std::lock_guard<std::mutex> lock(plan_mutex);
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
    }
    return out;
}

double solenoidal_residual(const VorticityGrid& omega) {
    const GridSpec& spec = omega.spec;
    const int nx = spec.shape[0], ny = spec.shape[1], nz = spec.shape[2];
    const std::size_t nc = spec.cell_count();
    static std::mutex plan_mutex;
    std::vector<std::complex<double>> buf(nc);
    fftw_plan fwd;
    {
        std::lock_guard<std::mutex> lock(plan_mutex);
        auto* b = reinterpret_cast<fftw_complex*>(buf.data());
        fwd = fftw_plan_dft_3d(nz, ny, nx, b, b, FFTW_FORWARD,
                               FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    std::array<std::vector<std::complex<double>>, 3> what;
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < nc; ++i) buf[i] = omega.data[c * nc + i];
        fftw_execute_dft(fwd, reinterpret_cast<fftw_complex*>(buf.data()),
                         reinterpret_cast<fftw_complex*>(buf.data()));
        what[c] = buf;
    }
    {
        std::lock_guard<std::mutex> lock(plan_mutex);
        fftw_destroy_plan(fwd);
    }
    const std::vector<double> kx = wavenumbers(nx, nx * spec.spacing);
    const std::vector<double> ky = wavenumbers(ny, ny * spec.spacing);
    const std::vector<double> kz = wavenumbers(nz, nz * spec.spacing);
    double div2 = 0.0, grad2 = 0.0;
    std::size_t idx = 0;
    for (int iz = 0; iz < nz; ++iz)
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix, ++idx) {
                const double kk[3] = {kx[ix], ky[iy], kz[iz]};
                std::complex<double> div(0.0, 0.0);
                for (int c = 0; c < 3; ++c) {
                    div += kk[c] * what[c][idx];
                    const double w2 = std::norm(what[c][idx]);
                    grad2 += (kk[0] * kk[0] + kk[1] * kk[1] + kk[2] * kk[2]) * w2;
                }
                div2 += std::norm(div);
            }
    return grad2 > 0.0 ? std::sqrt(div2 / grad2) : 0.0;
}

double quasiclassical_helicity(const VorticityGrid& omega, const VectorGrid& v) {
    if (!(omega.spec == v.spec))
        throw ValidationError("vorticity and velocity grids do not match");
    const std::size_t nc = omega.spec.cell_count();
    const bool any_masked =
        !v.mask.empty() &&
        std::any_of(v.mask.begin(), v.mask.end(), [](auto m) { return m != 0; });
    VectorGrid fill;
    if (any_masked) fill = velocity_from_vorticity(omega);
    const double dV =
        omega.spec.spacing * omega.spec.spacing * omega.spec.spacing;
    KahanSum s;
    for (std::size_t i = 0; i < nc; ++i) {
        const bool masked = !v.mask.empty() && v.mask[i] != 0;
        const double vx = masked ? fill.data[i] : v.data[i];
        const double vy = masked ? fill.data[nc + i] : v.data[nc + i];
        const double vz = masked ? fill.data[2 * nc + i] : v.data[2 * nc + i];
        s.add(vx * omega.data[i] + vy * omega.data[nc + i] +
              vz * omega.data[2 * nc + i]);
    }
    return s.value() * dV;
}

}  // namespace vortopo
