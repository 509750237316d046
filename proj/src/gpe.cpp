#include "vortopo/gpe.hpp"

#include "vortopo/field.hpp"
#include "vortopo/geometry.hpp"
#include "vortopo/topology.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <unordered_map>

namespace vortopo {

namespace {

// Field coordinates are box-centered: x = (ix - nx/2) * spacing.
Vec3 cell_position(const ComplexField3D& f, int ix, int iy, int iz) {
    return Vec3((ix - f.shape[0] / 2) * f.spacing,
                (iy - f.shape[1] / 2) * f.spacing,
                (iz - f.shape[2] / 2) * f.spacing);
}

class Fft3 {
public:
    explicit Fft3(const std::array<int, 3>& shape) : shape_(shape) {
        const std::size_t n = static_cast<std::size_t>(shape[0]) * shape[1] * shape[2];
        buf_.resize(n);
        auto* b = reinterpret_cast<fftw_complex*>(buf_.data());
        // FFTW expects the slowest dimension first; data is x-fastest.
        fwd_ = fftw_plan_dft_3d(shape[2], shape[1], shape[0], b, b, FFTW_FORWARD,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
        bwd_ = fftw_plan_dft_3d(shape[2], shape[1], shape[0], b, b, FFTW_BACKWARD,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    ~Fft3() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }
    Fft3(const Fft3&) = delete;
    Fft3& operator=(const Fft3&) = delete;

    void forward(std::complex<double>* d) const {
        auto* p = reinterpret_cast<fftw_complex*>(d);
        fftw_execute_dft(fwd_, p, p);
    }
    void backward_normalized(std::complex<double>* d) const {
        auto* p = reinterpret_cast<fftw_complex*>(d);
        fftw_execute_dft(bwd_, p, p);
        const std::size_t n = static_cast<std::size_t>(shape_[0]) * shape_[1] * shape_[2];
        const double inv = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) d[i] *= inv;
    }

private:
    std::array<int, 3> shape_;
    std::vector<std::complex<double>> buf_;
    fftw_plan fwd_ = nullptr, bwd_ = nullptr;
};

const Fft3& fft_for(const std::array<int, 3>& shape) {
    static std::mutex m;
    static std::map<std::array<int, 3>, std::unique_ptr<Fft3>> cache;
    std::lock_guard<std::mutex> lock(m);
    auto& slot = cache[shape];
    if (!slot) slot = std::make_unique<Fft3>(shape);
    return *slot;
}

std::vector<double> wavenumbers(int n, double box) {
    std::vector<double> k(n);
    for (int i = 0; i < n; ++i) {
        const int f = (i <= n / 2) ? i : i - n;
        k[i] = 2.0 * pi * f / box;
    }
    return k;
}

// psi_hat *= exp(-i k^2 c) applied as a separable product.
void apply_kinetic(ComplexField3D& f, double c) {
    const Fft3& fft = fft_for(f.shape);
    fft.forward(f.data.data());
    std::array<std::vector<std::complex<double>>, 3> phase;
    for (int a = 0; a < 3; ++a) {
        const std::vector<double> k = wavenumbers(f.shape[a], f.box_length(a));
        phase[a].resize(f.shape[a]);
        for (int i = 0; i < f.shape[a]; ++i)
            phase[a][i] = std::polar(1.0, -k[i] * k[i] * c);
    }
    const int nx = f.shape[0], ny = f.shape[1], nz = f.shape[2];
    std::size_t idx = 0;
    for (int iz = 0; iz < nz; ++iz) {
        const std::complex<double> pz = phase[2][iz];
        for (int iy = 0; iy < ny; ++iy) {
            const std::complex<double> pyz = phase[1][iy] * pz;
            for (int ix = 0; ix < nx; ++ix, ++idx) f.data[idx] *= phase[0][ix] * pyz;
        }
    }
    fft.backward_normalized(f.data.data());
}

// psi *= exp(-i |psi|^2 c); |psi| is invariant under this substep.
void apply_nonlinear(ComplexField3D& f, double c) {
    const std::size_t n = f.cell_count();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        const double rho = std::norm(f.data[i]);
        f.data[i] *= std::polar(1.0, -rho * c);
    }
}

// Imaginary-time variant pair used by smooth_field; the chemical potential
// mu = background density keeps |psi| = sqrt(rho_bg) stationary.
void apply_kinetic_imag(ComplexField3D& f, double tau) {
    const Fft3& fft = fft_for(f.shape);
    fft.forward(f.data.data());
    std::array<std::vector<double>, 3> damp;
    for (int a = 0; a < 3; ++a) {
        const std::vector<double> k = wavenumbers(f.shape[a], f.box_length(a));
        damp[a].resize(f.shape[a]);
        for (int i = 0; i < f.shape[a]; ++i) damp[a][i] = std::exp(-k[i] * k[i] * tau);
    }
    const int nx = f.shape[0], ny = f.shape[1], nz = f.shape[2];
    std::size_t idx = 0;
    for (int iz = 0; iz < nz; ++iz)
        for (int iy = 0; iy < ny; ++iy) {
            const double dyz = damp[1][iy] * damp[2][iz];
            for (int ix = 0; ix < nx; ++ix, ++idx) f.data[idx] *= damp[0][ix] * dyz;
        }
    fft.backward_normalized(f.data.data());
}

void apply_nonlinear_imag(ComplexField3D& f, double tau, double mu) {
    const std::size_t n = f.cell_count();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        const double rho = std::norm(f.data[i]);
        f.data[i] *= std::exp((mu - rho) * tau);
    }
}

void check_finite(const ComplexField3D& f) {
    for (const auto& z : f.data)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw ToleranceError("GPE field is no longer finite at t = " +
                                 std::to_string(f.time) +
                                 "; reduce dt or refine the grid");
}

}  // namespace

ComplexField3D make_uniform_field(const std::array<int, 3>& shape, double spacing,
                                  double background_density) {
    for (int a = 0; a < 3; ++a)
        if (shape[a] < 16 || shape[a] % 2 != 0)
            throw ValidationError("field dimensions must be even and >= 16");
    if (!(spacing > 0.0)) throw ValidationError("field spacing must be positive");
    ComplexField3D f;
    f.shape = shape;
    f.spacing = spacing;
    f.data.assign(f.cell_count(), std::sqrt(background_density));
    return f;
}

std::string validate_config(const GpeConfig& config, double spacing) {
    if (!(config.dt > 0.0)) throw ValidationError("dt must be positive");
    if (config.order != 2 && config.order != 4)
        throw ValidationError("splitting order must be 2 or 4");
    if (config.output_stride < 1)
        throw ValidationError("output_stride must be >= 1");
    const double margin = spacing * spacing / pi;
    if (config.dt >= margin)
        return "dt = " + std::to_string(config.dt) +
               " exceeds the spectral accuracy margin dx^2/pi = " +
               std::to_string(margin) + "; splitting error may dominate";
    return {};
}

void gpe_advance(ComplexField3D& field, const GpeConfig& config, int n_steps) {
    validate_config(config, field.spacing);
    if (n_steps <= 0) return;
    const double dt = config.dt;
    std::vector<double> stages;
    if (config.order == 2) {
        stages = {1.0};
    } else {
        const double w1 = 1.0 / (2.0 - std::cbrt(2.0));
        const double w0 = 1.0 - 2.0 * w1;
        stages = {w1, w0, w1};
    }
    // S2(c dt) = K(c dt/2) N(c dt) K(c dt/2); adjacent kinetic half-steps fuse.
    double pending = 0.0;
    for (int step = 0; step < n_steps; ++step) {
        for (double c : stages) {
            apply_kinetic(field, (pending + 0.5 * c) * dt);
            apply_nonlinear(field, c * dt);
            pending = 0.5 * c;
        }
    }
    apply_kinetic(field, pending * dt);
    field.time += dt * n_steps;
    check_finite(field);
}

ComplexField3D gpe_step(const ComplexField3D& field, const GpeConfig& config) {
    ComplexField3D out = field;
    gpe_advance(out, config, 1);
    return out;
}

void smooth_field(ComplexField3D& field, int steps, double tau) {
    const double mu = 1.0;  // background density in nondimensional units
    for (int s = 0; s < steps; ++s) {
        apply_kinetic_imag(field, 0.5 * tau);
        apply_nonlinear_imag(field, tau, mu);
        apply_kinetic_imag(field, 0.5 * tau);
    }
}

double field_norm(const ComplexField3D& f) {
    KahanSum s;
    for (const auto& z : f.data) s.add(std::norm(z));
    return s.value() * f.spacing * f.spacing * f.spacing;
}

double field_energy(const ComplexField3D& f) {
    std::vector<std::complex<double>> hat = f.data;
    fft_for(f.shape).forward(hat.data());
    std::array<std::vector<double>, 3> k;
    for (int a = 0; a < 3; ++a) k[a] = wavenumbers(f.shape[a], f.box_length(a));
    const std::size_t ntot = f.cell_count();
    KahanSum kin;
    std::size_t idx = 0;
    for (int iz = 0; iz < f.shape[2]; ++iz)
        for (int iy = 0; iy < f.shape[1]; ++iy) {
            const double kyz = k[1][iy] * k[1][iy] + k[2][iz] * k[2][iz];
            for (int ix = 0; ix < f.shape[0]; ++ix, ++idx)
                kin.add((k[0][ix] * k[0][ix] + kyz) * std::norm(hat[idx]));
        }
    KahanSum pot;
    for (const auto& z : f.data) {
        const double rho = std::norm(z);
        pot.add(0.5 * rho * rho);
    }
    const double dV = f.spacing * f.spacing * f.spacing;
    return dV * (kin.value() / static_cast<double>(ntot) + pot.value());
}

ComplexField3D imprint_vortices(const ComplexField3D& field,
                                const std::vector<Filament>& filaments,
                                double background_density) {
    ComplexField3D out = field;
    if (filaments.empty()) return out;
    const int nx = field.shape[0], ny = field.shape[1], nz = field.shape[2];
    const double dx = field.spacing;
    const Vec3 box(nx * dx, ny * dx, nz * dx);
    const Vec3 lo = cell_position(field, 0, 0, 0);

    for (const auto& f : filaments) {
        validate_filament(f);
        const auto [blo, bhi] = f.bounding_box();
        for (int a = 0; a < 3; ++a)
            if (blo[a] < lo[a] + 4.0 || bhi[a] > lo[a] + box[a] - 4.0)
                throw ValidationError(
                    "filament id " + std::to_string(f.id) +
                    " does not fit in the box with 4 healing lengths clearance");
    }
    for (std::size_t i = 0; i < filaments.size(); ++i)
        for (std::size_t j = i + 1; j < filaments.size(); ++j)
            if (min_distance(filaments[i], filaments[j]) < 2.0 * dx)
                throw ValidationError("filaments id " +
                                      std::to_string(filaments[i].id) + " and " +
                                      std::to_string(filaments[j].id) +
                                      " are closer than 2 cells");

    // Phase-velocity field u = grad(chi): Biot-Savart with one 2pi quantum per
    // unit gamma. Primary filaments are evaluated exactly at every node; the
    // 3^3-1 periodic image shells vary smoothly and are interpolated from a
    // stride-4 lattice.
    std::vector<Filament> primaries;
    for (const auto& f : filaments) {
        const double L = arc_length(f);
        const int n_fine = static_cast<int>(
            std::clamp(std::ceil(L / (0.5 * dx)), 64.0, 4096.0));
        Filament g = resample_arclength(f, n_fine);
        g.gamma = 2.0 * pi * f.gamma;
        primaries.push_back(std::move(g));
    }
    std::vector<Filament> images;
    for (int sx = -1; sx <= 1; ++sx)
        for (int sy = -1; sy <= 1; ++sy)
            for (int sz = -1; sz <= 1; ++sz) {
                if (sx == 0 && sy == 0 && sz == 0) continue;
                const Vec3 shift(sx * box[0], sy * box[1], sz * box[2]);
                for (const auto& f : filaments) {
                    Filament g = resample_arclength(f, 64);
                    for (auto& p : g.points) p += shift;
                    g.gamma = 2.0 * pi * f.gamma;
                    images.push_back(std::move(g));
                }
            }

    const std::size_t nc = field.cell_count();
    std::vector<Vec3> u(nc);
    {
        const int stride = 4;
        const int cx = nx / stride + 1, cy = ny / stride + 1, cz = nz / stride + 1;
        std::vector<Vec3> coarse(static_cast<std::size_t>(cx) * cy * cz);
#pragma omp parallel for schedule(static)
        for (int k = 0; k < cz; ++k)
            for (int j = 0; j < cy; ++j)
                for (int i = 0; i < cx; ++i) {
                    const Vec3 p = lo + dx * Vec3(i * stride, j * stride, k * stride);
                    coarse[(static_cast<std::size_t>(k) * cy + j) * cx + i] =
                        biot_savart_unchecked(images, p);
                }
        auto coarse_at = [&](int i, int j, int k) {
            return coarse[(static_cast<std::size_t>(k) * cy + j) * cx + i];
        };
#pragma omp parallel for schedule(static)
        for (int iz = 0; iz < nz; ++iz)
            for (int iy = 0; iy < ny; ++iy)
                for (int ix = 0; ix < nx; ++ix) {
                    const int i0 = ix / stride, j0 = iy / stride, k0 = iz / stride;
                    const double fx = static_cast<double>(ix % stride) / stride;
                    const double fy = static_cast<double>(iy % stride) / stride;
                    const double fz = static_cast<double>(iz % stride) / stride;
                    Vec3 v = Vec3::Zero();
                    for (int dz2 = 0; dz2 <= 1; ++dz2)
                        for (int dy2 = 0; dy2 <= 1; ++dy2)
                            for (int dx2 = 0; dx2 <= 1; ++dx2) {
                                const double w = (dx2 ? fx : 1 - fx) *
                                                 (dy2 ? fy : 1 - fy) *
                                                 (dz2 ? fz : 1 - fz);
                                v += w * coarse_at(i0 + dx2, j0 + dy2, k0 + dz2);
                            }
                    u[field.index(ix, iy, iz)] = v;
                }
    }
#pragma omp parallel for schedule(static)
    for (int iz = 0; iz < nz; ++iz)
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix)
                u[field.index(ix, iy, iz)] +=
                    biot_savart_unchecked(primaries, cell_position(field, ix, iy, iz));

    // chi by trapezoid link integrals along a spanning tree (x-line, then y
    // columns, then z columns).
    std::vector<double> chi(nc, 0.0);
    auto link = [&](std::size_t a, std::size_t b, const Vec3& d) {
        return 0.5 * (u[a] + u[b]).dot(d);
    };
    const Vec3 ex(dx, 0, 0), ey(0, dx, 0), ez(0, 0, dx);
    for (int ix = 1; ix < nx; ++ix)
        chi[field.index(ix, 0, 0)] =
            chi[field.index(ix - 1, 0, 0)] +
            link(field.index(ix - 1, 0, 0), field.index(ix, 0, 0), ex);
    for (int ix = 0; ix < nx; ++ix)
        for (int iy = 1; iy < ny; ++iy)
            chi[field.index(ix, iy, 0)] =
                chi[field.index(ix, iy - 1, 0)] +
                link(field.index(ix, iy - 1, 0), field.index(ix, iy, 0), ey);
#pragma omp parallel for schedule(static)
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix)
            for (int iz = 1; iz < nz; ++iz)
                chi[field.index(ix, iy, iz)] =
                    chi[field.index(ix, iy, iz - 1)] +
                    link(field.index(ix, iy, iz - 1), field.index(ix, iy, iz), ez);

    // Core amplitude profile d/sqrt(d^2+2) per filament. Exact segment
    // distances are evaluated only where a coarse distance lattice says the
    // filament is near; far cells use the interpolated distance.
    std::vector<double> amp(nc, std::sqrt(background_density));
    for (const auto& f : filaments) {
        const int stride = 4;
        const int cx = nx / stride + 1, cy = ny / stride + 1, cz = nz / stride + 1;
        std::vector<double> cd(static_cast<std::size_t>(cx) * cy * cz);
#pragma omp parallel for schedule(static)
        for (int k = 0; k < cz; ++k)
            for (int j = 0; j < cy; ++j)
                for (int i = 0; i < cx; ++i) {
                    const Vec3 p = lo + dx * Vec3(i * stride, j * stride, k * stride);
                    cd[(static_cast<std::size_t>(k) * cy + j) * cx + i] =
                        min_distance(f, p);
                }
        auto cd_at = [&](int i, int j, int k) {
            return cd[(static_cast<std::size_t>(k) * cy + j) * cx + i];
        };
        const double near_cut = 10.0;
#pragma omp parallel for schedule(static)
        for (int iz = 0; iz < nz; ++iz)
            for (int iy = 0; iy < ny; ++iy)
                for (int ix = 0; ix < nx; ++ix) {
                    const int i0 = ix / stride, j0 = iy / stride, k0 = iz / stride;
                    const double fx = static_cast<double>(ix % stride) / stride;
                    const double fy = static_cast<double>(iy % stride) / stride;
                    const double fz = static_cast<double>(iz % stride) / stride;
                    double d = 0.0;
                    for (int dz2 = 0; dz2 <= 1; ++dz2)
                        for (int dy2 = 0; dy2 <= 1; ++dy2)
                            for (int dx2 = 0; dx2 <= 1; ++dx2)
                                d += (dx2 ? fx : 1 - fx) * (dy2 ? fy : 1 - fy) *
                                     (dz2 ? fz : 1 - fz) *
                                     cd_at(i0 + dx2, j0 + dy2, k0 + dz2);
                    if (d < near_cut)
                        d = min_distance(f, cell_position(field, ix, iy, iz));
                    amp[field.index(ix, iy, iz)] *= d / std::sqrt(d * d + 2.0);
                }
    }

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(nc); ++i)
        out.data[i] = std::polar(amp[i], chi[i]);
    return out;
}

namespace {

struct FaceKey {
    int ix, iy, iz, axis;
    bool operator==(const FaceKey& o) const {
        return ix == o.ix && iy == o.iy && iz == o.iz && axis == o.axis;
    }
};
struct FaceKeyHash {
    std::size_t operator()(const FaceKey& k) const {
        std::uint64_t h = 1469598103934665603ull;
        for (int v : {k.ix, k.iy, k.iz, k.axis}) {
            h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v));
            h *= 1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }
};

struct FaceHit {
    int winding = 0;       // sign along +axis
    Vec3 point = Vec3::Zero();  // subcell position (box coordinates)
    bool consumed = false;
};

}  // namespace

std::vector<Filament> detect_vortex_lines(const ComplexField3D& field) {
    if (field.spacing > 1.0 / 1.5)
        throw ValidationError(
            "field under-resolved for line detection: healing length must "
            "cover >= 1.5 cells (spacing " + std::to_string(field.spacing) + ")");
    const int nx = field.shape[0], ny = field.shape[1], nz = field.shape[2];
    const double dx = field.spacing;
    const int n_ax[3] = {nx, ny, nz};

    std::vector<double> phase(field.cell_count());
    for (std::size_t i = 0; i < field.cell_count(); ++i)
        phase[i] = std::arg(field.data[i]);

    auto wrap_idx = [&](int v, int axis) {
        const int n = n_ax[axis];
        return ((v % n) + n) % n;
    };
    auto phase_at = [&](int ix, int iy, int iz) {
        return phase[field.index(wrap_idx(ix, 0), wrap_idx(iy, 1), wrap_idx(iz, 2))];
    };
    auto psi_at = [&](int ix, int iy, int iz) {
        return field.data[field.index(wrap_idx(ix, 0), wrap_idx(iy, 1),
                                      wrap_idx(iz, 2))];
    };

    // Subcell intersection of Re(psi)=0 and Im(psi)=0 on the face by Newton on
    // the bilinear interpolant.
    auto face_point = [&](int ix, int iy, int iz, int axis) {
        const int ua = (axis + 1) % 3, va = (axis + 2) % 3;
        int base[3] = {ix, iy, iz};
        auto corner = [&](int du, int dv) {
            int c[3] = {base[0], base[1], base[2]};
            c[ua] += du;
            c[va] += dv;
            return psi_at(c[0], c[1], c[2]);
        };
        const std::complex<double> z00 = corner(0, 0), z10 = corner(1, 0),
                                   z01 = corner(0, 1), z11 = corner(1, 1);
        double s = 0.5, t = 0.5;
        for (int it = 0; it < 12; ++it) {
            const std::complex<double> f = (1 - s) * (1 - t) * z00 + s * (1 - t) * z10 +
                                           (1 - s) * t * z01 + s * t * z11;
            const std::complex<double> fs = (1 - t) * (z10 - z00) + t * (z11 - z01);
            const std::complex<double> ft = (1 - s) * (z01 - z00) + s * (z11 - z10);
            const double det = fs.real() * ft.imag() - fs.imag() * ft.real();
            if (std::abs(det) < 1e-300) break;
            const double ds = (f.real() * ft.imag() - f.imag() * ft.real()) / det;
            const double dt2 = (fs.real() * f.imag() - fs.imag() * f.real()) / det;
            s -= ds;
            t -= dt2;
            if (std::abs(ds) + std::abs(dt2) < 1e-10) break;
        }
        s = std::clamp(s, 0.0, 1.0);
        t = std::clamp(t, 0.0, 1.0);
        double pos[3] = {static_cast<double>(ix), static_cast<double>(iy),
                         static_cast<double>(iz)};
        pos[ua] += s;
        pos[va] += t;
        return Vec3((pos[0] - nx / 2) * dx, (pos[1] - ny / 2) * dx,
                    (pos[2] - nz / 2) * dx);
    };

    std::unordered_map<FaceKey, FaceHit, FaceKeyHash> faces;
    for (int axis = 0; axis < 3; ++axis) {
        const int ua = (axis + 1) % 3, va = (axis + 2) % 3;
        for (int iz = 0; iz < nz; ++iz)
            for (int iy = 0; iy < ny; ++iy)
                for (int ix = 0; ix < nx; ++ix) {
                    int c0[3] = {ix, iy, iz};
                    int c1[3] = {ix, iy, iz};
                    int c2[3] = {ix, iy, iz};
                    int c3[3] = {ix, iy, iz};
                    c1[ua] += 1;
                    c2[ua] += 1;
                    c2[va] += 1;
                    c3[va] += 1;
                    const double p0 = phase_at(c0[0], c0[1], c0[2]);
                    const double p1 = phase_at(c1[0], c1[1], c1[2]);
                    const double p2 = phase_at(c2[0], c2[1], c2[2]);
                    const double p3 = phase_at(c3[0], c3[1], c3[2]);
                    const double circ = wrap_angle(p1 - p0) + wrap_angle(p2 - p1) +
                                        wrap_angle(p3 - p2) + wrap_angle(p0 - p3);
                    const int w = static_cast<int>(std::lround(circ / (2.0 * pi)));
                    if (w != 0) {
                        FaceHit hit;
                        hit.winding = (w > 0) ? 1 : -1;  // |w|>1 never happens for
                                                         // resolved fields
                        hit.point = face_point(ix, iy, iz, axis);
                        faces[{ix, iy, iz, axis}] = hit;
                    }
                }
    }

    // March pierced faces into closed polylines. The face with winding +1
    // along +axis feeds vorticity into the cube on its +axis side.
    std::vector<Filament> lines;
    int discarded = 0;
    auto face_cells = [&](const FaceKey& k) {
        // cells on the -axis and +axis side of the face
        int minus[3] = {k.ix, k.iy, k.iz};
        minus[k.axis] = wrap_idx(minus[k.axis] - 1, k.axis);
        return std::pair<std::array<int, 3>, std::array<int, 3>>(
            {minus[0], minus[1], minus[2]}, {k.ix, k.iy, k.iz});
    };

    for (auto& entry : faces) {
        if (entry.second.consumed) continue;
        // Start a new line here; walk in the vorticity direction.
        std::vector<Vec3> pts;
        Vec3 offset = Vec3::Zero();  // unfolding shift accumulated across wraps
        const FaceKey start = entry.first;
        FaceKey cur = start;
        bool closed = false;
        const double box[3] = {nx * dx, ny * dx, nz * dx};
        for (std::size_t guard = 0; guard <= faces.size(); ++guard) {
            FaceHit& hit = faces.at(cur);
            hit.consumed = true;
            pts.push_back(hit.point + offset);
            // Enter the cube on the downstream side of the face, then leave it
            // through the nearest outflow face (vorticity pointing out).
            auto [minus_cell, plus_cell] = face_cells(cur);
            const std::array<int, 3> cell =
                (hit.winding > 0) ? plus_cell : minus_cell;
            FaceKey next{};
            bool found = false;
            double best = 1e300;
            for (int axis = 0; axis < 3; ++axis) {
                for (int side = 0; side <= 1; ++side) {
                    int fidx[3] = {cell[0], cell[1], cell[2]};
                    if (side == 1) fidx[axis] = wrap_idx(fidx[axis] + 1, axis);
                    const FaceKey k{fidx[0], fidx[1], fidx[2], axis};
                    const auto it = faces.find(k);
                    if (it == faces.end()) continue;
                    const FaceHit& h = it->second;
                    const bool outflow = (side == 1 && h.winding > 0) ||
                                         (side == 0 && h.winding < 0);
                    if (!outflow) continue;
                    if (h.consumed && !(k == start)) continue;
                    const double d2 = (h.point - hit.point).squaredNorm();
                    if (d2 < best) {
                        best = d2;
                        next = k;
                        found = true;
                    }
                }
            }
            if (!found)
                throw ValidationError(
                    "vortex line terminates in the bulk (inconsistent winding)");
            if (next == start) {
                closed = true;
                break;
            }
            // Unfold the periodic wrap between consecutive face points.
            const Vec3 d = faces.at(next).point - hit.point;
            for (int a = 0; a < 3; ++a) {
                if (d[a] > 0.5 * box[a]) offset[a] -= box[a];
                else if (d[a] < -0.5 * box[a]) offset[a] += box[a];
            }
            cur = next;
        }
        if (!closed)
            throw ValidationError("vortex line walk failed to close");
        if (pts.size() < 6) {
            ++discarded;
            continue;
        }
        Filament f;
        f.gamma = 1.0;  // orientation carries the winding sign
        f.id = static_cast<int>(lines.size());
        f.points = std::move(pts);
        lines.push_back(std::move(f));
    }
    (void)discarded;
    return lines;
}

GpeSnapshot analyze_field(const ComplexField3D& field) {
    GpeSnapshot snap;
    snap.t = field.time;
    snap.norm = field_norm(field);
    snap.energy = field_energy(field);
    snap.lines = detect_vortex_lines(field);
    double len = 0.0;
    for (const auto& l : snap.lines) len += l.polygon_length();
    snap.total_length = len;

    const std::size_t n = snap.lines.size();
    snap.lk = Eigen::MatrixXd::Zero(n, n);
    snap.lk_sum = 0.0;
    bool all_ok = true;
    std::vector<Filament> smooth;
    for (const auto& l : snap.lines) {
        const int m = std::max<int>(128, static_cast<int>(l.size()));
        smooth.push_back(resample_arclength(l, m));
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            try {
                const LinkResult lk = linking_number(smooth[i], smooth[j]);
                snap.lk(i, j) = snap.lk(j, i) = lk.rounded;
                snap.lk_sum += lk.rounded;
            } catch (const ValidationError&) {
                snap.lk(i, j) = snap.lk(j, i) =
                    std::numeric_limits<double>::quiet_NaN();
                all_ok = false;
            }
        }
    if (!all_ok) snap.lk_sum = std::numeric_limits<double>::quiet_NaN();
    return snap;
}

Scene make_scene(const std::string& name, int grid, double spacing) {
    Scene s;
    s.shape = {grid, grid, grid};
    s.spacing = spacing;
    const double box = grid * spacing;
    const double r = box / 4.0;          // ring radius scaled to the box
    const double scale = r / 40.5;       // from the reference configuration
    if (name == "ring") {
        s.filaments = {make_circle(Vec3::Zero(), r, Vec3::UnitZ(), 256, 1.0, 0)};
    } else if (name == "hopf-single" || name == "hopf-bundle3") {
        const Vec3 c1 = scale * Vec3(-20.25, 19.5, 0.0);
        const Vec3 c2 = scale * Vec3(20.25, 0.0, 0.0);
        Filament ring1 = make_circle(c1, r, Vec3::UnitZ(), 256, 1.0, 0);
        Filament ring2 = make_circle(c2, r, Vec3::UnitY(), 256, 1.0, 1);
        if (name == "hopf-single") {
            s.filaments = {ring1, ring2};
        } else {
            const double offset = 2.5;
            auto b1 = make_bundle(ring1, 2, offset);
            auto b2 = make_bundle(ring2, 2, offset);
            s.filaments = b1;
            for (auto& f : b2) {
                f.id += static_cast<int>(b1.size());
                s.filaments.push_back(f);
            }
        }
    } else {
        throw ValidationError("unknown scene '" + name +
                              "' (expected ring, hopf-single, hopf-bundle3)");
    }
    return s;
}

GpeSeries run_experiment(const Scene& scene, const GpeConfig& config,
                         const SnapshotHook& hook) {
    ComplexField3D field =
        make_uniform_field(scene.shape, scene.spacing, scene.background_density);
    field = imprint_vortices(field, scene.filaments, scene.background_density);
    smooth_field(field, scene.smoothing_steps, 0.02);

    GpeSeries series;
    auto record = [&] {
        GpeSnapshot snap = analyze_field(field);
        if (hook) hook(snap, field);
        series.snapshots.push_back(std::move(snap));
    };
    record();
    const int total_steps =
        (config.t_end > 0.0)
            ? static_cast<int>(std::llround(config.t_end / config.dt))
            : 0;
    int done = 0;
    while (done < total_steps) {
        const int chunk = std::min(config.output_stride, total_steps - done);
        gpe_advance(field, config, chunk);
        done += chunk;
        record();
    }
    return series;
}

}  // namespace vortopo
