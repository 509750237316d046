#pragma once

#include "vortopo/field.hpp"

namespace vortopo {

/// Coarse-grained vorticity on a grid, deposited from filaments with a
/// normalized Gaussian mollifier.
struct VorticityGrid {
    GridSpec spec;
    std::vector<double> data;  // component-major, 3 * cell_count
    double kernel_width = 0.0;

    Vec3 at(int ix, int iy, int iz) const {
        const std::size_t n = spec.cell_count();
        const std::size_t i = spec.index(ix, iy, iz);
        return Vec3(data[i], data[n + i], data[2 * n + i]);
    }
};

/// Deposits Gamma_i * (ds/dsigma) * delta^3 mollified by an isotropic
/// Gaussian of width kernel_width (discretely normalized per deposit).
/// Requires kernel_width >= 2 x spacing and filaments inside the grid box.
VorticityGrid coarse_vorticity(const std::vector<Filament>& filaments,
                               const GridSpec& spec, double kernel_width);

/// H_cl = sum_cells (v . omega) dx^3. Masked cells of v are replaced by the
/// solenoidal velocity reconstructed spectrally from omega itself, keeping v
/// and omega consistent at the coarse scale. Throws on grid mismatch.
double quasiclassical_helicity(const VorticityGrid& omega, const VectorGrid& v);

/// Periodic spectral inverse curl of omega (solenoidal projection).
VectorGrid velocity_from_vorticity(const VorticityGrid& omega);

/// RMS(div omega) / RMS(|grad omega|), both spectral on the periodic grid.
double solenoidal_residual(const VorticityGrid& omega);

}  // namespace vortopo
