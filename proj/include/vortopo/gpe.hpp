#pragma once

#include "vortopo/filament.hpp"
#include "vortopo/grid.hpp"

#include <complex>
#include <functional>
#include <string>

namespace vortopo {

/// Periodic grid of complex order-parameter values for the nondimensional
/// GPE  i psi_t = -lap psi + |psi|^2 psi.  Data is x-fastest.
struct ComplexField3D {
    std::array<int, 3> shape{0, 0, 0};
    double spacing = 0.5;
    double time = 0.0;
    std::vector<std::complex<double>> data;

    std::size_t cell_count() const {
        return static_cast<std::size_t>(shape[0]) * shape[1] * shape[2];
    }
    std::size_t index(int ix, int iy, int iz) const {
        return static_cast<std::size_t>(ix) +
               static_cast<std::size_t>(shape[0]) *
                   (static_cast<std::size_t>(iy) +
                    static_cast<std::size_t>(shape[1]) * static_cast<std::size_t>(iz));
    }
    double box_length(int axis) const { return shape[axis] * spacing; }
};

ComplexField3D make_uniform_field(const std::array<int, 3>& shape, double spacing,
                                  double background_density = 1.0);

struct GpeConfig {
    double dt = 0.1;
    double t_end = 0.0;
    int output_stride = 10;  // steps between snapshots
    int order = 2;           // 2 (Strang) or 4 (Yoshida triple jump)
};

/// Validates the config; returns a human-readable accuracy warning when
/// dt >= dx^2/pi (soft margin, not a hard limit), empty string otherwise.
std::string validate_config(const GpeConfig& config, double spacing);

/// Multiplies psi by a unit-winding phase around every filament (Biot-Savart
/// phase of the filament set plus its nearest periodic images, integrated
/// along a lattice spanning tree) and by the healing-length core profile
/// d/sqrt(d^2+2) per filament. Throws when filaments come within 2 cells of
/// each other.
ComplexField3D imprint_vortices(const ComplexField3D& field,
                                const std::vector<Filament>& filaments,
                                double background_density);

/// A few normalization-preserving imaginary-time steps that relax imprinted
/// cores toward the stationary profile without moving them.
void smooth_field(ComplexField3D& field, int steps, double tau);

/// Advance by n steps of size config.dt with the configured splitting order.
/// Kinetic substeps are exact spectral multipliers, nonlinear substeps exact
/// pointwise rotations; adjacent kinetic half-steps are fused. Aborts with
/// diagnostics on NaN/Inf.
void gpe_advance(ComplexField3D& field, const GpeConfig& config, int n_steps);

/// One step (functional form).
ComplexField3D gpe_step(const ComplexField3D& field, const GpeConfig& config);

double field_norm(const ComplexField3D& field);    // sum dx^3 |psi|^2
double field_energy(const ComplexField3D& field);  // sum dx^3 (|grad psi|^2 + |psi|^4/2)

/// Closed vortex filaments extracted from 2pi phase windings on grid
/// plaquettes, connected through cells, with node positions refined by the
/// bilinear zero crossing of Re psi and Im psi. Lines shorter than 6 nodes
/// are discarded. Curves crossing the periodic box are returned unfolded.
std::vector<Filament> detect_vortex_lines(const ComplexField3D& field);

struct GpeSnapshot {
    double t = 0.0;
    std::vector<Filament> lines;
    Eigen::MatrixXd lk;      // pairwise rounded linking numbers (NaN when the
                             // quadrature preconditions fail, e.g. mid-reconnection)
    double norm = 0.0;
    double energy = 0.0;
    double total_length = 0.0;
    double lk_sum = 0.0;     // sum over pairs i<j; NaN if any pair was unreliable
};

struct Scene {
    std::vector<Filament> filaments;
    std::array<int, 3> shape{96, 96, 96};
    double spacing = 0.5;
    double background_density = 1.0;
    int smoothing_steps = 40;
};

/// Named desk-scale scenes: "ring", "hopf-single", "hopf-bundle3".
Scene make_scene(const std::string& name, int grid, double spacing);

struct GpeSeries {
    std::vector<GpeSnapshot> snapshots;
};

using SnapshotHook = std::function<void(const GpeSnapshot&, const ComplexField3D&)>;

/// Imprints the scene, smooths, then steps the field, extracting lines and
/// the linking matrix every output_stride steps.
GpeSeries run_experiment(const Scene& scene, const GpeConfig& config,
                         const SnapshotHook& hook = nullptr);

/// Diagnostics snapshot of an existing field (used at t=0 and by tests).
GpeSnapshot analyze_field(const ComplexField3D& field);

}  // namespace vortopo
