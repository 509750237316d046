#pragma once

#include "vortopo/grid.hpp"
#include "vortopo/topology.hpp"

namespace vortopo {

struct VelocitySample {
    Vec3 position = Vec3::Zero();
    Vec3 v = Vec3::Zero();
};

/// Biot-Savart velocity v = sum_i (Gamma_i/4pi) closed-int (s_i - r) x ds_i /
/// |r - s_i|^3 by segment-midpoint quadrature. Throws ValidationError when r
/// is closer than 2 segment lengths to a filament (names the filament and the
/// measured distance).
VelocitySample biot_savart_velocity(const std::vector<Filament>& filaments,
                                    const Vec3& r);

/// Unchecked fast path used by grid sampling and quadratures.
Vec3 biot_savart_unchecked(const std::vector<Filament>& filaments, const Vec3& r);

/// Circulation around a closed polyline loop by midpoint quadrature of v.dl,
/// with per-segment adaptive subdivision.
double circulation(const std::vector<Filament>& filaments,
                   const std::vector<Vec3>& loop);

struct PhasePath {
    std::vector<Vec3> waypoints;
    std::vector<double> phi;  // one value per waypoint
    double reference_value = 0.0;
};

/// Velocity potential accumulated along a polyline by line integration of the
/// Biot-Savart velocity; each leg is subdivided until the increment settles
/// below 1e-6 x max|Gamma|.
PhasePath phase_along_path(const std::vector<Filament>& filaments,
                           const std::vector<Vec3>& path, double phi0);

/// Seifert (constant-phase) framing of `target`: for each node the angle
/// Theta on the epsilon-circle in the normal plane where the velocity
/// potential equals phi_ref (mod Gamma), tracked continuously in sigma.
/// `target_index` selects the target inside `filaments`.
Framing seifert_framing(const std::vector<Filament>& filaments,
                        std::size_t target_index, double epsilon,
                        double phi_ref = 0.0);

/// 0.1 x min(radius of curvature, half min inter-filament distance).
double default_pushoff_epsilon(const std::vector<Filament>& filaments,
                               std::size_t target_index);

/// Dense sampled Biot-Savart velocity; cells closer than 2 segment lengths to
/// a filament are masked instead of erroring.
VectorGrid velocity_field_on_grid(const std::vector<Filament>& filaments,
                                  const GridSpec& spec);

}  // namespace vortopo
