#pragma once

#include "vortopo/filament.hpp"

#include <cstdint>

namespace vortopo {

struct TorusKnotParams {
    int p = 2;
    int q = 3;
    double r0 = 28.0;  // mean radius
    double a = 5.0;    // radial amplitude
    int n_points = 1024;
    double gamma = 1.0;
    int id = 0;
};

/// Torus knot sampled at theta = 2*pi*k/n:
///   r = r0 + a sin(q theta),  alpha = p theta + (p/q)(a/r0) cos(q theta),
///   x = r cos(alpha), y = r sin(alpha), z = sqrt(1-(p/q)^2) cos(q theta).
/// Rejects |a| >= r0 and p > q (imaginary z amplitude); p == q gives a
/// planar curve.
Filament make_torus_knot(const TorusKnotParams& params);

/// Planar circle, counterclockwise about `normal`.
Filament make_circle(const Vec3& center, double radius, const Vec3& normal,
                     int n_points, double gamma = 1.0, int id = 0);

/// Center filament plus n_satellites copies displaced by `offset` in the
/// normal plane at angles 2*pi*m/n_satellites, the displacement direction
/// carried along the curve by parallel transport (closure defect of the
/// transported frame is distributed linearly in arclength).
std::vector<Filament> make_bundle(const Filament& center, int n_satellites,
                                  double offset);

/// n nodes equally spaced in arclength of the periodic cubic interpolant.
Filament resample_arclength(const Filament& f, int n);

/// Arclength of the periodic cubic interpolant through the nodes.
double arc_length(const Filament& f);

/// Per-node Frenet frame of a uniform-arclength closed curve.
struct FrenetData {
    std::vector<Vec3> t, n, b;       // unit tangent / principal normal / binormal
    std::vector<double> kappa, tau;  // curvature, torsion
    std::vector<double> sigma;       // cumulative arclength, sigma[0] = 0
    std::vector<std::uint8_t> degenerate;  // nodes where kappa fell below the
                                           // floor and n was parallel-transported

    double arc_step() const;         // uniform node spacing
    double total_length() const;
    double total_torsion() const;    // (1/2pi) closed integral of tau
    double min_curvature_radius() const;
};

/// Tangent from spectral differentiation (node count a power of two) or
/// 4th-order central differences; kappa = |dt/dsigma|, b = t x n,
/// tau = -(db/dsigma).n. Degenerate-curvature nodes (kappa < 1e-8/L) get n
/// by double-reflection parallel transport and are flagged.
FrenetData frenet(const Filament& f);

/// Double-reflection transport of u from (x0, t0) to (x1, t1).
Vec3 parallel_transport(const Vec3& u, const Vec3& x0, const Vec3& t0,
                        const Vec3& x1, const Vec3& t1);

namespace detail {

/// Periodic cubic spline through nodes (chord-length parameterized).
class PeriodicCurve {
public:
    explicit PeriodicCurve(const std::vector<Vec3>& nodes);

    double period() const { return period_; }
    double total_arc_length() const;
    Vec3 position(double u) const;
    Vec3 derivative(double u) const;
    /// Arclength from u=0 to u.
    double arc_length_to(double u) const;
    /// Inverse of arc_length_to on [0, total).
    double u_at_arc_length(double s) const;

private:
    std::size_t segment_of(double u) const;
    double segment_arc(std::size_t k, double ua, double ub) const;

    std::vector<Vec3> y_;   // nodes
    std::vector<Vec3> m_;   // second derivatives at nodes
    std::vector<double> u_; // knot parameters, u_[0] = 0
    std::vector<double> cum_;  // cumulative arclength at knots
    double period_ = 0.0;
};

/// Derivative of periodic samples with uniform spacing h = length/n.
/// Spectral when n is a power of two, else 4th-order central differences.
std::vector<Vec3> periodic_derivative(const std::vector<Vec3>& x, double length);

bool is_power_of_two(std::size_t n);

}  // namespace detail

}  // namespace vortopo
