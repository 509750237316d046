#pragma once

#include "vortopo/geometry.hpp"

#include <optional>
#include <utility>

namespace vortopo {

/// Ribbon framing of a closed curve: spanwise vector
/// N(sigma) = n cos(Theta) + b sin(Theta) at push-off radius epsilon.
/// theta is stored unwrapped with n+1 entries; theta[n] is the angle at
/// node 0 after one full loop, so (theta[n]-theta[0])/2pi is the integer
/// winding of the framing.
struct Framing {
    Filament base;
    FrenetData frame;
    std::vector<double> theta;  // size n+1, |theta[k+1]-theta[k]| < pi
    double epsilon = 0.0;

    std::size_t size() const { return base.size(); }
    double winding_raw() const { return (theta.back() - theta.front()) / (2.0 * pi); }
    int winding() const;
    Vec3 spanwise(std::size_t k) const {
        return std::cos(theta[k]) * frame.n[k] + std::sin(theta[k]) * frame.b[k];
    }
};

/// Validates the Framing invariants: theta continuity (|dTheta| < pi),
/// integer closure winding within 1e-6, epsilon below half the minimum
/// radius of curvature and half the minimum distance to `others`.
Framing make_framing(Filament base, FrenetData frame, std::vector<double> theta,
                     double epsilon,
                     const std::vector<Filament>* others = nullptr);

/// Convenience: constant-angle (Frenet when angle = 0) framing.
Framing frenet_framing(const Filament& base, double epsilon, double angle = 0.0);
/// Framing with k full turns of Theta over the loop.
Framing winding_framing(const Filament& base, double epsilon, int k);

struct LinkResult {
    double raw = 0.0;
    int rounded = 0;
};

/// Gauss linking integral by segment-midpoint quadrature. Requires disjoint
/// curves with min distance > 3 x max segment length. Circulations are not
/// applied here; assemble_helicity owns the Gamma_i Gamma_j prefactors.
LinkResult linking_number(const Filament& fi, const Filament& fj);

/// Gauss self-integral with identical and edge-adjacent segment pairs
/// excluded (their continuum contribution vanishes).
double writhe(const Filament& f);

struct TwistDetail {
    double twist = 0.0;         // (1/2pi) closed integral of (tau + Theta')
    double twist_ribbon = 0.0;  // (1/2pi) closed integral of (N x N').t
    double total_torsion = 0.0;
    double winding = 0.0;
};

TwistDetail twist_detail(const Framing& framing);
/// (1/2pi) closed integral of (tau + Theta') = total torsion + winding.
double twist(const Framing& framing);

/// C*: nodes displaced by epsilon along the spanwise vector. Errors if the
/// push-off collides with the base curve or itself.
Filament push_off(const Framing& framing);

/// linking_number(base, push_off(framing)).rounded computed on refined
/// copies of both curves; throws ToleranceError if the raw Gauss integral is
/// farther than round_tol from an integer.
int self_linking(const Framing& framing, double round_tol = 5e-3);
LinkResult self_linking_raw(const Framing& framing, double round_tol = 5e-3);

struct HelicityReport {
    Eigen::MatrixXd lk_raw;        // symmetric, zero diagonal
    Eigen::MatrixXi lk;            // rounded entries
    std::vector<double> wr, tw;    // per filament
    std::vector<int> sl;           // round(wr + tw)
    std::vector<double> gammas;
    double total = 0.0;            // sum_i G_i^2 (wr+tw) + sum_{i!=j} G_i G_j lk_ij
    double round_tol = 5e-3;
};

/// Assembles H = sum_i Gamma_i^2 (Wr_i + Tw_i) + sum_{i != j} Gamma_i Gamma_j
/// Lk_ij with every component recorded. Throws ToleranceError when a linking
/// entry or a Calugareanu sum wr+tw sits farther than round_tol from an
/// integer (under-resolution shows up loudly rather than rounding garbage).
HelicityReport assemble_helicity(const std::vector<Filament>& filaments,
                                 const std::vector<Framing>& framings,
                                 double round_tol = 5e-3);

/// Local-model probe for the non-uniformly convergent Calugareanu limit.
struct CalugareanuProbe {
    double tau0 = 0.0;         // local torsion
    double theta_prime = 0.0;  // local Theta'
    double kappa0 = 0.0;       // local curvature
    double theta0 = 0.0;       // local angle Theta
    double epsilon = 1e-3;     // push-off radius
    double arc_halfwidth = 1.0;  // H, with H > epsilon
};

/// Integral over the arc |h| <= H of
///   g(h) / (h^2 + eps^2 - eps h^2 kappa cos(Theta))^{3/2},
///   g(h) = eps^2 (tau + Theta') + eps h kappa sin(Theta)
///          - eps^2 h kappa^2 sin(Theta) cos(Theta).
/// Converges to 2 (tau + Theta') as eps -> 0 with H fixed (the kernel
/// integral carries weight 2).
double calugareanu_local_integral(const CalugareanuProbe& probe);

/// Iterated limits of the eps-normalized local integrand
/// eps * g(h) / (...)^{3/2}: eps->0 first gives 0, h->0 first gives
/// (tau + Theta'). Returns {limit_eps_first, limit_h_first}.
std::pair<double, double> calugareanu_order_of_limits(const CalugareanuProbe& probe);

/// Numerical evaluation of the kernel integral over |s| <= T of
/// ds/(1+s^2)^{3/2}; tends to 2 as T grows.
double kernel_integral(double T);
/// (1/T^2) times the integral over |s| <= T of s^4/(1+s^2)^{3/2}; tends to 1.
double kernel_tail_integral(double T);

}  // namespace vortopo
