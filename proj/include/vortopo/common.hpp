#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace vortopo {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double pi = std::numbers::pi;

/// Precondition / input violations (CLI exit code 2).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A quadrature or integer-rounding tolerance was violated (CLI exit code 3).
struct ToleranceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File / serialization problems (CLI exit code 4).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Compensated accumulator. Callers fix the summation order so results do not
// depend on thread count.
class KahanSum {
public:
    void add(double x) {
        const double y = x - c_;
        const double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }

private:
    double s_ = 0.0;
    double c_ = 0.0;
};

/// Wrap angle to (-pi, pi].
inline double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * pi);
    if (a <= -pi) a += 2.0 * pi;
    return a;
}

}  // namespace vortopo
