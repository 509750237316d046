#include "vortopo/filament.hpp"

#include <algorithm>
#include <limits>

namespace vortopo {

double Filament::polygon_length() const {
    KahanSum s;
    for (std::size_t i = 0; i < points.size(); ++i) s.add(segment(i).norm());
    return s.value();
}

double Filament::max_segment_length() const {
    double m = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i)
        m = std::max(m, segment(i).norm());
    return m;
}

double Filament::min_segment_length() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i)
        m = std::min(m, segment(i).norm());
    return m;
}

std::pair<Vec3, Vec3> Filament::bounding_box() const {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const auto& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return {lo, hi};
}

void validate_filament(const Filament& f) {
    if (f.points.size() < 8)
        throw ValidationError("filament needs at least 8 points, got " +
                              std::to_string(f.points.size()));
    const auto [lo, hi] = f.bounding_box();
    const double diag = (hi - lo).norm();
    if (!(diag > 0.0))
        throw ValidationError("filament is degenerate (zero bounding box)");
    const double floor = 1e-12 * diag;
    for (std::size_t i = 0; i < f.points.size(); ++i) {
        if (f.segment(i).norm() <= floor)
            throw ValidationError("filament has coincident consecutive points at node " +
                                  std::to_string(i));
    }
}

double segment_point_distance(const Vec3& a, const Vec3& b, const Vec3& p) {
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 <= 0.0) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

// Closest points of two segments (standard clamped quadratic minimization).
double segment_segment_distance(const Vec3& p0, const Vec3& p1,
                                const Vec3& q0, const Vec3& q1) {
    const Vec3 d1 = p1 - p0, d2 = q1 - q0, r = p0 - q0;
    const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
    double s = 0.0, t = 0.0;
    if (a <= 0.0 && e <= 0.0) return r.norm();
    if (a <= 0.0) {
        t = std::clamp(f / e, 0.0, 1.0);
    } else {
        const double c = d1.dot(r);
        if (e <= 0.0) {
            s = std::clamp(-c / a, 0.0, 1.0);
        } else {
            const double b = d1.dot(d2);
            const double denom = a * e - b * b;
            if (denom > 0.0) s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
            t = (b * s + f) / e;
            if (t < 0.0) {
                t = 0.0;
                s = std::clamp(-c / a, 0.0, 1.0);
            } else if (t > 1.0) {
                t = 1.0;
                s = std::clamp((b - c) / a, 0.0, 1.0);
            }
        }
    }
    return ((p0 + s * d1) - (q0 + t * d2)).norm();
}

double min_distance(const Filament& a, const Filament& b) {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t na = a.size(), nb = b.size();
    for (std::size_t i = 0; i < na; ++i) {
        const Vec3& p0 = a.points[i];
        const Vec3 p1 = a.points[(i + 1) % na];
        for (std::size_t j = 0; j < nb; ++j) {
            best = std::min(best, segment_segment_distance(
                                      p0, p1, b.points[j], b.points[(j + 1) % nb]));
        }
    }
    return best;
}

double min_distance(const Filament& a, const Vec3& p) {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i)
        best = std::min(best,
                        segment_point_distance(a.points[i], a.points[(i + 1) % n], p));
    return best;
}

double min_self_distance(const Filament& f) {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = f.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;  // adjacent around the seam
            best = std::min(best, segment_segment_distance(
                                      f.points[i], f.points[(i + 1) % n],
                                      f.points[j], f.points[(j + 1) % n]));
        }
    }
    return best;
}

Filament reversed(Filament f) {
    std::reverse(f.points.begin(), f.points.end());
    return f;
}

Filament transformed(const Filament& f, const Mat3& rot, const Vec3& shift) {
    Filament out = f;
    for (auto& p : out.points) p = rot * p + shift;
    return out;
}

}  // namespace vortopo
