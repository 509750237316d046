#pragma once

#include "vortopo/common.hpp"

#include <cstddef>
#include <utility>

namespace vortopo {

/// Closed discrete space curve. points.back() connects implicitly to
/// points.front(); the endpoint is never duplicated.
struct Filament {
    std::vector<Vec3> points;
    double gamma = 1.0;  // circulation
    int id = 0;

    std::size_t size() const { return points.size(); }
    const Vec3& node(std::size_t i) const { return points[i % points.size()]; }
    Vec3 segment(std::size_t i) const {
        return points[(i + 1) % points.size()] - points[i];
    }
    Vec3 midpoint(std::size_t i) const {
        return 0.5 * (points[(i + 1) % points.size()] + points[i]);
    }

    double polygon_length() const;
    double max_segment_length() const;
    double min_segment_length() const;
    std::pair<Vec3, Vec3> bounding_box() const;
};

/// Throws ValidationError on: fewer than 8 points, or consecutive points
/// closer than 1e-12 x bounding-box diagonal.
void validate_filament(const Filament& f);

double segment_point_distance(const Vec3& a, const Vec3& b, const Vec3& p);
double segment_segment_distance(const Vec3& p0, const Vec3& p1,
                                const Vec3& q0, const Vec3& q1);

double min_distance(const Filament& a, const Filament& b);
double min_distance(const Filament& a, const Vec3& p);
/// Minimum distance between non-adjacent segments of one closed curve.
double min_self_distance(const Filament& f);

Filament reversed(Filament f);
Filament transformed(const Filament& f, const Mat3& rot, const Vec3& shift);

}  // namespace vortopo
