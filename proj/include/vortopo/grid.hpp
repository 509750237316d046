#pragma once

#include "vortopo/common.hpp"

#include <array>
#include <cstdint>

namespace vortopo {

struct GridSpec {
    std::array<int, 3> shape{0, 0, 0};
    Vec3 origin = Vec3::Zero();
    double spacing = 1.0;

    std::size_t cell_count() const {
        return static_cast<std::size_t>(shape[0]) * shape[1] * shape[2];
    }
    std::size_t index(int ix, int iy, int iz) const {
        return static_cast<std::size_t>(ix) +
               static_cast<std::size_t>(shape[0]) *
                   (static_cast<std::size_t>(iy) +
                    static_cast<std::size_t>(shape[1]) * static_cast<std::size_t>(iz));
    }
    Vec3 point(int ix, int iy, int iz) const {
        return origin + spacing * Vec3(ix, iy, iz);
    }
    bool operator==(const GridSpec& o) const {
        return shape == o.shape && spacing == o.spacing &&
               (origin - o.origin).norm() == 0.0;
    }
};

/// Vector field per grid point, stored component-major (three x-fastest
/// scalar blocks), matching the on-disk layout.
struct VectorGrid {
    GridSpec spec;
    std::vector<double> data;        // size 3 * cell_count
    std::vector<std::uint8_t> mask;  // nonzero = excluded (near-core) cell

    Vec3 at(int ix, int iy, int iz) const {
        const std::size_t n = spec.cell_count();
        const std::size_t i = spec.index(ix, iy, iz);
        return Vec3(data[i], data[n + i], data[2 * n + i]);
    }
    void set(int ix, int iy, int iz, const Vec3& v) {
        const std::size_t n = spec.cell_count();
        const std::size_t i = spec.index(ix, iy, iz);
        data[i] = v.x();
        data[n + i] = v.y();
        data[2 * n + i] = v.z();
    }
    bool masked(int ix, int iy, int iz) const {
        return !mask.empty() && mask[spec.index(ix, iy, iz)] != 0;
    }
};

}  // namespace vortopo
