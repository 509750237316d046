#include "vortopo/coarsegrain.hpp"

#include <doctest.h>

using namespace vortopo;

namespace {

GridSpec centered_grid(int n, double dx) {
    GridSpec spec;
    spec.shape = {n, n, n};
    spec.spacing = dx;
    spec.origin = -0.5 * dx * (n - 1) * Vec3::Ones();
    return spec;
}

// Scaled Hopf pair (ring radius r) matching the reference configuration.
std::vector<Filament> hopf_pair(double r, int n) {
    const double s = r / 40.5;
    return {make_circle(s * Vec3(-20.25, 19.5, 0), r, Vec3::UnitZ(), n, 1.0, 0),
            make_circle(s * Vec3(20.25, 0, 0), r, Vec3::UnitY(), n, 1.0, 1)};
}

double lk_oracle(const std::vector<Filament>& fils) {
    double total = 0.0;
    for (std::size_t i = 0; i < fils.size(); ++i)
        for (std::size_t j = i + 1; j < fils.size(); ++j)
            total += 2.0 * fils[i].gamma * fils[j].gamma *
                     linking_number(fils[i], fils[j]).rounded;
    return total;
}

}  // namespace

TEST_SUITE_BEGIN("coarsegrain");

TEST_CASE("coarse vorticity deposition") {
    SUBCASE("flux through a transverse half-plane is the circulation") {
        const Filament ring = make_circle(Vec3::Zero(), 10.0, Vec3::UnitZ(), 256);
        const GridSpec spec = centered_grid(64, 0.5);
        const VorticityGrid w = coarse_vorticity({ring}, spec, 1.25);
        // The ring crosses the y=0 plane at x = +10 (vorticity +y) and
        // x = -10 (vorticity -y). The tube flux through any full plane cut is
        // Gamma, so summing omega_y * dx^2 over one y-slab, x > 0, gives 1.
        const std::size_t nc = spec.cell_count();
        double flux = 0.0;
        for (int iz = 0; iz < 64; ++iz)
            for (int ix = 33; ix < 64; ++ix) {
                const std::size_t i = spec.index(ix, 32, iz);
                flux += w.data[nc + i] * spec.spacing * spec.spacing;
            }
        CHECK(std::abs(flux - 1.0) < 0.01);
    }

    SUBCASE("bundle flux is 7 Gamma") {
        const auto bundle =
            make_bundle(make_circle(Vec3::Zero(), 15.0, Vec3::UnitZ(), 256), 6, 2.5);
        const GridSpec spec = centered_grid(96, 0.5);
        const VorticityGrid w = coarse_vorticity(bundle, spec, 1.25);
        const std::size_t nc = spec.cell_count();
        double flux = 0.0;
        for (int iz = 0; iz < 96; ++iz)
            for (int ix = 49; ix < 96; ++ix)
                flux += w.data[nc + spec.index(ix, 48, iz)] * spec.spacing *
                        spec.spacing;
        CHECK(std::abs(flux - 7.0) < 0.02 * 7.0);
    }

    SUBCASE("empty set deposits nothing") {
        const VorticityGrid w = coarse_vorticity({}, centered_grid(16, 1.0), 2.5);
        for (double v : w.data) CHECK(v == 0.0);
    }

    SUBCASE("deposited field is solenoidal") {
        const Filament ring = make_circle(Vec3::Zero(), 10.0, Vec3::UnitZ(), 256);
        const VorticityGrid w = coarse_vorticity({ring}, centered_grid(64, 0.5), 1.25);
        CHECK(solenoidal_residual(w) < 1e-3);
    }

    SUBCASE("validation") {
        const Filament ring = make_circle(Vec3::Zero(), 10.0, Vec3::UnitZ(), 64);
        CHECK_THROWS_AS(coarse_vorticity({ring}, centered_grid(64, 0.5), 0.5),
                        ValidationError);  // kernel under 2 spacings
        CHECK_THROWS_AS(coarse_vorticity({ring}, centered_grid(16, 0.5), 1.25),
                        ValidationError);  // filament outside the box
    }
}

TEST_CASE("quasiclassical helicity") {
    SUBCASE("hopf rings approach 2 Gamma^2 Lk") {
        const auto rings = hopf_pair(12.0, 256);
        const GridSpec spec = centered_grid(96, 0.5);
        const double oracle = std::abs(lk_oracle(rings));  // 2 |Lk12| = 2
        CHECK(oracle == 2.0);

        const VectorGrid v = velocity_field_on_grid(rings, spec);
        const VorticityGrid w15 = coarse_vorticity(rings, spec, 12.0 / 8.0);
        const double h15 = std::abs(quasiclassical_helicity(w15, v));
        CHECK(std::abs(h15 - oracle) < 0.10 * oracle);

        // widening the kernel degrades the estimate monotonically
        const VorticityGrid w30 = coarse_vorticity(rings, spec, 3.0);
        const double h30 = std::abs(quasiclassical_helicity(w30, v));
        CHECK(std::abs(h15 - oracle) < std::abs(h30 - oracle) + 1e-9);
    }

    SUBCASE("unlinked rings give nothing") {
        std::vector<Filament> rings = {
            make_circle(Vec3(-10, 0, 0), 5.0, Vec3::UnitZ(), 128, 1.0, 0),
            make_circle(Vec3(10, 0, 0), 5.0, Vec3::UnitZ(), 128, 1.0, 1)};
        const GridSpec spec = centered_grid(64, 0.6);
        const VectorGrid v = velocity_field_on_grid(rings, spec);
        const VorticityGrid w = coarse_vorticity(rings, spec, 1.25);
        CHECK(std::abs(quasiclassical_helicity(w, v)) < 0.05);
    }

    SUBCASE("3+3 bundle approaches 18 Gamma^2") {
        const auto rings = hopf_pair(12.0, 256);
        std::vector<Filament> fils = make_bundle(rings[0], 2, 2.5);
        for (auto f : make_bundle(rings[1], 2, 2.5)) {
            f.id += 3;
            fils.push_back(std::move(f));
        }
        CHECK(std::abs(lk_oracle(fils)) == 18.0);
        const GridSpec spec = centered_grid(96, 0.5);
        const VectorGrid v = velocity_field_on_grid(fils, spec);
        const VorticityGrid w = coarse_vorticity(fils, spec, 1.5);
        const double hcl = std::abs(quasiclassical_helicity(w, v));
        CHECK(std::abs(hcl - 18.0) < 0.15 * 18.0);
    }

    SUBCASE("rigid motion leaves H_cl unchanged within 2%") {
        const auto rings = hopf_pair(10.0, 192);
        const GridSpec spec = centered_grid(80, 0.5);
        const VorticityGrid w = coarse_vorticity(rings, spec, 1.25);
        const double h0 =
            quasiclassical_helicity(w, velocity_field_on_grid(rings, spec));

        const Mat3 R =
            Eigen::AngleAxisd(0.7, Vec3(1, 1, 0).normalized()).toRotationMatrix();
        std::vector<Filament> moved;
        for (const auto& f : rings) moved.push_back(transformed(f, R, Vec3(2, -1, 3)));
        GridSpec spec2 = spec;
        spec2.origin += Vec3(2, -1, 3);
        const VorticityGrid w2 = coarse_vorticity(moved, spec2, 1.25);
        const double h1 =
            quasiclassical_helicity(w2, velocity_field_on_grid(moved, spec2));
        CHECK(std::abs(h1 - h0) < 0.02 * std::abs(h0) + 1e-6);
    }

    SUBCASE("grid mismatch is rejected") {
        const auto rings = hopf_pair(10.0, 128);
        const VorticityGrid w = coarse_vorticity(rings, centered_grid(80, 0.5), 1.25);
        const VectorGrid v = velocity_field_on_grid(rings, centered_grid(64, 0.5));
        CHECK_THROWS_AS(quasiclassical_helicity(w, v), ValidationError);
    }
}

TEST_SUITE_END();
