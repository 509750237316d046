#include "vortopo/field.hpp"

#include <doctest.h>

#include <random>

using namespace vortopo;

namespace {

Filament paper_trefoil(int n) {
    TorusKnotParams p;
    p.p = 2;
    p.q = 3;
    p.r0 = 28.0;
    p.a = 5.0;
    p.n_points = n;
    return resample_arclength(make_torus_knot(p), n);
}

Filament hopf_ring1(int n) {
    return make_circle(Vec3(-20.25, 19.5, 0), 40.5, Vec3::UnitZ(), n, 1.0, 0);
}
Filament hopf_ring2(int n) {
    return make_circle(Vec3(20.25, 0, 0), 40.5, Vec3::UnitY(), n, 1.0, 1);
}

// Circle of radius rho in the plane normal to the local tangent of f at node k.
std::vector<Vec3> normal_plane_loop(const Filament& f, std::size_t k, double rho,
                                    int m) {
    const FrenetData fr = frenet(f);
    std::vector<Vec3> loop(m);
    for (int j = 0; j < m; ++j) {
        const double th = 2.0 * pi * j / m;
        loop[j] = f.points[k] + rho * (std::cos(th) * fr.n[k] + std::sin(th) * fr.b[k]);
    }
    return loop;
}

}  // namespace

TEST_SUITE_BEGIN("field");

TEST_CASE("biot-savart oracles") {
    SUBCASE("ring center velocity is Gamma/2R") {
        const double R = 10.0;
        const Filament ring = make_circle(Vec3(1, 2, 3), R, Vec3::UnitZ(), 512);
        const VelocitySample s = biot_savart_velocity({ring}, Vec3(1, 2, 3));
        CHECK(s.v.head<2>().norm() < 1e-12);
        CHECK(std::abs(s.v.z() - 1.0 / (2.0 * R)) < 1e-3 * 1.0 / (2.0 * R));
    }

    SUBCASE("near-field of a huge ring matches the straight-line law") {
        const double R = 1000.0, d = 1.0;
        const Filament ring = make_circle(Vec3::Zero(), R, Vec3::UnitZ(), 65536);
        const Vec3 p((R - d), 0, 0);  // distance d inside the ring, on its plane
        const VelocitySample s = biot_savart_velocity({ring}, p);
        const double expect = 1.0 / (2.0 * pi * d);
        CHECK(std::abs(s.v.norm() - expect) < 5e-3 * expect);
    }

    SUBCASE("on-axis ring field") {
        const double R = 10.0, z = 15.0;
        const Filament ring = make_circle(Vec3::Zero(), R, Vec3::UnitZ(), 512);
        const VelocitySample s = biot_savart_velocity({ring}, Vec3(0, 0, z));
        const double expect = R * R / (2.0 * std::pow(R * R + z * z, 1.5));
        CHECK(s.v.head<2>().norm() < 1e-12);
        CHECK(std::abs(s.v.z() - expect) < 5e-3 * expect);
    }

    SUBCASE("far field decays at least as 1/d^2") {
        const Filament ring = make_circle(Vec3::Zero(), 5.0, Vec3::UnitZ(), 256);
        const double diameter = 10.0;
        const double v1 = biot_savart_velocity({ring}, Vec3(6 * diameter, 1, 2)).v.norm();
        const double v2 =
            biot_savart_velocity({ring}, Vec3(12 * diameter, 2, 4)).v.norm();
        CHECK(v2 < v1 / 4.0);
    }

    SUBCASE("proximity is rejected with a diagnostic") {
        const Filament ring = make_circle(Vec3::Zero(), 10.0, Vec3::UnitZ(), 64);
        CHECK_THROWS_AS(biot_savart_velocity({ring}, Vec3(10.0, 0.1, 0)),
                        ValidationError);
    }
}

TEST_CASE("circulation quantization") {
    const Filament ring = make_circle(Vec3::Zero(), 10.0, Vec3::UnitZ(), 2048);

    SUBCASE("loop threading once picks up Gamma") {
        const auto loop = normal_plane_loop(ring, 0, 1.0, 64);
        CHECK(std::abs(circulation({ring}, loop) - 1.0) < 5e-3);
    }

    SUBCASE("loop threading nothing") {
        std::vector<Vec3> loop;
        for (int j = 0; j < 64; ++j) {
            const double th = 2.0 * pi * j / 64;
            loop.push_back(Vec3(30 + std::cos(th), 0, std::sin(th)));
        }
        CHECK(std::abs(circulation({ring}, loop)) < 5e-3);
    }

    SUBCASE("bundle of 7 multiplies the quantum") {
        const auto bundle =
            make_bundle(make_circle(Vec3::Zero(), 40.5, Vec3::UnitZ(), 512), 6, 4.0);
        const auto loop = normal_plane_loop(bundle[0], 17, 9.0, 96);
        const double c = circulation(bundle, loop);
        CHECK(std::abs(c - 7.0) < 0.02 * 7.0);
    }
}

TEST_CASE("phase along a path") {
    const Filament ring = make_circle(Vec3::Zero(), 10.0, Vec3::UnitZ(), 2048);

    SUBCASE("closed path threading once jumps by Gamma") {
        auto loop = normal_plane_loop(ring, 5, 1.5, 48);
        loop.push_back(loop.front());
        const PhasePath pp = phase_along_path({ring}, loop, 0.25);
        CHECK(pp.phi.front() == 0.25);
        CHECK(std::abs((pp.phi.back() - pp.phi.front()) - 1.0) < 5e-3);
    }

    SUBCASE("closed path threading nothing is exact") {
        std::vector<Vec3> loop;
        for (int j = 0; j <= 48; ++j) {
            const double th = 2.0 * pi * j / 48;
            loop.push_back(Vec3(25 + 2 * std::cos(th), 3, 2 * std::sin(th)));
        }
        const PhasePath pp = phase_along_path({ring}, loop, 0.0);
        CHECK(std::abs(pp.phi.back() - pp.phi.front()) < 1e-5);
    }

    SUBCASE("gradient of phi recovers the velocity") {
        const Filament t = paper_trefoil(512);
        std::mt19937_64 rng(424242);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        int tested = 0;
        while (tested < 10) {
            const Vec3 p(45 * u(rng), 45 * u(rng), 25 * u(rng));
            if (min_distance(t, p) < 6.0) continue;
            ++tested;
            const Vec3 v = biot_savart_velocity({t}, p).v;
            const double delta = 0.01;
            Vec3 grad;
            for (int c = 0; c < 3; ++c) {
                Vec3 e = Vec3::Zero();
                e[c] = delta;
                const PhasePath pp =
                    phase_along_path({t}, {p - e, p, p + e}, 0.0);
                grad[c] = (pp.phi[2] - pp.phi[0]) / (2.0 * delta);
            }
            CHECK((grad - v).norm() < 1e-4 * v.norm());
        }
    }

    SUBCASE("loop-closure quantization") {
        const Filament t = paper_trefoil(512);
        // threading loop around one strand, clear of the neighboring strands
        auto loop1 = normal_plane_loop(t, 100, 1.5, 64);
        loop1.push_back(loop1.front());
        const double dphi1 =
            phase_along_path({t}, loop1, 0.0).phi.back();
        CHECK(std::abs(dphi1 - std::round(dphi1)) < 5e-3);
        CHECK(std::abs(dphi1) > 0.5);  // it does thread
    }

    SUBCASE("path through the core is rejected") {
        CHECK_THROWS_AS(
            phase_along_path({ring}, {Vec3(9, 0, -1), Vec3(11, 0, 1)}, 0.0),
            ValidationError);
    }
}

TEST_CASE("seifert framing") {
    SUBCASE("single ring: symmetry forces SL = 0") {
        const Filament ring = make_circle(Vec3::Zero(), 10.0, Vec3::UnitZ(), 256);
        const Framing fr = seifert_framing({ring}, 0, 1.0, 0.0);
        CHECK(fr.winding() == 0);
        CHECK(std::abs(twist(fr)) < 1e-3);
        CHECK(self_linking(fr) == 0);
        // background phase on the eps-circle is sigma-independent
        for (std::size_t k = 0; k + 1 < fr.theta.size(); ++k)
            CHECK(std::abs(fr.theta[k + 1] - fr.theta[k]) < 0.05);
    }

    SUBCASE("tw is invariant under phi_ref shifts") {
        const Filament ring = make_circle(Vec3::Zero(), 10.0, Vec3::UnitZ(), 256);
        const Framing a = seifert_framing({ring}, 0, 1.0, 0.0);
        const Framing b = seifert_framing({ring}, 0, 1.0, 0.37);
        CHECK(std::abs(twist(a) - twist(b)) < 1e-6);
    }

    SUBCASE("paper trefoil: Seifert framing kills the helicity") {
        const Filament t = paper_trefoil(1024);
        const Framing fr = seifert_framing({t}, 0, 0.5, 0.0);
        const double wr = writhe(t);
        CHECK(std::abs(wr + twist(fr)) < 5e-3);  // SL = 0
        CHECK(self_linking(fr) == 0);
        CHECK(fr.winding() == -3);  // cancels Wr + T = 3 of the Frenet framing
    }

    SUBCASE("Hopf rings: Lk + SL = 0") {
        const std::vector<Filament> rings = {hopf_ring1(384), hopf_ring2(384)};
        std::vector<Framing> framings;
        for (std::size_t i = 0; i < rings.size(); ++i)
            framings.push_back(seifert_framing(rings, i, 2.0, 0.0));
        const HelicityReport rep = assemble_helicity(rings, framings);
        const double sl_sum = rep.sl[0] + rep.sl[1];
        CHECK(sl_sum == -2.0 * rep.lk(0, 1));
        CHECK(std::abs(rep.total) < 5e-3 * 2.0);
    }
}

TEST_CASE("velocity field on a grid") {
    SUBCASE("sampled field of a ring is divergence-free") {
        // FD truncation scales as (spacing/d)^2 near the core, so the
        // solenoidality oracle is checked on bulk cells (>= 6 spacings out)
        // with 4th-order differences.
        const Filament ring = make_circle(Vec3::Zero(), 6.0, Vec3::UnitZ(), 256);
        GridSpec spec;
        spec.shape = {48, 48, 48};
        spec.spacing = 0.5;
        spec.origin = Vec3(-11.75, -11.75, -11.75);
        const VectorGrid g = velocity_field_on_grid({ring}, spec);
        auto d4 = [&](int ix, int iy, int iz, int a, int c) {
            auto at = [&](int s) {
                return g.at(ix + s * (a == 0), iy + s * (a == 1),
                            iz + s * (a == 2))[c];
            };
            return (8.0 * (at(1) - at(-1)) - (at(2) - at(-2))) /
                   (12.0 * spec.spacing);
        };
        double div2 = 0.0, grad2 = 0.0;
        int cells = 0;
        for (int iz = 2; iz < 46; ++iz)
            for (int iy = 2; iy < 46; ++iy)
                for (int ix = 2; ix < 46; ++ix) {
                    if (min_distance(ring, spec.point(ix, iy, iz)) <
                        6.0 * spec.spacing)
                        continue;
                    double div = 0.0, gg = 0.0;
                    for (int a = 0; a < 3; ++a)
                        for (int c = 0; c < 3; ++c) {
                            const double d = d4(ix, iy, iz, a, c);
                            gg += d * d;
                            if (a == c) div += d;
                        }
                    div2 += div * div;
                    grad2 += gg;
                    ++cells;
                }
        REQUIRE(cells > 10000);
        CHECK(std::sqrt(div2 / cells) < 1e-3 * std::sqrt(grad2 / cells));
    }

    SUBCASE("empty filament list gives a zero field") {
        GridSpec spec;
        spec.shape = {8, 8, 8};
        spec.spacing = 1.0;
        const VectorGrid g = velocity_field_on_grid({}, spec);
        for (double v : g.data) CHECK(v == 0.0);
    }

    SUBCASE("opposite-circulation coincident rings cancel exactly") {
        Filament a = make_circle(Vec3::Zero(), 6.0, Vec3::UnitZ(), 128);
        Filament b = a;
        b.gamma = -1.0;
        GridSpec spec;
        spec.shape = {16, 16, 16};
        spec.spacing = 1.5;
        spec.origin = Vec3(-11.0, -11.0, -11.0);
        const VectorGrid g = velocity_field_on_grid({a, b}, spec);
        for (std::size_t i = 0; i < g.data.size(); ++i) CHECK(std::abs(g.data[i]) < 1e-12);
    }
}

TEST_CASE("default push-off epsilon respects both bounds") {
    const std::vector<Filament> rings = {hopf_ring1(256), hopf_ring2(256)};
    const double eps = default_pushoff_epsilon(rings, 0);
    CHECK(eps > 0.0);
    CHECK(eps < 0.5 * 40.5);
    CHECK(eps < 0.5 * min_distance(rings[0], rings[1]));
}

TEST_SUITE_END();
