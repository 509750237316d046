#include "vortopo/topology.hpp"

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

Vec3 random_direction(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Vec3 d(g(rng), g(rng), g(rng));
    while (d.norm() < 1e-6) d = Vec3(g(rng), g(rng), g(rng));
    return d.normalized();
}

// Signed-crossing oracles in a generic projection along dir.
struct Projector {
    Vec3 u, v, d;
    explicit Projector(const Vec3& dir) : d(dir.normalized()) {
        const Vec3 ref = (std::abs(d.x()) < 0.9) ? Vec3::UnitX() : Vec3::UnitY();
        u = (ref - ref.dot(d) * d).normalized();
        v = d.cross(u);
    }
    Eigen::Vector2d flat(const Vec3& p) const { return {p.dot(u), p.dot(v)}; }
    double depth(const Vec3& p) const { return p.dot(d); }
};

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return a.x() * b.y() - a.y() * b.x();
}

// Lk = sum of crossing signs where A passes over B.
int crossing_linking(const Filament& A, const Filament& B, const Vec3& dir) {
    const Projector pr(dir);
    int total = 0;
    const std::size_t na = A.size(), nb = B.size();
    for (std::size_t i = 0; i < na; ++i) {
        const Eigen::Vector2d a0 = pr.flat(A.points[i]);
        const Eigen::Vector2d da = pr.flat(A.points[(i + 1) % na]) - a0;
        for (std::size_t j = 0; j < nb; ++j) {
            const Eigen::Vector2d b0 = pr.flat(B.points[j]);
            const Eigen::Vector2d db = pr.flat(B.points[(j + 1) % nb]) - b0;
            const double den = cross2(da, db);
            if (std::abs(den) < 1e-14) continue;
            const Eigen::Vector2d r = b0 - a0;
            const double s = cross2(r, db) / den;
            const double t = cross2(r, da) / den;
            if (s < 0.0 || s >= 1.0 || t < 0.0 || t >= 1.0) continue;
            const double za = pr.depth(A.points[i]) + s * pr.depth(A.segment(i));
            const double zb = pr.depth(B.points[j]) + t * pr.depth(B.segment(j));
            if (za > zb) total += (den > 0.0) ? 1 : -1;
        }
    }
    return total;
}

double directional_writhe(const Filament& f, const Vec3& dir) {
    const Projector pr(dir);
    const std::size_t n = f.size();
    int total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector2d a0 = pr.flat(f.points[i]);
        const Eigen::Vector2d da = pr.flat(f.points[(i + 1) % n]) - a0;
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;
            const Eigen::Vector2d b0 = pr.flat(f.points[j]);
            const Eigen::Vector2d db = pr.flat(f.points[(j + 1) % n]) - b0;
            const double den = cross2(da, db);
            if (std::abs(den) < 1e-14) continue;
            const Eigen::Vector2d r = b0 - a0;
            const double s = cross2(r, db) / den;
            const double t = cross2(r, da) / den;
            if (s < 0.0 || s >= 1.0 || t < 0.0 || t >= 1.0) continue;
            // crossing sign is det(t_over, t_under)
            const double zi = pr.depth(f.points[i]) + s * pr.depth(f.segment(i));
            const double zj = pr.depth(f.points[j]) + t * pr.depth(f.segment(j));
            const int sign = (den > 0.0) ? 1 : -1;
            total += (zi > zj) ? sign : -sign;
        }
    }
    return static_cast<double>(total);
}

double writhe_by_projection(const Filament& f, int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    KahanSum acc;
    for (int s = 0; s < samples; ++s)
        acc.add(directional_writhe(f, random_direction(rng)));
    return acc.value() / samples;
}

}  // namespace

TEST_SUITE_BEGIN("topology");

TEST_CASE("linking number") {
    SUBCASE("coplanar disjoint circles are unlinked") {
        const Filament a = make_circle(Vec3::Zero(), 1.0, Vec3::UnitZ(), 128);
        const Filament b = make_circle(Vec3(5, 0, 0), 1.0, Vec3::UnitZ(), 128);
        const LinkResult lk = linking_number(a, b);
        CHECK(lk.rounded == 0);
        CHECK(std::abs(lk.raw) < 1e-6);
    }

    SUBCASE("paper Hopf rings link once") {
        const Filament r1 = hopf_ring1(512), r2 = hopf_ring2(512);
        const LinkResult lk = linking_number(r1, r2);
        CHECK(std::abs(lk.rounded) == 1);
        CHECK(std::abs(lk.raw - lk.rounded) < 1e-3);
        // Independent oracle: signed crossings in generic projections.
        std::mt19937_64 rng(987651234);
        for (int s = 0; s < 5; ++s)
            CHECK(crossing_linking(r1, r2, random_direction(rng)) == lk.rounded);

        const LinkResult fine = linking_number(resample_arclength(r1, 2048),
                                               resample_arclength(r2, 2048));
        CHECK(std::abs(fine.raw - lk.raw) < 1e-3);

        CHECK(linking_number(reversed(r1), r2).rounded == -lk.rounded);

        const Mat3 R =
            Eigen::AngleAxisd(0.83, Vec3(1, 2, -1).normalized()).toRotationMatrix();
        const LinkResult moved = linking_number(transformed(r1, R, Vec3(3, 1, -7)),
                                                transformed(r2, R, Vec3(3, 1, -7)));
        CHECK(moved.rounded == lk.rounded);
        CHECK(std::abs(moved.raw - lk.raw) < 1e-9);
    }

    SUBCASE("7x7 bundle pair links 49 times") {
        const auto b1 = make_bundle(hopf_ring1(512), 6, 4.0);
        const auto b2 = make_bundle(hopf_ring2(512), 6, 4.0);
        int total = 0;
        for (const auto& fa : b1)
            for (const auto& fb : b2) {
                const LinkResult lk = linking_number(fa, fb);
                CHECK(std::abs(lk.rounded) == 1);
                total += std::abs(lk.rounded);
            }
        CHECK(total == 49);
        CHECK(linking_number(b1[0], b1[3]).rounded == 0);  // coaxial rings
        std::mt19937_64 rng(555);
        const Vec3 dir = random_direction(rng);
        CHECK(crossing_linking(b1[2], b2[5], dir) ==
              linking_number(b1[2], b2[5]).rounded);
    }

    SUBCASE("close curves are rejected") {
        const Filament a = make_circle(Vec3::Zero(), 1.0, Vec3::UnitZ(), 16);
        const Filament b = make_circle(Vec3(0.02, 0, 0.3), 1.0, Vec3::UnitZ(), 16);
        CHECK_THROWS_AS(linking_number(a, b), ValidationError);
    }
}

TEST_CASE("writhe") {
    SUBCASE("planar circle") {
        CHECK(std::abs(writhe(make_circle(Vec3(2, 1, -4), 3.0, Vec3::UnitZ(), 256))) <
              1e-10);
    }

    SUBCASE("paper trefoil with refinement and projection oracles") {
        const double w1 = writhe(paper_trefoil(1024));
        const double w2 = writhe(paper_trefoil(2048));
        CHECK(std::abs(w1 - w2) < 1e-3);
        const double wp = writhe_by_projection(paper_trefoil(256), 1500, 20260810);
        CHECK(std::abs(w1 - wp) < 0.05);
    }

    SUBCASE("mirror antisymmetry is exact") {
        const Filament t = paper_trefoil(512);
        Filament mirror = t;
        for (auto& p : mirror.points) p.z() = -p.z();
        CHECK(std::abs(writhe(t) + writhe(mirror)) < 1e-8);
    }

    SUBCASE("orientation reversal leaves writhe unchanged") {
        const Filament t = paper_trefoil(512);
        CHECK(writhe(reversed(t)) == doctest::Approx(writhe(t)).epsilon(1e-12));
    }

    SUBCASE("rigid motion invariance") {
        const Filament t = paper_trefoil(512);
        const Mat3 R =
            Eigen::AngleAxisd(1.3, Vec3(0.3, -1, 0.5).normalized()).toRotationMatrix();
        CHECK(writhe(transformed(t, R, Vec3(10, 0, -2))) ==
              doctest::Approx(writhe(t)).epsilon(1e-9));
    }
}

TEST_CASE("twist") {
    const double eps = 0.4;
    SUBCASE("circle with constant angle has zero twist") {
        const Filament c = make_circle(Vec3::Zero(), 5.0, Vec3::UnitZ(), 256);
        CHECK(std::abs(twist(frenet_framing(c, eps))) < 1e-12);
    }
    SUBCASE("circle with one winding has twist 1") {
        const Filament c = make_circle(Vec3::Zero(), 5.0, Vec3::UnitZ(), 256);
        const Framing fr = winding_framing(c, eps, 1);
        CHECK(twist(fr) == doctest::Approx(1.0).epsilon(1e-12));
        const TwistDetail d = twist_detail(fr);
        CHECK(std::abs(d.twist - d.twist_ribbon) < 1e-6);
    }
    SUBCASE("trefoil Frenet framing twist equals total torsion") {
        const Filament t = paper_trefoil(1024);
        const Framing fr = frenet_framing(t, 0.5);
        CHECK(twist(fr) == doctest::Approx(frenet(t).total_torsion()).epsilon(1e-9));
        const TwistDetail d = twist_detail(fr);
        CHECK(std::abs(d.twist - d.twist_ribbon) < 1e-6);
    }
    SUBCASE("framing validation") {
        const Filament c = make_circle(Vec3::Zero(), 5.0, Vec3::UnitZ(), 64);
        std::vector<double> theta(65, 0.0);
        theta[10] = 3.5;  // jump >= pi
        CHECK_THROWS_AS(make_framing(c, frenet(c), theta, eps), ValidationError);
        std::vector<double> open(65, 0.0);
        open[64] = 1.0;  // non-integer closure winding
        CHECK_THROWS_AS(make_framing(c, frenet(c), open, eps), ValidationError);
        CHECK_THROWS_AS(frenet_framing(c, 3.0), ValidationError);  // eps >= R/2
    }
}

TEST_CASE("push-off and self-linking") {
    SUBCASE("circle push-off is a concentric circle of radius R - eps") {
        const Filament c = make_circle(Vec3::Zero(), 5.0, Vec3::UnitZ(), 256);
        const Framing fr = frenet_framing(c, 0.5);
        const Filament star = push_off(fr);
        for (std::size_t k = 0; k < star.size(); ++k) {
            CHECK(Vec3(star.points[k].x(), star.points[k].y(), 0).norm() ==
                  doctest::Approx(4.5).epsilon(1e-12));
            CHECK((star.points[k] - c.points[k]).norm() ==
                  doctest::Approx(0.5).epsilon(1e-12));
        }
        CHECK(self_linking(fr) == 0);
    }

    SUBCASE("unit winding on a circle gives self-linking 1") {
        const Filament c = make_circle(Vec3::Zero(), 5.0, Vec3::UnitZ(), 256);
        const Framing fr = winding_framing(c, 0.5, 1);
        CHECK(twist(fr) == doctest::Approx(1.0));
        CHECK(self_linking(fr) == 1);  // = round(Wr + Tw) = round(0 + 1)
        CHECK(self_linking(winding_framing(c, 0.5, -2)) == -2);
    }

    SUBCASE("trefoil Frenet framing: Lk(C, C*) = round(Wr + T)") {
        const Filament t = paper_trefoil(1024);
        const Framing fr = frenet_framing(t, 0.5);
        const double expected = writhe(t) + frenet(t).total_torsion();
        CHECK(std::abs(expected - 3.0) < 5e-3);
        CHECK(self_linking(fr) == 3);
        CHECK(self_linking(fr) == static_cast<int>(std::llround(expected)));
    }

    SUBCASE("framing independence of Wr + Tw up to winding") {
        const Filament t = paper_trefoil(1024);
        const double wr = writhe(t);
        const Framing f0 = frenet_framing(t, 0.5);
        const Framing f2 = winding_framing(t, 0.5, 2);
        const double d = (wr + twist(f0)) - (wr + twist(f2));
        CHECK(std::abs(d - std::round(d)) < 5e-3);
        CHECK(self_linking(f0) == static_cast<int>(std::llround(wr + twist(f0))));
        CHECK(self_linking(f2) == static_cast<int>(std::llround(wr + twist(f2))));
    }
}

TEST_CASE("assemble_helicity") {
    SUBCASE("single planar circle is all zero") {
        const Filament c = make_circle(Vec3::Zero(), 5.0, Vec3::UnitZ(), 256);
        const HelicityReport rep = assemble_helicity({c}, {frenet_framing(c, 0.5)});
        CHECK(std::abs(rep.total) < 1e-10);
        CHECK(rep.sl[0] == 0);
        CHECK(std::abs(rep.wr[0]) < 1e-10);
        CHECK(std::abs(rep.tw[0]) < 1e-12);
    }

    SUBCASE("Hopf rings with Frenet framings") {
        const Filament r1 = hopf_ring1(512), r2 = hopf_ring2(512);
        const HelicityReport rep = assemble_helicity(
            {r1, r2}, {frenet_framing(r1, 2.0), frenet_framing(r2, 2.0)});
        CHECK(rep.lk(0, 1) == rep.lk(1, 0));
        CHECK(std::abs(rep.lk(0, 1)) == 1);
        // H = 2 Lk12 Gamma^2 + sum Gamma^2 Wr_i, and ring writhes vanish.
        CHECK(rep.total == doctest::Approx(2.0 * rep.lk_raw(0, 1)).epsilon(1e-9));
        CHECK(rep.sl[0] == 0);
        CHECK(rep.sl[1] == 0);
    }

    SUBCASE("circulations scale the assembly") {
        Filament r1 = hopf_ring1(512), r2 = hopf_ring2(512);
        r1.gamma = 2.0;
        r2.gamma = 3.0;
        const HelicityReport rep = assemble_helicity(
            {r1, r2}, {frenet_framing(r1, 2.0), frenet_framing(r2, 2.0)});
        CHECK(rep.total ==
              doctest::Approx(2.0 * 2.0 * 3.0 * rep.lk_raw(0, 1)).epsilon(1e-9));
    }
}

TEST_CASE("calugareanu local integrals") {
    SUBCASE("kernel weight is 2") {
        const double closed_form = 2.0 * 1e4 / std::sqrt(1.0 + 1e8);
        CHECK(std::abs(kernel_integral(1e4) - closed_form) < 1e-12);
        CHECK(std::abs(kernel_integral(1e4) - 2.0) < 2e-8);
    }
    SUBCASE("tail integral limit is 1") {
        CHECK(std::abs(kernel_tail_integral(1e3) - 1.0) < 0.01);
    }
    SUBCASE("straight-arc probe approaches 2(tau + Theta')") {
        CalugareanuProbe p;
        p.tau0 = 1.0;
        p.theta_prime = 0.0;
        p.kappa0 = 0.0;
        p.arc_halfwidth = 1.0;
        double prev_err = 1e300;
        for (double eps : {1e-2, 1e-3, 1e-4}) {
            p.epsilon = eps;
            const double val = calugareanu_local_integral(p);
            // closed-form oracle for kappa = 0: 2H/sqrt(H^2+eps^2)
            const double oracle = 2.0 / std::sqrt(1.0 + eps * eps);
            CHECK(std::abs(val - oracle) < 1e-10);
            const double err = std::abs(val - 2.0);
            CHECK(err < prev_err);
            prev_err = err;
        }
    }
    SUBCASE("curved probe converges with first-order rate") {
        CalugareanuProbe p;
        p.tau0 = 0.7;
        p.theta_prime = 0.3;
        p.kappa0 = 0.8;
        p.theta0 = 0.5;
        p.arc_halfwidth = 1.0;
        p.epsilon = 1e-2;
        const double e1 = std::abs(calugareanu_local_integral(p) - 2.0);
        p.epsilon = 1e-3;
        const double e2 = std::abs(calugareanu_local_integral(p) - 2.0);
        CHECK(e1 / e2 > 5.0);
        CHECK(e1 / e2 < 20.0);
    }
    SUBCASE("order of limits is non-uniform") {
        CalugareanuProbe p;
        p.tau0 = 1.0;
        p.epsilon = 1e-3;
        const auto [eps_first, h_first] = calugareanu_order_of_limits(p);
        CHECK(std::abs(eps_first) < 1e-12);
        CHECK(h_first == doctest::Approx(1.0).epsilon(1e-6));
        CalugareanuProbe q;
        q.tau0 = 0.0;
        q.theta_prime = 0.0;
        q.kappa0 = 2.0;
        q.epsilon = 1e-3;
        const auto [e2, h2] = calugareanu_order_of_limits(q);
        CHECK(std::abs(e2) < 1e-12);
        CHECK(std::abs(h2) < 1e-6);
    }
    SUBCASE("probe validation") {
        CalugareanuProbe p;
        p.epsilon = 2.0;
        p.arc_halfwidth = 1.0;
        CHECK_THROWS_AS(calugareanu_local_integral(p), ValidationError);
    }
}

TEST_SUITE_END();
