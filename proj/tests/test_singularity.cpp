#include <gtest/gtest.h>

#include <cmath>

#include "geocaustic/caustic.hpp"
#include "support.hpp"

using namespace geocaustic;

namespace {

std::vector<SingularityRecord> of_kind(const std::vector<SingularityRecord>& v, SingularityRecord::Kind k) {
    std::vector<SingularityRecord> out;
    for (const auto& r : v)
        if (r.kind == k) out.push_back(r);
    return out;
}

}  // namespace

TEST(Singularity, SyntheticTriplePointMatchesBruteForce) {
    const fx::Param f = [](double t) { return Vec2{t * t * t - 3 * t, 3 * t * t - t * t * t * t}; };
    const fx::Param df = [](double t) { return Vec2{3 * t * t - 3, 6 * t - 4 * t * t * t}; };
    const double a = -2.1, b = 2.1;
    const auto oracle = fx::brute_force_crossings(f, df, a, b, 4000);
    ASSERT_EQ(oracle.size(), 3u);
    for (const auto& c : oracle) {
        EXPECT_NEAR(c.x[0], 0.0, 1e-12);
        EXPECT_NEAR(c.x[1], 0.0, 1e-12);
    }
    const auto found = of_kind(detect_singularities(fx::synthetic_branch(f, a, b, 600), Surface::euclidean_plane()),
                               SingularityRecord::Kind::SelfIntersection);
    ASSERT_EQ(found.size(), oracle.size());
    for (const auto& c : oracle) {
        bool hit = false;
        for (const auto& r : found) {
            ASSERT_EQ(r.xi.size(), 2u);
            const double s = std::min(r.xi[0], r.xi[1]), t = std::max(r.xi[0], r.xi[1]);
            if (std::abs(s - c.s) < 1e-6 && std::abs(t - c.t) < 1e-6) {
                hit = true;
                EXPECT_NEAR(r.location.u, c.x[0], 1e-6);
                EXPECT_NEAR(r.location.v, c.x[1], 1e-6);
                EXPECT_FALSE(r.degenerate);
                EXPECT_GT(r.angle, 1e-3);
            }
        }
        EXPECT_TRUE(hit) << c.s << ' ' << c.t;
    }
    EXPECT_TRUE(of_kind(detect_singularities(fx::synthetic_branch(f, a, b, 600), Surface::euclidean_plane()),
                        SingularityRecord::Kind::Cusp)
                    .empty());
}

TEST(Singularity, SemicubicCuspIsDetected) {
    const fx::Param f = [](double t) { return Vec2{t * t, t * t * t}; };
    const auto found = of_kind(detect_singularities(fx::synthetic_branch(f, -0.7, 0.6, 401), Surface::euclidean_plane()),
                               SingularityRecord::Kind::Cusp);
    ASSERT_EQ(found.size(), 1u);
    EXPECT_NEAR(found[0].xi[0], 0.0, 1e-6);
    EXPECT_NEAR(found[0].location.u, 0.0, 1e-6);
    EXPECT_NEAR(found[0].location.v, 0.0, 1e-6);
    EXPECT_FALSE(found[0].degenerate);
}

TEST(Singularity, HigherOrderCuspIsFlaggedDegenerate) {
    const fx::Param f = [](double t) { return Vec2{t * t, t * t * t * t * t}; };
    const auto found = of_kind(detect_singularities(fx::synthetic_branch(f, -0.7, 0.6, 401), Surface::euclidean_plane()),
                               SingularityRecord::Kind::Cusp);
    ASSERT_EQ(found.size(), 1u);
    EXPECT_TRUE(found[0].degenerate);
}

TEST(Singularity, TangentialContactIsNotTransversal) {
    const fx::Param g = [](double t) { return Vec2{std::sin(2 * t), std::sin(t) * std::sin(t) * std::sin(t)}; };
    // sin(2t) vanishes at t = 0 and t = pi/2 while y = sin^3 t has a flat zero at t = 0 only;
    // the crossing at the origin between t = 0 and t = pi is tangential (y ~ t^3 on both arcs).
    const auto found = of_kind(detect_singularities(fx::synthetic_branch(g, -0.5, 3.6, 800), Surface::euclidean_plane()),
                               SingularityRecord::Kind::SelfIntersection);
    for (const auto& r : found)
        if (std::hypot(r.location.u, r.location.v) < 1e-4) {
            EXPECT_TRUE(r.degenerate || r.angle <= 1e-3);
        }
}

TEST(Singularity, PerturbedSphereRegularCircleHasNoCusps) {
    const RegularCurve c = fx::latitude_circle(fx::perturbed_sphere(), 0.5).arc_length_reparameterize();
    const CausticBranch b = trace_caustic(c, 1);
    const auto s = detect_singularities(b, c.surface());
    EXPECT_TRUE(of_kind(s, SingularityRecord::Kind::Cusp).empty());
}

TEST(Singularity, PerturbedSphereCuspCountIsGridIndependent) {
    const RegularCurve c = fx::latitude_circle(fx::perturbed_sphere(), 1.2).arc_length_reparameterize();
    std::vector<std::size_t> counts;
    for (int n : {500, 1000}) {
        TraceOptions o;
        o.grid_n = n;
        const CausticBranch b = trace_caustic(c, 1, o);
        const auto cusps = of_kind(detect_singularities(b, c.surface()), SingularityRecord::Kind::Cusp);
        for (const auto& r : cusps) EXPECT_FALSE(r.degenerate);
        counts.push_back(cusps.size());
    }
    EXPECT_EQ(counts[0], counts[1]);
    EXPECT_EQ(counts[0] % 2, 0u);
    EXPECT_GE(counts[0], 4u);
}

TEST(Singularity, BranchInflectionsAreRecorded) {
    const RegularCurve c = fx::ellipsoid_inflection_curve().arc_length_reparameterize();
    TraceOptions o;
    o.t_max = 8.0;
    const CausticBranch b = trace_caustic(c, 1, o);
    const auto infl = of_kind(detect_singularities(b, c.surface()), SingularityRecord::Kind::Inflection);
    const auto curve_infl = find_inflections(c);
    ASSERT_EQ(infl.size(), 1u);
    ASSERT_EQ(curve_infl.size(), 1u);
    EXPECT_NEAR(infl[0].xi[0], curve_infl[0].xi, 1e-2);
}
