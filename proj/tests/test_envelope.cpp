#include <gtest/gtest.h>

#include <cmath>

#include "geocaustic/envelope.hpp"
#include "support.hpp"

using namespace geocaustic;

TEST(Envelope, PlaneCircleHasOnlyTheCurve) {
    EnvelopeOptions o;
    o.trace.grid_n = 128;
    const EnvelopeDecomposition d = assemble_envelope(fx::plane_circle(1.0), -2, 2, o);
    EXPECT_TRUE(d.inflectional.empty());
    EXPECT_FALSE(d.truncated);
    for (const auto& b : d.branches) EXPECT_EQ(b.empty(), b.order != 0);
    EXPECT_TRUE(d.self_tangencies.empty());
}

TEST(Envelope, EllipsoidDecompositionHasOneInflectionalGeodesic) {
    EnvelopeOptions o;
    o.trace.t_max = 8.0;
    o.trace.grid_n = 128;
    const RegularCurve c = fx::ellipsoid_inflection_curve();
    const EnvelopeDecomposition d = assemble_envelope(c, -2, 2, o);
    ASSERT_EQ(d.inflectional.size(), 1u);
    EXPECT_FALSE(d.truncated);
    const InflectionalGeodesic& g = d.inflectional[0];
    ASSERT_TRUE(g.path);
    const ChartPoint on_curve = d.curve.point(g.xi);
    EXPECT_LT(c.surface().local_distance(on_curve, g.path->point(0.0)), 1e-12);
    EXPECT_NEAR(g.t.front(), -8.0, 1e-12);
    EXPECT_NEAR(g.t.back(), 8.0, 1e-12);
    for (int p = -2; p <= 2; ++p) {
        ASSERT_NE(d.branch(p), nullptr);
        EXPECT_FALSE(d.branch(p)->empty());
    }
    EXPECT_EQ(d.branch(3), nullptr);
}

TEST(Envelope, ShortHorizonMarksTruncation) {
    EnvelopeOptions o;
    o.trace.t_max = 3.7;
    o.trace.grid_n = 128;
    EXPECT_TRUE(assemble_envelope(fx::ellipsoid_inflection_curve(), -1, 1, o).truncated);
}

TEST(Envelope, NaifCrossingsConvergeToTheCaustic) {
    const RegularCurve c = fx::latitude_circle(fx::perturbed_sphere(), 0.5).arc_length_reparameterize();
    const Surface& s = c.surface();
    const double xi = 0.7;
    const auto caustic = conjugate_point(s, tangent_geodesic_seed(c, xi), 1, 10.0);
    ASSERT_TRUE(caustic);
    NaifOptions o;
    o.t_max = 4.0;
    std::vector<double> err;
    for (double eps : {2e-2, 1e-2, 5e-3}) {
        double best = HUGE_VAL;
        for (const auto& p : naif_crossings(c, xi, eps, o))
            if (p.t > 2.0) best = std::min(best, s.local_distance(caustic->point, s.to_chart(p.point, caustic->point.chart)));
        err.push_back(best);
    }
    ASSERT_LT(err[0], 0.1);
    for (std::size_t k = 1; k < err.size(); ++k) {
        const double order = std::log2(err[k - 1] / err[k]);
        EXPECT_GT(order, 0.8) << k;
    }
}

TEST(Envelope, NaifCrossingsOfPlaneCircleHugTheCurve) {
    const RegularCurve c = fx::plane_circle(1.0).arc_length_reparameterize();
    NaifOptions o;
    o.t_max = 5.0;
    const auto pts = naif_crossings(c, 1.0, 1e-3, o);
    ASSERT_EQ(pts.size(), 1u);
    // Tangent lines at angles 1 and 1 + eps meet at radius 1 / cos(eps / 2).
    EXPECT_NEAR(std::hypot(pts[0].point.u, pts[0].point.v), 1.0 / std::cos(5e-4), 1e-9);
    EXPECT_NEAR(pts[0].t, std::tan(5e-4), 1e-9);
}

TEST(Envelope, Theorem1OnTheSphere) {
    EnvelopeOptions o;
    o.trace.t_max = 10.0;
    o.trace.grid_n = 128;
    const EnvelopeDecomposition d = assemble_envelope(fx::latitude_circle(Surface::unit_sphere(), 0.5), -2, 2, o);
    const Theorem1Report r = verify_theorem1(d, 1e-4, 1e-3);
    EXPECT_EQ(r.coverage, 1.0);
    EXPECT_EQ(r.membership, 1.0);
    EXPECT_GT(r.cloud_size, 0u);
    EXPECT_TRUE(r.coverage_offenders.empty());
}

TEST(Envelope, Theorem1ReportsOffenders) {
    EnvelopeOptions o;
    o.trace.t_max = 10.0;
    o.trace.grid_n = 64;
    const EnvelopeDecomposition d = assemble_envelope(fx::latitude_circle(Surface::unit_sphere(), 0.5), -1, 1, o);
    const std::vector<NaifPoint> cloud = {{0.0, 1.0, {0, 0.0, 0.0}}, {0.0, 0.0, d.curve.point(0.0)}};
    const Theorem1Report r = verify_theorem1(d, cloud, 1e-3);
    EXPECT_EQ(r.cloud_size, 2u);
    EXPECT_DOUBLE_EQ(r.coverage, 0.5);
    ASSERT_EQ(r.coverage_offenders.size(), 1u);
    EXPECT_NEAR(r.coverage_offenders[0].distance, 0.5, 1e-6);
    EXPECT_LT(r.membership, 0.1);
}

TEST(Envelope, PencilCrossCheck) {
    PencilOptions o;
    o.grid_n = 200;
    const PencilReport plane = pencil_caustic_crosscheck(fx::plane_circle(1.0), 1, o);
    EXPECT_TRUE(plane.trivially_consistent);
    o.t_max = 8.0;
    const PencilReport e = pencil_caustic_crosscheck(fx::ellipsoid_inflection_curve(), 1, o);
    EXPECT_FALSE(e.trivially_consistent);
    EXPECT_GT(e.envelope_points, 0u);
    EXPECT_LT(e.hausdorff, 1e-6);
}

TEST(Envelope, InflectionCorrespondence) {
    TraceOptions o;
    o.t_max = 8.0;
    const RegularCurve c = fx::ellipsoid_inflection_curve().arc_length_reparameterize();
    for (int p : {1, -1, 2}) {
        const CorrespondenceReport r = inflection_correspondence(c, trace_caustic(c, p, o), 1e-2);
        ASSERT_EQ(r.matches.size(), 1u);
        EXPECT_TRUE(r.matches[0].inside_domain);
        EXPECT_TRUE(r.matches[0].matched) << p;
        EXPECT_EQ(r.unmatched, 0u);
    }
}

TEST(Envelope, CoincidentBranchesAreTangencyCandidates) {
    EnvelopeOptions o;
    o.trace.grid_n = 128;
    o.trace.t_max = 10.0;
    const EnvelopeDecomposition d = assemble_envelope(fx::latitude_circle(Surface::unit_sphere(), 0.5), -2, 2, o);
    // Sigma_2 and Sigma_-2 lie on the curve, Sigma_1 and Sigma_-1 on the antipodal circle.
    EXPECT_FALSE(d.self_tangencies.empty());
    for (const auto& t : d.self_tangencies) {
        EXPECT_LT(t.distance, 1e-3);
        EXPECT_LT(t.angle, 1e-3);
        EXPECT_NE(t.order_a, t.order_b);
    }
}
