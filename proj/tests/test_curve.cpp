#include <gtest/gtest.h>

#include <cmath>

#include "geocaustic/flow.hpp"
#include "support.hpp"

using namespace geocaustic;

namespace {

// Composite Simpson rule, independent of the library's Gauss-Legendre table.
template <class F>
double simpson(F f, double a, double b, int n = 20000) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

}  // namespace

TEST(Curve, ArcLengthMatchesQuadrature) {
    const RegularCurve c = fx::expression_curve(Surface::euclidean_plane(), "2*cos(t)", "sin(t)", 0, 2 * kPi, true);
    const double expect = simpson([](double t) { return std::hypot(2 * std::sin(t), std::cos(t)); }, 0, 2 * kPi);
    EXPECT_NEAR(c.length(), expect, 1e-10);

    const Surface sphere = Surface::unit_sphere();
    const RegularCurve w = fx::expression_curve(sphere, "t", "0.3*sin(2*t)", 0, 2 * kPi, true);
    const double ws = simpson(
        [](double t) {
            const double v = 0.3 * std::sin(2 * t), dv = 0.6 * std::cos(2 * t);
            return std::sqrt(std::cos(v) * std::cos(v) + dv * dv);
        },
        0, 2 * kPi);
    EXPECT_NEAR(w.length(), ws, 1e-10);
}

TEST(Curve, ArcLengthParameterHasUnitSpeed) {
    const RegularCurve c =
        fx::expression_curve(Surface::ellipsoid_of_revolution(1.2), "t", "0.3*sin(t)", -1.2, 1.2, false)
            .arc_length_reparameterize();
    EXPECT_TRUE(c.arc_length());
    EXPECT_DOUBLE_EQ(c.xi_min(), 0.0);
    for (int i = 0; i <= 50; ++i) EXPECT_NEAR(c.speed(c.length() * i / 50), 1.0, 1e-9);
    // xi is the arc length from the start.
    const double half = simpson([&](double t) { return c.speed(t); }, 0.0, 0.5 * c.length(), 2000);
    EXPECT_NEAR(half, 0.5 * c.length(), 1e-9);
}

TEST(Curve, GeodesicCurvatureOfCircles) {
    for (double r : {0.5, 1.0, 3.0}) {
        const RegularCurve c = fx::plane_circle(r).arc_length_reparameterize();
        for (double xi : {0.1, 1.0, 2.5}) EXPECT_NEAR(geodesic_curvature(c, xi), 1.0 / r, 1e-9);
        EXPECT_NEAR(geodesic_curvature(c.reversed(), 0.7), -1.0 / r, 1e-9);
    }
    for (double v : {-0.8, 0.2, 0.5, 1.3}) {
        const RegularCurve c = fx::latitude_circle(Surface::unit_sphere(), v).arc_length_reparameterize();
        EXPECT_NEAR(geodesic_curvature(c, 0.3), std::tan(v), 1e-9) << v;
    }
}

TEST(Curve, InflectionsMatchFineScan) {
    const RegularCurve c =
        fx::expression_curve(Surface::euclidean_plane(), "t", "0.3*sin(2*t)", -2.0, 2.0, false).arc_length_reparameterize();
    // Oracle: sign changes of v'' on a fine t grid, bisected, then mapped to arc length.
    const auto k = [](double t) { return -1.2 * std::sin(2 * t); };
    const auto speed = [](double t) { return std::hypot(1.0, 0.6 * std::cos(2 * t)); };
    std::vector<double> expect;
    for (double t = -2.0 + 0.05; t < 2.0 - 0.05; t += 1e-3) {
        if ((k(t) > 0) == (k(t + 1e-3) > 0)) continue;
        double a = t, b = t + 1e-3;
        for (int i = 0; i < 60; ++i) {
            const double m = 0.5 * (a + b);
            ((k(a) > 0) == (k(m) > 0) ? a : b) = m;
        }
        expect.push_back(simpson(speed, -2.0, 0.5 * (a + b), 4000));
    }
    const auto found = find_inflections(c);
    ASSERT_EQ(found.size(), expect.size());
    for (std::size_t i = 0; i < found.size(); ++i) {
        EXPECT_NEAR(found[i].xi, expect[i], 1e-8);
        EXPECT_EQ(found[i].kind, InflectionRecord::Kind::Simple);
    }
}

TEST(Curve, FlatInflectionIsDegenerate) {
    const RegularCurve c =
        fx::expression_curve(Surface::euclidean_plane(), "t", "t^5", -1.0, 1.0, false).arc_length_reparameterize();
    const auto found = find_inflections(c);
    ASSERT_EQ(found.size(), 1u);
    EXPECT_EQ(found[0].kind, InflectionRecord::Kind::Degenerate);
}

TEST(Curve, CirclesHaveNoInflections) {
    EXPECT_TRUE(find_inflections(fx::plane_circle(1.0).arc_length_reparameterize()).empty());
    EXPECT_TRUE(find_inflections(fx::latitude_circle(Surface::unit_sphere(), 0.5).arc_length_reparameterize()).empty());
}

TEST(Curve, ReversalFlipsCurvatureAndParameter) {
    const RegularCurve c = fx::ellipsoid_inflection_curve().arc_length_reparameterize();
    const RegularCurve r = c.reversed();
    EXPECT_NEAR(r.length(), c.length(), 1e-12);
    for (double xi : {0.2, 1.0, 2.0}) {
        const ChartPoint a = c.point(xi), b = r.point(c.length() - xi);
        EXPECT_NEAR(a.u, b.u, 1e-10);
        EXPECT_NEAR(a.v, b.v, 1e-10);
        EXPECT_NEAR(geodesic_curvature(c, xi), -geodesic_curvature(r, c.length() - xi), 1e-8);
    }
}

TEST(Curve, SampledCurveApproximatesExpression) {
    const Surface s = Surface::unit_sphere();
    std::vector<ChartPoint> pts;
    const int n = 256;
    for (int i = 0; i < n; ++i) {
        const double t = 2 * kPi * i / n;
        pts.push_back({0, t, 0.5 + 0.1 * std::sin(t)});
    }
    const RegularCurve sampled(s, spline_curve_map(pts, 0, 2 * kPi, true, 2 * kPi), 0, 2 * kPi, true);
    const RegularCurve exact = fx::expression_curve(s, "t", "0.5+0.1*sin(t)", 0, 2 * kPi, true);
    EXPECT_NEAR(sampled.length(), exact.length(), 1e-8);
    for (double t : {0.05, 1.3, 4.0}) {
        const ChartPoint a = sampled.point(t), b = exact.point(t);
        EXPECT_NEAR(a.u, b.u, 1e-7);
        EXPECT_NEAR(a.v, b.v, 1e-7);
        EXPECT_NEAR(geodesic_curvature(sampled, t), geodesic_curvature(exact, t), 1e-4);
    }
}

TEST(Curve, ClosedCurveIsPeriodic) {
    const RegularCurve c = fx::latitude_circle(Surface::unit_sphere(), 0.5).arc_length_reparameterize();
    const ChartPoint a = c.point(0.4), b = c.point(0.4 + c.length());
    EXPECT_NEAR(std::remainder(a.u - b.u, 2 * kPi), 0.0, 1e-12);
    EXPECT_NEAR(a.v, b.v, 1e-12);
}

TEST(Curve, TangentGeodesicHasFirstOrderContact) {
    const RegularCurve c = fx::ellipsoid_inflection_curve().arc_length_reparameterize();
    const auto infl = find_inflections(c);
    ASSERT_EQ(infl.size(), 1u);
    const Surface& s = c.surface();
    const auto slope = [&](double xi) {
        const GeodesicPath g = shoot(s, tangent_geodesic_seed(c, xi), 0.0, 0.02);
        const double d2 = s.local_distance(c.point(xi + 1e-2), g.point(1e-2));
        const double d3 = s.local_distance(c.point(xi + 1e-3), g.point(1e-3));
        return std::log10(d2 / d3);
    };
    EXPECT_NEAR(slope(0.5), 2.0, 0.1);
    EXPECT_NEAR(slope(infl[0].xi), 3.0, 0.1);
}

TEST(Curve, ConstantNormalPerturbationOfCircle) {
    CurveBump bump;
    bump.kind = CurveBump::Kind::Constant;
    const RegularCurve p = perturb_curve(fx::plane_circle(1.0), 0.1, bump);
    EXPECT_NEAR(p.length(), 2 * kPi * 1.1, 1e-6);
    for (double xi : {0.0, 1.0, 3.0}) EXPECT_NEAR(std::hypot(p.point(xi).u, p.point(xi).v), 1.1, 1e-7);
    EXPECT_EQ(perturb_curve(fx::plane_circle(1.0), 0.0, bump).length(), fx::plane_circle(1.0).length());
}

TEST(Curve, SingularParameterizationIsRejected) {
    const RegularCurve c = fx::expression_curve(Surface::euclidean_plane(), "t^2", "t^3", -1.0, 1.0, false);
    try {
        c.arc_length_reparameterize();
        FAIL() << "expected RegularityViolation";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::RegularityViolation);
        EXPECT_NEAR(e.where(), 0.0, 1e-3);
    }
    EXPECT_THROW(fx::expression_curve(Surface::euclidean_plane(), "t", "t", 1.0, 1.0, false), Error);
}
