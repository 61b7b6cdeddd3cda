#include <gtest/gtest.h>

#include <cmath>

#include "geocaustic/surface.hpp"
#include "support.hpp"

using namespace geocaustic;

namespace {

// Central differences of the metric, written independently of the library's own fallback.
Christoffel christoffel_oracle(const Surface& s, const ChartPoint& p, double h = 1e-5) {
    const auto g = [&](double du, double dv) {
        const Metric m = s.metric_at({p.chart, p.u + du, p.v + dv});
        return std::array<std::array<double, 2>, 2>{{{m.g11, m.g12}, {m.g12, m.g22}}};
    };
    std::array<std::array<std::array<double, 2>, 2>, 2> dg{};  // dg[k][i][j] = d_k g_ij
    const auto gu1 = g(h, 0), gu0 = g(-h, 0), gv1 = g(0, h), gv0 = g(0, -h);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            dg[0][i][j] = (gu1[i][j] - gu0[i][j]) / (2 * h);
            dg[1][i][j] = (gv1[i][j] - gv0[i][j]) / (2 * h);
        }
    const Metric inv = s.metric_at(p).inverse();
    const double gi[2][2] = {{inv.g11, inv.g12}, {inv.g12, inv.g22}};
    Christoffel c;
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int l = 0; l < 2; ++l)
                    c.gamma[k][i][j] += 0.5 * gi[k][l] * (dg[i][l][j] + dg[j][l][i] - dg[l][i][j]);
    return c;
}

// Brioschi formula with central differences of E, F, G.
double brioschi_oracle(const Surface& s, const ChartPoint& p, double h = 1e-3) {
    const auto E = [&](double du, double dv) { return s.metric_at({p.chart, p.u + du, p.v + dv}).g11; };
    const auto F = [&](double du, double dv) { return s.metric_at({p.chart, p.u + du, p.v + dv}).g12; };
    const auto G = [&](double du, double dv) { return s.metric_at({p.chart, p.u + du, p.v + dv}).g22; };
    const auto du = [&](auto f) { return (f(h, 0) - f(-h, 0)) / (2 * h); };
    const auto dv = [&](auto f) { return (f(0, h) - f(0, -h)) / (2 * h); };
    const auto duu = [&](auto f) { return (f(h, 0) - 2 * f(0, 0) + f(-h, 0)) / (h * h); };
    const auto dvv = [&](auto f) { return (f(0, h) - 2 * f(0, 0) + f(0, -h)) / (h * h); };
    const auto duv = [&](auto f) { return (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4 * h * h); };
    const double e = E(0, 0), f = F(0, 0), g = G(0, 0);
    const double eu = du(E), ev = dv(E), fu = du(F), fv = dv(F), gu = du(G), gv = dv(G);
    const double evv = dvv(E), fuv = duv(F), guu = duu(G);
    const double a11 = -0.5 * evv + fuv - 0.5 * guu;
    const double m1[3][3] = {{a11, 0.5 * eu, fu - 0.5 * ev}, {fv - 0.5 * gu, e, f}, {0.5 * gv, f, g}};
    const double m2[3][3] = {{0, 0.5 * ev, 0.5 * gu}, {0.5 * ev, e, f}, {0.5 * gu, f, g}};
    const auto det3 = [](const double m[3][3]) {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    };
    return (det3(m1) - det3(m2)) / std::pow(e * g - f * f, 2);
}

double ellipsoid_curvature(double c, double v) {
    const double s = std::sin(v), co = std::cos(v);
    return 1.0 / (c * c * std::pow(co * co + s * s / (c * c), 2));
}

}  // namespace

TEST(Surface, SphereMetricAndCurvature) {
    const Surface s = Surface::unit_sphere();
    for (double v : {-1.1, -0.3, 0.0, 0.7, 1.15}) {
        const ChartPoint p{0, 0.4, v};
        const Metric g = s.metric_at(p);
        EXPECT_NEAR(g.g11, std::cos(v) * std::cos(v), 1e-14);
        EXPECT_NEAR(g.g12, 0.0, 1e-14);
        EXPECT_NEAR(g.g22, 1.0, 1e-14);
        EXPECT_NEAR(s.gauss_curvature_at(p), 1.0, 1e-12);
    }
}

TEST(Surface, ConstantCurvatureModels) {
    EXPECT_DOUBLE_EQ(Surface::euclidean_plane().gauss_curvature_at({0, 3.0, -2.0}), 0.0);
    const Surface h = Surface::hyperbolic_half_plane();
    for (double y : {0.2, 1.0, 5.0}) EXPECT_NEAR(h.gauss_curvature_at({0, 1.0, y}), -1.0, 1e-12);
}

TEST(Surface, EllipsoidCurvatureMatchesClosedForm) {
    for (double c : {0.8, 1.2, 2.0}) {
        const Surface s = Surface::ellipsoid_of_revolution(c);
        for (double v : {-1.0, -0.2, 0.5, 1.1})
            EXPECT_NEAR(s.gauss_curvature_at({0, 0.9, v}), ellipsoid_curvature(c, v), 1e-10) << c << ' ' << v;
    }
}

TEST(Surface, AnalyticChristoffelAgreesWithFiniteDifferences) {
    const std::vector<std::pair<Surface, ChartPoint>> cases = {
        {Surface::unit_sphere(), {0, 0.3, 0.8}},
        {Surface::unit_sphere(), {1, -2.0, 0.4}},
        {Surface::ellipsoid_of_revolution(1.2), {0, 1.0, -0.6}},
        {Surface::hyperbolic_half_plane(), {0, 0.5, 0.7}},
        {fx::perturbed_sphere(), {0, 2.0, 0.3}},
    };
    for (const auto& [s, p] : cases) {
        const Christoffel a = s.christoffel_at(p), b = christoffel_oracle(s, p);
        for (int k = 0; k < 2; ++k)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) EXPECT_NEAR(a(k, i, j), b(k, i, j), 1e-8);
    }
}

TEST(Surface, CurvatureAgreesWithBrioschi) {
    const std::vector<std::pair<Surface, ChartPoint>> cases = {
        {Surface::ellipsoid_of_revolution(1.2), {0, 1.0, -0.6}},
        {Surface::hyperbolic_half_plane(), {0, 0.5, 0.7}},
        {fx::perturbed_sphere(), {0, 2.0, 0.3}},
        {fx::perturbed_sphere(), {1, 0.4, -0.9}},
    };
    for (const auto& [s, p] : cases) EXPECT_NEAR(s.gauss_curvature_at(p), brioschi_oracle(s, p), 1e-5);
}

TEST(Surface, CustomMetricUsesFiniteDifferenceFallback) {
    // Poincare half-plane written as a user metric.
    const Surface s = Surface::custom(Expression::parse("1/v^2"), Expression::parse("0"),
                                      Expression::parse("1/v^2"), {-10, 10, 0.01, 10});
    const ChartPoint p{0, 0.3, 1.7};
    EXPECT_NEAR(s.gauss_curvature_at(p), -1.0, 1e-5);
    const Christoffel a = s.christoffel_at(p);
    EXPECT_NEAR(a(0, 0, 1), -1.0 / 1.7, 1e-7);
    EXPECT_NEAR(a(1, 0, 0), 1.0 / 1.7, 1e-7);
    EXPECT_NEAR(a(1, 1, 1), -1.0 / 1.7, 1e-7);
}

TEST(Surface, ZeroAmplitudePerturbationIsTheBaseMetric) {
    const Surface base = Surface::ellipsoid_of_revolution(1.2);
    const Surface p = Surface::conformal_perturbation(base, 0.0);
    for (double v : {-0.9, 0.1, 1.0}) {
        const ChartPoint q{0, 0.7, v};
        const Metric a = base.metric_at(q), b = p.metric_at(q);
        EXPECT_EQ(a.g11, b.g11);
        EXPECT_EQ(a.g12, b.g12);
        EXPECT_EQ(a.g22, b.g22);
        EXPECT_NEAR(base.gauss_curvature_at(q), p.gauss_curvature_at(q), 1e-12);
    }
}

TEST(Surface, ConformalFactorIsExponentialOfBump) {
    const BumpSpec bump;
    const Surface base = Surface::unit_sphere();
    const Surface p = Surface::conformal_perturbation(base, 0.05, bump);
    const ChartPoint q{0, 1.3, 0.4};
    const double f = bump.value(base.ambient(q));
    EXPECT_NEAR(p.metric_at(q).g11, std::exp(0.1 * f) * base.metric_at(q).g11, 1e-14);
}

TEST(Surface, BumpDerivativesMatchFiniteDifferences) {
    const BumpSpec b;
    const Vec3 x{0.3, -0.5, 0.8};
    const double h = 1e-6;
    const Vec3 grad = b.gradient(x);
    const auto hess = b.hessian(x);
    for (int i = 0; i < 3; ++i) {
        Vec3 xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        EXPECT_NEAR(grad[i], (b.value(xp) - b.value(xm)) / (2 * h), 1e-8);
        const Vec3 gp = b.gradient(xp), gm = b.gradient(xm);
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(hess[i][j], (gp[j] - gm[j]) / (2 * h), 1e-7);
    }
}

TEST(Surface, ChartSwitchRoundTripPreservesPointAndSpeed) {
    const Surface s = Surface::ellipsoid_of_revolution(1.2);
    const ChartPoint p{0, 0.8, 0.5};
    const Vec2 t{0.3, -0.7};
    const auto [q, tq] = s.switch_chart(p, t, 1);
    EXPECT_EQ(q.chart, 1);
    const auto [r, tr] = s.switch_chart(q, tq, 0);
    EXPECT_NEAR(r.u, p.u, 1e-12);
    EXPECT_NEAR(r.v, p.v, 1e-12);
    EXPECT_NEAR(tr[0], t[0], 1e-12);
    EXPECT_NEAR(tr[1], t[1], 1e-12);
    EXPECT_NEAR(s.metric_at(q).norm(tq), s.metric_at(p).norm(t), 1e-12);
    const Vec3 a = s.ambient(p), b = s.ambient(q);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(a[i], b[i], 1e-13);
}

TEST(Surface, PreferredChartNearPoles) {
    const Surface s = Surface::unit_sphere();
    const auto [q, t] = s.to_preferred({0, 0.0, 1.4}, {1.0, 0.0});
    EXPECT_EQ(q.chart, 1);
    EXPECT_LE(std::abs(q.v), kSphereChartLatitudeLimit);
    const auto [r, tr] = s.to_preferred({0, 0.0, 0.3}, {1.0, 0.0});
    EXPECT_EQ(r.chart, 0);
    (void)t;
    (void)tr;
}

TEST(Surface, DomainErrors) {
    const Surface h = Surface::hyperbolic_half_plane();
    try {
        h.metric_at({0, 0.0, -1.0});
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::PointOutsideDomain);
    }
    EXPECT_THROW(h.chart(3), Error);
}

TEST(Surface, ClosedSurfaces) {
    EXPECT_TRUE(Surface::unit_sphere().is_closed());
    EXPECT_TRUE(Surface::ellipsoid_of_revolution(1.2).is_closed());
    EXPECT_TRUE(fx::perturbed_sphere().is_closed());
    EXPECT_FALSE(Surface::euclidean_plane().is_closed());
    EXPECT_FALSE(Surface::hyperbolic_half_plane().is_closed());
}

TEST(Surface, LocalDistanceMatchesGreatCircleAtSmallScale) {
    const Surface s = Surface::unit_sphere();
    const ChartPoint a{0, 0.3, 0.5}, b{0, 0.3005, 0.5004};
    EXPECT_NEAR(s.local_distance(a, b), fx::great_circle(a.u, a.v, b.u, b.v), 1e-9);
}
