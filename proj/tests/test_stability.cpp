#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "json.hpp"
#include "geocaustic/proximity.hpp"
#include "geocaustic/stability.hpp"
#include "support.hpp"

using namespace geocaustic;

namespace {

SingularityRecord cusp_at(double u, double v, double xi) {
    SingularityRecord r;
    r.kind = SingularityRecord::Kind::Cusp;
    r.location = {0, u, v};
    r.xi = {xi};
    return r;
}

// Brute-force Hausdorff distance between two latitude circles using exact great-circle distances.
double latitude_oracle(double v1, double v2) {
    const int n = 720;
    double h = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = 2.0 * std::numbers::pi * i / n;
        double best = HUGE_VAL;
        for (int j = 0; j < n; ++j) best = std::min(best, fx::great_circle(u, v1, 2.0 * std::numbers::pi * j / n, v2));
        h = std::max(h, best);
    }
    return h;
}

StabilityOptions quick_options() {
    StabilityOptions o;
    o.trace.grid_n = 256;
    o.trace.t_max = 10.0;
    return o;
}

}  // namespace

TEST(Stability, HausdorffOfConcentricPlaneCircles) {
    const Surface s = Surface::euclidean_plane();
    const double h = hausdorff_distance(image_of(fx::plane_circle(1.0), 64), image_of(fx::plane_circle(1.1), 64), s);
    EXPECT_NEAR(h, 0.1, 1e-6);
}

TEST(Stability, HausdorffOfSphereLatitudes) {
    const Surface s = Surface::unit_sphere();
    const double h = hausdorff_distance(image_of(fx::latitude_circle(s, 0.5), 128),
                                        image_of(fx::latitude_circle(s, 0.51), 128), s);
    EXPECT_NEAR(h, latitude_oracle(0.5, 0.51), 1e-4);
    EXPECT_NEAR(h, 0.01, 1e-4);
}

TEST(Stability, HausdorffIsSymmetricAndZeroOnItself) {
    const Surface s = Surface::unit_sphere();
    const SampledImage a = image_of(fx::latitude_circle(s, 0.3), 100);
    const SampledImage b = image_of(fx::latitude_circle(s, 0.4), 77);
    EXPECT_DOUBLE_EQ(hausdorff_distance(a, b, s), hausdorff_distance(b, a, s));
    EXPECT_LT(hausdorff_distance(a, a, s), 1e-12);
}

TEST(Stability, HausdorffOfEmptyImageThrows) {
    const Surface s = Surface::unit_sphere();
    EXPECT_EQ(fx::error_kind([&] { hausdorff_distance(SampledImage{}, image_of(fx::latitude_circle(s, 0.3), 16), s); }),
              ErrorKind::EmptyInput);
}

TEST(Stability, GreedyMatchingPrefersClosestPairs) {
    const Surface s = Surface::euclidean_plane();
    // Nearest-per-base matching would pair 0.1 with 0.3; greedy takes the closer (0.2, 0.3) first.
    const std::vector<SingularityRecord> base = {cusp_at(0.0, 0.0, 0.1), cusp_at(1.0, 0.0, 0.2)};
    const std::vector<SingularityRecord> pert = {cusp_at(0.6, 0.0, 0.3), cusp_at(-0.7, 0.0, 0.4)};
    const auto m = match_singularities(base, pert, s, 2.0);
    ASSERT_EQ(m.size(), 2u);
    EXPECT_DOUBLE_EQ(m[0].base_xi, 0.1);
    EXPECT_DOUBLE_EQ(m[0].perturbed_xi, 0.4);
    EXPECT_NEAR(m[0].displacement, 0.7, 1e-12);
    EXPECT_DOUBLE_EQ(m[1].base_xi, 0.2);
    EXPECT_DOUBLE_EQ(m[1].perturbed_xi, 0.3);
    EXPECT_NEAR(m[1].displacement, 0.4, 1e-12);
    const auto near = match_singularities(base, pert, s, 0.5);
    ASSERT_EQ(near.size(), 1u);
    EXPECT_DOUBLE_EQ(near[0].base_xi, 0.2);
}

TEST(Stability, GreedyMatchingBreaksTiesBySmallerBaseParameter) {
    const Surface s = Surface::euclidean_plane();
    const std::vector<SingularityRecord> base = {cusp_at(1.0, 0.0, 0.7), cusp_at(-1.0, 0.0, 0.2)};
    const std::vector<SingularityRecord> pert = {cusp_at(0.0, 0.0, 0.5)};
    const auto m = match_singularities(base, pert, s, 2.0);
    ASSERT_EQ(m.size(), 1u);
    EXPECT_DOUBLE_EQ(m[0].base_xi, 0.2);
}

TEST(Stability, MatchingIgnoresOtherKinds) {
    const Surface s = Surface::euclidean_plane();
    SingularityRecord x = cusp_at(0.0, 0.0, 0.5);
    x.kind = SingularityRecord::Kind::SelfIntersection;
    x.xi = {0.5, 0.9};
    EXPECT_TRUE(match_singularities({cusp_at(0.0, 0.0, 0.1)}, {x}, s, 1.0).empty());
    EXPECT_EQ(count_singularities({x, cusp_at(0, 0, 0), cusp_at(1, 0, 0)}), (SingularityCounts{2, 1}));
}

TEST(Stability, PerturbationIsDeterministicPerSeed) {
    const Perturbation a = perturbation_for_seed(7), b = perturbation_for_seed(7), c = perturbation_for_seed(8);
    EXPECT_EQ(a.curve.mode, b.curve.mode);
    EXPECT_EQ(a.curve.phase, b.curve.phase);
    EXPECT_EQ(a.metric.phase, b.metric.phase);
    EXPECT_NE(a.metric.phase, c.metric.phase);
    EXPECT_GE(a.curve.mode, 2);
    EXPECT_LE(a.curve.mode, 4);
}

TEST(Stability, ZeroLambdaIsIdentical) {
    const RegularCurve c = fx::latitude_circle(fx::perturbed_sphere(), 1.2);
    const auto r = stability_experiment(c, 1, {0.0, 1e-4}, {1}, quick_options());
    ASSERT_EQ(r.size(), 2u);
    EXPECT_TRUE(r[0].identical);
    EXPECT_EQ(r[0].hausdorff, 0.0);
    EXPECT_EQ(r[0].verdict, Verdict::Stable);
    EXPECT_EQ(r[0].base_counts, r[0].perturbed_counts);
    EXPECT_FALSE(r[1].identical);
    EXPECT_GT(r[1].hausdorff, 0.0);
    EXPECT_LT(r[1].hausdorff, 1e-2);
    EXPECT_EQ(r[1].verdict, Verdict::Stable);
    for (const auto& m : r[1].matches) EXPECT_LE(m.displacement, 20.0 * 1e-4);
}

TEST(Stability, ReportsAreIndependentOfJobs) {
    const RegularCurve c = fx::latitude_circle(fx::perturbed_sphere(), 1.2);
    StabilityOptions o = quick_options();
    const auto serial = stability_csv(stability_experiment(c, 1, {0.0, 1e-3}, {1, 2}, o));
    o.jobs = 4;
    EXPECT_EQ(serial, stability_csv(stability_experiment(c, 1, {0.0, 1e-3}, {1, 2}, o)));
}

TEST(Stability, NonConvexSurfaceIsRejected) {
    const RegularCurve c = fx::expression_curve(Surface::hyperbolic_half_plane(), "cos(t)", "2+sin(t)", 0.0,
                                                2.0 * std::numbers::pi, true);
    EXPECT_EQ(fx::error_kind([&] { stability_experiment(c, 1, {0.0, 1e-4}, {1}, quick_options()); }),
              ErrorKind::ConvexityViolation);
    EXPECT_EQ(fx::error_kind([] { stability_experiment(fx::plane_circle(1.0), 1, {0.0}, {1}, quick_options()); }),
              ErrorKind::ConvexityViolation);
}

TEST(Stability, OpenCurveIsRejected) {
    EXPECT_EQ(fx::error_kind([] { stability_experiment(fx::ellipsoid_inflection_curve(), 1, {0.0}, {1}, quick_options()); }),
              ErrorKind::InvalidArgument);
}

TEST(Stability, SampledCurvatureOfSphereIsOne) {
    EXPECT_NEAR(sampled_min_curvature(Surface::unit_sphere(), 16), 1.0, 1e-9);
    EXPECT_LT(sampled_min_curvature(Surface::hyperbolic_half_plane(), 16), 0.0);
}

TEST(Stability, CsvAndJsonLayout) {
    StabilityReport r;
    r.p = 1;
    r.lambda = 1e-4;
    r.seed = 3;
    r.base_counts = r.perturbed_counts = {8, 4};
    r.hausdorff = 0.25;
    const std::string csv = stability_csv({r});
    EXPECT_EQ(csv,
              "p,lambda,kind,base_count,pert_count,hausdorff,verdict\n"
              "1,1e-04,cusp,8,8,0.25,stable\n"
              "1,1e-04,self-intersection,4,4,0.25,stable\n");
    const auto j = nlohmann::json::parse(stability_json({r}));
    ASSERT_TRUE(j.is_array());
    ASSERT_EQ(j.size(), 1u);
    EXPECT_EQ(j[0]["p"], 1);
    EXPECT_EQ(j[0]["seed"], 3);
    EXPECT_EQ(j[0]["verdict"], "stable");
    EXPECT_DOUBLE_EQ(j[0]["hausdorff"].get<double>(), 0.25);
}

TEST(Stability, AdmissibleLambdaCoversTheStableSweep) {
    const RegularCurve c = fx::latitude_circle(fx::perturbed_sphere(), 1.2);
    const auto a = admissible_lambdas(c, {1}, {1e-4, 1e-3}, {1}, quick_options());
    ASSERT_EQ(a.count(1), 1u);
    EXPECT_DOUBLE_EQ(a.at(1), 1e-3);
}

TEST(Proximity, NearestAgreesWithBruteForce) {
    const Surface s = Surface::unit_sphere();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 2.0 * kPi), v(-1.0, 1.0);
    std::vector<ChartPoint> pts;
    for (int i = 0; i < 40; ++i) pts.push_back({0, u(rng), v(rng)});
    for (double cell : {1e-3, 0.5}) {
        ProximityIndex index(s, cell);
        index.add_points(pts);
        for (int k = 0; k < 200; ++k) {
            const ChartPoint q{0, u(rng), v(rng)};
            double best = HUGE_VAL;
            for (const auto& p : pts) best = std::min(best, s.local_distance(p, q));
            const Nearest n = index.nearest(q);
            ASSERT_TRUE(n.found);
            EXPECT_DOUBLE_EQ(n.distance, best) << cell;
            EXPECT_EQ(index.nearest(q, 0.5 * best).found, false);
        }
    }
}
