#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "geocaustic/expression.hpp"
#include "geocaustic/types.hpp"

namespace geocaustic {

/// Open coordinate box (u0, u1) x (v0, v1).
struct Box {
    double u0, u1, v0, v1;

    bool contains(double u, double v) const { return u > u0 && u < u1 && v > v0 && v < v1; }
};

/// Ambient position of a chart point with first and second coordinate derivatives.
/// Used for chart transitions and for evaluating ambient-defined bump functions.
struct AmbientJet {
    Vec3 x{};
    std::array<Vec3, 2> d{};
    std::array<std::array<Vec3, 2>, 2> dd{};
};

class Chart {
public:
    virtual ~Chart() = default;

    virtual Box domain() const = 0;
    virtual Metric metric(double u, double v) const = 0;
    virtual std::optional<Christoffel> christoffel(double, double) const { return std::nullopt; }
    virtual std::optional<double> curvature(double, double) const { return std::nullopt; }
    virtual std::optional<AmbientJet> ambient(double, double) const { return std::nullopt; }
    virtual std::optional<Vec2> from_ambient(const Vec3&) const { return std::nullopt; }
    /// Region in which integration should stay in this chart.
    virtual bool preferred(double, double) const { return true; }
    /// Period of the u coordinate, 0 if not periodic.
    virtual double u_period() const { return 0.0; }
};

/// Smooth bump f(x, y, z) = prod_i cos(freq_i * x_i + phase_i) of the ambient coordinates.
struct BumpSpec {
    Vec3 freq{2.0, 3.0, 1.0};
    Vec3 phase{0.3, 0.7, 0.1};

    double value(const Vec3& p) const;
    Vec3 gradient(const Vec3& p) const;
    std::array<Vec3, 3> hessian(const Vec3& p) const;
};

enum class SurfaceKind {
    EuclideanPlane,
    UnitSphere,
    HyperbolicHalfPlane,
    EllipsoidOfRevolution,
    ConformalPerturbation,
    Custom,
};

struct SurfaceDescriptor {
    SurfaceKind kind = SurfaceKind::EuclideanPlane;
    double c = 1.0;          // ellipsoid polar semi-axis
    double amplitude = 0.0;  // conformal perturbation lambda
    BumpSpec bump;
    std::shared_ptr<const SurfaceDescriptor> base;

    std::string name() const;
};

/// A complete Riemannian surface realized by an atlas of charts. Immutable and cheap to copy.
class Surface {
public:
    static Surface euclidean_plane();
    static Surface unit_sphere();
    static Surface hyperbolic_half_plane();
    static Surface ellipsoid_of_revolution(double c);
    /// g = exp(2 * amplitude * f) * g_base with f the bump of the base surface's ambient point.
    static Surface conformal_perturbation(const Surface& base, double amplitude,
                                          const BumpSpec& bump = {});
    /// User metric given by expressions in u and v on a single chart.
    static Surface custom(const Expression& g11, const Expression& g12, const Expression& g22,
                          const Box& domain);

    Metric metric_at(const ChartPoint& p) const;
    Christoffel christoffel_at(const ChartPoint& p) const;
    double gauss_curvature_at(const ChartPoint& p) const;

    /// Expresses point and tangent in chart `target`. Throws NoOverlappingChart.
    std::pair<ChartPoint, Vec2> switch_chart(const ChartPoint& p, const Vec2& tangent,
                                             int target) const;
    ChartPoint to_chart(const ChartPoint& p, int target) const;
    /// Same point re-expressed in the chart it prefers (itself if already preferred).
    std::pair<ChartPoint, Vec2> to_preferred(const ChartPoint& p, const Vec2& tangent) const;

    /// Coordinate difference b - a expressed in a's chart, u wrapped to the nearest period.
    Vec2 delta(const ChartPoint& a, const ChartPoint& b) const;
    /// Chart-metric distance between nearby points, metric taken at the midpoint.
    double local_distance(const ChartPoint& a, const ChartPoint& b) const;
    /// Ambient position; (u, v, 0) for charts without an embedding.
    Vec3 ambient(const ChartPoint& p) const;

    int chart_count() const { return static_cast<int>(charts_.size()); }
    const Chart& chart(int id) const;
    bool in_domain(const ChartPoint& p) const;
    const SurfaceDescriptor& descriptor() const { return *descriptor_; }
    /// Compact surfaces (sphere, ellipsoid and their perturbations).
    bool is_closed() const;

    /// Central-difference Christoffel symbols from the metric (used when a chart has no
    /// analytic connection).
    Christoffel christoffel_fd(const ChartPoint& p, double h = 1e-5) const;
    /// Brioschi formula with central differences of the metric.
    double curvature_fd(const ChartPoint& p, double h = 1e-4) const;

private:
    Surface(std::vector<std::shared_ptr<const Chart>> charts,
            std::shared_ptr<const SurfaceDescriptor> descriptor)
        : charts_(std::move(charts)), descriptor_(std::move(descriptor)) {}

    void check(const ChartPoint& p) const;

    std::vector<std::shared_ptr<const Chart>> charts_;
    std::shared_ptr<const SurfaceDescriptor> descriptor_;
};

/// |latitude| beyond which sphere-like atlases hand a point over to the rotated chart.
inline constexpr double kSphereChartLatitudeLimit = 1.2;

}  // namespace geocaustic
