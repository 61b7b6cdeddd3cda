#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "geocaustic/flow.hpp"
#include "geocaustic/spline.hpp"

namespace geocaustic {

/// Position with first and second parameter derivatives, all in one chart.
struct CurveJet {
    ChartPoint point;
    Vec2 d1{};
    Vec2 d2{};
};

/// A parameterization sigma -> chart point.
class CurveMap {
public:
    virtual ~CurveMap() = default;
    virtual CurveJet eval(double sigma) const = 0;
};

/// Builds a map from coordinate expressions in the variable `t`.
std::shared_ptr<const CurveMap> expression_curve_map(const Expression& u, const Expression& v,
                                                     int chart = 0);
/// Cubic spline through uniformly spaced samples; closed samples omit the closing point.
std::shared_ptr<const CurveMap> spline_curve_map(const std::vector<ChartPoint>& samples,
                                                 double sigma0, double sigma1, bool closed,
                                                 double u_period = 0.0);
std::shared_ptr<const CurveMap> function_curve_map(std::function<CurveJet(double)> f);

struct InflectionRecord {
    enum class Kind { Simple, Degenerate };
    double xi = 0.0;
    Kind kind = Kind::Simple;
    double slope = 0.0;  // dk_g/dxi at the root
};

/// Regular curve on a surface. After arc-length reparameterization the parameter xi is the
/// g-arc length on [0, L); closed curves are periodic in xi. Immutable.
///
/// Sign convention: k_g > 0 when the curve turns towards its left normal n, where (gamma', n) is
/// positively oriented in the chart, e.g. a counterclockwise plane circle of radius r has
/// k_g = 1/r.
class RegularCurve {
public:
    RegularCurve(Surface surface, std::shared_ptr<const CurveMap> map, double sigma0,
                 double sigma1, bool closed);

    const Surface& surface() const { return surface_; }
    bool closed() const { return closed_; }
    bool arc_length() const { return arc_length_; }
    double xi_min() const { return arc_length_ ? 0.0 : sigma0_; }
    double xi_max() const { return arc_length_ ? length_ : sigma1_; }
    /// Total g-length.
    double length() const { return length_; }

    CurveJet jet(double xi) const;
    ChartPoint point(double xi) const { return jet(xi).point; }
    /// g-norm of d gamma / d xi.
    double speed(double xi) const;
    /// Covariant derivative D_xi gamma'.
    Vec2 covariant_acceleration(double xi) const;

    /// Underlying parameter sigma for a given xi.
    double sigma_of(double xi) const;

    RegularCurve arc_length_reparameterize(double tol = 1e-12) const;
    RegularCurve reversed() const;

    std::shared_ptr<const CurveMap> map() const { return map_; }
    double sigma0() const { return sigma0_; }
    double sigma1() const { return sigma1_; }

private:
    double wrap(double xi) const;
    double arc_from_knot(std::size_t k, double sigma) const;

    Surface surface_;
    std::shared_ptr<const CurveMap> map_;
    double sigma0_, sigma1_;
    bool closed_;
    bool arc_length_ = false;
    bool reversed_ = false;
    double length_ = 0.0;
    std::vector<double> knots_;  // sigma knots of the arc-length table
    std::vector<double> cumulative_;
};

/// Left unit normal n with (t, n) positively oriented and g(t, n) = 0.
Vec2 left_normal(const Metric& g, const Vec2& unit_tangent);

/// Signed geodesic curvature k_g(xi), valid for any regular parameterization.
double geodesic_curvature(const RegularCurve& curve, double xi);

struct InflectionOptions {
    int grid_n = 512;
    double slope_tol = 1e-6;
    double zero_tol = 1e-7;
    double plateau_length = 1e-3;
    double root_tol = 1e-10;
};

std::vector<InflectionRecord> find_inflections(const RegularCurve& curve,
                                               const InflectionOptions& options = {});

UnitTangent tangent_geodesic_seed(const RegularCurve& curve, double xi);

/// Normal displacement profile b(xi): constant or cos(2 pi mode (xi - xi_min) / L + phase).
struct CurveBump {
    enum class Kind { Constant, Cosine } kind = Kind::Cosine;
    double mode = 3.0;
    double phase = 0.3;
    double level = 1.0;

    double value(double xi, double xi_min, double period) const;
};

/// Displaces the curve by lambda * b(xi) along geodesics in the right-hand normal direction
/// (outwards for a counterclockwise plane circle) and reparameterizes by arc length.
RegularCurve perturb_curve(const RegularCurve& curve, double lambda, const CurveBump& bump = {},
                           int samples = 1024);

}  // namespace geocaustic
