#pragma once

#include <optional>
#include <vector>

#include "geocaustic/surface.hpp"

namespace geocaustic {

/// A point with a direction; the seed of a unit-speed geodesic.
struct UnitTangent {
    ChartPoint point;
    Vec2 direction{};

    UnitTangent reversed() const { return {point, {-direction[0], -direction[1]}}; }
};

/// Builds a unit tangent from an arbitrary non-zero direction.
UnitTangent make_unit_tangent(const Surface& surface, const ChartPoint& p, const Vec2& direction);

struct ShootOptions {
    double tol = 1e-10;
    double max_step = 0.1;
    double initial_step = 1e-3;
    long max_steps = 2'000'000;
};

/// Full state along a geodesic: position, velocity and the orthogonal Jacobi scalar.
struct FlowState {
    ChartPoint point;
    Vec2 velocity{};
    double jacobi = 0.0;
    double jacobi_rate = 0.0;
};

struct SolverStats {
    long accepted = 0;
    long rejected = 0;
    long chart_switches = 0;
};

namespace detail {
// One accepted step of a one-sided integration: the step [t0, t0 + h] with the coefficients
// of the fifth-order continuous extension of the coupled 6-dimensional system.
struct DenseStep {
    double t0 = 0.0, h = 0.0;
    int chart = 0;
    std::array<std::array<double, 6>, 5> r{};
};
struct Branch {
    std::vector<DenseStep> steps;  // increasing t, t >= 0
    double reached = 0.0;
};
}  // namespace detail

/// A unit-speed geodesic with the scalar Jacobi field J (J(0) = 0, J'(0) = 1) integrated as one
/// coupled system, queryable at any t of its span. Immutable after construction.
class GeodesicPath {
public:
    const UnitTangent& seed() const { return seed_; }
    double t_min() const { return t_min_; }
    double t_max() const { return t_max_; }
    const SolverStats& stats() const { return stats_; }

    FlowState state(double t) const;
    ChartPoint point(double t) const { return state(t).point; }
    /// State re-expressed in `chart` (throws NoOverlappingChart if impossible).
    FlowState state_in_chart(double t, int chart) const;

    /// Accepted step boundaries in [t_min, t_max], increasing.
    std::vector<double> knots() const;

private:
    friend GeodesicPath shoot(const Surface&, const UnitTangent&, double, double,
                              const ShootOptions&);

    explicit GeodesicPath(Surface surface) : surface_(std::move(surface)) {}

    Surface surface_;
    UnitTangent seed_;
    double t_min_ = 0.0, t_max_ = 0.0;
    detail::Branch forward_, backward_;
    SolverStats stats_;
};

/// Integrates the geodesic with seed over [t_min, t_max] (t_min <= 0 <= t_max).
/// Throws Error(LeftAtlas) with the reached t, or Error(ToleranceFailure).
GeodesicPath shoot(const Surface& surface, const UnitTangent& seed, double t_min, double t_max,
                   const ShootOptions& options = {});

/// Orthogonal Jacobi scalar along a path: J'' + K J = 0, J(0) = 0, J'(0) = 1.
class JacobiField {
public:
    explicit JacobiField(GeodesicPath path) : path_(std::move(path)) {}

    double value(double t) const { return path_.state(t).jacobi; }
    double derivative(double t) const { return path_.state(t).jacobi_rate; }
    const GeodesicPath& path() const { return path_; }

private:
    GeodesicPath path_;
};

JacobiField jacobi_scalar(const Surface& surface, const GeodesicPath& path, double t_min,
                          double t_max, const ShootOptions& options = {});

struct ConjugateRecord {
    int order = 0;
    double tau = 0.0;
    ChartPoint point;
    Vec2 velocity{};
    bool degenerate = false;  // |J'| at the root below the simple-zero threshold
};

struct ConjugateOptions {
    ShootOptions shoot;
    double root_tol = 1e-10;
    double degenerate_rel = 1e-8;
};

struct ConjugateSearch {
    std::vector<ConjugateRecord> records;
    bool horizon_hit = false;  // reached T_max before finding p_max zeros
};

/// Zeros of J in (0, T_max], in order, at most p_max of them.
ConjugateSearch conjugate_search(const Surface& surface, const UnitTangent& seed, double t_max,
                                 int p_max, const ConjugateOptions& options = {});

std::vector<ConjugateRecord> conjugate_distances(const Surface& surface, const UnitTangent& seed,
                                                 double t_max, int p_max,
                                                 const ConjugateOptions& options = {});

/// Signed order: p > 0 forward, p < 0 along the reversed direction (tau < 0), p = 0 the seed.
std::optional<ConjugateRecord> conjugate_point(const Surface& surface, const UnitTangent& seed,
                                               int p, double t_max,
                                               const ConjugateOptions& options = {});

}  // namespace geocaustic
