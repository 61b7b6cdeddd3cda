#pragma once

#include <map>
#include <optional>
#include <vector>

#include "geocaustic/curve.hpp"
#include "geocaustic/spline.hpp"

namespace geocaustic {

struct CausticSample {
    double xi = 0.0;
    double tau = 0.0;
    ChartPoint point;
    Vec2 velocity{};  // geodesic velocity at the conjugate point
    bool degenerate = false;
};

/// Maximal xi-interval of I_p with the grid samples inside it. `full` marks a component that
/// covers a whole closed curve; otherwise [xi_begin, xi_end] are the refined open endpoints
/// (xi_end may exceed the curve period when the component wraps).
struct CausticComponent {
    double xi_begin = 0.0;
    double xi_end = 0.0;
    bool full = false;
    std::vector<CausticSample> samples;
};

struct SingularityRecord {
    enum class Kind { Cusp, SelfIntersection, Inflection };
    Kind kind = Kind::Cusp;
    ChartPoint location;
    std::vector<double> xi;  // one value, or the two parameters of a self-intersection
    double residual = 0.0;   // semicubic fit residual (cusps)
    double speed = 0.0;      // |d phi / d xi| at a cusp
    double angle = 0.0;      // crossing angle of a self-intersection
    bool degenerate = false;
};

const char* to_string(SingularityRecord::Kind kind);

struct CausticBranch {
    int order = 0;
    bool closed_curve = false;
    double curve_period = 0.0;
    double grid_step = 0.0;
    std::vector<CausticComponent> components;
    std::vector<SingularityRecord> singularities;
    bool horizon_hit = false;
    bool left_atlas = false;
    int failed_samples = 0;
    int audit_mismatches = 0;

    bool empty() const { return components.empty(); }
    std::size_t sample_count() const;
};

struct TraceOptions {
    int grid_n = 512;
    double t_max = 50.0;
    ConjugateOptions conjugate;
    int jobs = 1;
    int audit_every = 32;
    double endpoint_tol = 1e-6;
};

/// Traces Sigma_p for every order in `orders` with one forward and one backward conjugate search
/// per grid parameter.
std::vector<CausticBranch> trace_caustics(const RegularCurve& curve, const std::vector<int>& orders,
                                          const TraceOptions& options = {});

CausticBranch trace_caustic(const RegularCurve& curve, int p, const TraceOptions& options = {});

struct Interval {
    double begin = 0.0, end = 0.0;
    bool full = false;
};

struct CausticDomains {
    std::map<int, std::vector<Interval>> domains;
    bool nested = true;  // I_{p+1} within I_p for p >= 0, I_p within I_{p+1} for p < 0
    std::vector<std::string> violations;
};

CausticDomains caustic_domains(const RegularCurve& curve, int p_min, int p_max,
                               const TraceOptions& options = {});
/// Nesting check on already traced branches.
CausticDomains domains_of(const std::vector<CausticBranch>& branches, double tol = 1e-6);

/// A caustic component expressed in a single chart as an interpolating spline in xi, with the
/// longitude unwrapped.
struct ChartTrack {
    int chart = 0;
    bool periodic = false;
    double xi_begin = 0.0, xi_end = 0.0;  // parameter range covered by the samples
    double u_period = 0.0;                // chart longitude period, 0 when none
    std::vector<double> xi;
    std::vector<Vec2> coords;             // unwrapped chart coordinates of the samples
    CubicSpline u, v;

    Vec2 at(double x) const { return {u.value(x), v.value(x)}; }
    Vec2 d1(double x) const { return {u.derivative(x), v.derivative(x)}; }
    Vec2 d2(double x) const { return {u.second_derivative(x), v.second_derivative(x)}; }
    ChartPoint point(double x) const;
};

/// Track of a single component in the chart preferred by most of its samples.
std::optional<ChartTrack> component_track(const Surface& surface, const CausticComponent& component);

/// One track per component, all in the chart preferred by most samples when possible.
std::vector<ChartTrack> chart_tracks(const Surface& surface, const CausticBranch& branch);

struct SingularityOptions {
    double cusp_tol_rel = 1e-3;  // relative to the median g-speed of the branch
    double fit_tol = 1e-3;       // RMS semicubic fit residual relative to the window size
    int fit_half_window = 6;     // samples on each side of a cusp used by the fit
    int min_index_gap = 10;      // self-intersections need parameters this many grid steps apart
    double transversal_angle = 1e-3;
};

/// Cusps, transversal self-intersections and inflections of a traced branch. Records are sorted
/// by kind and parameter.
std::vector<SingularityRecord> detect_singularities(const CausticBranch& branch,
                                                    const Surface& surface,
                                                    const SingularityOptions& options = {});

}  // namespace geocaustic
