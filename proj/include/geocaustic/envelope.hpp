#pragma once

#include <vector>

#include "geocaustic/caustic.hpp"

namespace geocaustic {

struct InflectionalGeodesic {
    double xi = 0.0;
    InflectionRecord inflection;
    std::vector<ChartPoint> samples;  // Gamma_xi on [-T_max, T_max] at spacing sample_dt
    std::vector<double> t;
    std::optional<GeodesicPath> path;
    bool left_atlas = false;
};

/// Candidate second-order self-tangency between branches of different order.
struct SelfTangency {
    int order_a = 0, order_b = 0;
    double xi_a = 0.0, xi_b = 0.0;
    ChartPoint location;
    double distance = 0.0;
    double angle = 0.0;
};

struct EnvelopeDecomposition {
    RegularCurve curve;  // arc-length parameterized; also the 0-branch
    double t_max = 0.0;
    std::vector<InflectionalGeodesic> inflectional;
    std::vector<CausticBranch> branches;  // increasing order, includes p = 0
    std::vector<SelfTangency> self_tangencies;
    bool truncated = false;  // a nonempty branch is cut by the horizon, or a geodesic left the atlas

    const CausticBranch* branch(int p) const;
};

struct EnvelopeOptions {
    TraceOptions trace;
    InflectionOptions inflections;
    SingularityOptions singularities;
    double sample_dt = 0.02;
    double tangency_tol = 1e-3;
    double tangency_angle = 1e-3;
};

EnvelopeDecomposition assemble_envelope(const RegularCurve& curve, int p_min, int p_max,
                                        const EnvelopeOptions& options = {});

struct NaifPoint {
    double xi = 0.0;
    double t = 0.0;  // parameter on Gamma_xi
    ChartPoint point;
};

struct NaifOptions {
    int grid_n = 512;
    double t_max = 50.0;
    double sample_dt = 0.02;   // shared RK4 step of the geodesic pair
    // Around an inflection xi_0 the crossings of nearby geodesics run along the inflectional
    // geodesic as xi approaches xi_0 - epsilon / 2. Offsets epsilon * 10^-s, s in
    // [0, sweep_decades], are sampled and bisected until consecutive crossing sets are within
    // sweep_gap of each other.
    int sweep_levels = 40;
    double sweep_decades = 10.0;
    double sweep_gap = 1e-3;
    int sweep_depth = 12;
    // Pairs per side and inflection; raised to 4 * t_max / sweep_gap when that is larger.
    std::size_t max_sweep_pairs = 4000;
    int jobs = 1;
};

/// Crossings of Gamma_xi and Gamma_{xi + epsilon} with |t| <= t_max.
std::vector<NaifPoint> naif_crossings(const RegularCurve& curve, double xi, double epsilon,
                                      const NaifOptions& options = {});

/// Transversal intersections of Gamma_xi and Gamma_{xi + epsilon} over the grid, plus a
/// geometric cluster of extra parameters around each inflection of the curve.
std::vector<NaifPoint> naif_envelope(const RegularCurve& curve, double epsilon,
                                     const NaifOptions& options = {});

struct Offender {
    ChartPoint point;
    double distance = 0.0;
    double xi = 0.0;
    double t = 0.0;   // naif points: parameter on Gamma_xi
    int source = 0;   // decomposition points: branch order, or 1000 + k for inflectional geodesic k
};

struct Theorem1Report {
    std::size_t cloud_size = 0;
    std::size_t decomposition_size = 0;
    double coverage = 0.0;
    double membership = 0.0;
    double max_cloud_distance = 0.0;
    std::vector<Offender> coverage_offenders;    // worst first
    std::vector<Offender> membership_offenders;  // worst first
    /// Fraction of samples of each inflectional geodesic that have a naif point within tol.
    std::vector<double> inflectional_coverage;
};

Theorem1Report verify_theorem1(const EnvelopeDecomposition& decomposition,
                               const std::vector<NaifPoint>& cloud, double tol,
                               std::size_t max_offenders = 20);
/// Builds the cloud with the decomposition's grid and horizon, then verifies.
Theorem1Report verify_theorem1(const EnvelopeDecomposition& decomposition, double epsilon,
                               double tol, const NaifOptions& options = {});

struct PencilReport {
    int order = 0;
    std::size_t envelope_points = 0;
    std::size_t fallbacks = 0;  // degenerate pencils where theta = 0 was used
    double hausdorff = 0.0;
    bool trivially_consistent = false;  // no pencil points and no branches
};

struct PencilOptions {
    int grid_n = 400;
    double t_max = 50.0;
    double fd_step = 1e-4;
    double max_angle = 0.3;
    ConjugateOptions conjugate;
    int jobs = 1;
};

PencilReport pencil_caustic_crosscheck(const RegularCurve& curve, int p,
                                       const PencilOptions& options = {});

struct InflectionMatch {
    double xi = 0.0;
    bool inside_domain = false;
    bool matched = false;
    double branch_xi = 0.0;
};

struct CorrespondenceReport {
    std::vector<InflectionMatch> matches;  // simple inflections of the curve
    std::size_t matched = 0, unmatched = 0;
};

CorrespondenceReport inflection_correspondence(const RegularCurve& curve,
                                               const CausticBranch& branch, double window,
                                               const InflectionOptions& options = {});

}  // namespace geocaustic
