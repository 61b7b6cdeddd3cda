#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "geocaustic/caustic.hpp"

namespace geocaustic {

/// Ordered samples of a branch image, one polyline per component.
struct SampledImage {
    std::vector<std::vector<ChartPoint>> lines;
    std::vector<bool> closed;

    bool empty() const;
};

SampledImage image_of(const CausticBranch& branch);
SampledImage image_of(const RegularCurve& curve, int samples);

/// Symmetric Hausdorff distance between two images. Every sample of one image is projected on a
/// local Catmull-Rom interpolant of the other; distances use the chart metric at the query point.
double hausdorff_distance(const SampledImage& a, const SampledImage& b, const Surface& surface);

struct SingularityCounts {
    int cusps = 0;
    int self_intersections = 0;

    bool operator==(const SingularityCounts&) const = default;
};

SingularityCounts count_singularities(const std::vector<SingularityRecord>& records);

struct SingularityMatch {
    SingularityRecord::Kind kind = SingularityRecord::Kind::Cusp;
    double base_xi = 0.0, perturbed_xi = 0.0;
    double displacement = 0.0;
};

/// Greedy nearest matching of records of equal kind within `radius`; closest pairs first, ties
/// broken by the smaller base parameter.
std::vector<SingularityMatch> match_singularities(const std::vector<SingularityRecord>& base,
                                                  const std::vector<SingularityRecord>& perturbed,
                                                  const Surface& surface, double radius);

enum class Verdict { Stable, CountChanged, Unmatched };
const char* to_string(Verdict v);

struct StabilityReport {
    int p = 0;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    SingularityCounts base_counts, perturbed_counts;
    std::vector<SingularityMatch> matches;
    double hausdorff = 0.0;
    Verdict verdict = Verdict::Stable;
    bool identical = false;  // perturbed branch equals the base branch sample for sample
};

struct StabilityOptions {
    TraceOptions trace;
    SingularityOptions singularities;
    double match_radius_factor = 20.0;
    int curve_samples = 1024;
    int convexity_grid = 64;  // samples per chart direction for the K > 0 check
    int jobs = 1;             // parallel lambda values
};

/// Curve displacement and metric bump derived from a seed.
struct Perturbation {
    CurveBump curve;
    BumpSpec metric;
};
Perturbation perturbation_for_seed(std::uint64_t seed);

/// Smallest sampled Gauss curvature over the preferred regions of all charts.
double sampled_min_curvature(const Surface& surface, int grid);

/// Perturbs curve and metric by lambda for every (lambda, seed), retraces Sigma_p and compares
/// with the base branch. Reports come in lambda order, then seed order.
std::vector<StabilityReport> stability_experiment(const RegularCurve& curve, int p,
                                                  const std::vector<double>& lambdas,
                                                  const std::vector<std::uint64_t>& seeds,
                                                  const StabilityOptions& options = {});

/// Largest lambda of the sweep such that it and every smaller lambda are stable for all seeds,
/// per order; 0 when even the smallest fails.
std::map<int, double> admissible_lambdas(const RegularCurve& curve, const std::vector<int>& orders,
                                         const std::vector<double>& lambdas,
                                         const std::vector<std::uint64_t>& seeds,
                                         const StabilityOptions& options = {});

std::string stability_csv(const std::vector<StabilityReport>& reports);
std::string stability_json(const std::vector<StabilityReport>& reports);

}  // namespace geocaustic
