#include "geocaustic/stability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"

#include "geocaustic/io.hpp"
#include "geocaustic/numeric.hpp"
#include "geocaustic/parallel.hpp"
#include "geocaustic/proximity.hpp"

namespace geocaustic {

bool SampledImage::empty() const {
    for (const auto& l : lines)
        if (!l.empty()) return false;
    return true;
}

SampledImage image_of(const CausticBranch& branch) {
    SampledImage img;
    for (const auto& c : branch.components) {
        std::vector<ChartPoint> pts;
        for (const auto& s : c.samples) pts.push_back(s.point);
        img.lines.push_back(std::move(pts));
        img.closed.push_back(c.full);
    }
    return img;
}

SampledImage image_of(const RegularCurve& input, int samples) {
    const RegularCurve curve = input.arc_length_reparameterize();
    SampledImage img;
    std::vector<ChartPoint> pts;
    const int n = curve.closed() ? samples : samples + 1;
    for (int i = 0; i < n; ++i)
        pts.push_back(curve.point(curve.xi_min() + curve.length() * i / samples));
    img.lines.push_back(std::move(pts));
    img.closed.push_back(curve.closed());
    return img;
}

namespace {

ProximityIndex index_of(const SampledImage& img, const Surface& s) {
    ProximityIndex idx(s, 1e-2);
    for (std::size_t i = 0; i < img.lines.size(); ++i) idx.add_polyline(img.lines[i], img.closed[i]);
    return idx;
}

// Distance from q to the Catmull-Rom interpolant of `line` around segment j, measured with the
// metric at q.
double catmull_rom_distance(const Surface& s, const ChartPoint& q, const std::vector<ChartPoint>& line,
                            bool closed, std::size_t j) {
    const long n = static_cast<long>(line.size());
    const Metric g = s.metric_at(q);
    const auto vertex = [&](long k) -> std::optional<Vec2> {
        if (closed) k = ((k % n) + n) % n;
        else k = std::clamp(k, 0L, n - 1);
        try {
            return s.delta(q, line[static_cast<std::size_t>(k)]);
        } catch (const Error&) {
            return std::nullopt;
        }
    };
    double best = std::numeric_limits<double>::infinity();
    for (long seg = static_cast<long>(j) - 1; seg <= static_cast<long>(j) + 1; ++seg) {
        if (!closed && (seg < 0 || seg + 1 >= n)) continue;
        const auto p0 = vertex(seg - 1), p1 = vertex(seg), p2 = vertex(seg + 1), p3 = vertex(seg + 2);
        if (!p0 || !p1 || !p2 || !p3) continue;
        const auto at = [&](double t) {
            const double t2 = t * t, t3 = t2 * t;
            Vec2 c{};
            for (int d = 0; d < 2; ++d)
                c[d] = 0.5 * (2.0 * (*p1)[d] + (-(*p0)[d] + (*p2)[d]) * t +
                              (2.0 * (*p0)[d] - 5.0 * (*p1)[d] + 4.0 * (*p2)[d] - (*p3)[d]) * t2 +
                              (-(*p0)[d] + 3.0 * (*p1)[d] - 3.0 * (*p2)[d] + (*p3)[d]) * t3);
            return g.norm(c);
        };
        const auto [t, d] = numeric::minimize(at, 0.0, 1.0, 50);
        (void)t;
        best = std::min({best, d, at(0.0), at(1.0)});
    }
    return best;
}

double directed(const SampledImage& from, const SampledImage& to, const ProximityIndex& to_index,
                const Surface& s) {
    double worst = 0.0;
    for (const auto& line : from.lines)
        for (const auto& q : line) {
            const Nearest n = to_index.nearest(q);
            if (!n.found) return std::numeric_limits<double>::infinity();
            const double d = std::min(
                n.distance, catmull_rom_distance(s, q, to.lines[n.polyline], to.closed[n.polyline],
                                                 n.segment));
            worst = std::max(worst, d);
        }
    return worst;
}

double record_distance(const Surface& s, const SingularityRecord& a, const SingularityRecord& b) {
    try {
        return s.local_distance(a.location, b.location);
    } catch (const Error&) {
        return std::numeric_limits<double>::infinity();
    }
}

bool same_samples(const CausticBranch& a, const CausticBranch& b) {
    if (a.components.size() != b.components.size()) return false;
    for (std::size_t i = 0; i < a.components.size(); ++i) {
        const auto& x = a.components[i].samples;
        const auto& y = b.components[i].samples;
        if (x.size() != y.size()) return false;
        for (std::size_t k = 0; k < x.size(); ++k)
            if (x[k].xi != y[k].xi || x[k].tau != y[k].tau || x[k].point.u != y[k].point.u ||
                x[k].point.v != y[k].point.v || x[k].point.chart != y[k].point.chart)
                return false;
    }
    return true;
}


}  // namespace

double hausdorff_distance(const SampledImage& a, const SampledImage& b, const Surface& s) {
    if (a.empty() || b.empty()) throw Error(ErrorKind::EmptyInput, "Hausdorff distance of an empty image");
    const ProximityIndex ia = index_of(a, s), ib = index_of(b, s);
    return std::max(directed(a, b, ib, s), directed(b, a, ia, s));
}

SingularityCounts count_singularities(const std::vector<SingularityRecord>& records) {
    SingularityCounts c;
    for (const auto& r : records) {
        if (r.kind == SingularityRecord::Kind::Cusp) ++c.cusps;
        if (r.kind == SingularityRecord::Kind::SelfIntersection) ++c.self_intersections;
    }
    return c;
}

std::vector<SingularityMatch> match_singularities(const std::vector<SingularityRecord>& base,
                                                  const std::vector<SingularityRecord>& perturbed,
                                                  const Surface& s, double radius) {
    struct Candidate {
        double d;
        std::size_t i, j;
    };
    std::vector<Candidate> cand;
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (base[i].kind == SingularityRecord::Kind::Inflection) continue;
        for (std::size_t j = 0; j < perturbed.size(); ++j) {
            if (perturbed[j].kind != base[i].kind) continue;
            const double d = record_distance(s, base[i], perturbed[j]);
            if (d <= radius) cand.push_back({d, i, j});
        }
    }
    std::stable_sort(cand.begin(), cand.end(), [&](const Candidate& a, const Candidate& b) {
        if (a.d != b.d) return a.d < b.d;
        if (base[a.i].xi.front() != base[b.i].xi.front()) return base[a.i].xi.front() < base[b.i].xi.front();
        return perturbed[a.j].xi.front() < perturbed[b.j].xi.front();
    });
    std::vector<char> used_b(base.size(), 0), used_p(perturbed.size(), 0);
    std::vector<SingularityMatch> out;
    for (const auto& c : cand) {
        if (used_b[c.i] || used_p[c.j]) continue;
        used_b[c.i] = used_p[c.j] = 1;
        out.push_back({base[c.i].kind, base[c.i].xi.front(), perturbed[c.j].xi.front(), c.d});
    }
    std::stable_sort(out.begin(), out.end(), [](const SingularityMatch& a, const SingularityMatch& b) {
        return a.kind != b.kind ? a.kind < b.kind : a.base_xi < b.base_xi;
    });
    return out;
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Stable: return "stable";
        case Verdict::CountChanged: return "count-changed";
        case Verdict::Unmatched: return "unmatched";
    }
    return "unknown";
}

Perturbation perturbation_for_seed(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
    Perturbation p;
    p.curve.kind = CurveBump::Kind::Cosine;
    p.curve.mode = static_cast<double>(2 + rng() % 3);
    p.curve.phase = angle(rng);
    for (int i = 0; i < 3; ++i) p.metric.phase[i] = angle(rng);
    return p;
}

double sampled_min_curvature(const Surface& s, int grid) {
    double k_min = std::numeric_limits<double>::infinity();
    for (int c = 0; c < s.chart_count(); ++c) {
        const Chart& chart = s.chart(c);
        const Box box = chart.domain();
        const double period = chart.u_period();
        const double u0 = period > 0.0 ? 0.0 : std::max(box.u0, -10.0);
        const double u1 = period > 0.0 ? period : std::min(box.u1, 10.0);
        const double v0 = std::max(box.v0, -10.0), v1 = std::min(box.v1, 10.0);
        for (int i = 0; i < grid; ++i)
            for (int j = 0; j < grid; ++j) {
                const double u = u0 + (u1 - u0) * (i + 0.5) / grid;
                const double v = v0 + (v1 - v0) * (j + 0.5) / grid;
                if (!chart.preferred(u, v)) continue;
                k_min = std::min(k_min, s.gauss_curvature_at({c, u, v}));
            }
    }
    return k_min;
}

std::vector<StabilityReport> stability_experiment(const RegularCurve& curve, int p,
                                                  const std::vector<double>& lambdas,
                                                  const std::vector<std::uint64_t>& seeds,
                                                  const StabilityOptions& opt) {
    const Surface& surface = curve.surface();
    if (!surface.is_closed())
        throw Error(ErrorKind::ConvexityViolation, "surface is not closed and strictly convex");
    if (!curve.closed()) throw Error(ErrorKind::InvalidArgument, "stability experiments need a closed curve");
    if (seeds.empty()) throw Error(ErrorKind::EmptyInput, "no seeds");
    if (!(sampled_min_curvature(surface, opt.convexity_grid) > 0.0))
        throw Error(ErrorKind::ConvexityViolation, "surface is not strictly convex", 0.0);
    for (double lambda : lambdas)
        if (lambda > 0.0)
            for (auto seed : seeds) {
                const Surface ps = Surface::conformal_perturbation(
                    surface, lambda, perturbation_for_seed(seed).metric);
                if (!(sampled_min_curvature(ps, opt.convexity_grid) > 0.0))
                    throw Error(ErrorKind::ConvexityViolation,
                                "perturbed metric is not strictly convex", lambda);
            }

    const CausticBranch base = trace_caustic(curve, p, opt.trace);
    const auto base_sing = base.empty() ? std::vector<SingularityRecord>{}
                                        : detect_singularities(base, surface, opt.singularities);
    const SingularityCounts base_counts = count_singularities(base_sing);

    struct Job {
        double lambda;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (double l : lambdas)
        for (auto s : seeds) jobs.push_back({l, s});
    std::vector<StabilityReport> reports(jobs.size());
    parallel_for(jobs.size(), opt.jobs, [&](std::size_t k) {
        const Job job = jobs[k];
        StabilityReport r;
        r.p = p;
        r.lambda = job.lambda;
        r.seed = job.seed;
        r.base_counts = base_counts;
        if (job.lambda == 0.0) {
            r.perturbed_counts = base_counts;
            r.matches = match_singularities(base_sing, base_sing, surface, 0.0);
            r.hausdorff = 0.0;
            r.identical = true;
            r.verdict = Verdict::Stable;
            reports[k] = std::move(r);
            return;
        }
        const Perturbation pert = perturbation_for_seed(job.seed);
        const Surface ps = Surface::conformal_perturbation(surface, job.lambda, pert.metric);
        const RegularCurve rebound(ps, curve.map(), curve.sigma0(), curve.sigma1(), true);
        const RegularCurve moved = perturb_curve(rebound, job.lambda, pert.curve, opt.curve_samples);
        const CausticBranch branch = trace_caustic(moved, p, opt.trace);
        const auto sing = branch.empty() ? std::vector<SingularityRecord>{}
                                         : detect_singularities(branch, ps, opt.singularities);
        r.perturbed_counts = count_singularities(sing);
        r.matches = match_singularities(base_sing, sing, ps, opt.match_radius_factor * job.lambda);
        const SampledImage a = image_of(base), b = image_of(branch);
        r.hausdorff = a.empty() && b.empty() ? 0.0
                      : a.empty() || b.empty() ? std::numeric_limits<double>::infinity()
                                               : hausdorff_distance(a, b, surface);
        r.identical = same_samples(base, branch);
        const std::size_t needed =
            static_cast<std::size_t>(base_counts.cusps + base_counts.self_intersections);
        if (!(r.perturbed_counts == base_counts)) r.verdict = Verdict::CountChanged;
        else if (r.matches.size() != needed) r.verdict = Verdict::Unmatched;
        else r.verdict = Verdict::Stable;
        reports[k] = std::move(r);
    });
    return reports;
}

std::map<int, double> admissible_lambdas(const RegularCurve& curve, const std::vector<int>& orders,
                                         const std::vector<double>& lambdas,
                                         const std::vector<std::uint64_t>& seeds,
                                         const StabilityOptions& opt) {
    std::vector<double> sorted = lambdas;
    std::sort(sorted.begin(), sorted.end());
    std::map<int, double> out;
    for (int p : orders) {
        const auto reports = stability_experiment(curve, p, sorted, seeds, opt);
        double best = 0.0;
        for (double l : sorted) {
            bool ok = true;
            for (const auto& r : reports)
                if (r.lambda == l && r.verdict != Verdict::Stable) ok = false;
            if (!ok) break;
            best = l;
        }
        out[p] = best;
    }
    return out;
}

std::string stability_csv(const std::vector<StabilityReport>& reports) {
    std::ostringstream os;
    os << "p,lambda,kind,base_count,pert_count,hausdorff,verdict\n";
    for (const auto& r : reports) {
        os << r.p << ',' << format_number(r.lambda) << ",cusp," << r.base_counts.cusps << ','
           << r.perturbed_counts.cusps << ',' << format_number(r.hausdorff) << ',' << to_string(r.verdict)
           << '\n';
        os << r.p << ',' << format_number(r.lambda) << ",self-intersection,"
           << r.base_counts.self_intersections << ',' << r.perturbed_counts.self_intersections
           << ',' << format_number(r.hausdorff) << ',' << to_string(r.verdict) << '\n';
    }
    return os.str();
}

std::string stability_json(const std::vector<StabilityReport>& reports) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        nlohmann::ordered_json j;
        j["p"] = r.p;
        j["lambda"] = r.lambda;
        j["seed"] = r.seed;
        j["base_counts"] = {{"cusp", r.base_counts.cusps},
                            {"self-intersection", r.base_counts.self_intersections}};
        j["perturbed_counts"] = {{"cusp", r.perturbed_counts.cusps},
                                 {"self-intersection", r.perturbed_counts.self_intersections}};
        nlohmann::ordered_json m = nlohmann::ordered_json::array();
        for (const auto& x : r.matches)
            m.push_back({{"kind", to_string(x.kind)},
                         {"base_xi", x.base_xi},
                         {"perturbed_xi", x.perturbed_xi},
                         {"displacement", x.displacement}});
        j["matches"] = m;
        j["hausdorff"] = r.hausdorff;
        j["verdict"] = to_string(r.verdict);
        j["identical"] = r.identical;
        arr.push_back(j);
    }
    return arr.dump(2) + "\n";
}

}  // namespace geocaustic
