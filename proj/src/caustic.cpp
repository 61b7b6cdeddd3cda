#include "geocaustic/caustic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "geocaustic/parallel.hpp"

namespace geocaustic {

const char* to_string(SingularityRecord::Kind kind) {
    switch (kind) {
        case SingularityRecord::Kind::Cusp: return "cusp";
        case SingularityRecord::Kind::SelfIntersection: return "self-intersection";
        case SingularityRecord::Kind::Inflection: return "inflection";
    }
    return "unknown";
}

std::size_t CausticBranch::sample_count() const {
    std::size_t n = 0;
    for (const auto& c : components) n += c.samples.size();
    return n;
}

namespace {

struct GridResult {
    std::vector<ConjugateRecord> forward, backward;
    bool failed = false;
    bool left_atlas = false;
};

GridResult search_at(const RegularCurve& curve, double xi, int p_fwd, int p_bwd, double t_max,
                     const ConjugateOptions& opt) {
    GridResult r;
    try {
        const UnitTangent seed = tangent_geodesic_seed(curve, xi);
        if (p_fwd > 0) r.forward = conjugate_search(curve.surface(), seed, t_max, p_fwd, opt).records;
        if (p_bwd > 0)
            r.backward = conjugate_search(curve.surface(), seed.reversed(), t_max, p_bwd, opt).records;
    } catch (const Error& e) {
        r.failed = true;
        r.left_atlas = e.kind() == ErrorKind::LeftAtlas;
    }
    return r;
}

std::optional<CausticSample> sample_of(const GridResult& g, int p, double xi) {
    const auto& recs = p > 0 ? g.forward : g.backward;
    const std::size_t need = static_cast<std::size_t>(std::abs(p));
    if (recs.size() < need) return std::nullopt;
    const ConjugateRecord& r = recs[need - 1];
    CausticSample s;
    s.xi = xi;
    s.tau = p > 0 ? r.tau : -r.tau;
    s.point = r.point;
    s.velocity = p > 0 ? r.velocity : Vec2{-r.velocity[0], -r.velocity[1]};
    s.degenerate = r.degenerate;
    return s;
}

bool exists_at(const RegularCurve& curve, double xi, int p, double t_max,
               const ConjugateOptions& opt) {
    try {
        return conjugate_point(curve.surface(), tangent_geodesic_seed(curve, xi), p, t_max, opt)
            .has_value();
    } catch (const Error&) {
        return false;
    }
}

double refine_endpoint(const RegularCurve& curve, double good, double bad, int p, double t_max,
                       const ConjugateOptions& opt, double tol) {
    while (std::abs(good - bad) > tol) {
        const double mid = 0.5 * (good + bad);
        if (exists_at(curve, mid, p, t_max, opt)) good = mid;
        else bad = mid;
    }
    return good;
}

}  // namespace

std::vector<CausticBranch> trace_caustics(const RegularCurve& input, const std::vector<int>& orders,
                                          const TraceOptions& opt) {
    if (opt.grid_n < 64) throw Error(ErrorKind::InvalidArgument, "grid_n must be at least 64");
    const RegularCurve curve = input.arc_length_reparameterize();
    const double lo = curve.xi_min(), hi = curve.xi_max(), len = hi - lo;
    const int n = opt.grid_n;
    const double h = len / n;
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) xs[i] = curve.closed() ? lo + h * i : lo + h * (i + 0.5);

    int p_fwd = 0, p_bwd = 0;
    for (int p : orders) {
        if (p > 0) p_fwd = std::max(p_fwd, p);
        if (p < 0) p_bwd = std::max(p_bwd, -p);
    }

    std::vector<GridResult> grid(static_cast<std::size_t>(n));
    if (p_fwd > 0 || p_bwd > 0) {
        parallel_for(grid.size(), opt.jobs, [&](std::size_t i) {
            grid[i] = search_at(curve, xs[i], p_fwd, p_bwd, opt.t_max, opt.conjugate);
        });
    }

    // Re-index audit: periodically recompute with a tighter integrator and compare taus.
    ConjugateOptions tight = opt.conjugate;
    tight.shoot.tol *= 0.1;
    tight.shoot.max_step *= 0.25;
    int mismatches = 0;
    if ((p_fwd > 0 || p_bwd > 0) && opt.audit_every > 0) {
        std::vector<std::size_t> audited;
        for (std::size_t i = 0; i < grid.size(); i += static_cast<std::size_t>(opt.audit_every))
            audited.push_back(i);
        std::vector<GridResult> check(audited.size());
        parallel_for(audited.size(), opt.jobs, [&](std::size_t k) {
            check[k] = search_at(curve, xs[audited[k]], p_fwd, p_bwd, opt.t_max, tight);
        });
        auto differs = [](const GridResult& a, const GridResult& b) {
            if (a.failed != b.failed || a.forward.size() != b.forward.size() ||
                a.backward.size() != b.backward.size())
                return true;
            for (std::size_t j = 0; j < a.forward.size(); ++j)
                if (std::abs(a.forward[j].tau - b.forward[j].tau) > 1e-6) return true;
            for (std::size_t j = 0; j < a.backward.size(); ++j)
                if (std::abs(a.backward[j].tau - b.backward[j].tau) > 1e-6) return true;
            return false;
        };
        std::vector<std::size_t> redo;
        for (std::size_t k = 0; k < audited.size(); ++k) {
            if (!differs(grid[audited[k]], check[k])) continue;
            ++mismatches;
            const std::size_t a = audited[k] >= static_cast<std::size_t>(opt.audit_every)
                                      ? audited[k] - static_cast<std::size_t>(opt.audit_every)
                                      : 0;
            const std::size_t b = std::min(grid.size(), audited[k] + static_cast<std::size_t>(opt.audit_every));
            for (std::size_t i = a; i < b; ++i) redo.push_back(i);
        }
        std::sort(redo.begin(), redo.end());
        redo.erase(std::unique(redo.begin(), redo.end()), redo.end());
        parallel_for(redo.size(), opt.jobs, [&](std::size_t k) {
            grid[redo[k]] = search_at(curve, xs[redo[k]], p_fwd, p_bwd, opt.t_max, tight);
        });
    }

    std::vector<CausticBranch> out;
    for (int p : orders) {
        CausticBranch br;
        br.order = p;
        br.closed_curve = curve.closed();
        br.curve_period = len;
        br.grid_step = h;
        br.audit_mismatches = mismatches;
        std::vector<std::optional<CausticSample>> samples(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            if (p == 0) {
                const UnitTangent s = tangent_geodesic_seed(curve, xs[i]);
                samples[i] = CausticSample{xs[i], 0.0, s.point, s.direction, false};
                continue;
            }
            const GridResult& g = grid[static_cast<std::size_t>(i)];
            if (g.failed) {
                ++br.failed_samples;
                br.left_atlas = br.left_atlas || g.left_atlas;
                continue;
            }
            samples[i] = sample_of(g, p, xs[i]);
            if (!samples[i]) br.horizon_hit = true;
        }

        // Runs of consecutive successes.
        std::vector<std::pair<int, int>> runs;
        for (int i = 0; i < n;) {
            if (!samples[i]) {
                ++i;
                continue;
            }
            int j = i;
            while (j + 1 < n && samples[j + 1]) ++j;
            runs.emplace_back(i, j);
            i = j + 1;
        }
        const bool all = runs.size() == 1 && runs[0].first == 0 && runs[0].second == n - 1;
        if (curve.closed() && all) {
            CausticComponent c;
            c.full = true;
            c.xi_begin = lo;
            c.xi_end = hi;
            for (auto& s : samples) c.samples.push_back(*s);
            br.components.push_back(std::move(c));
            out.push_back(std::move(br));
            continue;
        }
        const bool merge = curve.closed() && runs.size() > 1 && runs.front().first == 0 &&
                           runs.back().second == n - 1;
        for (std::size_t r = 0; r < runs.size(); ++r) {
            if (merge && r == 0) continue;
            CausticComponent c;
            auto [a, b] = runs[r];
            for (int i = a; i <= b; ++i) c.samples.push_back(*samples[i]);
            if (merge && r + 1 == runs.size()) {
                for (int i = runs.front().first; i <= runs.front().second; ++i) {
                    CausticSample s = *samples[i];
                    s.xi += len;
                    c.samples.push_back(s);
                }
                b = runs.front().second + n;
            }
            // Endpoints: refine between the last success and the first failure.
            auto xi_at = [&](int i) { return lo + h * i + (curve.closed() ? 0.0 : 0.5 * h); };
            if (!curve.closed() && a == 0) c.xi_begin = lo;
            else
                c.xi_begin = refine_endpoint(curve, xi_at(a), xi_at(a - 1), p, opt.t_max,
                                             opt.conjugate, opt.endpoint_tol);
            if (!curve.closed() && b == n - 1) c.xi_end = hi;
            else
                c.xi_end = refine_endpoint(curve, xi_at(b), xi_at(b + 1), p, opt.t_max,
                                           opt.conjugate, opt.endpoint_tol);
            br.components.push_back(std::move(c));
        }
        out.push_back(std::move(br));
    }
    return out;
}

CausticBranch trace_caustic(const RegularCurve& curve, int p, const TraceOptions& options) {
    return trace_caustics(curve, {p}, options).front();
}

CausticDomains domains_of(const std::vector<CausticBranch>& branches, double tol) {
    CausticDomains d;
    std::map<int, const CausticBranch*> by_order;
    for (const auto& b : branches) {
        by_order[b.order] = &b;
        auto& list = d.domains[b.order];
        for (const auto& c : b.components) list.push_back({c.xi_begin, c.xi_end, c.full});
    }
    auto contained = [&](const Interval& inner, const std::vector<Interval>& outer, double period) {
        for (const auto& o : outer) {
            if (o.full) return true;
            for (int k = -1; k <= 1; ++k) {
                const double shift = k * period;
                if (inner.begin + shift >= o.begin - tol && inner.end + shift <= o.end + tol) return true;
            }
        }
        return false;
    };
    for (const auto& [p, br] : by_order) {
        const int parent = p > 0 ? p - 1 : p + 1;
        if (p == 0 || !by_order.count(parent)) continue;
        const auto& outer = d.domains[parent];
        for (const auto& in : d.domains[p]) {
            if (in.full && !(outer.size() == 1 && outer[0].full)) {
                d.nested = false;
                d.violations.push_back("I_" + std::to_string(p) + " is the full curve but I_" +
                                       std::to_string(parent) + " is not");
                continue;
            }
            if (!in.full && !contained(in, outer, br->curve_period)) {
                d.nested = false;
                std::ostringstream os;
                os << "component [" << in.begin << ", " << in.end << "] of I_" << p
                   << " not inside I_" << parent;
                d.violations.push_back(os.str());
            }
        }
    }
    return d;
}

CausticDomains caustic_domains(const RegularCurve& curve, int p_min, int p_max,
                               const TraceOptions& options) {
    std::vector<int> orders;
    for (int p = p_min; p <= p_max; ++p) orders.push_back(p);
    return domains_of(trace_caustics(curve, orders, options));
}

}  // namespace geocaustic
