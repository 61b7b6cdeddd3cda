#include "geocaustic/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "geocaustic/numeric.hpp"
#include "geocaustic/parallel.hpp"
#include "geocaustic/proximity.hpp"

namespace geocaustic {

const CausticBranch* EnvelopeDecomposition::branch(int p) const {
    for (const auto& b : branches)
        if (b.order == p) return &b;
    return nullptr;
}

namespace {

// Shoots over [t_min, t_max], shrinking the interval when the geodesic leaves the atlas.
std::optional<GeodesicPath> shoot_clipped(const Surface& s, const UnitTangent& seed, double t_min,
                                          double t_max, const ShootOptions& opt, bool& clipped) {
    for (int attempt = 0; attempt < 8; ++attempt) {
        try {
            return shoot(s, seed, t_min, t_max, opt);
        } catch (const Error& e) {
            clipped = true;
            const double at = e.where();
            if (!std::isfinite(at)) return std::nullopt;
            if (at > 0.0) t_max = 0.98 * at;
            else if (at < 0.0) t_min = 0.98 * at;
            else return std::nullopt;
        }
    }
    return std::nullopt;
}

double grid_xi(const RegularCurve& c, int n, int i) {
    const double h = c.length() / n;
    return c.closed() ? c.xi_min() + h * i : c.xi_min() + h * (i + 0.5);
}

// Unit tangent of a sampled polyline at index i, in the chart of sample i.
Vec2 sample_tangent(const Surface& s, const std::vector<ChartPoint>& pts, std::size_t i,
                    bool closed) {
    const std::size_t n = pts.size();
    const std::size_t a = i > 0 ? i - 1 : (closed ? n - 1 : i);
    const std::size_t b = i + 1 < n ? i + 1 : (closed ? 0 : i);
    const Vec2 d = s.delta(pts[i], pts[b]) - s.delta(pts[i], pts[a]);
    const double len = s.metric_at(pts[i]).norm(d);
    return len > 0.0 ? (1.0 / len) * d : Vec2{0.0, 0.0};
}

double tangent_angle(const Surface& s, const ChartPoint& p, const Vec2& a, const Vec2& b) {
    const Metric g = s.metric_at(p);
    const double na = g.norm(a), nb = g.norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::acos(std::min(1.0, std::abs(g.inner(a, b)) / (na * nb)));
}

std::vector<std::vector<ChartPoint>> component_lines(const CausticBranch& b) {
    std::vector<std::vector<ChartPoint>> out;
    for (const auto& c : b.components) {
        out.emplace_back();
        for (const auto& s : c.samples) out.back().push_back(s.point);
    }
    return out;
}

std::vector<SelfTangency> find_self_tangencies(const Surface& s, const CausticBranch& a,
                                               const CausticBranch& b, double tol,
                                               double max_angle) {
    std::vector<SelfTangency> out;
    if (a.empty() || b.empty()) return out;
    ProximityIndex index(s, std::max(tol, 1e-3));
    const auto lines_b = component_lines(b);
    for (std::size_t k = 0; k < lines_b.size(); ++k)
        index.add_polyline(lines_b[k], b.components[k].full);
    for (const auto& comp : a.components) {
        std::vector<ChartPoint> pts;
        for (const auto& smp : comp.samples) pts.push_back(smp.point);
        std::optional<SelfTangency> run;
        const auto flush = [&] {
            if (run && run->angle < max_angle) out.push_back(*run);
            run.reset();
        };
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const Nearest n = index.nearest(pts[i], tol);
            if (!n.found) {
                flush();
                continue;
            }
            if (run && run->distance <= n.distance) continue;
            const auto& line = lines_b[n.polyline];
            const auto& bc = b.components[n.polyline];
            const std::size_t j = n.segment;
            const std::size_t j1 = j + 1 < line.size() ? j + 1 : 0;
            const Vec2 tb = s.delta(pts[i], line[j1]) - s.delta(pts[i], line[j]);
            const Vec2 ta = sample_tangent(s, pts, i, comp.full);
            SelfTangency st;
            st.order_a = a.order;
            st.order_b = b.order;
            st.xi_a = comp.samples[i].xi;
            st.xi_b = bc.samples[j].xi + n.s * (bc.samples[j1].xi - bc.samples[j].xi);
            st.location = pts[i];
            st.distance = n.distance;
            st.angle = tangent_angle(s, pts[i], ta, tb);
            run = st;
        }
        flush();
    }
    return out;
}


// Two nearby geodesics advanced together with the same fixed RK4 steps in one chart, so that
// their separation is a smooth function of the initial data down to round-off.
struct PairState {
    int chart = 0;
    Vec2 xa{}, va{}, xb{}, vb{};
};

class PairFlow {
public:
    explicit PairFlow(const Surface& s) : s_(s) {}

    Vec2 accel(int chart, const Vec2& x, const Vec2& v) const {
        const Vec2 a = s_.christoffel_at({chart, x[0], x[1]}).contract(v, v);
        return {-a[0], -a[1]};
    }

    // One RK4 step of size h for a single geodesic.
    void step1(int chart, Vec2& x, Vec2& v, double h) const {
        const Vec2 k1x = v, k1v = accel(chart, x, v);
        const Vec2 k2x = v + 0.5 * h * k1v, k2v = accel(chart, x + 0.5 * h * k1x, k2x);
        const Vec2 k3x = v + 0.5 * h * k2v, k3v = accel(chart, x + 0.5 * h * k2x, k3x);
        const Vec2 k4x = v + h * k3v, k4v = accel(chart, x + h * k3x, k4x);
        x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }

    PairState advanced(const PairState& p, double h) const {
        PairState q = p;
        step1(q.chart, q.xa, q.va, h);
        step1(q.chart, q.xb, q.vb, h);
        return q;
    }

    bool inside(const PairState& p) const {
        return s_.in_domain({p.chart, p.xa[0], p.xa[1]}) && s_.in_domain({p.chart, p.xb[0], p.xb[1]});
    }

    // Moves both geodesics to the chart preferred at A. Returns false if B cannot follow.
    bool rechart(PairState& p) const {
        const ChartPoint a{p.chart, p.xa[0], p.xa[1]};
        if (s_.chart(p.chart).preferred(a.u, a.v)) return true;
        const auto [na, nva] = s_.to_preferred(a, p.va);
        if (na.chart == p.chart) return true;
        try {
            const auto [nb, nvb] = s_.switch_chart({p.chart, p.xb[0], p.xb[1]}, p.vb, na.chart);
            p = {na.chart, {na.u, na.v}, nva, {nb.u, nb.v}, nvb};
            return true;
        } catch (const Error&) {
            return false;
        }
    }

    // Signed normal offset of A from geodesic B; sigma is B's foot parameter relative to p.
    double offset(const PairState& p, double& sigma) const {
        const ChartPoint pa{p.chart, p.xa[0], p.xa[1]};
        Vec2 xb{}, vb{};
        for (int it = 0; it < 2; ++it) {
            xb = p.xb;
            vb = p.vb;
            step1(p.chart, xb, vb, sigma);
            const ChartPoint pb{p.chart, xb[0], xb[1]};
            const Vec2 d = s_.delta(pb, pa);
            const Metric g = s_.metric_at(pb);
            sigma += g.inner(d, vb) / g.inner(vb, vb);
        }
        xb = p.xb;
        vb = p.vb;
        step1(p.chart, xb, vb, sigma);
        const ChartPoint pb{p.chart, xb[0], xb[1]};
        const Metric g = s_.metric_at(pb);
        return g.area(vb, s_.delta(pb, pa)) / g.norm(vb);
    }

private:
    const Surface& s_;
};

class CrossingFinder {
public:
    CrossingFinder(const RegularCurve& curve, double epsilon, const NaifOptions& opt)
        : curve_(curve), s_(curve.surface()), flow_(s_), eps_(epsilon), opt_(opt) {}

    std::vector<NaifPoint> operator()(double xi) const {
        std::vector<NaifPoint> out;
        double xb = xi + eps_;
        if (curve_.closed() && xb >= curve_.xi_max()) xb -= curve_.length();
        if (!curve_.closed() && xb > curve_.xi_max()) return out;
        const UnitTangent a = tangent_geodesic_seed(curve_, xi);
        UnitTangent b = tangent_geodesic_seed(curve_, xb);
        try {
            const auto [pb, vb] = s_.switch_chart(b.point, b.direction, a.point.chart);
            b = {pb, vb};
        } catch (const Error&) {
            return out;
        }
        const PairState start{a.point.chart, {a.point.u, a.point.v}, a.direction,
                              {b.point.u, b.point.v}, b.direction};
        for (int dir : {-1, 1}) scan(xi, start, dir, out);
        std::sort(out.begin(), out.end(),
                  [](const NaifPoint& p, const NaifPoint& q) { return p.t < q.t; });
        return out;
    }

private:
    void scan(double xi, PairState p, int dir, std::vector<NaifPoint>& out) const {
        const double h = dir * opt_.sample_dt;
        const long steps = static_cast<long>(std::floor(opt_.t_max / opt_.sample_dt + 1e-9));
        double sigma = -eps_;
        double w = flow_.offset(p, sigma);
        if (dir > 0 && w == 0.0) out.push_back({xi, 0.0, {p.chart, p.xa[0], p.xa[1]}});
        for (long k = 0; k < steps; ++k) {
            PairState q;
            try {
                q = flow_.advanced(p, h);
                if (!flow_.inside(q)) return;
            } catch (const Error&) {
                return;
            }
            double sq = sigma;
            const double wq = flow_.offset(q, sq);
            const double t0 = k * h;
            if ((w < 0.0 && wq > 0.0) || (w > 0.0 && wq < 0.0)) {
                const auto f = [&](double tau) {
                    double sg = sigma;
                    return flow_.offset(flow_.advanced(p, tau), sg);
                };
                const double lo = dir > 0 ? 0.0 : h, hi = dir > 0 ? h : 0.0;
                const double flo = dir > 0 ? w : wq, fhi = dir > 0 ? wq : w;
                const double tau = numeric::bracketed_root(f, lo, hi, flo, fhi, 1e-14);
                const PairState r = flow_.advanced(p, tau);
                out.push_back({xi, t0 + tau, {r.chart, r.xa[0], r.xa[1]}});
            } else if (wq == 0.0) {
                out.push_back({xi, t0 + h, {q.chart, q.xa[0], q.xa[1]}});
            }
            p = q;
            if (!flow_.rechart(p)) return;
            sigma = sq;
            w = p.chart != q.chart ? flow_.offset(p, sigma) : wq;
        }
    }

    const RegularCurve& curve_;
    const Surface& s_;
    PairFlow flow_;
    double eps_;
    NaifOptions opt_;
};

// Largest distance in t between a crossing of one set and the nearest crossing of the other.
double crossing_gap(const std::vector<NaifPoint>& a, const std::vector<NaifPoint>& b) {
    if (a.empty() && b.empty()) return 0.0;
    if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
    const auto one_way = [](const std::vector<NaifPoint>& x, const std::vector<NaifPoint>& y) {
        double worst = 0.0;
        for (const auto& p : x) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : y) best = std::min(best, std::abs(p.t - q.t));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(one_way(a, b), one_way(b, a));
}

}  // namespace

std::vector<NaifPoint> naif_crossings(const RegularCurve& curve, double xi, double epsilon,
                                      const NaifOptions& options) {
    return CrossingFinder(curve, epsilon, options)(xi);
}

std::vector<NaifPoint> naif_envelope(const RegularCurve& input, double epsilon,
                                     const NaifOptions& opt) {
    if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
    const RegularCurve curve = input.arc_length_reparameterize();
    const CrossingFinder find(curve, epsilon, opt);

    std::vector<double> xs;
    for (int i = 0; i < opt.grid_n; ++i) xs.push_back(grid_xi(curve, opt.grid_n, i));
    std::vector<std::vector<NaifPoint>> per(xs.size());
    parallel_for(xs.size(), opt.jobs, [&](std::size_t i) { per[i] = find(xs[i]); });

    std::vector<NaifPoint> cloud;
    for (auto& v : per) cloud.insert(cloud.end(), v.begin(), v.end());

    // Sweeps around inflections: xi = xi_0 - epsilon / 2 + sign * epsilon * 10^-s.
    for (const auto& inf : find_inflections(curve)) {
        for (int sign : {-1, 1}) {
            const auto xi_of = [&](double sv) {
                return inf.xi - 0.5 * epsilon + sign * epsilon * std::pow(10.0, -sv);
            };
            const auto inside = [&](double sv) {
                const double x = xi_of(sv);
                return curve.closed() || (x >= curve.xi_min() && x + epsilon <= curve.xi_max());
            };
            std::vector<double> levels;
            for (int j = 0; j <= opt.sweep_levels; ++j) {
                const double sv = opt.sweep_decades * j / opt.sweep_levels;
                if (inside(sv)) levels.push_back(sv);
            }
            std::vector<std::vector<NaifPoint>> base(levels.size());
            parallel_for(levels.size(), opt.jobs,
                         [&](std::size_t j) { base[j] = find(xi_of(levels[j])); });
            std::size_t pairs = levels.size();
            const std::size_t budget = std::max(
                opt.max_sweep_pairs, static_cast<std::size_t>(std::ceil(4.0 * opt.t_max / opt.sweep_gap)));
            std::vector<NaifPoint> extra;
            // Depth-first bisection between consecutive levels, in a deterministic order.
            struct Cell {
                double s0, s1;
                std::vector<NaifPoint> c0, c1;
                int depth;
            };
            for (std::size_t j = 0; j + 1 < levels.size(); ++j) {
                std::vector<Cell> stack{{levels[j], levels[j + 1], base[j], base[j + 1], 0}};
                while (!stack.empty()) {
                    Cell cell = std::move(stack.back());
                    stack.pop_back();
                    if (cell.depth >= opt.sweep_depth || pairs >= budget ||
                        crossing_gap(cell.c0, cell.c1) <= opt.sweep_gap)
                        continue;
                    const double mid = 0.5 * (cell.s0 + cell.s1);
                    auto cm = find(xi_of(mid));
                    ++pairs;
                    extra.insert(extra.end(), cm.begin(), cm.end());
                    stack.push_back({mid, cell.s1, cm, std::move(cell.c1), cell.depth + 1});
                    stack.push_back({cell.s0, mid, std::move(cell.c0), cm, cell.depth + 1});
                }
            }
            for (auto& v : base) cloud.insert(cloud.end(), v.begin(), v.end());
            cloud.insert(cloud.end(), extra.begin(), extra.end());
        }
    }
    std::stable_sort(cloud.begin(), cloud.end(), [](const NaifPoint& a, const NaifPoint& b) {
        return a.xi != b.xi ? a.xi < b.xi : a.t < b.t;
    });
    return cloud;
}

EnvelopeDecomposition assemble_envelope(const RegularCurve& input, int p_min, int p_max,
                                        const EnvelopeOptions& opt) {
    if (p_min > p_max) throw Error(ErrorKind::InvalidArgument, "empty order range");
    const RegularCurve curve = input.arc_length_reparameterize();
    const Surface& s = curve.surface();
    const double t_max = opt.trace.t_max;
    EnvelopeDecomposition d{curve, t_max, {}, {}, {}, false};

    for (const auto& inf : find_inflections(curve, opt.inflections)) {
        InflectionalGeodesic g;
        g.xi = inf.xi;
        g.inflection = inf;
        const UnitTangent seed = tangent_geodesic_seed(curve, inf.xi);
        const auto path =
            shoot_clipped(s, seed, -t_max, t_max, opt.trace.conjugate.shoot, g.left_atlas);
        if (path) {
            g.path = path;
            const int n = static_cast<int>(std::floor(2.0 * t_max / opt.sample_dt + 1e-9));
            for (int k = 0; k <= n; ++k) {
                const double t = -t_max + k * opt.sample_dt;
                if (t < path->t_min() || t > path->t_max()) continue;
                g.t.push_back(t);
                g.samples.push_back(path->point(t));
            }
        }
        d.truncated = d.truncated || g.left_atlas;
        d.inflectional.push_back(std::move(g));
    }

    std::vector<int> orders;
    for (int p = std::min(p_min, 0); p <= std::max(p_max, 0); ++p)
        if (p == 0 || (p >= p_min && p <= p_max)) orders.push_back(p);
    d.branches = trace_caustics(curve, orders, opt.trace);
    for (auto& b : d.branches) {
        if (b.order != 0 && !b.empty())
            b.singularities = detect_singularities(b, s, opt.singularities);
        d.truncated = d.truncated || (b.horizon_hit && !b.empty()) || b.left_atlas || b.failed_samples > 0;
    }
    for (std::size_t i = 0; i < d.branches.size(); ++i)
        for (std::size_t j = i + 1; j < d.branches.size(); ++j) {
            auto st = find_self_tangencies(s, d.branches[i], d.branches[j], opt.tangency_tol,
                                           opt.tangency_angle);
            d.self_tangencies.insert(d.self_tangencies.end(), st.begin(), st.end());
        }
    return d;
}

}  // namespace geocaustic

namespace geocaustic {

namespace {

// Decomposition as polylines, each with a smooth parameterization for refined distances.
struct RefinedSet {
    struct Line {
        std::vector<double> x;
        std::function<ChartPoint(double)> at;
        int source = 0;
    };
    std::vector<Line> lines;
    ProximityIndex index;

    RefinedSet(const Surface& s, double cell) : index(s, cell) {}
};

RefinedSet decomposition_set(const EnvelopeDecomposition& d, double cell) {
    const Surface& s = d.curve.surface();
    RefinedSet set(s, cell);
    for (const auto& b : d.branches) {
        for (const auto& c : b.components) {
            RefinedSet::Line line;
            line.source = b.order;
            std::vector<ChartPoint> pts;
            for (const auto& smp : c.samples) {
                line.x.push_back(smp.xi);
                pts.push_back(smp.point);
            }
            if (b.order == 0) {
                const RegularCurve curve = d.curve;
                line.at = [curve](double x) { return curve.point(x); };
            } else if (auto track = component_track(s, c)) {
                line.at = [t = std::move(*track)](double x) { return t.point(x); };
            }
            set.index.add_polyline(std::move(pts), c.full);
            set.lines.push_back(std::move(line));
        }
    }
    for (std::size_t k = 0; k < d.inflectional.size(); ++k) {
        const auto& g = d.inflectional[k];
        RefinedSet::Line line;
        line.source = 1000 + static_cast<int>(k);
        line.x = g.t;
        if (g.path) line.at = [path = *g.path](double t) { return path.point(t); };
        set.index.add_polyline(g.samples, false);
        set.lines.push_back(std::move(line));
    }
    return set;
}

// Distance from q to the decomposition, refined on the smooth parameterization near the nearest
// polyline segment.
double refined_distance(const Surface& s, const RefinedSet& set, const ChartPoint& q,
                        const Nearest& n) {
    if (!n.found) return std::numeric_limits<double>::infinity();
    const auto& line = set.lines[n.polyline];
    if (!line.at || line.x.size() < 2) return n.distance;
    const std::size_t m = line.x.size();
    const std::size_t j = n.segment;
    const double h = j + 1 < m ? line.x[j + 1] - line.x[j] : line.x[j] - line.x[j - 1];
    const double a = line.x[j] - h, b = line.x[j] + 2.0 * h;
    const auto f = [&](double x) {
        try {
            return s.local_distance(line.at(x), q);
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    const auto [x, dist] = numeric::minimize(f, a, b, 30);
    (void)x;
    return std::min(dist, n.distance);
}

template <class T>
void keep_worst(std::vector<T>& v, std::size_t n) {
    std::stable_sort(v.begin(), v.end(), [](const T& a, const T& b) { return a.distance > b.distance; });
    if (v.size() > n) v.resize(n);
}

int grid_of(const EnvelopeDecomposition& d) {
    for (const auto& b : d.branches)
        if (b.grid_step > 0.0) return static_cast<int>(std::lround(d.curve.length() / b.grid_step));
    return 512;
}

}  // namespace

Theorem1Report verify_theorem1(const EnvelopeDecomposition& d, const std::vector<NaifPoint>& cloud,
                               double tol, std::size_t max_offenders) {
    const Surface& s = d.curve.surface();
    Theorem1Report r;
    r.cloud_size = cloud.size();
    const double cell = std::max(tol, 1e-4);
    const RefinedSet set = decomposition_set(d, cell);

    std::size_t covered = 0;
    for (const auto& p : cloud) {
        const Nearest n = set.index.nearest(p.point);
        const double dist = refined_distance(s, set, p.point, n);
        r.max_cloud_distance = std::max(r.max_cloud_distance, dist);
        if (dist <= tol) {
            ++covered;
        } else {
            r.coverage_offenders.push_back({p.point, dist, p.xi, p.t, 0});
        }
    }
    r.coverage = cloud.empty() ? 1.0 : static_cast<double>(covered) / cloud.size();
    keep_worst(r.coverage_offenders, max_offenders);

    ProximityIndex cloud_index(s, cell);
    std::vector<ChartPoint> pts;
    for (const auto& p : cloud) pts.push_back(p.point);
    cloud_index.add_points(std::move(pts));
    std::size_t total = 0, members = 0;
    const auto member = [&](const ChartPoint& q, double xi, double t, int source) {
        ++total;
        const Nearest n = cloud_index.nearest(q, tol);
        if (n.found) {
            ++members;
            return true;
        }
        const Nearest far = cloud_index.nearest(q);
        r.membership_offenders.push_back(
            {q, far.found ? far.distance : std::numeric_limits<double>::infinity(), xi, t, source});
        return false;
    };
    for (const auto& b : d.branches)
        for (const auto& c : b.components)
            for (const auto& smp : c.samples) member(smp.point, smp.xi, smp.tau, b.order);
    for (std::size_t k = 0; k < d.inflectional.size(); ++k) {
        const auto& g = d.inflectional[k];
        std::size_t hit = 0;
        for (std::size_t i = 0; i < g.samples.size(); ++i)
            if (member(g.samples[i], g.xi, g.t[i], 1000 + static_cast<int>(k))) ++hit;
        r.inflectional_coverage.push_back(
            g.samples.empty() ? 0.0 : static_cast<double>(hit) / g.samples.size());
    }
    r.decomposition_size = total;
    r.membership = total == 0 ? 1.0 : static_cast<double>(members) / total;
    keep_worst(r.membership_offenders, max_offenders);
    return r;
}

Theorem1Report verify_theorem1(const EnvelopeDecomposition& d, double epsilon, double tol,
                               const NaifOptions& options) {
    NaifOptions opt = options;
    opt.grid_n = grid_of(d);
    opt.t_max = d.t_max;
    opt.sweep_gap = std::min(opt.sweep_gap, tol);
    return verify_theorem1(d, naif_envelope(d.curve, epsilon, opt), tol);
}

}  // namespace geocaustic

namespace geocaustic {

namespace {

class Pencil {
public:
    Pencil(const RegularCurve& curve, int p, int side, const PencilOptions& opt)
        : c_(curve), s_(curve.surface()), p_(p), side_(side), opt_(opt) {}

    std::optional<ChartPoint> caustic(double xi, double theta) const {
        const UnitTangent t = tangent_geodesic_seed(c_, xi);
        const Metric g = s_.metric_at(t.point);
        const Vec2 n = left_normal(g, t.direction);
        const double cs = std::cos(theta), sn = std::sin(theta);
        const Vec2 dir = side_ * (cs * t.direction + sn * n);
        try {
            const auto r = conjugate_point(s_, {t.point, dir}, p_, opt_.t_max, opt_.conjugate);
            if (!r) return std::nullopt;
            return r->point;
        } catch (const Error&) {
            return std::nullopt;
        }
    }

    // Partial derivatives of the pencil at (xi, theta) by central differences.
    std::optional<std::pair<Vec2, Vec2>> partials(const ChartPoint& base, double xi,
                                                  double theta) const {
        const double h = opt_.fd_step;
        const auto xp = caustic(xi + h, theta), xm = caustic(xi - h, theta);
        const auto tp = caustic(xi, theta + h), tm = caustic(xi, theta - h);
        if (!xp || !xm || !tp || !tm) return std::nullopt;
        const Vec2 dxi = (0.5 / h) * (s_.delta(base, *xp) - s_.delta(base, *xm));
        const Vec2 dth = (0.5 / h) * (s_.delta(base, *tp) - s_.delta(base, *tm));
        return std::make_pair(dxi, dth);
    }

    std::optional<double> det(double xi, double theta) const {
        const auto base = caustic(xi, theta);
        if (!base) return std::nullopt;
        const auto d = partials(*base, xi, theta);
        if (!d) return std::nullopt;
        return s_.metric_at(*base).area(d->first, d->second);
    }

    // Envelope point for parameter xi; `fallback` reports a degenerate pencil.
    std::optional<ChartPoint> envelope_point(double xi, bool& fallback) const {
        fallback = false;
        const auto base = caustic(xi, 0.0);
        if (!base) return std::nullopt;
        const auto d = partials(*base, xi, 0.0);
        if (!d) return std::nullopt;
        const Metric g = s_.metric_at(*base);
        if (g.norm(d->second) < 1e-6) {
            fallback = true;
            return base;
        }
        const double d0 = g.area(d->first, d->second);
        if (d0 == 0.0) return base;
        for (double step = 0.005; step <= opt_.max_angle; step *= 2.0) {
            for (double th : {step, -step}) {
                const auto dt = det(xi, th);
                if (!dt || (*dt > 0.0) == (d0 > 0.0)) continue;
                const auto f = [&](double x) {
                    const auto v = det(xi, x);
                    return v ? *v : d0;
                };
                const double lo = std::min(0.0, th), hi = std::max(0.0, th);
                const double flo = th > 0.0 ? d0 : *dt, fhi = th > 0.0 ? *dt : d0;
                const double root = numeric::bracketed_root(f, lo, hi, flo, fhi, 1e-10);
                return caustic(xi, root);
            }
        }
        return std::nullopt;
    }

private:
    const RegularCurve& c_;
    const Surface& s_;
    int p_, side_;
    PencilOptions opt_;
};

double one_sided(const Surface& s, const std::vector<std::vector<ChartPoint>>& from,
                 const ProximityIndex& to) {
    double worst = 0.0;
    for (const auto& line : from)
        for (const auto& q : line) {
            const Nearest n = to.nearest(q);
            if (n.found) worst = std::max(worst, n.distance);
        }
    (void)s;
    return worst;
}

}  // namespace

PencilReport pencil_caustic_crosscheck(const RegularCurve& input, int p,
                                       const PencilOptions& opt) {
    if (p <= 0) throw Error(ErrorKind::InvalidArgument, "pencil order must be positive");
    const RegularCurve curve = input.arc_length_reparameterize();
    const Surface& s = curve.surface();
    PencilReport report;
    report.order = p;

    std::vector<double> xs;
    for (int i = 0; i < opt.grid_n; ++i) xs.push_back(grid_xi(curve, opt.grid_n, i));

    std::vector<std::vector<ChartPoint>> pencil_lines;
    for (int side : {1, -1}) {
        const Pencil pencil(curve, p, side, opt);
        std::vector<std::optional<ChartPoint>> pts(xs.size());
        std::vector<char> fell(xs.size(), 0);
        parallel_for(xs.size(), opt.jobs, [&](std::size_t i) {
            bool f = false;
            pts[i] = pencil.envelope_point(xs[i], f);
            fell[i] = f;
        });
        std::vector<ChartPoint> run;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            report.fallbacks += fell[i] ? 1 : 0;
            if (pts[i]) {
                run.push_back(*pts[i]);
                ++report.envelope_points;
            } else if (!run.empty()) {
                pencil_lines.push_back(std::move(run));
                run.clear();
            }
        }
        if (!run.empty()) pencil_lines.push_back(std::move(run));
    }

    TraceOptions trace;
    trace.grid_n = opt.grid_n;
    trace.t_max = opt.t_max;
    trace.conjugate = opt.conjugate;
    trace.jobs = opt.jobs;
    const auto branches = trace_caustics(curve, {p, -p}, trace);
    std::vector<std::vector<ChartPoint>> branch_lines;
    ProximityIndex branch_index(s, 1e-3);
    for (const auto& b : branches)
        for (const auto& c : b.components) {
            std::vector<ChartPoint> pts;
            for (const auto& smp : c.samples) pts.push_back(smp.point);
            branch_index.add_polyline(pts, c.full);
            branch_lines.push_back(std::move(pts));
        }

    if (pencil_lines.empty() && branch_lines.empty()) {
        report.trivially_consistent = true;
        return report;
    }
    if (pencil_lines.empty() || branch_lines.empty()) {
        report.hausdorff = std::numeric_limits<double>::infinity();
        return report;
    }
    ProximityIndex pencil_index(s, 1e-3);
    for (const auto& l : pencil_lines) pencil_index.add_polyline(l, false);
    report.hausdorff = std::max(one_sided(s, pencil_lines, branch_index),
                                one_sided(s, branch_lines, pencil_index));
    return report;
}

CorrespondenceReport inflection_correspondence(const RegularCurve& input,
                                               const CausticBranch& branch, double window,
                                               const InflectionOptions& options) {
    const RegularCurve curve = input.arc_length_reparameterize();
    CorrespondenceReport report;
    std::vector<SingularityRecord> sing = branch.singularities;
    if (sing.empty() && !branch.empty()) sing = detect_singularities(branch, curve.surface());
    const double period = curve.closed() ? curve.length() : 0.0;
    const auto gap = [&](double a, double b) {
        double d = std::abs(a - b);
        if (period > 0.0) {
            d = std::fmod(d, period);
            d = std::min(d, period - d);
        }
        return d;
    };
    for (const auto& inf : find_inflections(curve, options)) {
        if (inf.kind != InflectionRecord::Kind::Simple) continue;
        InflectionMatch m;
        m.xi = inf.xi;
        for (const auto& c : branch.components) {
            if (c.full) m.inside_domain = true;
            for (double shift : {0.0, period, -period})
                if (inf.xi + shift > c.xi_begin && inf.xi + shift < c.xi_end) m.inside_domain = true;
        }
        double best = std::numeric_limits<double>::infinity();
        for (const auto& r : sing) {
            if (r.kind != SingularityRecord::Kind::Inflection) continue;
            const double d = gap(r.xi.front(), inf.xi);
            if (d < best) {
                best = d;
                m.branch_xi = r.xi.front();
            }
        }
        m.matched = best <= 0.5 * window;
        if (!m.inside_domain) {
            report.matches.push_back(m);
            continue;
        }
        (m.matched ? report.matched : report.unmatched) += 1;
        report.matches.push_back(m);
    }
    return report;
}

}  // namespace geocaustic
