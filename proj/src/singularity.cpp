#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "geocaustic/caustic.hpp"
#include "geocaustic/numeric.hpp"

namespace geocaustic {

ChartPoint ChartTrack::point(double x) const {
    double uu = u.value(x);
    if (u_period > 0.0) uu -= u_period * std::floor((uu + 0.5 * u_period) / u_period);
    return {chart, uu, v.value(x)};
}

namespace {

std::optional<ChartPoint> in_chart(const Surface& s, const ChartPoint& p, int chart) {
    if (p.chart == chart) return p;
    try {
        return s.to_chart(p, chart);
    } catch (const Error&) {
        return std::nullopt;
    }
}

int best_chart(const Surface& s, const std::vector<const CausticSample*>& samples) {
    int best = samples.empty() ? 0 : samples.front()->point.chart;
    int best_count = -1;
    for (int c = 0; c < s.chart_count(); ++c) {
        int count = 0;
        for (const auto* smp : samples) {
            const auto q = in_chart(s, smp->point, c);
            if (q && s.chart(c).preferred(q->u, q->v)) ++count;
        }
        if (count > best_count) {
            best_count = count;
            best = c;
        }
    }
    return best;
}

std::optional<ChartTrack> make_track(const Surface& s, const CausticComponent& comp, int chart) {
    const std::size_t n = comp.samples.size();
    if (n < 4) return std::nullopt;
    ChartTrack t;
    t.chart = chart;
    t.periodic = comp.full;
    t.u_period = s.chart(chart).u_period();
    std::vector<double> us, vs;
    for (const auto& smp : comp.samples) {
        const auto q = in_chart(s, smp.point, chart);
        if (!q) return std::nullopt;
        double uu = q->u;
        if (t.u_period > 0.0 && !us.empty())
            uu += t.u_period * std::round((us.back() - uu) / t.u_period);
        us.push_back(uu);
        vs.push_back(q->v);
        t.xi.push_back(smp.xi);
        t.coords.push_back({uu, q->v});
    }
    const double h = (t.xi.back() - t.xi.front()) / static_cast<double>(n - 1);
    t.xi_begin = t.xi.front();
    double drift = 0.0;
    if (t.periodic) {
        t.xi_end = t.xi_begin + h * static_cast<double>(n);
        if (t.u_period > 0.0)
            drift = us.front() + t.u_period * std::round((us.back() - us.front()) / t.u_period) -
                    us.front();
    } else {
        t.xi_end = t.xi.back();
    }
    t.u = CubicSpline(t.xi_begin, h, us, t.periodic, drift);
    t.v = CubicSpline(t.xi_begin, h, vs, t.periodic, 0.0);
    return t;
}

double speed(const Surface& s, const ChartTrack& t, double x) {
    return s.metric_at(t.point(x)).norm(t.d1(x));
}

// Signed curvature numerator area_g(phi', D phi').
double bending(const Surface& s, const ChartTrack& t, double x) {
    const ChartPoint p = t.point(x);
    const Vec2 d1 = t.d1(x);
    const Vec2 acc = t.d2(x) + s.christoffel_at(p).contract(d1, d1);
    return s.metric_at(p).area(d1, acc);
}

struct Fit {
    Eigen::VectorXd coef;
    double rss = 0.0;
    Eigen::MatrixXd cov;
};

Fit least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& y) {
    Fit f;
    f.coef = a.colPivHouseholderQr().solve(y);
    f.rss = (a * f.coef - y).squaredNorm();
    const double dof = static_cast<double>(a.rows() - a.cols());
    const double sigma2 = dof > 0 ? f.rss / dof : 0.0;
    f.cov = sigma2 * (a.transpose() * a).inverse();
    return f;
}

SingularityRecord fit_cusp(const Surface& s, const ChartTrack& t, std::size_t i, double xc,
                           const SingularityOptions& opt) {
    SingularityRecord r;
    r.kind = SingularityRecord::Kind::Cusp;
    r.location = t.point(xc);
    r.xi = {xc};
    r.speed = speed(s, t, xc);

    const Metric g = s.metric_at(r.location);
    const Vec2 origin = t.at(xc);
    Vec2 e1 = t.d2(xc);
    const double len = g.norm(e1);
    if (!(len > 0.0)) {
        r.degenerate = true;
        return r;
    }
    e1 = (1.0 / len) * e1;
    const Vec2 e2 = left_normal(g, e1);

    const int n = static_cast<int>(t.xi.size());
    const double h = t.u.step();
    std::vector<double> ss, xs, ys;
    for (int k = -opt.fit_half_window; k <= opt.fit_half_window; ++k) {
        int j = static_cast<int>(i) + k;
        double shift = 0.0;
        Vec2 c;
        if (t.periodic) {
            const int w = ((j % n) + n) % n;
            const int turns = (j - w) / n;
            shift = turns * h * n;
            c = t.coords[static_cast<std::size_t>(w)];
            c[0] += turns * (t.u.value(t.xi_begin + h * n) - t.u.value(t.xi_begin));
            j = w;
        } else {
            if (j < 0 || j >= n) continue;
            c = t.coords[static_cast<std::size_t>(j)];
        }
        const Vec2 w = c - origin;
        ss.push_back(t.xi[static_cast<std::size_t>(j)] + shift - xc);
        xs.push_back(g.inner(w, e1));
        ys.push_back(g.inner(w, e2));
    }
    const int m = static_cast<int>(ss.size());
    if (m < 7) {
        r.degenerate = true;
        return r;
    }
    Eigen::MatrixXd a(m, 5);
    Eigen::VectorXd x(m), y(m);
    double scale = 0.0, width = 0.0;
    for (int k = 0; k < m; ++k) {
        const double sk = ss[static_cast<std::size_t>(k)];
        double pw = 1.0;
        for (int c = 0; c < 5; ++c) a(k, c) = pw *= sk;
        x(k) = xs[static_cast<std::size_t>(k)];
        y(k) = ys[static_cast<std::size_t>(k)];
        scale = std::max(scale, std::hypot(x(k), y(k)));
        width = std::max(width, std::abs(sk));
    }
    const Fit fx = least_squares(a, x);
    const Fit fy = least_squares(a, y);
    r.residual = scale > 0.0 ? std::sqrt((fx.rss + fy.rss) / m) / scale : 0.0;
    const double b3 = fy.coef(2), se3 = std::sqrt(std::max(0.0, fy.cov(2, 2)));
    const double a2 = fx.coef(1), se2 = std::sqrt(std::max(0.0, fx.cov(1, 1)));
    // The cubic term must also be visible at the window scale, otherwise a higher-order
    // contact leaking into the s^3 coefficient would pass the significance test.
    const bool semicubic = std::abs(b3) > 1.96 * se3 && std::abs(a2) > 1.96 * se2 &&
                           std::abs(b3) * width > opt.fit_tol * std::abs(a2);
    r.degenerate = !semicubic || r.residual > opt.fit_tol;
    return r;
}

double circular_gap(double a, double b, double period) {
    double d = std::abs(a - b);
    if (period > 0.0) {
        d = std::fmod(d, period);
        d = std::min(d, period - d);
    }
    return d;
}

struct Segment {
    std::size_t track;
    std::size_t index;  // start sample
    Vec2 a, b;
    double xa, xb;
};

std::vector<Segment> segments_of(const std::vector<ChartTrack>& tracks) {
    std::vector<Segment> out;
    for (std::size_t k = 0; k < tracks.size(); ++k) {
        const auto& t = tracks[k];
        const std::size_t n = t.xi.size();
        for (std::size_t i = 0; i + 1 < n; ++i)
            out.push_back({k, i, t.coords[i], t.coords[i + 1], t.xi[i], t.xi[i + 1]});
        if (t.periodic) {
            const Vec2 end = t.at(t.xi_end);
            out.push_back({k, n - 1, t.coords[n - 1], end, t.xi[n - 1], t.xi_end});
        }
    }
    return out;
}

// Parameters (alpha, beta) in [0, 1) of the crossing of segments p0p1 and q0q1, if any.
std::optional<std::pair<double, double>> crossing(const Vec2& p0, const Vec2& p1, const Vec2& q0,
                                                  const Vec2& q1) {
    const Vec2 r = p1 - p0, s = q1 - q0, qp = q0 - p0;
    const double den = r[0] * s[1] - r[1] * s[0];
    if (den == 0.0) return std::nullopt;
    const double alpha = (qp[0] * s[1] - qp[1] * s[0]) / den;
    const double beta = (qp[0] * r[1] - qp[1] * r[0]) / den;
    if (alpha < 0.0 || alpha >= 1.0 || beta < 0.0 || beta >= 1.0) return std::nullopt;
    return std::make_pair(alpha, beta);
}

}  // namespace

std::optional<ChartTrack> component_track(const Surface& surface,
                                         const CausticComponent& component) {
    std::vector<const CausticSample*> own;
    for (const auto& s : component.samples) own.push_back(&s);
    return make_track(surface, component, best_chart(surface, own));
}

std::vector<ChartTrack> chart_tracks(const Surface& surface, const CausticBranch& branch) {
    std::vector<const CausticSample*> all;
    for (const auto& c : branch.components)
        for (const auto& s : c.samples) all.push_back(&s);
    const int common = best_chart(surface, all);
    std::vector<ChartTrack> tracks;
    for (const auto& c : branch.components) {
        auto t = make_track(surface, c, common);
        if (!t) {
            std::vector<const CausticSample*> own;
            for (const auto& s : c.samples) own.push_back(&s);
            t = make_track(surface, c, best_chart(surface, own));
        }
        if (t) tracks.push_back(std::move(*t));
    }
    return tracks;
}

std::vector<SingularityRecord> detect_singularities(const CausticBranch& branch,
                                                    const Surface& surface,
                                                    const SingularityOptions& opt) {
    std::vector<SingularityRecord> out;
    const auto tracks = chart_tracks(surface, branch);
    if (tracks.empty()) return out;

    std::vector<std::vector<double>> speeds;
    std::vector<double> all;
    for (const auto& t : tracks) {
        speeds.emplace_back();
        for (double x : t.xi) {
            speeds.back().push_back(speed(surface, t, x));
            all.push_back(speeds.back().back());
        }
    }
    std::nth_element(all.begin(), all.begin() + static_cast<long>(all.size() / 2), all.end());
    const double cusp_tol = opt.cusp_tol_rel * all[all.size() / 2];

    // Cusps: refined local minima of the g-speed.
    std::vector<std::vector<double>> cusp_xi(tracks.size());
    for (std::size_t k = 0; k < tracks.size(); ++k) {
        const auto& t = tracks[k];
        const auto& sp = speeds[k];
        const std::size_t n = sp.size();
        const double h = t.u.step();
        for (std::size_t i = 0; i < n; ++i) {
            if (!t.periodic && (i == 0 || i + 1 == n)) continue;
            const double prev = sp[(i + n - 1) % n], next = sp[(i + 1) % n];
            if (!(sp[i] <= prev && sp[i] < next)) continue;
            const auto [xm, sm] = numeric::minimize(
                [&](double x) { return speed(surface, t, x); }, t.xi[i] - h, t.xi[i] + h);
            if (sm >= cusp_tol) continue;
            out.push_back(fit_cusp(surface, t, i, xm, opt));
            cusp_xi[k].push_back(xm);
        }
    }

    // Transversal self-intersections.
    const auto segs = segments_of(tracks);
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const Segment& p = segs[i];
        const ChartTrack& tp = tracks[p.track];
        for (std::size_t j = i + 1; j < segs.size(); ++j) {
            const Segment& q = segs[j];
            const ChartTrack& tq = tracks[q.track];
            if (tp.chart != tq.chart) continue;
            if (p.track == q.track) {
                const std::size_t n = tp.xi.size();
                std::size_t gap = q.index > p.index ? q.index - p.index : p.index - q.index;
                if (tp.periodic) gap = std::min(gap, n - gap);
                if (gap <= static_cast<std::size_t>(opt.min_index_gap)) continue;
            }
            double shift = 0.0;
            if (tp.u_period > 0.0)
                shift = tp.u_period *
                        std::round(((p.a[0] + p.b[0]) - (q.a[0] + q.b[0])) / (2.0 * tp.u_period));
            const Vec2 q0{q.a[0] + shift, q.a[1]}, q1{q.b[0] + shift, q.b[1]};
            if (std::max(p.a[0], p.b[0]) < std::min(q0[0], q1[0]) ||
                std::max(q0[0], q1[0]) < std::min(p.a[0], p.b[0]) ||
                std::max(p.a[1], p.b[1]) < std::min(q0[1], q1[1]) ||
                std::max(q0[1], q1[1]) < std::min(p.a[1], p.b[1]))
                continue;
            const auto c = crossing(p.a, p.b, q0, q1);
            if (!c) continue;
            double xa = p.xa + c->first * (p.xb - p.xa);
            double xb = q.xa + c->second * (q.xb - q.xa);
            // Newton refinement on the splines.
            const double xa0 = xa, xb0 = xb, h = tp.u.step();
            bool ok = true;
            for (int it = 0; it < 30; ++it) {
                const Vec2 f = tp.at(xa) - (tq.at(xb) + Vec2{shift, 0.0});
                if (std::hypot(f[0], f[1]) < 1e-15) break;
                const Vec2 da = tp.d1(xa), db = tq.d1(xb);
                const double det = -da[0] * db[1] + da[1] * db[0];
                if (det == 0.0) {
                    ok = false;
                    break;
                }
                xa -= (-db[1] * f[0] + db[0] * f[1]) / det;
                xb -= (-da[1] * f[0] + da[0] * f[1]) / det;
            }
            if (!ok || std::abs(xa - xa0) > 2.0 * h || std::abs(xb - xb0) > 2.0 * h) {
                xa = xa0;
                xb = xb0;
            }
            const double period = branch.closed_curve ? branch.curve_period : 0.0;
            if (p.track == q.track && circular_gap(xa, xb, period) <= opt.min_index_gap * h) continue;
            if (period > 0.0) {
                xa = tp.xi_begin + std::fmod(std::fmod(xa - tp.xi_begin, period) + period, period);
                xb = tq.xi_begin + std::fmod(std::fmod(xb - tq.xi_begin, period) + period, period);
            }
            const ChartPoint loc = tp.point(xa);
            const Metric g = surface.metric_at(loc);
            const Vec2 da = tp.d1(xa), db = tq.d1(xb);
            const double cosang =
                std::min(1.0, std::abs(g.inner(da, db)) / (g.norm(da) * g.norm(db)));
            SingularityRecord r;
            r.kind = SingularityRecord::Kind::SelfIntersection;
            r.location = loc;
            r.xi = {std::min(xa, xb), std::max(xa, xb)};
            r.angle = std::acos(cosang);
            r.degenerate = r.angle <= opt.transversal_angle;
            bool dup = false;
            for (const auto& o : out)
                if (o.kind == r.kind && std::abs(o.xi[0] - r.xi[0]) < 1e-7 &&
                    std::abs(o.xi[1] - r.xi[1]) < 1e-7)
                    dup = true;
            if (!dup) out.push_back(r);
        }
    }

    // Inflections: sign changes of the bending away from cusps.
    for (std::size_t k = 0; k < tracks.size(); ++k) {
        const auto& t = tracks[k];
        const std::size_t n = t.xi.size();
        const double h = t.u.step();
        auto near_cusp = [&](double x) {
            for (double c : cusp_xi[k])
                if (circular_gap(x, c, t.periodic ? t.xi_end - t.xi_begin : 0.0) < 3.0 * h) return true;
            return false;
        };
        std::vector<double> b(n);
        for (std::size_t i = 0; i < n; ++i) b[i] = bending(surface, t, t.xi[i]);
        const std::size_t last = t.periodic ? n : n - 1;
        for (std::size_t i = 0; i < last; ++i) {
            const std::size_t j = (i + 1) % n;
            if (b[i] == 0.0 || (b[i] > 0.0) == (b[j] > 0.0)) continue;
            const double x0 = t.xi[i], x1 = x0 + h;
            if (near_cusp(x0) || near_cusp(x1)) continue;
            // Natural end conditions force zero bending at the ends of an open track.
            if (!t.periodic && (i < 3 || i + 4 > n)) continue;
            const auto f = [&](double x) { return bending(surface, t, x); };
            double x = numeric::bracketed_root(f, x0, x1, b[i], f(x1), 1e-12);
            if (t.periodic && x >= t.xi_end) x -= t.xi_end - t.xi_begin;
            SingularityRecord r;
            r.kind = SingularityRecord::Kind::Inflection;
            r.location = t.point(x);
            r.xi = {x};
            r.speed = speed(surface, t, x);
            out.push_back(r);
        }
    }

    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.kind != b.kind) return a.kind < b.kind;
        return a.xi.front() < b.xi.front();
    });
    return out;
}

}  // namespace geocaustic
