#include "geocaustic/flow.hpp"

#include <algorithm>
#include <cmath>

#include "geocaustic/numeric.hpp"

namespace geocaustic {

namespace {

using State = std::array<double, 6>;  // u, v, u', v', J, J'

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense output coefficients (Hairer, Norsett & Wanner).
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

struct OutsideChart {};

State rhs(const Surface& surface, int chart, const State& y) {
    const ChartPoint p{chart, y[0], y[1]};
    if (!surface.in_domain(p)) throw OutsideChart{};
    const Vec2 vel{y[2], y[3]};
    const Vec2 acc = surface.christoffel_at(p).contract(vel, vel);
    const double k = surface.gauss_curvature_at(p);
    return {y[2], y[3], -acc[0], -acc[1], y[5], -k * y[4]};
}

State combine(const State& y, double h, std::initializer_list<std::pair<double, const State*>> ks) {
    State r = y;
    for (const auto& [c, k] : ks)
        if (c != 0.0)
            for (int i = 0; i < 6; ++i) r[i] += h * c * (*k)[i];
    return r;
}

State eval_dense(const detail::DenseStep& s, double t) {
    const double th = (t - s.t0) / s.h;
    const double th1 = 1.0 - th;
    State y{};
    for (int i = 0; i < 6; ++i)
        y[i] = s.r[0][i] +
               th * (s.r[1][i] + th1 * (s.r[2][i] + th * (s.r[3][i] + th1 * s.r[4][i])));
    return y;
}

// One-sided integrator from t = 0 towards +infinity; steps are reported through a callback
// that may stop the integration by returning false.
class Stepper {
public:
    Stepper(const Surface& surface, const UnitTangent& seed, const ShootOptions& opt)
        : surface_(surface), opt_(opt) {
        auto [p, d] = surface.to_preferred(seed.point, seed.direction);
        chart_ = p.chart;
        y_ = {p.u, p.v, d[0], d[1], 0.0, 1.0};
        h_ = std::min(opt.initial_step, opt.max_step);
    }

    template <class OnStep>
    double run(double t_end, SolverStats& stats, OnStep&& on_step) {
        double t = 0.0;
        bool have_k1 = false;
        State k1{};
        while (t < t_end) {
            if (stats.accepted + stats.rejected > opt_.max_steps)
                throw Error(ErrorKind::ToleranceFailure, "step budget exhausted", t);
            if (!have_k1) {
                try {
                    k1 = rhs(surface_, chart_, y_);
                } catch (const OutsideChart&) {
                    throw Error(ErrorKind::LeftAtlas, "geodesic left the atlas", t);
                }
                have_k1 = true;
            }
            double h = std::min(h_, t_end - t);
            const bool last = h >= t_end - t;
            State k2, k3, k4, k5, k6, k7, y1;
            try {
                k2 = rhs(surface_, chart_, combine(y_, h, {{a21, &k1}}));
                k3 = rhs(surface_, chart_, combine(y_, h, {{a31, &k1}, {a32, &k2}}));
                k4 = rhs(surface_, chart_, combine(y_, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
                k5 = rhs(surface_, chart_,
                         combine(y_, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
                k6 = rhs(surface_, chart_,
                         combine(y_, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
                y1 = combine(y_, h, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
                k7 = rhs(surface_, chart_, y1);
            } catch (const OutsideChart&) {
                ++stats.rejected;
                h_ = 0.5 * h;
                if (h_ < 1e-12) throw Error(ErrorKind::LeftAtlas, "geodesic left the atlas", t);
                continue;
            }
            double err = 0.0;
            for (int i = 0; i < 6; ++i) {
                const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                      e6 * k6[i] + e7 * k7[i]);
                const double sc = opt_.tol + opt_.tol * std::max(std::abs(y_[i]), std::abs(y1[i]));
                err += (e / sc) * (e / sc);
            }
            err = std::sqrt(err / 6.0);
            if (!std::isfinite(err))
                throw Error(ErrorKind::ToleranceFailure, "non-finite error estimate", t);
            const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            if (err > 1.0) {
                ++stats.rejected;
                h_ = h * fac;
                if (h_ < 1e-14) throw Error(ErrorKind::ToleranceFailure, "step size underflow", t);
                continue;
            }
            ++stats.accepted;
            detail::DenseStep step;
            step.t0 = t;
            step.h = h;
            step.chart = chart_;
            for (int i = 0; i < 6; ++i) {
                const double ydiff = y1[i] - y_[i];
                const double bspl = h * k1[i] - ydiff;
                step.r[0][i] = y_[i];
                step.r[1][i] = ydiff;
                step.r[2][i] = bspl;
                step.r[3][i] = ydiff - h * k7[i] - bspl;
                step.r[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                                    d6 * k6[i] + d7 * k7[i]);
            }
            t = last ? t_end : t + h;
            y_ = y1;
            k1 = k7;
            if (!last) h_ = std::min(h * fac, opt_.max_step);
            if (!on_step(step)) return t;
            const ChartPoint p{chart_, y_[0], y_[1]};
            if (!surface_.chart(chart_).preferred(p.u, p.v)) {
                auto [q, d] = surface_.to_preferred(p, {y_[2], y_[3]});
                if (q.chart != chart_) {
                    chart_ = q.chart;
                    y_[0] = q.u;
                    y_[1] = q.v;
                    y_[2] = d[0];
                    y_[3] = d[1];
                    have_k1 = false;
                    ++stats.chart_switches;
                }
            }
        }
        return t;
    }

private:
    const Surface& surface_;
    ShootOptions opt_;
    int chart_ = 0;
    State y_{};
    double h_ = 1e-3;
};

const detail::DenseStep& locate(const detail::Branch& b, double s) {
    auto it = std::upper_bound(b.steps.begin(), b.steps.end(), s,
                               [](double x, const detail::DenseStep& st) { return x < st.t0; });
    if (it != b.steps.begin()) --it;
    return *it;
}

FlowState to_flow_state(const State& y, int chart) {
    return {ChartPoint{chart, y[0], y[1]}, {y[2], y[3]}, y[4], y[5]};
}

}  // namespace

UnitTangent make_unit_tangent(const Surface& surface, const ChartPoint& p, const Vec2& direction) {
    const double n = surface.metric_at(p).norm(direction);
    if (!(n > 0.0)) throw Error(ErrorKind::InvalidArgument, "zero direction");
    return {p, (1.0 / n) * direction};
}

GeodesicPath shoot(const Surface& surface, const UnitTangent& seed, double t_min, double t_max,
                   const ShootOptions& options) {
    if (t_min > 0.0 || t_max < 0.0)
        throw Error(ErrorKind::InvalidArgument, "t_span must contain 0");
    const double speed = surface.metric_at(seed.point).norm(seed.direction);
    if (std::abs(speed - 1.0) > 1e-8)
        throw Error(ErrorKind::InvalidArgument, "seed direction is not unit length");
    GeodesicPath path(surface);
    path.seed_ = seed;
    path.t_min_ = t_min;
    path.t_max_ = t_max;
    if (t_max > 0.0) {
        Stepper st(surface, seed, options);
        st.run(t_max, path.stats_, [&](const detail::DenseStep& s) {
            path.forward_.steps.push_back(s);
            return true;
        });
        path.forward_.reached = t_max;
    }
    if (t_min < 0.0) {
        Stepper st(surface, seed.reversed(), options);
        try {
            st.run(-t_min, path.stats_, [&](const detail::DenseStep& s) {
                path.backward_.steps.push_back(s);
                return true;
            });
        } catch (const Error& e) {
            throw Error(e.kind(), e.what(), -e.where());
        }
        path.backward_.reached = -t_min;
    }
    return path;
}

FlowState GeodesicPath::state(double t) const {
    if (t > t_max_ || t < t_min_)
        throw Error(ErrorKind::InvalidArgument, "t outside path span", t);
    if (t == 0.0 || (t > 0.0 ? forward_.steps.empty() : backward_.steps.empty())) {
        if (t != 0.0) throw Error(ErrorKind::InvalidArgument, "t outside path span", t);
        return {seed_.point, seed_.direction, 0.0, 1.0};
    }
    if (t > 0.0) {
        const auto& s = locate(forward_, t);
        return to_flow_state(eval_dense(s, t), s.chart);
    }
    const auto& s = locate(backward_, -t);
    const State y = eval_dense(s, -t);
    return {ChartPoint{s.chart, y[0], y[1]}, {-y[2], -y[3]}, -y[4], y[5]};
}

FlowState GeodesicPath::state_in_chart(double t, int chart) const {
    FlowState s = state(t);
    if (s.point.chart == chart) return s;
    auto [p, v] = surface_.switch_chart(s.point, s.velocity, chart);
    s.point = p;
    s.velocity = v;
    return s;
}

std::vector<double> GeodesicPath::knots() const {
    std::vector<double> k;
    for (auto it = backward_.steps.rbegin(); it != backward_.steps.rend(); ++it)
        k.push_back(-(it->t0 + it->h));
    k.push_back(0.0);
    for (const auto& s : forward_.steps) k.push_back(s.t0 + s.h);
    return k;
}

JacobiField jacobi_scalar(const Surface& surface, const GeodesicPath& path, double t_min,
                          double t_max, const ShootOptions& options) {
    if (t_min >= path.t_min() && t_max <= path.t_max()) return JacobiField(path);
    return JacobiField(shoot(surface, path.seed(), t_min, t_max, options));
}

ConjugateSearch conjugate_search(const Surface& surface, const UnitTangent& seed, double t_max,
                                 int p_max, const ConjugateOptions& options) {
    if (!(t_max > 0.0) || p_max < 1)
        throw Error(ErrorKind::InvalidArgument, "conjugate search needs T_max > 0 and p_max >= 1");
    ConjugateSearch out;
    Stepper st(surface, seed, options.shoot);
    SolverStats stats;
    double scale = 1.0;
    double prev_j = 1.0;  // sign of J just after t = 0
    st.run(t_max, stats, [&](const detail::DenseStep& s) {
        const State end = eval_dense(s, s.t0 + s.h);
        scale = std::max({scale, std::abs(end[5]), std::abs(end[4])});
        const double j_end = end[4];
        const double j_start = s.t0 == 0.0 ? prev_j : s.r[0][4];
        if ((j_start > 0.0) != (j_end > 0.0) && j_end != 0.0) {
            auto f = [&](double t) { return eval_dense(s, t)[4]; };
            double a = s.t0, fa = j_start;
            if (s.t0 == 0.0) {
                // J vanishes at t = 0; bracket away from it.
                a = s.t0 + 1e-3 * s.h;
                fa = f(a);
            }
            const double root = numeric::bracketed_root(f, a, s.t0 + s.h, fa, j_end, options.root_tol);
            const State y = eval_dense(s, root);
            ConjugateRecord rec;
            rec.order = static_cast<int>(out.records.size()) + 1;
            rec.tau = root;
            rec.point = {s.chart, y[0], y[1]};
            rec.velocity = {y[2], y[3]};
            rec.degenerate = std::abs(y[5]) < options.degenerate_rel * scale;
            out.records.push_back(rec);
        }
        prev_j = j_end;
        return static_cast<int>(out.records.size()) < p_max;
    });
    out.horizon_hit = static_cast<int>(out.records.size()) < p_max;
    return out;
}

std::vector<ConjugateRecord> conjugate_distances(const Surface& surface, const UnitTangent& seed,
                                                 double t_max, int p_max,
                                                 const ConjugateOptions& options) {
    return conjugate_search(surface, seed, t_max, p_max, options).records;
}

std::optional<ConjugateRecord> conjugate_point(const Surface& surface, const UnitTangent& seed,
                                               int p, double t_max,
                                               const ConjugateOptions& options) {
    if (p == 0) return ConjugateRecord{0, 0.0, seed.point, seed.direction, false};
    const UnitTangent s = p > 0 ? seed : seed.reversed();
    const auto recs = conjugate_distances(surface, s, t_max, std::abs(p), options);
    if (static_cast<int>(recs.size()) < std::abs(p)) return std::nullopt;
    ConjugateRecord r = recs.back();
    if (p < 0) {
        r.order = p;
        r.tau = -r.tau;
        r.velocity = {-r.velocity[0], -r.velocity[1]};
    }
    return r;
}

}  // namespace geocaustic
