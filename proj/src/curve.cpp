#include "geocaustic/curve.hpp"

#include <algorithm>
#include <cmath>

#include "geocaustic/numeric.hpp"

namespace geocaustic {

namespace {

constexpr int kTableIntervals = 1024;

// 8-point Gauss-Legendre nodes and weights on [-1, 1].
constexpr std::array<double, 8> kGlNodes{-0.9602898564975363, -0.7966664774136267,
                                         -0.5255324099163290, -0.1834346424956498,
                                         0.1834346424956498,  0.5255324099163290,
                                         0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights{0.1012285362903763, 0.2223810344533745,
                                           0.3137066458778873, 0.3626837833783620,
                                           0.3626837833783620, 0.3137066458778873,
                                           0.2223810344533745, 0.1012285362903763};

class ExpressionCurveMap final : public CurveMap {
public:
    ExpressionCurveMap(Expression u, Expression v, int chart)
        : u_(std::move(u)), v_(std::move(v)), chart_(chart) {}
    CurveJet eval(double t) const override {
        const Jet a = u_.eval_jet("t", t), b = v_.eval_jet("t", t);
        return {ChartPoint{chart_, a.v, b.v}, {a.d, b.d}, {a.dd, b.dd}};
    }

private:
    Expression u_, v_;
    int chart_;
};

class SplineCurveMap final : public CurveMap {
public:
    SplineCurveMap(CubicSpline u, CubicSpline v, int chart)
        : u_(std::move(u)), v_(std::move(v)), chart_(chart) {}
    CurveJet eval(double s) const override {
        return {ChartPoint{chart_, u_.value(s), v_.value(s)},
                {u_.derivative(s), v_.derivative(s)},
                {u_.second_derivative(s), v_.second_derivative(s)}};
    }

private:
    CubicSpline u_, v_;
    int chart_;
};

class FunctionCurveMap final : public CurveMap {
public:
    explicit FunctionCurveMap(std::function<CurveJet(double)> f) : f_(std::move(f)) {}
    CurveJet eval(double s) const override { return f_(s); }

private:
    std::function<CurveJet(double)> f_;
};

class ReversedCurveMap final : public CurveMap {
public:
    ReversedCurveMap(std::shared_ptr<const CurveMap> base, double sum)
        : base_(std::move(base)), sum_(sum) {}
    CurveJet eval(double s) const override {
        CurveJet j = base_->eval(sum_ - s);
        j.d1 = {-j.d1[0], -j.d1[1]};
        return j;
    }

private:
    std::shared_ptr<const CurveMap> base_;
    double sum_;
};

double map_speed(const Surface& surface, const CurveMap& map, double s) {
    const CurveJet j = map.eval(s);
    return surface.metric_at(j.point).norm(j.d1);
}

}  // namespace

std::shared_ptr<const CurveMap> expression_curve_map(const Expression& u, const Expression& v,
                                                     int chart) {
    return std::make_shared<ExpressionCurveMap>(u, v, chart);
}

std::shared_ptr<const CurveMap> spline_curve_map(const std::vector<ChartPoint>& samples,
                                                 double sigma0, double sigma1, bool closed,
                                                 double u_period) {
    const std::size_t n = samples.size();
    if (n < 4) throw Error(ErrorKind::InvalidArgument, "need at least 4 curve samples");
    std::vector<double> u(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = samples[i].u;
        v[i] = samples[i].v;
        if (i > 0 && u_period > 0.0)
            u[i] -= u_period * std::round((u[i] - u[i - 1]) / u_period);
    }
    const double h = (sigma1 - sigma0) / static_cast<double>(closed ? n : n - 1);
    double drift = 0.0;
    if (closed && u_period > 0.0) {
        double closing = u[0] - u[n - 1];
        closing -= u_period * std::round(closing / u_period);
        drift = u[n - 1] + closing - u[0];
    }
    return std::make_shared<SplineCurveMap>(CubicSpline(sigma0, h, u, closed, drift),
                                            CubicSpline(sigma0, h, v, closed, 0.0),
                                            samples.front().chart);
}

std::shared_ptr<const CurveMap> function_curve_map(std::function<CurveJet(double)> f) {
    return std::make_shared<FunctionCurveMap>(std::move(f));
}

RegularCurve::RegularCurve(Surface surface, std::shared_ptr<const CurveMap> map, double sigma0,
                           double sigma1, bool closed)
    : surface_(std::move(surface)), map_(std::move(map)), sigma0_(sigma0), sigma1_(sigma1),
      closed_(closed) {
    if (!(sigma1 > sigma0)) throw Error(ErrorKind::InvalidArgument, "empty parameter interval");
    knots_.resize(kTableIntervals + 1);
    cumulative_.assign(kTableIntervals + 1, 0.0);
    const double h = (sigma1 - sigma0) / kTableIntervals;
    for (int k = 0; k <= kTableIntervals; ++k) knots_[k] = sigma0 + h * k;
    knots_.back() = sigma1;
    for (int k = 0; k < kTableIntervals; ++k)
        cumulative_[k + 1] = cumulative_[k] + arc_from_knot(static_cast<std::size_t>(k), knots_[k + 1]);
    length_ = cumulative_.back();
}

double RegularCurve::arc_from_knot(std::size_t k, double sigma) const {
    const double a = knots_[k];
    const double half = 0.5 * (sigma - a), mid = 0.5 * (sigma + a);
    double s = 0.0;
    for (int i = 0; i < 8; ++i) s += kGlWeights[i] * map_speed(surface_, *map_, mid + half * kGlNodes[i]);
    return s * half;
}

double RegularCurve::wrap(double xi) const {
    if (!closed_) return xi;
    const double lo = xi_min(), period = xi_max() - xi_min();
    return lo + (xi - lo) - period * std::floor((xi - lo) / period);
}

double RegularCurve::sigma_of(double xi) const {
    if (!arc_length_) return wrap(xi);
    const double s = wrap(xi);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    std::size_t k = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    k = std::min<std::size_t>(k, kTableIntervals - 1);
    const double span = knots_[k + 1] - knots_[k];
    const double seg = cumulative_[k + 1] - cumulative_[k];
    double sigma = knots_[k] + span * (s - cumulative_[k]) / seg;
    for (int iter = 0; iter < 8; ++iter) {
        const double f = cumulative_[k] + arc_from_knot(k, sigma) - s;
        const double step = f / map_speed(surface_, *map_, sigma);
        sigma -= step;
        if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(sigma))) break;
    }
    return sigma;
}

CurveJet RegularCurve::jet(double xi) const {
    if (!arc_length_) return map_->eval(wrap(xi));
    const double sigma = sigma_of(xi);
    const CurveJet c = map_->eval(sigma);
    const Metric g = surface_.metric_at(c.point);
    const Christoffel gam = surface_.christoffel_at(c.point);
    const double sp = g.norm(c.d1);
    const Vec2 acc = c.d2 + gam.contract(c.d1, c.d1);
    const double sp_sigma = g.inner(c.d1, acc) / sp;
    const double s1 = 1.0 / sp;
    const double s2 = -sp_sigma / (sp * sp) * s1;
    CurveJet j;
    j.point = c.point;
    j.d1 = s1 * c.d1;
    j.d2 = (s1 * s1) * c.d2 + s2 * c.d1;
    return j;
}

double RegularCurve::speed(double xi) const {
    const CurveJet j = jet(xi);
    return surface_.metric_at(j.point).norm(j.d1);
}

Vec2 RegularCurve::covariant_acceleration(double xi) const {
    const CurveJet j = jet(xi);
    return j.d2 + surface_.christoffel_at(j.point).contract(j.d1, j.d1);
}

RegularCurve RegularCurve::arc_length_reparameterize(double) const {
    if (arc_length_) return *this;
    const int checks = 4 * kTableIntervals;
    for (int i = 0; i <= checks; ++i) {
        const double s = sigma0_ + (sigma1_ - sigma0_) * i / checks;
        if (!(map_speed(surface_, *map_, s) > 1e-10))
            throw Error(ErrorKind::RegularityViolation, "curve speed vanishes", s);
    }
    RegularCurve c = *this;
    c.arc_length_ = true;
    return c;
}

RegularCurve RegularCurve::reversed() const {
    RegularCurve r(surface_, std::make_shared<ReversedCurveMap>(map_, sigma0_ + sigma1_), sigma0_,
                   sigma1_, closed_);
    r.arc_length_ = arc_length_;
    return r;
}

Vec2 left_normal(const Metric& g, const Vec2& t) {
    const double r = 1.0 / std::sqrt(g.det());
    return {-r * (g.g12 * t[0] + g.g22 * t[1]), r * (g.g11 * t[0] + g.g12 * t[1])};
}

double geodesic_curvature(const RegularCurve& curve, double xi) {
    const CurveJet j = curve.jet(xi);
    const Surface& s = curve.surface();
    const Metric g = s.metric_at(j.point);
    const Vec2 acc = j.d2 + s.christoffel_at(j.point).contract(j.d1, j.d1);
    const double sp = g.norm(j.d1);
    return g.area(j.d1, acc) / (sp * sp * sp);
}

std::vector<InflectionRecord> find_inflections(const RegularCurve& curve,
                                               const InflectionOptions& opt) {
    if (opt.grid_n < 16) throw Error(ErrorKind::InvalidArgument, "grid_n must be at least 16");
    const double lo = curve.xi_min(), hi = curve.xi_max();
    std::vector<double> xs;
    if (curve.closed()) {
        const double h = (hi - lo) / opt.grid_n;
        for (int i = 0; i <= opt.grid_n; ++i) xs.push_back(lo + h * i);
    } else {
        const double h = (hi - lo) / opt.grid_n;
        const double a = lo + 2 * h, b = hi - 2 * h;
        const int n = opt.grid_n - 4;
        for (int i = 0; i <= n; ++i) xs.push_back(a + (b - a) * i / n);
    }
    std::vector<double> ks(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) ks[i] = geodesic_curvature(curve, xs[i]);

    auto kfun = [&](double x) { return geodesic_curvature(curve, x); };
    auto slope_at = [&](double x) {
        const double h = 1e-5 * std::max(1.0, hi - lo);
        return (kfun(x + h) - kfun(x - h)) / (2 * h);
    };

    std::vector<InflectionRecord> out;
    std::size_t i = 0;
    const std::size_t last = xs.size() - 1;
    while (i < last) {
        if (std::abs(ks[i]) < opt.zero_tol) {
            // Plateau of near-zero curvature.
            std::size_t j = i;
            while (j < last && std::abs(ks[j + 1]) < opt.zero_tol) ++j;
            if (xs[j] - xs[i] > opt.plateau_length) {
                out.push_back({0.5 * (xs[i] + xs[j]), InflectionRecord::Kind::Degenerate, 0.0});
                i = j + 1;
                continue;
            }
        }
        if ((ks[i] < 0.0 && ks[i + 1] > 0.0) || (ks[i] > 0.0 && ks[i + 1] < 0.0) ||
            (ks[i] == 0.0 && i > 0 && ks[i - 1] * ks[i + 1] < 0.0)) {
            const double root = numeric::bracketed_root(kfun, xs[i], xs[i + 1], ks[i], ks[i + 1],
                                                        opt.root_tol);
            const double slope = slope_at(root);
            out.push_back({root,
                           std::abs(slope) > opt.slope_tol ? InflectionRecord::Kind::Simple
                                                           : InflectionRecord::Kind::Degenerate,
                           slope});
        }
        ++i;
    }
    if (curve.closed()) {
        const double period = hi - lo;
        for (auto& r : out) r.xi = lo + std::fmod(r.xi - lo + period, period);
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.xi < b.xi; });
        out.erase(std::unique(out.begin(), out.end(),
                              [](const auto& a, const auto& b) { return std::abs(a.xi - b.xi) < 1e-9; }),
                  out.end());
    }
    return out;
}

UnitTangent tangent_geodesic_seed(const RegularCurve& curve, double xi) {
    const CurveJet j = curve.jet(xi);
    return make_unit_tangent(curve.surface(), j.point, j.d1);
}

double CurveBump::value(double xi, double xi_min, double period) const {
    if (kind == Kind::Constant) return level;
    return level * std::cos(2.0 * kPi * mode * (xi - xi_min) / period + phase);
}

RegularCurve perturb_curve(const RegularCurve& curve, double lambda, const CurveBump& bump,
                           int samples) {
    if (lambda == 0.0) return curve;
    const RegularCurve c = curve.arc_length_reparameterize();
    const Surface& surface = c.surface();
    const double lo = c.xi_min(), hi = c.xi_max(), len = hi - lo;
    const int n = std::max(samples, 16);
    const int chart = c.point(lo).chart;
    std::vector<ChartPoint> pts;
    pts.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double xi = lo + len * i / (c.closed() ? n : n - 1);
        const CurveJet j = c.jet(xi);
        const Metric g = surface.metric_at(j.point);
        const Vec2 t = (1.0 / g.norm(j.d1)) * j.d1;
        const Vec2 right = -1.0 * left_normal(g, t);
        const double d = lambda * bump.value(xi, lo, len);
        ChartPoint q = j.point;
        if (d != 0.0) {
            const UnitTangent seed{j.point, d > 0.0 ? right : -1.0 * right};
            q = shoot(surface, seed, 0.0, std::abs(d)).point(std::abs(d));
        }
        pts.push_back(q.chart == chart ? q : surface.to_chart(q, chart));
    }
    RegularCurve out(surface, spline_curve_map(pts, lo, hi, c.closed(), surface.chart(chart).u_period()),
                     lo, hi, c.closed());
    return out.arc_length_reparameterize();
}

}  // namespace geocaustic
