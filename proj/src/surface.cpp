#include "geocaustic/surface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace geocaustic {

namespace {

constexpr double kHuge = 1e9;
// Half-plane geodesics grow like exp(t) in both coordinates.
constexpr double kHalfPlaneExtent = 1e60;

Christoffel christoffel_from_first_kind(const Metric& g,
                                        const std::array<std::array<Vec2, 2>, 2>& first) {
    // first[i][j][l] = Γ_{ij,l}
    const Metric gi = g.inverse();
    Christoffel c;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const Vec2& f = first[i][j];
            c.gamma[0][i][j] = gi.g11 * f[0] + gi.g12 * f[1];
            c.gamma[1][i][j] = gi.g12 * f[0] + gi.g22 * f[1];
        }
    return c;
}

Christoffel christoffel_fd_chart(const Chart& chart, double u, double v, double h) {
    const Metric gu0 = chart.metric(u - h, v), gu1 = chart.metric(u + h, v);
    const Metric gv0 = chart.metric(u, v - h), gv1 = chart.metric(u, v + h);
    // dg[k] = partial_k of (g11, g12, g22)
    const std::array<Metric, 2> dg{
        Metric{(gu1.g11 - gu0.g11) / (2 * h), (gu1.g12 - gu0.g12) / (2 * h),
               (gu1.g22 - gu0.g22) / (2 * h)},
        Metric{(gv1.g11 - gv0.g11) / (2 * h), (gv1.g12 - gv0.g12) / (2 * h),
               (gv1.g22 - gv0.g22) / (2 * h)}};
    auto comp = [](const Metric& m, int i, int j) {
        if (i == 0 && j == 0) return m.g11;
        if (i == 1 && j == 1) return m.g22;
        return m.g12;
    };
    std::array<std::array<Vec2, 2>, 2> first{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int l = 0; l < 2; ++l)
                first[i][j][l] =
                    0.5 * (comp(dg[i], j, l) + comp(dg[j], i, l) - comp(dg[l], i, j));
    return christoffel_from_first_kind(chart.metric(u, v), first);
}

double det3(const std::array<std::array<double, 3>, 3>& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

double curvature_fd_chart(const Chart& chart, double u, double v, double h) {
    auto E = [&](double a, double b) { return chart.metric(a, b).g11; };
    auto F = [&](double a, double b) { return chart.metric(a, b).g12; };
    auto G = [&](double a, double b) { return chart.metric(a, b).g22; };
    auto du = [&](auto f) { return (f(u + h, v) - f(u - h, v)) / (2 * h); };
    auto dv = [&](auto f) { return (f(u, v + h) - f(u, v - h)) / (2 * h); };
    auto duu = [&](auto f) { return (f(u + h, v) - 2 * f(u, v) + f(u - h, v)) / (h * h); };
    auto dvv = [&](auto f) { return (f(u, v + h) - 2 * f(u, v) + f(u, v - h)) / (h * h); };
    auto duv = [&](auto f) {
        return (f(u + h, v + h) - f(u + h, v - h) - f(u - h, v + h) + f(u - h, v - h)) / (4 * h * h);
    };
    const double e = E(u, v), f = F(u, v), g = G(u, v);
    const double Eu = du(E), Ev = dv(E), Fu = du(F), Fv = dv(F), Gu = du(G), Gv = dv(G);
    const double Evv = dvv(E), Fuv = duv(F), Guu = duu(G);
    const std::array<std::array<double, 3>, 3> a{{{-0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev},
                                                  {Fv - 0.5 * Gu, e, f},
                                                  {0.5 * Gv, f, g}}};
    const std::array<std::array<double, 3>, 3> b{{{0.0, 0.5 * Ev, 0.5 * Gu}, {0.5 * Ev, e, f}, {0.5 * Gu, f, g}}};
    const double d = e * g - f * f;
    return (det3(a) - det3(b)) / (d * d);
}

AmbientJet flat_jet(double u, double v) {
    AmbientJet j;
    j.x = {u, v, 0.0};
    j.d = {Vec3{1.0, 0.0, 0.0}, Vec3{0.0, 1.0, 0.0}};
    return j;
}

class FlatChart final : public Chart {
public:
    Box domain() const override { return {-kHuge, kHuge, -kHuge, kHuge}; }
    Metric metric(double, double) const override { return {1.0, 0.0, 1.0}; }
    std::optional<Christoffel> christoffel(double, double) const override { return Christoffel{}; }
    std::optional<double> curvature(double, double) const override { return 0.0; }
    std::optional<AmbientJet> ambient(double u, double v) const override { return flat_jet(u, v); }
    std::optional<Vec2> from_ambient(const Vec3& p) const override { return Vec2{p[0], p[1]}; }
};

class HalfPlaneChart final : public Chart {
public:
    Box domain() const override { return {-kHalfPlaneExtent, kHalfPlaneExtent, 0.0, kHalfPlaneExtent}; }
    Metric metric(double, double v) const override {
        const double s = 1.0 / (v * v);
        return {s, 0.0, s};
    }
    std::optional<Christoffel> christoffel(double, double v) const override {
        Christoffel c;
        c.gamma[0][0][1] = c.gamma[0][1][0] = -1.0 / v;
        c.gamma[1][0][0] = 1.0 / v;
        c.gamma[1][1][1] = -1.0 / v;
        return c;
    }
    std::optional<double> curvature(double, double) const override { return -1.0; }
    std::optional<AmbientJet> ambient(double u, double v) const override { return flat_jet(u, v); }
    std::optional<Vec2> from_ambient(const Vec3& p) const override { return Vec2{p[0], p[1]}; }
};

// Longitude/latitude chart of the spheroid x^2 + y^2 + z^2/c^2 = 1, optionally rotated so
// that its poles sit on the x-axis (the equator of the unrotated chart).
class SpheroidChart final : public Chart {
public:
    SpheroidChart(double c, bool rotated) : c_(c), rotated_(rotated) {}

    Box domain() const override { return {-kHuge, kHuge, -kPi / 2, kPi / 2}; }
    bool preferred(double, double v) const override {
        return std::abs(v) <= kSphereChartLatitudeLimit;
    }
    double u_period() const override { return 2.0 * kPi; }

    Metric metric(double u, double v) const override {
        const AmbientJet j = jet(u, v);
        return {dot(j.d[0], j.d[0]), dot(j.d[0], j.d[1]), dot(j.d[1], j.d[1])};
    }
    std::optional<Christoffel> christoffel(double u, double v) const override {
        const AmbientJet j = jet(u, v);
        std::array<std::array<Vec2, 2>, 2> first{};
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                first[a][b] = {dot(j.dd[a][b], j.d[0]), dot(j.dd[a][b], j.d[1])};
        const Metric g{dot(j.d[0], j.d[0]), dot(j.d[0], j.d[1]), dot(j.d[1], j.d[1])};
        return christoffel_from_first_kind(g, first);
    }
    std::optional<double> curvature(double u, double v) const override {
        const AmbientJet j = jet(u, v);
        Vec3 n = cross(j.d[0], j.d[1]);
        n = (1.0 / norm(n)) * n;
        const double l = dot(j.dd[0][0], n), m = dot(j.dd[0][1], n), nn = dot(j.dd[1][1], n);
        const Metric g{dot(j.d[0], j.d[0]), dot(j.d[0], j.d[1]), dot(j.d[1], j.d[1])};
        return (l * nn - m * m) / g.det();
    }
    std::optional<AmbientJet> ambient(double u, double v) const override { return jet(u, v); }
    std::optional<Vec2> from_ambient(const Vec3& p) const override {
        Vec3 q{p[0], p[1], p[2] / c_};
        if (rotated_) q = {q[1], q[2], q[0]};
        const double r = norm(q);
        return Vec2{std::atan2(q[1], q[0]), std::asin(std::clamp(q[2] / r, -1.0, 1.0))};
    }

private:
    Vec3 map(const Vec3& s) const {
        const Vec3 r = rotated_ ? Vec3{s[2], s[0], s[1]} : s;
        return {r[0], r[1], c_ * r[2]};
    }
    AmbientJet jet(double u, double v) const {
        const double cu = std::cos(u), su = std::sin(u), cv = std::cos(v), sv = std::sin(v);
        AmbientJet j;
        j.x = map({cv * cu, cv * su, sv});
        j.d[0] = map({-cv * su, cv * cu, 0.0});
        j.d[1] = map({-sv * cu, -sv * su, cv});
        j.dd[0][0] = map({-cv * cu, -cv * su, 0.0});
        j.dd[0][1] = j.dd[1][0] = map({sv * su, -sv * cu, 0.0});
        j.dd[1][1] = map({-cv * cu, -cv * su, -sv});
        return j;
    }

    double c_;
    bool rotated_;
};

class ConformalChart final : public Chart {
public:
    ConformalChart(std::shared_ptr<const Chart> base, double amplitude, BumpSpec bump)
        : base_(std::move(base)), amplitude_(amplitude), bump_(bump) {}

    Box domain() const override { return base_->domain(); }
    bool preferred(double u, double v) const override { return base_->preferred(u, v); }
    double u_period() const override { return base_->u_period(); }
    std::optional<AmbientJet> ambient(double u, double v) const override {
        return base_->ambient(u, v);
    }
    std::optional<Vec2> from_ambient(const Vec3& p) const override {
        return base_->from_ambient(p);
    }

    Metric metric(double u, double v) const override {
        const Metric g0 = base_->metric(u, v);
        const double s = std::exp(2.0 * amplitude_ * bump_.value(jet(u, v).x));
        return {s * g0.g11, s * g0.g12, s * g0.g22};
    }
    std::optional<Christoffel> christoffel(double u, double v) const override {
        const Metric g0 = base_->metric(u, v);
        Christoffel c = base_christoffel(u, v);
        const Vec2 dphi = phi_gradient(jet(u, v));
        const Metric gi = g0.inverse();
        const Vec2 sharp = gi.apply(dphi);
        const std::array<std::array<double, 2>, 2> g0m{{{g0.g11, g0.g12}, {g0.g12, g0.g22}}};
        for (int k = 0; k < 2; ++k)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    c.gamma[k][i][j] += (k == i ? dphi[j] : 0.0) + (k == j ? dphi[i] : 0.0) -
                                        g0m[i][j] * sharp[k];
        return c;
    }
    std::optional<double> curvature(double u, double v) const override {
        const AmbientJet j = jet(u, v);
        const Metric g0 = base_->metric(u, v);
        const Christoffel c0 = base_christoffel(u, v);
        const double k0 = base_->curvature(u, v).value_or(curvature_fd_chart(*base_, u, v, 1e-4));
        const Vec3 grad = bump_.gradient(j.x);
        const auto hess = bump_.hessian(j.x);
        const Vec2 dphi = phi_gradient(j);
        const Metric gi = g0.inverse();
        const std::array<std::array<double, 2>, 2> gim{{{gi.g11, gi.g12}, {gi.g12, gi.g22}}};
        double lap = 0.0;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                const Vec3 hx{dot(hess[0], j.d[b]), dot(hess[1], j.d[b]), dot(hess[2], j.d[b])};
                const double phi_ab =
                    amplitude_ * (dot(j.d[a], hx) + dot(grad, j.dd[a][b]));
                const double conn = c0.gamma[0][a][b] * dphi[0] + c0.gamma[1][a][b] * dphi[1];
                lap += gim[a][b] * (phi_ab - conn);
            }
        const double phi = amplitude_ * bump_.value(j.x);
        return std::exp(-2.0 * phi) * (k0 - lap);
    }

private:
    AmbientJet jet(double u, double v) const {
        if (auto j = base_->ambient(u, v)) return *j;
        return flat_jet(u, v);
    }
    Christoffel base_christoffel(double u, double v) const {
        if (auto c = base_->christoffel(u, v)) return *c;
        return christoffel_fd_chart(*base_, u, v, 1e-5);
    }
    Vec2 phi_gradient(const AmbientJet& j) const {
        const Vec3 grad = bump_.gradient(j.x);
        return {amplitude_ * dot(grad, j.d[0]), amplitude_ * dot(grad, j.d[1])};
    }

    std::shared_ptr<const Chart> base_;
    double amplitude_;
    BumpSpec bump_;
};

class ExpressionChart final : public Chart {
public:
    ExpressionChart(Expression g11, Expression g12, Expression g22, Box domain)
        : g11_(std::move(g11)), g12_(std::move(g12)), g22_(std::move(g22)), domain_(domain) {}

    Box domain() const override { return domain_; }
    Metric metric(double u, double v) const override {
        const std::map<std::string, double> vars{{"u", u}, {"v", v}};
        return {g11_.eval(vars), g12_.eval(vars), g22_.eval(vars)};
    }

private:
    Expression g11_, g12_, g22_;
    Box domain_;
};

}  // namespace

double BumpSpec::value(const Vec3& p) const {
    double f = 1.0;
    for (int i = 0; i < 3; ++i) f *= std::cos(freq[i] * p[i] + phase[i]);
    return f;
}

Vec3 BumpSpec::gradient(const Vec3& p) const {
    Vec3 c{}, s{};
    for (int i = 0; i < 3; ++i) {
        c[i] = std::cos(freq[i] * p[i] + phase[i]);
        s[i] = -freq[i] * std::sin(freq[i] * p[i] + phase[i]);
    }
    return {s[0] * c[1] * c[2], c[0] * s[1] * c[2], c[0] * c[1] * s[2]};
}

std::array<Vec3, 3> BumpSpec::hessian(const Vec3& p) const {
    // f = prod c_i; df/dx_i = s_i prod_{j != i} c_j; d2f/dx_i^2 = -freq_i^2 f.
    Vec3 c{}, s{};
    for (int i = 0; i < 3; ++i) {
        c[i] = std::cos(freq[i] * p[i] + phase[i]);
        s[i] = -freq[i] * std::sin(freq[i] * p[i] + phase[i]);
    }
    std::array<Vec3, 3> h{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            if (i == j) {
                h[i][j] = -freq[i] * freq[i] * c[0] * c[1] * c[2];
            } else {
                const int k = 3 - i - j;
                h[i][j] = s[i] * s[j] * c[k];
            }
        }
    return h;
}

std::string SurfaceDescriptor::name() const {
    switch (kind) {
        case SurfaceKind::EuclideanPlane: return "euclidean-plane";
        case SurfaceKind::UnitSphere: return "unit-sphere";
        case SurfaceKind::HyperbolicHalfPlane: return "hyperbolic-half-plane";
        case SurfaceKind::EllipsoidOfRevolution: return "ellipsoid-of-revolution";
        case SurfaceKind::ConformalPerturbation: return "conformal-perturbation";
        case SurfaceKind::Custom: return "custom";
    }
    return "unknown";
}

Surface Surface::euclidean_plane() {
    auto d = std::make_shared<SurfaceDescriptor>();
    d->kind = SurfaceKind::EuclideanPlane;
    return Surface({std::make_shared<FlatChart>()}, d);
}

Surface Surface::unit_sphere() {
    auto d = std::make_shared<SurfaceDescriptor>();
    d->kind = SurfaceKind::UnitSphere;
    return Surface({std::make_shared<SpheroidChart>(1.0, false),
                    std::make_shared<SpheroidChart>(1.0, true)},
                   d);
}

Surface Surface::hyperbolic_half_plane() {
    auto d = std::make_shared<SurfaceDescriptor>();
    d->kind = SurfaceKind::HyperbolicHalfPlane;
    return Surface({std::make_shared<HalfPlaneChart>()}, d);
}

Surface Surface::ellipsoid_of_revolution(double c) {
    if (!(c > 0.0)) throw Error(ErrorKind::InvalidArgument, "ellipsoid axis must be positive");
    auto d = std::make_shared<SurfaceDescriptor>();
    d->kind = SurfaceKind::EllipsoidOfRevolution;
    d->c = c;
    return Surface({std::make_shared<SpheroidChart>(c, false),
                    std::make_shared<SpheroidChart>(c, true)},
                   d);
}

Surface Surface::conformal_perturbation(const Surface& base, double amplitude,
                                        const BumpSpec& bump) {
    auto d = std::make_shared<SurfaceDescriptor>();
    d->kind = SurfaceKind::ConformalPerturbation;
    d->amplitude = amplitude;
    d->bump = bump;
    d->base = base.descriptor_;
    std::vector<std::shared_ptr<const Chart>> charts;
    for (const auto& c : base.charts_)
        charts.push_back(std::make_shared<ConformalChart>(c, amplitude, bump));
    return Surface(std::move(charts), d);
}

Surface Surface::custom(const Expression& g11, const Expression& g12, const Expression& g22,
                        const Box& domain) {
    auto d = std::make_shared<SurfaceDescriptor>();
    d->kind = SurfaceKind::Custom;
    return Surface({std::make_shared<ExpressionChart>(g11, g12, g22, domain)}, d);
}

const Chart& Surface::chart(int id) const {
    if (id < 0 || id >= chart_count())
        throw Error(ErrorKind::NoOverlappingChart, "no chart with id " + std::to_string(id));
    return *charts_[static_cast<std::size_t>(id)];
}

bool Surface::in_domain(const ChartPoint& p) const {
    return p.chart >= 0 && p.chart < chart_count() && chart(p.chart).domain().contains(p.u, p.v);
}

void Surface::check(const ChartPoint& p) const {
    if (!in_domain(p))
        throw Error(ErrorKind::PointOutsideDomain,
                    "point (" + std::to_string(p.u) + ", " + std::to_string(p.v) +
                        ") outside domain of chart " + std::to_string(p.chart));
}

bool Surface::is_closed() const {
    const SurfaceDescriptor* d = descriptor_.get();
    while (d->kind == SurfaceKind::ConformalPerturbation) d = d->base.get();
    return d->kind == SurfaceKind::UnitSphere || d->kind == SurfaceKind::EllipsoidOfRevolution;
}

Metric Surface::metric_at(const ChartPoint& p) const {
    check(p);
    return chart(p.chart).metric(p.u, p.v);
}

Christoffel Surface::christoffel_at(const ChartPoint& p) const {
    check(p);
    if (auto c = chart(p.chart).christoffel(p.u, p.v)) return *c;
    return christoffel_fd(p);
}

double Surface::gauss_curvature_at(const ChartPoint& p) const {
    check(p);
    if (auto k = chart(p.chart).curvature(p.u, p.v)) return *k;
    return curvature_fd(p);
}

Christoffel Surface::christoffel_fd(const ChartPoint& p, double h) const {
    check(p);
    return christoffel_fd_chart(chart(p.chart), p.u, p.v, h);
}

double Surface::curvature_fd(const ChartPoint& p, double h) const {
    check(p);
    return curvature_fd_chart(chart(p.chart), p.u, p.v, h);
}

std::pair<ChartPoint, Vec2> Surface::switch_chart(const ChartPoint& p, const Vec2& tangent,
                                                  int target) const {
    check(p);
    if (target == p.chart) return {p, tangent};
    const Chart& dst = chart(target);
    const auto src_jet = chart(p.chart).ambient(p.u, p.v);
    if (!src_jet)
        throw Error(ErrorKind::NoOverlappingChart, "chart has no transition map");
    const auto uv = dst.from_ambient(src_jet->x);
    if (!uv || !dst.domain().contains((*uv)[0], (*uv)[1]))
        throw Error(ErrorKind::NoOverlappingChart,
                    "point does not lie in chart " + std::to_string(target));
    const auto dst_jet = dst.ambient((*uv)[0], (*uv)[1]);
    const Vec3 w = tangent[0] * src_jet->d[0] + tangent[1] * src_jet->d[1];
    // Coordinates of w in the target frame from the ambient normal equations.
    const Metric gp{dot(dst_jet->d[0], dst_jet->d[0]), dot(dst_jet->d[0], dst_jet->d[1]),
                    dot(dst_jet->d[1], dst_jet->d[1])};
    const Vec2 rhs{dot(dst_jet->d[0], w), dot(dst_jet->d[1], w)};
    const Vec2 t = gp.inverse().apply(rhs);
    return {ChartPoint{target, (*uv)[0], (*uv)[1]}, t};
}

ChartPoint Surface::to_chart(const ChartPoint& p, int target) const {
    return switch_chart(p, {0.0, 0.0}, target).first;
}

std::pair<ChartPoint, Vec2> Surface::to_preferred(const ChartPoint& p,
                                                  const Vec2& tangent) const {
    if (chart(p.chart).preferred(p.u, p.v)) return {p, tangent};
    for (int c = 0; c < chart_count(); ++c) {
        if (c == p.chart) continue;
        try {
            auto r = switch_chart(p, tangent, c);
            if (chart(c).preferred(r.first.u, r.first.v)) return r;
        } catch (const Error&) {
        }
    }
    return {p, tangent};
}

Vec2 Surface::delta(const ChartPoint& a, const ChartPoint& b) const {
    const ChartPoint bb = b.chart == a.chart ? b : to_chart(b, a.chart);
    Vec2 d{bb.u - a.u, bb.v - a.v};
    const double period = chart(a.chart).u_period();
    if (period > 0.0) d[0] -= period * std::round(d[0] / period);
    return d;
}

double Surface::local_distance(const ChartPoint& a, const ChartPoint& b) const {
    const Vec2 d = delta(a, b);
    const ChartPoint mid{a.chart, a.u + 0.5 * d[0], a.v + 0.5 * d[1]};
    const Metric g = in_domain(mid) ? metric_at(mid) : metric_at(a);
    return g.norm(d);
}

Vec3 Surface::ambient(const ChartPoint& p) const {
    if (auto j = chart(p.chart).ambient(p.u, p.v)) return j->x;
    return {p.u, p.v, 0.0};
}

}  // namespace geocaustic
