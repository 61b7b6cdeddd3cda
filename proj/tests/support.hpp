#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "geocaustic/caustic.hpp"
#include "geocaustic/curve.hpp"

namespace geocaustic::fx {

inline RegularCurve expression_curve(const Surface& s, const std::string& u, const std::string& v,
                                     double a, double b, bool closed) {
    return RegularCurve(s, expression_curve_map(Expression::parse(u), Expression::parse(v)), a, b, closed);
}

inline RegularCurve latitude_circle(const Surface& s, double v) {
    return expression_curve(s, "t", std::to_string(v), 0.0, 2.0 * kPi, true);
}

inline RegularCurve plane_circle(double r) {
    const std::string rs = std::to_string(r);
    return expression_curve(Surface::euclidean_plane(), rs + "*cos(t)", rs + "*sin(t)", 0.0,
                            2.0 * kPi, true);
}

inline Surface perturbed_sphere() { return Surface::conformal_perturbation(Surface::unit_sphere(), 0.05); }

/// Open sinusoid with one simple inflection at t = 0 on the ellipsoid c = 1.2.
inline RegularCurve ellipsoid_inflection_curve() {
    return expression_curve(Surface::ellipsoid_of_revolution(1.2), "t", "0.3*sin(t)", -1.2, 1.2, false);
}

/// Great-circle distance between two lon/lat points on the unit sphere.
inline double great_circle(double u1, double v1, double u2, double v2) {
    const double c = std::sin(v1) * std::sin(v2) + std::cos(v1) * std::cos(v2) * std::cos(u1 - u2);
    return std::acos(std::clamp(c, -1.0, 1.0));
}

/// Kind of the library error thrown by f, or nullopt when nothing is thrown.
template <class F>
std::optional<ErrorKind> error_kind(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return std::nullopt;
}

using Param = std::function<Vec2(double)>;

inline CausticBranch synthetic_branch(const Param& f, double a, double b, int n) {
    CausticBranch br;
    br.order = 1;
    br.curve_period = b - a;
    br.grid_step = (b - a) / (n - 1);
    CausticComponent c;
    c.xi_begin = a;
    c.xi_end = b;
    for (int i = 0; i < n; ++i) {
        const double t = a + (b - a) * i / (n - 1);
        const Vec2 x = f(t);
        c.samples.push_back({t, 1.0, {0, x[0], x[1]}, {}, false});
    }
    br.components.push_back(c);
    return br;
}

struct Crossing {
    double s, t;
    Vec2 x;
};

// All-pairs segment intersection on a dense polyline, refined by Newton on the exact curve.
inline std::vector<Crossing> brute_force_crossings(const Param& f, const Param& df, double a, double b, int n) {
    std::vector<Vec2> p(n + 1);
    for (int i = 0; i <= n; ++i) p[i] = f(a + (b - a) * i / n);
    const double h = (b - a) / n;
    std::vector<Crossing> out;
    for (int i = 0; i < n; ++i)
        for (int j = i + 2; j < n; ++j) {
            const Vec2 r = p[i + 1] - p[i], q = p[j + 1] - p[j], w = p[j] - p[i];
            const double den = r[0] * q[1] - r[1] * q[0];
            if (den == 0.0) continue;
            const double alpha = (w[0] * q[1] - w[1] * q[0]) / den;
            const double beta = (w[0] * r[1] - w[1] * r[0]) / den;
            if (alpha < 0 || alpha >= 1 || beta < 0 || beta >= 1) continue;
            double s = a + (i + alpha) * h, t = a + (j + beta) * h;
            for (int it = 0; it < 30; ++it) {
                const Vec2 e = f(s) - f(t), ds = df(s), dt = df(t);
                const double det = -ds[0] * dt[1] + ds[1] * dt[0];
                s -= (-e[0] * dt[1] + e[1] * dt[0]) / det;
                t -= (ds[0] * e[1] - ds[1] * e[0]) / det;
            }
            out.push_back({s, t, f(s)});
        }
    return out;
}

inline std::string fixture(const std::string& name) { return std::string(GEOCAUSTIC_FIXTURES) + "/" + name; }

}  // namespace geocaustic::fx
