#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace geocaustic {

using Vec2 = std::array<double, 2>;
using Vec3 = std::array<double, 3>;

inline Vec2 operator+(const Vec2& a, const Vec2& b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Vec2 operator-(const Vec2& a, const Vec2& b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Vec2 operator*(double s, const Vec2& a) { return {s * a[0], s * a[1]}; }
inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

/// Symmetric 2x2 metric tensor (g11, g12, g22) in chart coordinates.
struct Metric {
    double g11 = 1.0, g12 = 0.0, g22 = 1.0;

    double det() const { return g11 * g22 - g12 * g12; }
    double inner(const Vec2& a, const Vec2& b) const {
        return g11 * a[0] * b[0] + g12 * (a[0] * b[1] + a[1] * b[0]) + g22 * a[1] * b[1];
    }
    double norm(const Vec2& a) const { return std::sqrt(inner(a, a)); }
    /// Signed area form sqrt(det g) * (a x b); positive when b lies to the left of a.
    double area(const Vec2& a, const Vec2& b) const {
        return std::sqrt(det()) * (a[0] * b[1] - a[1] * b[0]);
    }
    Metric inverse() const {
        const double d = det();
        return {g22 / d, -g12 / d, g11 / d};
    }
    Vec2 apply(const Vec2& a) const { return {g11 * a[0] + g12 * a[1], g12 * a[0] + g22 * a[1]}; }
    bool positive_definite() const { return g11 > 0.0 && g22 > 0.0 && det() > 0.0; }
};

/// Levi-Civita connection coefficients. Index 0 = u, 1 = v; gamma[k][i][j] = Γ^k_{ij}.
struct Christoffel {
    std::array<std::array<std::array<double, 2>, 2>, 2> gamma{};

    double operator()(int k, int i, int j) const { return gamma[k][i][j]; }
    /// Γ^k_{ij} a^i b^j
    Vec2 contract(const Vec2& a, const Vec2& b) const {
        Vec2 r{};
        for (int k = 0; k < 2; ++k)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) r[k] += gamma[k][i][j] * a[i] * b[j];
        return r;
    }
};

struct ChartPoint {
    int chart = 0;
    double u = 0.0;
    double v = 0.0;

    Vec2 coords() const { return {u, v}; }
};

enum class ErrorKind {
    PointOutsideDomain,
    NoOverlappingChart,
    LeftAtlas,
    ToleranceFailure,
    RegularityViolation,
    ConvexityViolation,
    EmptyInput,
    Parse,
    InvalidArgument,
};

/// Library error; `where` carries the parameter (t or xi) at which the failure happened, if any.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what, double where = std::nan(""))
        : std::runtime_error(what), kind_(kind), where_(where) {}

    ErrorKind kind() const { return kind_; }
    double where() const { return where_; }

private:
    ErrorKind kind_;
    double where_;
};

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace geocaustic
