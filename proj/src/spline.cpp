#include "geocaustic/spline.hpp"

#include <cmath>
#include <stdexcept>

#include "geocaustic/types.hpp"

namespace geocaustic {

namespace {

// Solves the tridiagonal system with constant diagonals (1, 4, 1) and right-hand side r.
std::vector<double> solve_tridiagonal(const std::vector<double>& r) {
    const std::size_t n = r.size();
    std::vector<double> c(n), d(n);
    c[0] = 1.0 / 4.0;
    d[0] = r[0] / 4.0;
    for (std::size_t i = 1; i < n; ++i) {
        const double m = 4.0 - c[i - 1];
        c[i] = 1.0 / m;
        d[i] = (r[i] - d[i - 1]) / m;
    }
    std::vector<double> x(n);
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
    return x;
}

// Cyclic (1, 4, 1) system via Sherman-Morrison.
std::vector<double> solve_cyclic(const std::vector<double>& r) {
    const std::size_t n = r.size();
    // A = B + u v^T with B tridiagonal, corner entries 1.
    const double gamma = -4.0;
    auto solve_b = [&](std::vector<double> rhs) {
        std::vector<double> c(n), d(n);
        double diag0 = 4.0 - gamma;
        c[0] = 1.0 / diag0;
        d[0] = rhs[0] / diag0;
        for (std::size_t i = 1; i < n; ++i) {
            const double diag = (i == n - 1) ? 4.0 - 1.0 / gamma : 4.0;
            const double m = diag - c[i - 1];
            c[i] = 1.0 / m;
            d[i] = (rhs[i] - d[i - 1]) / m;
        }
        std::vector<double> x(n);
        x[n - 1] = d[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
        return x;
    };
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = 1.0;
    const auto y = solve_b(r);
    const auto z = solve_b(u);
    const double vy = y[0] + y[n - 1] / gamma;
    const double vz = z[0] + z[n - 1] / gamma;
    const double f = vy / (1.0 + vz);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] - f * z[i];
    return x;
}

}  // namespace

CubicSpline::CubicSpline(double x0, double h, std::vector<double> y, bool periodic, double drift)
    : x0_(x0), h_(h), periodic_(periodic), drift_(periodic ? drift : 0.0), y_(std::move(y)) {
    const std::size_t n = y_.size();
    if (n < 4) throw Error(ErrorKind::InvalidArgument, "spline needs at least 4 samples");
    if (periodic_) {
        const double period = h_ * static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
            y_[i] -= drift_ * (h_ * static_cast<double>(i)) / period;
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double ym = y_[(i + n - 1) % n], yp = y_[(i + 1) % n];
            r[i] = 6.0 * (yp - 2.0 * y_[i] + ym) / (h_ * h_);
        }
        m_ = solve_cyclic(r);
    } else {
        // Natural end conditions.
        m_.assign(n, 0.0);
        std::vector<double> r(n - 2);
        for (std::size_t i = 1; i + 1 < n; ++i)
            r[i - 1] = 6.0 * (y_[i + 1] - 2.0 * y_[i] + y_[i - 1]) / (h_ * h_);
        const auto inner = solve_tridiagonal(r);
        for (std::size_t i = 0; i < inner.size(); ++i) m_[i + 1] = inner[i];
    }
}

double CubicSpline::locate(double x, std::size_t& i, double& t) const {
    const std::size_t n = y_.size();
    double s = (x - x0_) / h_;
    double offset = 0.0;
    if (periodic_) {
        const double k = std::floor(s / static_cast<double>(n));
        s -= k * static_cast<double>(n);
        offset = k * drift_ + drift_ * s / static_cast<double>(n);
        long idx = static_cast<long>(std::floor(s));
        if (idx >= static_cast<long>(n)) idx = static_cast<long>(n) - 1;
        if (idx < 0) idx = 0;
        i = static_cast<std::size_t>(idx);
    } else {
        long idx = static_cast<long>(std::floor(s));
        if (idx < 0) idx = 0;
        if (idx > static_cast<long>(n) - 2) idx = static_cast<long>(n) - 2;
        i = static_cast<std::size_t>(idx);
    }
    t = s - static_cast<double>(i);
    return offset;
}

double CubicSpline::value(double x) const {
    std::size_t i;
    double t;
    const double off = locate(x, i, t);
    const std::size_t j = (i + 1) % y_.size();
    const double a = 1.0 - t, b = t;
    return off + a * y_[i] + b * y_[j] +
           ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[j]) * h_ * h_ / 6.0;
}

double CubicSpline::derivative(double x) const {
    std::size_t i;
    double t;
    locate(x, i, t);
    const std::size_t j = (i + 1) % y_.size();
    const double a = 1.0 - t, b = t;
    const double slope = periodic_ ? drift_ / (h_ * static_cast<double>(y_.size())) : 0.0;
    return slope + (y_[j] - y_[i]) / h_ +
           (-(3.0 * a * a - 1.0) * m_[i] + (3.0 * b * b - 1.0) * m_[j]) * h_ / 6.0;
}

double CubicSpline::second_derivative(double x) const {
    std::size_t i;
    double t;
    locate(x, i, t);
    const std::size_t j = (i + 1) % y_.size();
    return (1.0 - t) * m_[i] + t * m_[j];
}

}  // namespace geocaustic
