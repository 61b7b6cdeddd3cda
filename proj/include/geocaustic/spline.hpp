#pragma once

#include <vector>

namespace geocaustic {

/// Cubic interpolating spline on a uniform grid x_i = x0 + i*h. Periodic splines take N samples
/// covering one period N*h (the closing sample is implicit) plus a linear drift per period, so
/// that f(x + N*h) = f(x) + drift.
class CubicSpline {
public:
    CubicSpline() = default;
    CubicSpline(double x0, double h, std::vector<double> y, bool periodic, double drift = 0.0);

    double value(double x) const;
    double derivative(double x) const;
    double second_derivative(double x) const;

    double x0() const { return x0_; }
    double step() const { return h_; }
    std::size_t size() const { return y_.size(); }
    bool periodic() const { return periodic_; }

private:
    // Locates the interval and local coordinate; returns the drift offset to add.
    double locate(double x, std::size_t& i, double& t) const;

    double x0_ = 0.0, h_ = 1.0;
    bool periodic_ = false;
    double drift_ = 0.0;
    std::vector<double> y_;  // detrended samples
    std::vector<double> m_;  // second derivatives at knots
};

}  // namespace geocaustic
