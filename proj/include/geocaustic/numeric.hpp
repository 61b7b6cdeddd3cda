#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

namespace geocaustic::numeric {

/// Root of f in [a, b] given f(a), f(b) of opposite sign; bracket width below tol.
template <class F>
double bracketed_root(F&& f, double a, double b, double fa, double fb, double tol) {
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    std::uintmax_t iters = 200;
    auto stop = [tol](double lo, double hi) { return std::abs(hi - lo) <= tol; };
    const auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, stop, iters);
    return 0.5 * (r.first + r.second);
}

/// Minimizer of f on [a, b] (Brent), returns (x, f(x)).
template <class F>
std::pair<double, double> minimize(F&& f, double a, double b, int bits = 40) {
    std::uintmax_t iters = 200;
    return boost::math::tools::brent_find_minima(f, a, b, bits, iters);
}

}  // namespace geocaustic::numeric
