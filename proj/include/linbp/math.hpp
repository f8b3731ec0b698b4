#pragma once
// Small numerical helpers: Gaussian tail function and its inverse.

#include <cmath>
#include <limits>
#include <stdexcept>

namespace linbp {

// Upper tail of the standard normal, Q(x) = Pr{Z > x}.
inline double q_function(double x) {
    return 0.5 * std::erfc(x / std::sqrt(2.0));
}

// Inverse of q_function by bisection. Monotone, deterministic across
// platforms; accurate to ~1e-13 in x which is far below 1e-10 in probability.
inline double q_inverse(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("q_inverse: p must lie in (0,1)");
    double lo = -40.0, hi = 40.0;
    while (hi - lo > 1e-13) {
        const double mid = 0.5 * (lo + hi);
        if (q_function(mid) > p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline bool approx_equal(double a, double b, double tol) {
    return std::abs(a - b) <= tol;
}

}  // namespace linbp
