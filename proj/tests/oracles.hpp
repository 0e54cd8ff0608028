#ifndef RELSA_TEST_ORACLES_HPP
#define RELSA_TEST_ORACLES_HPP

// Test-only reference computations, kept independent of the library's own
// integration and solver paths so they can serve as oracles for it.

#include <cmath>
#include <functional>
#include <stdexcept>

namespace oracle {

/// Plain composite Simpson rule, no shifting, no adaptivity.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      int intervals = 20000) {
    if (intervals % 2 != 0) ++intervals;
    const double h = (b - a) / intervals;
    double sum = f(a) + f(b);
    for (int i = 1; i < intervals; ++i)
        sum += f(a + i * h) * ((i % 2 == 1) ? 4.0 : 2.0);
    return sum * h / 3.0;
}

/// Bisection on a monotone function; returns x with f(x) = 0 within xtol.
inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     double xtol = 1e-12, int max_iter = 200) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0) throw std::runtime_error("bisect: interval does not bracket");
    for (int i = 0; i < max_iter && (hi - lo) > xtol; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if (flo * fm < 0.0) {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

/// Standard normal cdf straight from libm.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

} // namespace oracle

#endif
