#ifndef RELSA_QUADRATURE_HPP
#define RELSA_QUADRATURE_HPP

#include <cmath>
#include <cstddef>
#include <utility>

namespace relsa {

/// Composite Simpson rule on [a,b] with `intervals` panels (rounded up to even).
template <class F>
double simpson(F&& f, double a, double b, int intervals) {
    if (intervals < 2) intervals = 2;
    if (intervals % 2 != 0) ++intervals;
    const double h = (b - a) / intervals;
    double sum = f(a) + f(b);
    for (int i = 1; i < intervals; ++i) {
        const double x = a + i * h;
        sum += f(x) * ((i % 2 == 1) ? 4.0 : 2.0);
    }
    return sum * h / 3.0;
}

/// Simpson with panel doubling until two successive refinements agree to
/// `rel_tol`, starting from `initial` panels.
template <class F>
double simpson_adaptive(F&& f, double a, double b, double rel_tol = 1e-12,
                        int initial = 2048, int max_intervals = 1 << 16) {
    double prev = simpson(f, a, b, initial);
    for (int n = 2 * initial; n <= max_intervals; n *= 2) {
        const double cur = simpson(f, a, b, n);
        if (std::abs(cur - prev) <= rel_tol * (std::abs(cur) + 1e-300))
            return cur;
        prev = cur;
    }
    return prev;
}

} // namespace relsa

#endif
