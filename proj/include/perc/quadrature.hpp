#pragma once

#include <cmath>
#include <functional>

#include "perc/common.hpp"

namespace perc {

namespace detail {

inline double simpson(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <typename F>
double adaptive_step(F&& f, double a, double b, double fa, double fm, double fb,
                     double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(a, m, fa, flm, fm);
    const double right = simpson(m, b, fm, frm, fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace detail

// Adaptive Simpson on [a,b] with a mixed relative/absolute tolerance.
template <typename F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-10,
                 double abs_floor = 1e-300) {
    if (a == b) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = detail::simpson(a, b, fa, fm, fb);
    const double tol = std::max(std::abs(whole) * rel_tol, abs_floor);
    return detail::adaptive_step(f, a, b, fa, fm, fb, whole, tol, 48);
}

// Integral of f over [lo, infinity) via the substitution x = lo + t/(1-t).
// The integrand must decay fast enough for the transformed integrand to
// vanish at t -> 1 (true for every law the library ships).
template <typename F>
double integrate_to_infinity(F&& f, double lo, double rel_tol = 1e-10) {
    auto g = [&](double t) -> double {
        if (t >= 1.0) return 0.0;
        const double om = 1.0 - t;
        const double x = lo + t / om;
        const double v = f(x) / (om * om);
        return std::isfinite(v) ? v : 0.0;
    };
    return integrate(g, 0.0, 1.0, rel_tol);
}

} // namespace perc
