// Independent reference implementations used only by the tests.  Everything in
// here is deliberately written from scratch against the defining formulas (grid
// search, quadrature, long-double arithmetic) rather than by calling into the
// library, so agreement between the two is meaningful evidence of correctness.
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

namespace oracle {

// Argmin of phi(u) + (u - x)^2 / (2 gamma) over a uniform grid on [-4, 4] with
// step 1e-4.  Brute force on purpose: no optimality conditions, no shrinkage
// formulas, just the definition of the proximal point.
inline double grid_prox(const std::function<double(double)>& phi, double gamma, double x,
                        double lo = -4.0, double hi = 4.0, double step = 1e-4) {
  if (!(gamma > 0.0)) throw std::invalid_argument("grid_prox: gamma must be positive");
  double best_u = lo;
  double best_v = phi(lo) + (lo - x) * (lo - x) / (2.0 * gamma);
  const long n = std::lround((hi - lo) / step);
  for (long i = 1; i <= n; ++i) {
    const double u = lo + static_cast<double>(i) * step;
    const double v = phi(u) + (u - x) * (u - x) / (2.0 * gamma);
    if (v < best_v) {
      best_v = v;
      best_u = u;
    }
  }
  return best_u;
}

namespace detail {

inline double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive(const std::function<double(double)>& f, double a, double b, double fa,
                       double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(a, m, fa, flm, fm);
  const double right = simpson(m, b, fm, frm, fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson quadrature with Richardson correction.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12, int max_depth = 48) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = detail::simpson(a, b, fa, fm, fb);
  return detail::adaptive(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// Predefined-time gain evaluated directly from its closed-form statement in
// long double arithmetic:
//
//   1/(b3 (1-c) (1-p1)) * ln(1 + b3 2^{(1-p1)/2} (1+c)^{1-p1} / b1)
// + 1/(b3 (1-c) (p2-1)) * ln(1 + b3 2^{(1-p2)/2} (1-c)^{1-p2} / b2)
inline long double gain_statement(double b1, double b2, double b3, double p1, double p2,
                                  double c) {
  const long double lb1 = b1, lb2 = b2, lb3 = b3, lp1 = p1, lp2 = p2, lc = c;
  const long double one = 1.0L, two = 2.0L;
  const long double t1 = one / (lb3 * (one - lc) * (one - lp1)) *
                         std::log(one + lb3 * std::pow(two, (one - lp1) / two) *
                                            std::pow(one + lc, one - lp1) / lb1);
  const long double t2 = one / (lb3 * (one - lc) * (lp2 - one)) *
                         std::log(one + lb3 * std::pow(two, (one - lp2) / two) *
                                            std::pow(one - lc, one - lp2) / lb2);
  return t1 + t2;
}

}  // namespace oracle
