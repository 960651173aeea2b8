#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "ergo/errors.hpp"
#include "ergo/rate_expr.hpp"

namespace ergo {

struct QuadratureOptions {
  double tol = 1e-10;  // absolute error target for the whole interval
  int max_depth = 40;  // bisection depth cap per panel
};

namespace detail {

// Integrand evaluated one-sided: f(t, left_limit).  Within a smooth panel
// only the right endpoint may coincide with a discontinuity, so the caller
// wraps evaluations at the panel end as left limits.
using SidedFn = std::function<double(double, bool)>;

inline double simpson(double fa, double fm, double fb, double h) {
  return h / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adapt(const SidedFn& f, double a, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth, int max_depth, double seg_end) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm, lm == seg_end), frm = f(rm, rm == seg_end);
  if (!std::isfinite(flm) || !std::isfinite(frm))
    throw QuadratureError("non-finite integrand inside panel");
  double left = simpson(fa, flm, fm, m - a);
  double right = simpson(fm, frm, fb, b - m);
  double err = left + right - whole;
  if (std::abs(err) <= 15.0 * tol || (b - a) < 1e-300)
    return left + right + err / 15.0;
  if (depth >= max_depth)
    throw QuadratureError("tolerance not met within subdivision budget");
  return adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, max_depth, seg_end) +
         adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, max_depth, seg_end);
}

inline double integrate_panel(const SidedFn& f, double a, double b, double tol, int max_depth) {
  if (!(b > a)) return 0.0;
  double fa = f(a, false);
  double fb = f(b, true);  // right endpoint may sit on a breakpoint
  double m = 0.5 * (a + b);
  double fm = f(m, m == b);
  if (!std::isfinite(fa) || !std::isfinite(fm) || !std::isfinite(fb))
    throw QuadratureError("non-finite integrand at panel node");
  double whole = simpson(fa, fm, fb, b - a);
  return adapt(f, a, b, fa, fm, fb, whole, tol, 0, max_depth, b);
}

}  // namespace detail

/// Adaptive Simpson integral of f over [t0, t1] with absolute error target
/// opts.tol.  The interval is split at every supplied breakpoint first so a
/// discontinuity never straddles a panel; within a panel the integrand is
/// evaluated as a left limit at the panel's right endpoint.
inline double integrate(const detail::SidedFn& f, double t0, double t1,
                        const QuadratureOptions& opts = {},
                        std::span<const double> breakpoints = {}) {
  if (!(t1 >= t0)) throw DomainError("integrate: need t0 <= t1");
  if (!(opts.tol > 0)) throw DomainError("integrate: tol must be positive");
  if (t1 == t0) return 0.0;
  std::vector<double> cuts{t0};
  for (double b : breakpoints)
    if (b > t0 && b < t1) cuts.push_back(b);
  cuts.push_back(t1);
  std::sort(cuts.begin(), cuts.end());
  double tol_per = opts.tol / static_cast<double>(cuts.size() - 1);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += detail::integrate_panel(f, cuts[i], cuts[i + 1], tol_per, opts.max_depth);
  return total;
}

/// Plain-callable overload for smooth integrands.
inline double integrate(const std::function<double(double)>& f, double t0, double t1,
                        const QuadratureOptions& opts = {},
                        std::span<const double> breakpoints = {}) {
  return integrate([&f](double t, bool) { return f(t); }, t0, t1, opts, breakpoints);
}

/// Integral of a rate expression; subdivides at its own piecewise breakpoints.
inline double integrate_rate(const RateExpr& f, double t0, double t1, double tol = 1e-10) {
  auto bps = f.breakpoints();
  return integrate([&f](double t, bool left) { return f.eval(t, left); }, t0, t1,
                   QuadratureOptions{tol, 40}, bps);
}

}  // namespace ergo
