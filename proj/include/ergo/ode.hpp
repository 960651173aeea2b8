#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "ergo/chain_model.hpp"
#include "ergo/errors.hpp"
#include "ergo/numutil.hpp"
#include "ergo/reduction.hpp"
#include "ergo/weighting.hpp"

namespace ergo {

struct SolverOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double safety = 0.9;
  double min_step = 1e-12;
  // Rejection rates above this (after warmup) signal stiffness, which is
  // out of scope; the solver aborts with a diagnostic instead of switching
  // methods.
  double max_rejection_rate = 0.9;
};

/// Samples of an ODE solution on a caller-requested output grid, plus
/// solver statistics.
struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  struct Stats {
    long accepted = 0;
    long rejected = 0;
    long rhs_evals = 0;
    double max_simplex_drift = 0.0;  // probability trajectories only
    double min_entry = std::numeric_limits<double>::infinity();
  } stats;
};

namespace detail {

/// Time derivative callback.  `left_limit` marks evaluations that sit
/// exactly on the right end of a smooth segment (rate discontinuities must
/// be seen from the left there).
using OdeRhs = std::function<void(double t, bool left_limit, const Eigen::VectorXd& y, Eigen::VectorXd& dy)>;

/// Embedded Dormand-Prince 5(4) pair with 4th-order dense output.
/// Piecewise-constant rate breakpoints are forced to coincide with step
/// boundaries so the integrator never differences across a discontinuity.
class DormandPrince {
 public:
  DormandPrince(OdeRhs rhs, std::vector<double> breakpoints, SolverOptions opts)
      : rhs_(std::move(rhs)), bps_(std::move(breakpoints)), opts_(opts) {}

  Trajectory run(const Eigen::VectorXd& y0, double t_end, std::span<const double> out_grid) {
    Trajectory traj;
    for (std::size_t i = 0; i < out_grid.size(); ++i) {
      if (out_grid[i] < 0.0 || out_grid[i] > t_end + 1e-15)
        throw DomainError("output grid point outside [0, t_end]");
      if (i > 0 && !(out_grid[i] > out_grid[i - 1]))
        throw DomainError("output grid must be strictly increasing");
    }
    if (t_end == 0.0) {
      traj.times.push_back(0.0);
      traj.states.push_back(y0);
      return traj;
    }
    if (!(t_end > 0.0)) throw DomainError("t_end must be nonnegative");

    std::vector<double> stops;
    for (double b : bps_)
      if (b > 0.0 && b < t_end) stops.push_back(b);
    stops.push_back(t_end);

    const int n = static_cast<int>(y0.size());
    Eigen::VectorXd y = y0;
    std::array<Eigen::VectorXd, 7> k;
    for (auto& v : k) v.resize(n);
    Eigen::VectorXd ytmp(n), ynew(n), yerr(n);

    double t = 0.0;
    std::size_t next_out = 0;
    while (next_out < out_grid.size() && out_grid[next_out] <= 0.0) {
      traj.times.push_back(out_grid[next_out]);
      traj.states.push_back(y0);
      ++next_out;
    }

    std::size_t stop_idx = 0;
    double h = std::clamp(1e-4 * t_end, opts_.min_step, t_end / 10.0);
    bool have_k1 = false;

    while (t < t_end) {
      double seg_end = stops[stop_idx];
      if (t >= seg_end) {
        ++stop_idx;
        seg_end = stops[stop_idx];
        have_k1 = false;  // new segment: FSAL derivative is stale
      }
      h = std::min(h, t_end / 10.0);
      bool hit_stop = false;
      if (t + h >= seg_end - 1e-14 * t_end) {
        h = seg_end - t;
        hit_stop = true;
      }
      if (h < opts_.min_step && !hit_stop)
        throw SolverError("step size underflow");

      if (!have_k1) {
        rhs_(t, false, y, k[0]);
        ++traj.stats.rhs_evals;
        have_k1 = true;
      }
      double tr = t + h;  // stage times at c=1 may touch the segment end
      ytmp = y + h * (a21 * k[0]);
      rhs_(t + c2 * h, false, ytmp, k[1]);
      ytmp = y + h * (a31 * k[0] + a32 * k[1]);
      rhs_(t + c3 * h, false, ytmp, k[2]);
      ytmp = y + h * (a41 * k[0] + a42 * k[1] + a43 * k[2]);
      rhs_(t + c4 * h, false, ytmp, k[3]);
      ytmp = y + h * (a51 * k[0] + a52 * k[1] + a53 * k[2] + a54 * k[3]);
      rhs_(t + c5 * h, false, ytmp, k[4]);
      ytmp = y + h * (a61 * k[0] + a62 * k[1] + a63 * k[2] + a64 * k[3] + a65 * k[4]);
      rhs_(tr, hit_stop, ytmp, k[5]);
      ynew = y + h * (b1 * k[0] + b3 * k[2] + b4 * k[3] + b5 * k[4] + b6 * k[5]);
      rhs_(tr, hit_stop, ynew, k[6]);
      traj.stats.rhs_evals += 6;

      yerr = h * (e1 * k[0] + e3 * k[2] + e4 * k[3] + e5 * k[4] + e6 * k[5] + e7 * k[6]);
      double err = 0.0;
      for (int i = 0; i < n; ++i) {
        double sk = opts_.atol + opts_.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        double q = yerr[i] / sk;
        err += q * q;
      }
      err = std::sqrt(err / n);

      long total = traj.stats.accepted + traj.stats.rejected;
      if (total > 50 &&
          static_cast<double>(traj.stats.rejected) > opts_.max_rejection_rate * static_cast<double>(total))
        throw SolverError("rejection rate above 90%: problem appears stiff (out of scope)");

      if (err <= 1.0) {
        // dense output for grid points inside (t, t+h]
        bool dense_ready = false;
        Eigen::VectorXd r2, r3, r4, r5;
        while (next_out < out_grid.size() && out_grid[next_out] <= tr + 1e-14 * t_end) {
          double to = out_grid[next_out];
          if (!dense_ready) {
            r2 = ynew - y;
            r3 = h * k[0] - r2;
            r4 = r2 - h * k[6] - r3;
            r5 = h * (d1 * k[0] + d3 * k[2] + d4 * k[3] + d5 * k[4] + d6 * k[5] + d7 * k[6]);
            dense_ready = true;
          }
          double th = std::clamp((to - t) / h, 0.0, 1.0);
          Eigen::VectorXd yo = y + th * (r2 + (1.0 - th) * (r3 + th * (r4 + (1.0 - th) * r5)));
          traj.times.push_back(to);
          traj.states.push_back(std::move(yo));
          ++next_out;
        }
        t = hit_stop ? seg_end : tr;
        y.swap(ynew);
        k[0].swap(k[6]);  // FSAL
        ++traj.stats.accepted;
        if (on_accept_) on_accept_(t, y);
        double fac = err > 0.0 ? opts_.safety * std::pow(err, -0.2) : 5.0;
        h *= std::clamp(fac, 0.2, 5.0);
        h = std::clamp(h, opts_.min_step, t_end / 10.0);
      } else {
        ++traj.stats.rejected;
        double fac = opts_.safety * std::pow(err, -0.2);
        h *= std::clamp(fac, 0.1, 0.9);
        if (h < opts_.min_step) throw SolverError("step size underflow after rejection");
        have_k1 = true;  // k1 is still valid at unchanged t
      }
    }
    return traj;
  }

  std::function<void(double, const Eigen::VectorXd&)> on_accept_;

 private:
  // Dormand-Prince 5(4) tableau
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  // dense-output weights
  static constexpr double d1 = -12715105075.0 / 11282082432.0;
  static constexpr double d3 = 87487479700.0 / 32700410799.0;
  static constexpr double d4 = -10690763975.0 / 1880347072.0;
  static constexpr double d5 = 701980252875.0 / 199316789632.0;
  static constexpr double d6 = -1453857185.0 / 822651844.0;
  static constexpr double d7 = 69997945.0 / 29380423.0;

  OdeRhs rhs_;
  std::vector<double> bps_;
  SolverOptions opts_;
};

inline double simplex_drift(const Eigen::VectorXd& p) {
  CompensatedSum s;
  for (Eigen::Index i = 0; i < p.size(); ++i) s.add(p[i]);
  double drift = std::abs(s.value() - 1.0);
  double neg = -p.minCoeff();
  return std::max(drift, neg);
}

}  // namespace detail

/// Generic entry point used by the problem-specific wrappers and by tests.
inline Trajectory solve_ode(const detail::OdeRhs& rhs, std::vector<double> breakpoints,
                            const Eigen::VectorXd& y0, double t_end,
                            std::span<const double> out_grid, const SolverOptions& opts = {}) {
  detail::DormandPrince stepper(rhs, std::move(breakpoints), opts);
  return stepper.run(y0, t_end, out_grid);
}

/// Integrate the forward equations dp/dt = A(t) p.  The state stays on the
/// probability simplex; drift beyond 1e-8 at any accepted step or output is
/// a hard failure (it signals a model or solver defect, not roundoff).
inline Trajectory solve_p(const ChainModel& m, const Eigen::VectorXd& p0, double t_end,
                          std::span<const double> out_grid, double rtol = 1e-10,
                          double atol = 1e-12) {
  if (p0.size() != m.states()) throw DomainError("solve_p: p0 dimension mismatch");
  if (detail::simplex_drift(p0) > detail::kSimplexEps)
    throw DomainError("solve_p: p0 is not a probability vector");
  SolverOptions opts;
  opts.rtol = rtol;
  opts.atol = atol;
  double max_drift = 0.0;
  auto rhs = [&m](double t, bool left, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    dy.noalias() = m.eval_A(t, left) * y;
  };
  detail::DormandPrince stepper(rhs, m.rate_breakpoints(), opts);
  stepper.on_accept_ = [&max_drift](double, const Eigen::VectorXd& p) {
    double d = detail::simplex_drift(p);
    if (d > 1e-8) throw SolverError("probability simplex drift exceeded 1e-8");
    max_drift = std::max(max_drift, d);
  };
  Trajectory traj = stepper.run(p0, t_end, out_grid);
  for (const auto& p : traj.states) {
    double d = detail::simplex_drift(p);
    if (d > 1e-8) throw SolverError("probability simplex drift exceeded 1e-8 at an output point");
    max_drift = std::max(max_drift, d);
    traj.stats.min_entry = std::min(traj.stats.min_entry, p.minCoeff());
  }
  traj.stats.max_simplex_drift = max_drift;
  return traj;
}

/// Integrate the transformed difference system dx/dt = H(t) x (signed
/// state; no simplex invariant).
inline Trajectory solve_x(const HEvaluator& H, const Eigen::VectorXd& x0, double t_end,
                          std::span<const double> out_grid, double rtol = 1e-10,
                          double atol = 1e-12) {
  if (x0.size() != H.dim()) throw DomainError("solve_x: x0 dimension mismatch");
  SolverOptions opts;
  opts.rtol = rtol;
  opts.atol = atol;
  auto rhs = [&H](double t, bool left, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    dy.noalias() = H.eval(t, left) * y;
  };
  return solve_ode(rhs, H.breakpoints(), x0, t_end, out_grid, opts);
}

/// Overload for synthetic generators given as a plain matrix function.
inline Trajectory solve_x(const std::function<Eigen::MatrixXd(double)>& H,
                          const Eigen::VectorXd& x0, double t_end,
                          std::span<const double> out_grid, double rtol = 1e-10,
                          double atol = 1e-12, std::vector<double> breakpoints = {}) {
  SolverOptions opts;
  opts.rtol = rtol;
  opts.atol = atol;
  auto rhs = [&H](double t, bool, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    dy.noalias() = H(t) * y;
  };
  return solve_ode(rhs, std::move(breakpoints), x0, t_end, out_grid, opts);
}

/// Integrate the reduced affine system dz/dt = B(t) z + f(t).
inline Trajectory solve_reduced(const ReducedSystem& rs, const Eigen::VectorXd& z0, double t_end,
                                std::span<const double> out_grid, double rtol = 1e-10,
                                double atol = 1e-12) {
  if (z0.size() != rs.dim()) throw DomainError("solve_reduced: z0 dimension mismatch");
  SolverOptions opts;
  opts.rtol = rtol;
  opts.atol = atol;
  auto rhs = [&rs](double t, bool left, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    dy.noalias() = rs.B(t, left) * y;
    dy += rs.f(t, left);
  };
  return solve_ode(rhs, rs.breakpoints(), z0, t_end, out_grid, opts);
}

}  // namespace ergo
