#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "ergo/bounds.hpp"
#include "ergo/ode.hpp"
#include "ergo/spectral.hpp"
#include "ergo/weighting.hpp"

namespace ergo {

struct SandwichOptions {
  double t_end = 1.0;
  int checkpoints = 20;
  double rtol = 1e-10;
  double atol = 1e-12;
  double qtol = 1e-10;
  // Verification tolerance composes the quadrature, ODE and norm-rounding
  // budgets: tol_verify = 1e-6 + 10*(rtol + qtol).  Negative means "use
  // that default".
  double tol_verify = -1.0;
  int cond_samples = 400;

  double effective_tol() const {
    return tol_verify >= 0.0 ? tol_verify : 1e-6 + 10.0 * (rtol + qtol);
  }
};

/// Empirical check of the two-sided envelope for one pair of initial
/// distributions.  `measured` comes from full solve_p runs (end to end),
/// never from the transformed system.
struct SandwichReport {
  struct Row {
    double t;
    double measured;  // ||z_a(t) - z_b(t)||_{1D}
    double upper;     // U(t) * m0
    double lower;     // L(t) * m0
    double margin_upper;  // (upper - measured)/upper, negative = violated
    double margin_lower;  // (measured - lower)/lower
  };
  struct Violation {
    std::size_t row;
    bool upper;  // false = lower bound
    double margin;
  };

  std::vector<Row> rows;
  std::vector<Violation> violations;
  double m0 = 0.0;
  bool lower_applicable = false;
  bool condition_ii_pass = false;
  double cond_ii_min_offdiag = 0.0;
  double condition_i_d = 0.0;
  double tol_verify = 0.0;
  Trajectory::Stats stats_a, stats_b;

  bool ok() const { return violations.empty(); }

  /// Header lines for reports/CSV comments; documents the tolerance
  /// composition rule next to the numbers it produced.
  std::vector<std::string> header() const {
    char buf[200];
    std::vector<std::string> out;
    out.push_back("tol_verify = 1e-6 + 10*(ode_rtol + quad_tol) unless overridden");
    std::snprintf(buf, sizeof buf, "tol_verify: %.6g", tol_verify);
    out.push_back(buf);
    std::snprintf(buf, sizeof buf, "condition_i_d: %.17g", condition_i_d);
    out.push_back(buf);
    std::snprintf(buf, sizeof buf, "condition_ii: %s (min offdiag %.6g)",
                  condition_ii_pass ? "PASS" : "FAIL", cond_ii_min_offdiag);
    out.push_back(buf);
    std::snprintf(buf, sizeof buf, "m0: %.17g", m0);
    out.push_back(buf);
    std::snprintf(buf, sizeof buf, "lower_applicable: %d", lower_applicable ? 1 : 0);
    out.push_back(buf);
    std::snprintf(buf, sizeof buf, "violations: %zu", violations.size());
    out.push_back(buf);
    return out;
  }
};

inline SandwichReport run_sandwich(const ChainModel& m, const WeightMatrix& D,
                                   const Eigen::VectorXd& p0_a, const Eigen::VectorXd& p0_b,
                                   const SandwichOptions& opts = {}) {
  if (!(opts.t_end > 0)) throw DomainError("run_sandwich: t_end must be positive");
  if (opts.checkpoints < 1) throw DomainError("run_sandwich: need at least one checkpoint");

  SandwichReport rep;
  rep.tol_verify = opts.effective_tol();
  rep.condition_i_d = check_condition_i(D);

  ReducedSystem rs(m);
  HEvaluator H = make_H(rs, D);
  Cond2Report c2 = check_condition_ii(H, opts.t_end, opts.cond_samples);
  rep.condition_ii_pass = c2.pass;
  rep.cond_ii_min_offdiag = c2.min_offdiag;

  std::vector<double> grid(opts.checkpoints);
  for (int i = 0; i < opts.checkpoints; ++i)
    grid[i] = opts.t_end * static_cast<double>(i + 1) / opts.checkpoints;

  Trajectory ta = solve_p(m, p0_a, opts.t_end, grid, opts.rtol, opts.atol);
  Trajectory tb = solve_p(m, p0_b, opts.t_end, grid, opts.rtol, opts.atol);
  rep.stats_a = ta.stats;
  rep.stats_b = tb.stats;

  Eigen::VectorXd z0a = p0_a.tail(m.S()), z0b = p0_b.tail(m.S());
  rep.m0 = weighted_norm(z0a - z0b, D);
  // Exact algebraic condition on the inputs, so machine tolerance only.
  rep.lower_applicable = (D.apply(z0a - z0b).minCoeff() >= -1e-14);

  RateEnvelope env = envelopes(alpha_profile(rs, D), opts.qtol);
  auto env_rows = env.sample(grid);

  for (std::size_t i = 0; i < grid.size(); ++i) {
    Eigen::VectorXd za = ta.states[i].tail(m.S());
    Eigen::VectorXd zb = tb.states[i].tail(m.S());
    SandwichReport::Row row;
    row.t = grid[i];
    row.measured = weighted_norm(za - zb, D);
    row.upper = env_rows[i].upper * rep.m0;
    row.lower = env_rows[i].lower * rep.m0;
    row.margin_upper = row.upper > 0 ? (row.upper - row.measured) / row.upper : 0.0;
    row.margin_lower = row.lower > 0 ? (row.measured - row.lower) / row.lower : 0.0;
    // The theorem only claims the bounds under condition (ii); the lower
    // bound additionally needs the ordered initial condition.
    if (rep.condition_ii_pass && row.measured > row.upper * (1.0 + rep.tol_verify))
      rep.violations.push_back({i, true, row.margin_upper});
    if (rep.condition_ii_pass && rep.lower_applicable &&
        row.measured < row.lower * (1.0 - rep.tol_verify))
      rep.violations.push_back({i, false, row.margin_lower});
    rep.rows.push_back(row);
  }
  return rep;
}

/// Bracket check for homogeneous chains: beta_star <= gap <= beta_plus,
/// with the gap produced by the independent eigenvalue oracle.
struct GapBracket {
  double beta_star = 0.0;
  double beta_plus = 0.0;  // printed as beta_lower in CSV output
  double gap = 0.0;
  bool condition_ii_pass = false;

  bool within(double slack = 1e-8) const {
    return gap >= beta_star - slack && gap <= beta_plus + slack;
  }
  std::string summary() const {
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "beta_star=%.9g <= gap=%.9g <= beta_plus=%.9g : %s (condition ii %s)",
                  beta_star, gap, beta_plus, within() ? "bracket holds" : "BRACKET VIOLATED",
                  condition_ii_pass ? "PASS" : "FAIL");
    return buf;
  }
};

inline GapBracket spectral_gap_bracket(const ChainModel& m, const WeightMatrix& D) {
  if (!m.time_homogeneous())
    throw ModelError("spectral_gap_bracket: model must be time-homogeneous");
  ReducedSystem rs(m);
  GapBracket out;
  out.gap = spectral_gap_of(rs.B(0.0));
  AlphaProfile ap = alpha_profile(rs, D);
  Eigen::VectorXd a = ap.alpha(0.0);
  out.beta_star = a.minCoeff();
  out.beta_plus = a.maxCoeff();
  out.condition_ii_pass = check_condition_ii(make_H(rs, D), 1.0, 2).pass;
  return out;
}

/// The proof's positivity preservation: with H essentially nonnegative and
/// x(0) >= 0, the solution stays (numerically) nonnegative.
struct PositivityReport {
  double min_entry = 0.0;
  bool pass = false;
};

namespace detail {
inline PositivityReport positivity_from(const Trajectory& traj) {
  PositivityReport rep;
  rep.min_entry = std::numeric_limits<double>::infinity();
  for (const auto& x : traj.states) rep.min_entry = std::min(rep.min_entry, x.minCoeff());
  rep.pass = rep.min_entry >= -1e-10;
  return rep;
}
inline std::vector<double> uniform_grid(double t_end, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = t_end * static_cast<double>(i + 1) / n;
  return g;
}
}  // namespace detail

inline PositivityReport positivity_check(const HEvaluator& H, const Eigen::VectorXd& x0,
                                         double t_end, double rtol = 1e-10, double atol = 1e-12) {
  if (x0.minCoeff() < 0) throw DomainError("positivity_check: x0 must be entrywise nonnegative");
  auto grid = detail::uniform_grid(t_end, 128);
  return detail::positivity_from(solve_x(H, x0, t_end, grid, rtol, atol));
}

inline PositivityReport positivity_check(const std::function<Eigen::MatrixXd(double)>& H,
                                         const Eigen::VectorXd& x0, double t_end,
                                         double rtol = 1e-10, double atol = 1e-12) {
  if (x0.minCoeff() < 0) throw DomainError("positivity_check: x0 must be entrywise nonnegative");
  auto grid = detail::uniform_grid(t_end, 128);
  return detail::positivity_from(solve_x(H, x0, t_end, grid, rtol, atol));
}

}  // namespace ergo
