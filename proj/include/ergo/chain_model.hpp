#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ergo/errors.hpp"
#include "ergo/numutil.hpp"
#include "ergo/rate_expr.hpp"

namespace ergo {

enum class ChainKind { bdpc, szk, absorbing, general };

inline const char* to_string(ChainKind k) {
  switch (k) {
    case ChainKind::bdpc: return "bdpc";
    case ChainKind::szk: return "szk";
    case ChainKind::absorbing: return "absorbing";
    case ChainKind::general: return "general";
  }
  return "?";
}

/// One sparse intensity entry: transition from state `from` to state `to`.
struct Transition {
  int from;
  int to;
  RateExpr rate;
};

/// Sample-based well-formedness report.  Violations are content, not errors.
struct ValidationReport {
  enum class Kind { negativity, monotonicity };
  struct Violation {
    Kind kind;
    std::string rate;  // e.g. "lambda[2]" (paper indices)
    int k;             // offending index (monotonicity: the smaller of the pair)
    double t;
    double value;
  };
  std::vector<Violation> violations;
  double horizon = 0;
  int samples = 0;
  ChainKind model_kind = ChainKind::general;
  double max_column_sum_dev = 0;  // over a coarse grid; construction identity
  bool absorbing_row_ok = true;   // no outflow from state 0 (absorbing only)

  bool ok() const { return violations.empty() && absorbing_row_ok; }

  std::string summary() const {
    std::string s = "model kind=" + std::string(to_string(model_kind)) +
                    ": " + std::to_string(violations.size()) + " violation(s)";
    if (!absorbing_row_ok) s += "; nonzero outflow from absorbing state 0";
    char buf[64];
    std::snprintf(buf, sizeof buf, "; max column-sum dev %.3g", max_column_sum_dev);
    return s + buf;
  }
};

/// A finite inhomogeneous continuous-time Markov chain on states 0..S.
/// Immutable after construction; produces the transposed intensity matrix
/// A(t) with nonnegative off-diagonal entries and zero column sums, driving
/// the forward equations dp/dt = A(t) p.
class ChainModel {
 public:
  /// Birth-death-catastrophe chain.  lambda[k] is the birth rate from state
  /// k (k = 0..S-1); mu and xi hold death/catastrophe rates from states
  /// 1..S (stored 0-based).  Catastrophes jump straight to state 0; the
  /// entry A(0,1) therefore carries mu_1 + xi_1.
  static ChainModel bdpc(int S, std::vector<RateExpr> lambda, std::vector<RateExpr> mu,
                         std::vector<RateExpr> xi, bool sample_check = true) {
    require(S >= 1, "bdpc: S must be >= 1");
    require(static_cast<int>(lambda.size()) == S, "bdpc: lambda must have S entries (states 0..S-1)");
    require(static_cast<int>(mu.size()) == S, "bdpc: mu must have S entries (states 1..S)");
    require(static_cast<int>(xi.size()) == S, "bdpc: xi must have S entries (states 1..S)");
    ChainModel m(S, ChainKind::bdpc);
    m.lambda_ = std::move(lambda);
    m.mu_ = std::move(mu);
    m.xi_ = std::move(xi);
    if (sample_check) m.throw_on_default_grid_violation();
    return m;
  }

  /// SZK chain: batch arrivals q_{i,i+k} = lambda_k, group services
  /// q_{i,i-k} = mu_k, both indexed k = 1..S and nonincreasing in k.
  static ChainModel szk(int S, std::vector<RateExpr> lambda, std::vector<RateExpr> mu,
                        bool sample_check = true) {
    require(S >= 1, "szk: S must be >= 1");
    require(static_cast<int>(lambda.size()) == S, "szk: lambda must have S entries (k = 1..S)");
    require(static_cast<int>(mu.size()) == S, "szk: mu must have S entries (k = 1..S)");
    ChainModel m(S, ChainKind::szk);
    m.lambda_ = std::move(lambda);
    m.mu_ = std::move(mu);
    if (sample_check) m.throw_on_default_grid_violation();
    return m;
  }

  /// Chain with absorption in zero: no transitions out of state 0.
  static ChainModel absorbing(int S, std::vector<Transition> q, bool sample_check = true) {
    ChainModel m = build_sparse(S, std::move(q), ChainKind::absorbing);
    for (const auto& e : m.entries_)
      require(e.from != 0, "absorbing: transition out of state 0 is forbidden");
    if (sample_check) m.throw_on_default_grid_violation();
    return m;
  }

  /// Arbitrary finite chain given by its sparse intensity map.
  static ChainModel general(int S, std::vector<Transition> q, bool sample_check = true) {
    ChainModel m = build_sparse(S, std::move(q), ChainKind::general);
    if (sample_check) m.throw_on_default_grid_violation();
    return m;
  }

  ChainKind kind() const { return kind_; }
  int states() const { return S_ + 1; }
  int S() const { return S_; }

  const std::vector<RateExpr>& lambda_rates() const { return lambda_; }
  const std::vector<RateExpr>& mu_rates() const { return mu_; }
  const std::vector<RateExpr>& xi_rates() const { return xi_; }
  const std::vector<Transition>& transitions() const { return entries_; }

  /// Transposed intensity matrix A(t), dense (S+1)x(S+1).  Diagonals are
  /// compensated negative column sums, so columns vanish to ~1e-15.
  Eigen::MatrixXd eval_A(double t, bool left_limit = false) const {
    const int n = S_ + 1;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    switch (kind_) {
      case ChainKind::bdpc: {
        for (int k = 0; k <= S_ - 1; ++k) A(k + 1, k) = lambda_[k].eval(t, left_limit);
        for (int k = 2; k <= S_; ++k) A(k - 1, k) = mu_[k - 1].eval(t, left_limit);
        double mu1 = mu_[0].eval(t, left_limit);
        double xi1 = xi_[0].eval(t, left_limit);
        A(0, 1) = mu1 + xi1;
        for (int k = 2; k <= S_; ++k) A(0, k) += xi_[k - 1].eval(t, left_limit);
        break;
      }
      case ChainKind::szk: {
        std::vector<double> lam(S_), mu(S_);
        for (int k = 1; k <= S_; ++k) {
          lam[k - 1] = lambda_[k - 1].eval(t, left_limit);
          mu[k - 1] = mu_[k - 1].eval(t, left_limit);
        }
        for (int i = 0; i < n; ++i) {
          for (int k = 1; k <= S_ - i; ++k) A(i + k, i) = lam[k - 1];
          for (int k = 1; k <= i; ++k) A(i - k, i) = mu[k - 1];
        }
        break;
      }
      case ChainKind::absorbing:
      case ChainKind::general:
        for (const auto& e : entries_) A(e.to, e.from) += e.rate.eval(t, left_limit);
        break;
    }
    for (int j = 0; j < n; ++j) {
      CompensatedSum col;
      for (int i = 0; i < n; ++i)
        if (i != j) col.add(A(i, j));
      A(j, j) = -col.value();
    }
    return A;
  }

  /// Nonnegativity (all kinds) and monotonicity (szk) checks on an
  /// equispaced grid of `samples` points over [0, horizon].
  ValidationReport validate(double horizon, int samples) const {
    if (!(horizon > 0)) throw DomainError("validate: horizon must be positive");
    if (samples < 2) throw DomainError("validate: need at least 2 samples");
    ValidationReport rep;
    rep.horizon = horizon;
    rep.samples = samples;
    rep.model_kind = kind_;
    auto grid_t = [&](int i) { return horizon * static_cast<double>(i) / (samples - 1); };

    auto check_nonneg = [&](const RateExpr& r, const std::string& name, int k) {
      for (int i = 0; i < samples; ++i) {
        double t = grid_t(i);
        double v = r.eval(t);
        if (v < -kNegTol) {
          rep.violations.push_back({ValidationReport::Kind::negativity, name, k, t, v});
          return;  // one report per rate is enough
        }
      }
    };

    switch (kind_) {
      case ChainKind::bdpc:
        for (int k = 0; k <= S_ - 1; ++k) check_nonneg(lambda_[k], "lambda[" + std::to_string(k) + "]", k);
        for (int k = 1; k <= S_; ++k) check_nonneg(mu_[k - 1], "mu[" + std::to_string(k) + "]", k);
        for (int k = 1; k <= S_; ++k) check_nonneg(xi_[k - 1], "xi[" + std::to_string(k) + "]", k);
        break;
      case ChainKind::szk: {
        for (int k = 1; k <= S_; ++k) check_nonneg(lambda_[k - 1], "lambda[" + std::to_string(k) + "]", k);
        for (int k = 1; k <= S_; ++k) check_nonneg(mu_[k - 1], "mu[" + std::to_string(k) + "]", k);
        auto check_mono = [&](const std::vector<RateExpr>& r, const std::string& base) {
          for (int k = 1; k <= S_ - 1; ++k) {
            for (int i = 0; i < samples; ++i) {
              double t = grid_t(i);
              double lo = r[k - 1].eval(t), hi = r[k].eval(t);
              if (hi > lo + kNegTol) {
                rep.violations.push_back({ValidationReport::Kind::monotonicity,
                                          base + "[" + std::to_string(k + 1) + "]>" + base + "[" +
                                              std::to_string(k) + "]",
                                          k, t, hi - lo});
                break;
              }
            }
          }
        };
        check_mono(lambda_, "lambda");
        check_mono(mu_, "mu");
        break;
      }
      case ChainKind::absorbing:
      case ChainKind::general:
        for (std::size_t idx = 0; idx < entries_.size(); ++idx) {
          const auto& e = entries_[idx];
          check_nonneg(e.rate,
                       "q[" + std::to_string(e.from) + "," + std::to_string(e.to) + "]",
                       e.from);
        }
        break;
    }

    // Construction identities on a coarse sub-grid.
    int coarse = std::min(samples, 16);
    for (int i = 0; i < coarse; ++i) {
      double t = horizon * static_cast<double>(i) / std::max(1, coarse - 1);
      Eigen::MatrixXd A;
      try {
        A = eval_A(t);
      } catch (const DomainError&) {
        continue;  // per-rate violations already recorded above
      }
      rep.max_column_sum_dev = std::max(rep.max_column_sum_dev, A.colwise().sum().cwiseAbs().maxCoeff());
      if (kind_ == ChainKind::absorbing) {
        for (int j = 1; j <= S_; ++j)
          if (A(j, 0) != 0.0) rep.absorbing_row_ok = false;
      }
    }
    return rep;
  }

  /// Union of piecewise breakpoints over every rate in the model.
  std::vector<double> rate_breakpoints() const {
    std::vector<double> out;
    auto grab = [&](const std::vector<RateExpr>& v) {
      for (const auto& r : v) {
        auto b = r.breakpoints();
        out.insert(out.end(), b.begin(), b.end());
      }
    };
    grab(lambda_);
    grab(mu_);
    grab(xi_);
    for (const auto& e : entries_) {
      auto b = e.rate.breakpoints();
      out.insert(out.end(), b.begin(), b.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// True when A(t) is constant over a probe grid (max entry dev <= tol).
  bool time_homogeneous(double tol = 1e-12) const {
    Eigen::MatrixXd A0 = eval_A(0.0);
    for (double t : {0.37, 1.13, 2.71, 4.9, 7.61}) {
      if ((eval_A(t) - A0).cwiseAbs().maxCoeff() > tol) return false;
    }
    return true;
  }

 private:
  ChainModel(int S, ChainKind k) : S_(S), kind_(k) {}

  static void require(bool cond, const char* msg) {
    if (!cond) throw ModelError(msg);
  }

  static ChainModel build_sparse(int S, std::vector<Transition> q, ChainKind kind) {
    require(S >= 1, "S must be >= 1");
    ChainModel m(S, kind);
    for (const auto& e : q) {
      require(e.from >= 0 && e.from <= S && e.to >= 0 && e.to <= S,
              "transition state out of range");
      require(e.from != e.to, "diagonal entries are derived, not supplied");
    }
    m.entries_ = std::move(q);
    return m;
  }

  // Builders reject models that are already visibly broken on a short
  // default grid; the full check is validate().
  void throw_on_default_grid_violation() const {
    ValidationReport rep = validate(4.0, 129);
    if (rep.violations.empty()) return;
    const auto& v = rep.violations.front();
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s: %s at t=%g (value %.6g)",
                  v.kind == ValidationReport::Kind::negativity ? "negative rate" : "monotonicity violated",
                  v.rate.c_str(), v.t, v.value);
    throw ModelError(buf);
  }

  static constexpr double kNegTol = 1e-12;

  int S_;
  ChainKind kind_;
  std::vector<RateExpr> lambda_, mu_, xi_;  // kind-specific tables
  std::vector<Transition> entries_;         // absorbing/general
};

/// Spec-facing aliases.
inline ChainModel build_bdpc(int S, std::vector<RateExpr> lambda, std::vector<RateExpr> mu,
                             std::vector<RateExpr> xi) {
  return ChainModel::bdpc(S, std::move(lambda), std::move(mu), std::move(xi));
}
inline ChainModel build_szk(int S, std::vector<RateExpr> lambda, std::vector<RateExpr> mu) {
  return ChainModel::szk(S, std::move(lambda), std::move(mu));
}
inline ChainModel build_absorbing(int S, std::vector<Transition> q) {
  return ChainModel::absorbing(S, std::move(q));
}
inline Eigen::MatrixXd eval_A(const ChainModel& m, double t) { return m.eval_A(t); }

}  // namespace ergo
