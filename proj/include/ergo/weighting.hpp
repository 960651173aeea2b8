#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ergo/errors.hpp"
#include "ergo/reduction.hpp"

namespace ergo {

enum class WeightShape { cumulative_upper, diagonal };

inline const char* to_string(WeightShape s) {
  return s == WeightShape::cumulative_upper ? "cumulative-upper" : "diagonal";
}

/// Constant weight matrix D with positive weights d_1..d_S.
///
/// cumulative_upper: row i carries d_i from column i rightwards, so
/// (Dz)_i = d_i * sum_{j>=i} z_j (weighted tail sums).  Its inverse is
/// bidiagonal: 1/d_j on the diagonal, -1/d_j on the superdiagonal entry in
/// column j.  diagonal: plain positive scaling.
class WeightMatrix {
 public:
  WeightMatrix(WeightShape shape, Eigen::VectorXd d) : shape_(shape), d_(std::move(d)) {
    if (d_.size() < 1) throw ModelError("weights: need at least one entry");
    for (Eigen::Index i = 0; i < d_.size(); ++i)
      if (!(d_[i] > 0.0)) throw ModelError("weights: all d_i must be positive");
  }

  static WeightMatrix ones(WeightShape shape, int S) {
    return WeightMatrix(shape, Eigen::VectorXd::Ones(S));
  }

  WeightShape shape() const { return shape_; }
  int dim() const { return static_cast<int>(d_.size()); }
  const Eigen::VectorXd& d() const { return d_; }

  Eigen::MatrixXd dense() const {
    const int S = dim();
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(S, S);
    for (int i = 0; i < S; ++i) {
      if (shape_ == WeightShape::diagonal) D(i, i) = d_[i];
      else
        for (int j = i; j < S; ++j) D(i, j) = d_[i];
    }
    return D;
  }

  /// Closed-form inverse; never goes through a numeric solve.
  Eigen::MatrixXd inverse_dense() const {
    const int S = dim();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(S, S);
    for (int i = 0; i < S; ++i) M(i, i) = 1.0 / d_[i];
    if (shape_ == WeightShape::cumulative_upper)
      for (int i = 0; i + 1 < S; ++i) M(i, i + 1) = -1.0 / d_[i + 1];
    return M;
  }

  /// D z in O(S).
  Eigen::VectorXd apply(const Eigen::VectorXd& z) const {
    if (z.size() != d_.size()) throw DomainError("weights: dimension mismatch");
    if (shape_ == WeightShape::diagonal) return d_.cwiseProduct(z);
    Eigen::VectorXd x(z.size());
    double tail = 0.0;
    for (Eigen::Index i = z.size() - 1; i >= 0; --i) {
      tail += z[i];
      x[i] = d_[i] * tail;
    }
    return x;
  }

  Eigen::VectorXd apply_inverse(const Eigen::VectorXd& x) const {
    if (x.size() != d_.size()) throw DomainError("weights: dimension mismatch");
    if (shape_ == WeightShape::diagonal) return x.cwiseQuotient(d_);
    Eigen::VectorXd z(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      z[i] = x[i] / d_[i];
      if (i + 1 < x.size()) z[i] -= x[i + 1] / d_[i + 1];
    }
    return z;
  }

 private:
  WeightShape shape_;
  Eigen::VectorXd d_;
};

/// l1 norm of D z (the weighted norm the bounds live in).
inline double weighted_norm(const Eigen::VectorXd& z, const WeightMatrix& D) {
  return D.apply(z).cwiseAbs().sum();
}

/// Condition (i): largest d with ||Dz|| >= d ||z||, namely 1/||D^{-1}||
/// in the l1-induced operator norm (max absolute column sum).
inline double check_condition_i(const WeightMatrix& D) {
  const auto& d = D.d();
  double max_col = 1.0 / d[0];
  for (int j = 1; j < D.dim(); ++j) {
    double col = 1.0 / d[j];
    if (D.shape() == WeightShape::cumulative_upper) col *= 2.0;
    max_col = std::max(max_col, col);
  }
  return 1.0 / max_col;
}

/// Evaluator for H(t) = D B(t) D^{-1}, the generator of the transformed
/// difference system.  Dense triple product with the closed-form inverse.
class HEvaluator {
 public:
  HEvaluator(ReducedSystem rs, WeightMatrix D)
      : rs_(std::move(rs)),
        D_(std::move(D)),
        dense_(D_.dense()),
        inv_(D_.inverse_dense()),
        bps_(rs_.breakpoints()) {
    if (D_.dim() != rs_.dim()) throw ModelError("make_H: weight/model dimension mismatch");
  }

  int dim() const { return rs_.dim(); }
  const WeightMatrix& weights() const { return D_; }
  const ReducedSystem& reduced() const { return rs_; }
  const std::vector<double>& breakpoints() const { return bps_; }

  Eigen::MatrixXd eval(double t, bool left_limit = false) const {
    return dense_ * rs_.B(t, left_limit) * inv_;
  }
  Eigen::MatrixXd operator()(double t) const { return eval(t); }

 private:
  ReducedSystem rs_;
  WeightMatrix D_;
  Eigen::MatrixXd dense_, inv_;
  std::vector<double> bps_;
};

inline HEvaluator make_H(ReducedSystem rs, WeightMatrix D) {
  return HEvaluator(std::move(rs), std::move(D));
}

/// Condition (ii) sample report: H(t) must be essentially nonnegative.
struct Cond2Report {
  bool pass = true;
  double min_offdiag = 0.0;
  double t_min = 0.0;
  int i_min = 0, j_min = 0;  // paper indices 1..S
  double horizon = 0.0;
  int samples = 0;
  static constexpr double tol = -1e-12;  // absorbs triple-product rounding

  std::string summary() const {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s (min offdiag %.6g at t=%.6g, entry (%d,%d), %d samples on [0,%g])",
                  pass ? "PASS" : "FAIL", min_offdiag, t_min, i_min, j_min, samples, horizon);
    return buf;
  }
};

inline Cond2Report check_condition_ii(const std::function<Eigen::MatrixXd(double)>& H,
                                      double horizon, int samples) {
  if (!(horizon > 0)) throw DomainError("check_condition_ii: horizon must be positive");
  if (samples < 2) throw DomainError("check_condition_ii: need at least 2 samples");
  Cond2Report rep;
  rep.horizon = horizon;
  rep.samples = samples;
  rep.min_offdiag = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    double t = horizon * static_cast<double>(s) / (samples - 1);
    Eigen::MatrixXd Ht = H(t);
    for (int i = 0; i < Ht.rows(); ++i)
      for (int j = 0; j < Ht.cols(); ++j) {
        if (i == j) continue;
        if (Ht(i, j) < rep.min_offdiag) {
          rep.min_offdiag = Ht(i, j);
          rep.t_min = t;
          rep.i_min = i + 1;
          rep.j_min = j + 1;
        }
      }
  }
  rep.pass = rep.min_offdiag >= Cond2Report::tol;
  return rep;
}

inline Cond2Report check_condition_ii(const HEvaluator& H, double horizon, int samples) {
  return check_condition_ii([&H](double t) { return H(t); }, horizon, samples);
}

/// Per-column decay rates alpha_k(t) = -sum_i h_ik(t) together with the
/// envelope rates beta_star = min_k alpha_k and beta_plus = max_k alpha_k
/// (h* = -beta_star, h_+ = -beta_plus).  alpha_k maps to column k+1 of H.
class AlphaProfile {
 public:
  AlphaProfile(std::function<Eigen::VectorXd(double, bool)> fn, std::vector<double> bps, int S)
      : fn_(std::move(fn)), bps_(std::move(bps)), S_(S) {}

  int size() const { return S_; }
  const std::vector<double>& breakpoints() const { return bps_; }

  Eigen::VectorXd alpha(double t, bool left_limit = false) const { return fn_(t, left_limit); }
  double beta_star(double t, bool left_limit = false) const { return fn_(t, left_limit).minCoeff(); }
  double beta_plus(double t, bool left_limit = false) const { return fn_(t, left_limit).maxCoeff(); }
  double h_star(double t) const { return -beta_star(t); }
  double h_plus(double t) const { return -beta_plus(t); }

 private:
  std::function<Eigen::VectorXd(double, bool)> fn_;
  std::vector<double> bps_;
  int S_;
};

/// Matrix route: negative column sums of D B(t) D^{-1}.  Authoritative.
inline AlphaProfile alpha_profile(ReducedSystem rs, WeightMatrix D) {
  HEvaluator H = make_H(std::move(rs), std::move(D));
  auto bps = H.breakpoints();
  int S = H.dim();
  return AlphaProfile(
      [H = std::move(H)](double t, bool left) -> Eigen::VectorXd {
        return -H.eval(t, left).colwise().sum();
      },
      std::move(bps), S);
}

/// Closed-form route, O(S) per evaluation; must agree with alpha_profile.
///
/// BDPC with cumulative-upper D (columns c = 1..S, alpha_k = column k+1;
/// conventions lambda_S == 0, mu_0 == xi_0 == 0):
///   alpha_c = lambda_{c-1} + mu_c + xi_c
///           - (d_{c+1}/d_c) lambda_c
///           - (d_{c-1}/d_c) (mu_{c-1} + xi_{c-1} - xi_c)
///           + (xi_c - xi_{c-1}) * sum_{m=1}^{c-2} d_m/d_c.
/// The catastrophe-difference terms vanish when xi is constant across
/// states, which recovers the familiar birth-death form
///   lambda_c-1 + mu_c - (d_{c+1}/d_c) lambda_c - (d_{c-1}/d_c) mu_{c-1}.
///
/// Absorbing with diagonal D:
///   alpha_k = -a_kk - sum_{i != k} (d_i/d_k) a_ik.
inline AlphaProfile alpha_closed_form(const ChainModel& m, const WeightMatrix& D) {
  const int S = m.S();
  if (D.dim() != S) throw ModelError("alpha_closed_form: weight/model dimension mismatch");

  if (m.kind() == ChainKind::bdpc && D.shape() == WeightShape::cumulative_upper) {
    Eigen::VectorXd d = D.d();
    ChainModel model = m;
    auto fn = [model, d, S](double t, bool left) -> Eigen::VectorXd {
      auto lam = [&](int k) { return (k >= 0 && k <= S - 1) ? model.lambda_rates()[k].eval(t, left) : 0.0; };
      auto mu = [&](int k) { return (k >= 1 && k <= S) ? model.mu_rates()[k - 1].eval(t, left) : 0.0; };
      auto xi = [&](int k) { return (k >= 1 && k <= S) ? model.xi_rates()[k - 1].eval(t, left) : 0.0; };
      Eigen::VectorXd a(S);
      for (int c = 1; c <= S; ++c) {
        double v = lam(c - 1) + mu(c) + xi(c);
        if (c <= S - 1) v -= (d[c] / d[c - 1]) * lam(c);
        if (c >= 2) {
          v -= (d[c - 2] / d[c - 1]) * (mu(c - 1) + xi(c - 1) - xi(c));
          double partial = 0.0;
          for (int mm = 1; mm <= c - 2; ++mm) partial += d[mm - 1] / d[c - 1];
          v += (xi(c) - xi(c - 1)) * partial;
        }
        a[c - 1] = v;
      }
      return a;
    };
    return AlphaProfile(std::move(fn), m.rate_breakpoints(), S);
  }

  if (m.kind() == ChainKind::absorbing && D.shape() == WeightShape::diagonal) {
    Eigen::VectorXd d = D.d();
    ChainModel model = m;
    auto fn = [model, d, S](double t, bool left) -> Eigen::VectorXd {
      Eigen::MatrixXd A = model.eval_A(t, left);
      Eigen::VectorXd a(S);
      for (int k = 1; k <= S; ++k) {
        double v = -A(k, k);
        for (int i = 1; i <= S; ++i)
          if (i != k) v -= (d[i - 1] / d[k - 1]) * A(i, k);
        a[k - 1] = v;
      }
      return a;
    };
    return AlphaProfile(std::move(fn), m.rate_breakpoints(), S);
  }

  throw ModelError("alpha_closed_form: supported pairs are bdpc/cumulative-upper and absorbing/diagonal");
}

}  // namespace ergo
