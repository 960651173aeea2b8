#pragma once

#include <Eigen/Dense>
#include <utility>

#include "ergo/chain_model.hpp"
#include "ergo/errors.hpp"
#include "ergo/numutil.hpp"

namespace ergo {

/// The S-dimensional reduced system dz/dt = B(t) z + f(t) obtained by
/// eliminating p_0 = 1 - sum(z) from the forward equations:
///   b_ij(t) = a_ij(t) - a_i0(t),   f_i(t) = a_i0(t),   i,j = 1..S.
/// For absorbing chains f vanishes and B is the principal submatrix of A.
/// B and f are evaluators, not grids; callers choose their own sampling.
class ReducedSystem {
 public:
  explicit ReducedSystem(ChainModel m) : model_(std::move(m)) {}

  int dim() const { return model_.S(); }
  const ChainModel& model() const { return model_; }

  Eigen::MatrixXd B(double t, bool left_limit = false) const {
    const int S = model_.S();
    Eigen::MatrixXd A = model_.eval_A(t, left_limit);
    Eigen::MatrixXd out = A.block(1, 1, S, S);
    out.colwise() -= A.col(0).segment(1, S);
    return out;
  }

  Eigen::VectorXd f(double t, bool left_limit = false) const {
    const int S = model_.S();
    return model_.eval_A(t, left_limit).col(0).segment(1, S);
  }

  std::vector<double> breakpoints() const { return model_.rate_breakpoints(); }

 private:
  ChainModel model_;
};

inline ReducedSystem reduce(ChainModel m) { return ReducedSystem(std::move(m)); }

namespace detail {
constexpr double kSimplexEps = 1e-10;

inline double compensated_total(const Eigen::VectorXd& v) {
  CompensatedSum s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s.add(v[i]);
  return s.value();
}
}  // namespace detail

/// Drop the p_0 coordinate of a stochastic vector.
inline Eigen::VectorXd p_to_z(const Eigen::VectorXd& p) {
  if (p.size() < 2) throw DomainError("p_to_z: need at least two states");
  if (p.minCoeff() < -detail::kSimplexEps)
    throw DomainError("p_to_z: negative probability entry");
  if (std::abs(detail::compensated_total(p) - 1.0) > detail::kSimplexEps)
    throw DomainError("p_to_z: probabilities must sum to 1");
  return p.tail(p.size() - 1);
}

/// Rebuild the full distribution (1 - sum(z), z).  Entries in [-eps, 0) are
/// clamped to zero; only the p_0 coordinate re-absorbs the difference.
inline Eigen::VectorXd z_to_p(const Eigen::VectorXd& z) {
  if (z.minCoeff() < -detail::kSimplexEps)
    throw DomainError("z_to_p: entry below -1e-10");
  Eigen::VectorXd zc = z.cwiseMax(0.0);
  double total = detail::compensated_total(zc);
  if (total > 1.0 + detail::kSimplexEps)
    throw DomainError("z_to_p: sum exceeds 1");
  Eigen::VectorXd p(z.size() + 1);
  p[0] = 1.0 - total;
  p.tail(z.size()) = zc;
  return p;
}

}  // namespace ergo
