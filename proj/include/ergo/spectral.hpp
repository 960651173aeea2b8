#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ergo/errors.hpp"

namespace ergo {

/// Decay parameter of a homogeneous reduced generator: the smallest real
/// part among the eigenvalues of -B.  Computed by Schur/QR iteration
/// (Eigen::EigenSolver); deliberately independent of the weighted-norm
/// bound machinery so the two can cross-check each other.
inline double spectral_gap_of(const Eigen::MatrixXd& B) {
  if (B.rows() != B.cols() || B.rows() == 0) throw DomainError("spectral_gap_of: square matrix required");
  Eigen::EigenSolver<Eigen::MatrixXd> es(-B, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw SolverError("eigenvalue oracle did not converge");
  return es.eigenvalues().real().minCoeff();
}

}  // namespace ergo
