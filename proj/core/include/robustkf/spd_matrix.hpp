#pragma once

#include <Eigen/Dense>

#include "robustkf/errors.hpp"

namespace robustkf {

/// A matrix is treated as positive definite iff
/// lambda_min > kDefinitenessTol * max(1, lambda_max).
inline constexpr double kDefinitenessTol = 1e-10;

/// Numeric rank threshold, relative to the largest singular value.
inline constexpr double kRankTol = 1e-10;

/// (X + X^T)/2. Exact fixed point: symmetrize(symmetrize(X)) == symmetrize(X).
Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& x);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Eigen::MatrixXd& symmetric);

/// Largest eigenvalue of a symmetric matrix.
double max_eigenvalue(const Eigen::MatrixXd& symmetric);

/// lambda_min > tol * max(1, lambda_max) for a symmetric matrix.
bool is_positive_definite(const Eigen::MatrixXd& symmetric,
                          double tol = kDefinitenessTol);

/// Symmetric matrix value with its eigendecomposition computed at
/// construction. Symmetry is enforced by construction; definiteness is a
/// query, not a constructor requirement, so the type also carries matrices
/// that are only positive semidefinite. Immutable after construction.
class SpdMatrix {
 public:
  SpdMatrix() = default;

  /// Symmetrizes `value`. Throws StructuralError if `value` is not square
  /// or has non-finite entries.
  explicit SpdMatrix(const Eigen::MatrixXd& value);

  static SpdMatrix Identity(Eigen::Index order);

  const Eigen::MatrixXd& matrix() const { return value_; }
  Eigen::Index order() const { return value_.rows(); }

  /// Eigenvalues in decreasing order; eigenvectors() columns match.
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }
  double lambda_max() const { return eigenvalues_(0); }
  double lambda_min() const { return eigenvalues_(order() - 1); }

  bool is_positive_definite(double tol = kDefinitenessTol) const;

  /// U f(Lambda) U^T for a scalar function applied to the eigenvalues.
  template <typename F>
  Eigen::MatrixXd apply_spectral(F&& f) const {
    Eigen::VectorXd mapped(eigenvalues_.size());
    for (Eigen::Index i = 0; i < mapped.size(); ++i) {
      mapped(i) = f(eigenvalues_(i));
    }
    return symmetrize(eigenvectors_ * mapped.asDiagonal() *
                      eigenvectors_.transpose());
  }

  /// Spectral inverse U Lambda^{-1} U^T. Throws DomainError unless positive
  /// definite.
  Eigen::MatrixXd inverse() const;

 private:
  Eigen::MatrixXd value_;
  Eigen::VectorXd eigenvalues_;   // decreasing
  Eigen::MatrixXd eigenvectors_;  // columns, matching eigenvalues_
};

}  // namespace robustkf
