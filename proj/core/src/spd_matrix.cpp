#include "robustkf/spd_matrix.hpp"

#include <Eigen/Eigenvalues>

namespace robustkf {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& x) {
  return 0.5 * (x + x.transpose());
}

double min_eigenvalue(const Eigen::MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(symmetric),
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericError("min_eigenvalue: eigendecomposition failed");
  }
  return es.eigenvalues()(0);
}

double max_eigenvalue(const Eigen::MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(symmetric),
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericError("max_eigenvalue: eigendecomposition failed");
  }
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

bool is_positive_definite(const Eigen::MatrixXd& symmetric, double tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(symmetric),
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericError("is_positive_definite: eigendecomposition failed");
  }
  const Eigen::Index n = es.eigenvalues().size();
  const double lambda_min = es.eigenvalues()(0);
  const double lambda_max = es.eigenvalues()(n - 1);
  return lambda_min > tol * std::max(1.0, lambda_max);
}

SpdMatrix::SpdMatrix(const Eigen::MatrixXd& value) {
  if (value.rows() != value.cols()) {
    throw StructuralError("SpdMatrix: matrix must be square");
  }
  if (!value.allFinite()) {
    throw StructuralError("SpdMatrix: matrix has non-finite entries");
  }
  value_ = symmetrize(value);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(value_);
  if (es.info() != Eigen::Success) {
    throw NumericError("SpdMatrix: eigendecomposition failed");
  }
  eigenvalues_ = es.eigenvalues().reverse();
  eigenvectors_ = es.eigenvectors().rowwise().reverse();
}

SpdMatrix SpdMatrix::Identity(Eigen::Index order) {
  return SpdMatrix(Eigen::MatrixXd::Identity(order, order));
}

bool SpdMatrix::is_positive_definite(double tol) const {
  if (order() == 0) {
    return false;
  }
  return lambda_min() > tol * std::max(1.0, lambda_max());
}

Eigen::MatrixXd SpdMatrix::inverse() const {
  if (!is_positive_definite()) {
    throw DomainError("SpdMatrix::inverse: matrix is not positive definite");
  }
  return apply_spectral([](double lambda) { return 1.0 / lambda; });
}

}  // namespace robustkf
