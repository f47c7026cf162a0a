#include "robustkf/psd.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>

namespace robustkf {

namespace {

void require_positive_definite(const SpdMatrix& p, const char* who) {
  if (!p.is_positive_definite()) {
    throw DomainError(std::string(who) + ": matrix is not positive definite");
  }
}

}  // namespace

SpdMatrix spd_sqrt(const SpdMatrix& p) {
  require_positive_definite(p, "spd_sqrt");
  return SpdMatrix(p.apply_spectral([](double lambda) {
    return std::sqrt(lambda);
  }));
}

Eigen::MatrixXd spd_log(const SpdMatrix& p) {
  require_positive_definite(p, "spd_log");
  return p.apply_spectral([](double lambda) { return std::log(lambda); });
}

double thompson_distance(const SpdMatrix& p, const SpdMatrix& q) {
  if (p.order() != q.order()) {
    throw StructuralError("thompson_distance: order mismatch");
  }
  require_positive_definite(p, "thompson_distance");
  require_positive_definite(q, "thompson_distance");
  // Eigenvalues of P^{-1}Q through the symmetric-definite pencil Qx = l Px;
  // same spectrum as the congruence P^{-1/2} Q P^{-1/2}.
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(
      q.matrix(), p.matrix(), Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (ges.info() != Eigen::Success) {
    throw NumericError("thompson_distance: pencil eigensolve failed");
  }
  const Eigen::VectorXd& lambda = ges.eigenvalues();  // increasing
  const double lo = lambda(0);
  const double hi = lambda(lambda.size() - 1);
  if (!(lo > 0.0)) {
    throw NumericError("thompson_distance: pencil produced a nonpositive "
                       "eigenvalue");
  }
  const double dist = std::max(std::log(hi), -std::log(lo));
  if (dist < kThompsonZeroTol) {
    return 0.0;
  }
  return dist;
}

double contraction_bound(const Eigen::MatrixXd& m, const SpdMatrix& omega,
                         const SpdMatrix& w) {
  if (m.rows() != m.cols()) {
    throw StructuralError("contraction_bound: M must be square");
  }
  if (omega.order() != m.rows() || w.order() != m.rows()) {
    throw StructuralError("contraction_bound: order mismatch");
  }
  require_positive_definite(omega, "contraction_bound");
  require_positive_definite(w, "contraction_bound");
  const Eigen::MatrixXd omega_inv_sqrt =
      omega.apply_spectral([](double lambda) {
        return 1.0 / std::sqrt(lambda);
      });
  const Eigen::LLT<Eigen::MatrixXd> w_llt(w.matrix());
  const Eigen::MatrixXd winv_m = w_llt.solve(m);
  const Eigen::MatrixXd congruence =
      symmetrize(omega_inv_sqrt * m.transpose() * winv_m * omega_inv_sqrt);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(congruence,
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericError("contraction_bound: eigendecomposition failed");
  }
  const double g = std::max(0.0, es.eigenvalues()(congruence.rows() - 1));
  const double r = std::sqrt(g) / (1.0 + std::sqrt(1.0 + g));
  return r * r;
}

bool loewner_geq(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q,
                 double slack) {
  if (p.rows() != q.rows() || p.cols() != q.cols() || p.rows() != p.cols()) {
    throw StructuralError("loewner_geq: operands must be square and of equal "
                          "order");
  }
  return min_eigenvalue(symmetrize(p - q)) >= -slack;
}

double default_loewner_slack(const Eigen::MatrixXd& p) {
  return 1e-8 * std::max(1.0, p.operatorNorm());
}

}  // namespace robustkf
