#pragma once

#include <string>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "robustkf/spd_matrix.hpp"

namespace robustkf {

/// Nominal Gauss-Markov state-space model
///
///   x_{t+1} = A x_t + B u_t
///   y_t     = C x_t + D v_t
///
/// with u, v independent standard white Gaussian noises and x_0 ~ N(0, P0).
/// The constructor enforces dimension consistency only; the modelling
/// assumptions (BB^T, DD^T positive definite, reachability, observability,
/// P0 positive definite) are reported by validate_model.
class StateSpaceModel {
 public:
  /// Throws StructuralError on inconsistent dimensions or non-finite
  /// entries. P0 defaults to the identity.
  StateSpaceModel(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::MatrixXd c,
                  Eigen::MatrixXd d, std::optional<SpdMatrix> p0 = {});

  const Eigen::MatrixXd& A() const { return a_; }
  const Eigen::MatrixXd& B() const { return b_; }
  const Eigen::MatrixXd& C() const { return c_; }
  const Eigen::MatrixXd& D() const { return d_; }
  const SpdMatrix& P0() const { return p0_; }

  Eigen::Index n() const { return a_.rows(); }  // states
  Eigen::Index m() const { return b_.cols(); }  // process noise inputs
  Eigen::Index p() const { return c_.rows(); }  // observations

  const Eigen::MatrixXd& BBt() const { return bbt_; }
  const Eigen::MatrixXd& DDt() const { return ddt_; }

  /// C^T (DD^T)^{-1} C, the information added by one observation.
  /// Throws DomainError on first use if DD^T is singular.
  const Eigen::MatrixXd& observation_information() const;

 private:
  Eigen::MatrixXd a_, b_, c_, d_;
  SpdMatrix p0_;
  Eigen::MatrixXd bbt_, ddt_;
  Eigen::MatrixXd obs_info_;  // empty when DD^T is singular
  bool ddt_positive_definite_ = false;
};

struct ValidationCheck {
  std::string name;
  bool passed;
  double witness;  // min eigenvalue or rank, depending on the check
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool passed() const;
};

/// Number of singular values above (largest singular value * tol).
Eigen::Index numeric_rank(const Eigen::MatrixXd& mat, double tol = kRankTol);

/// [B AB ... A^{blocks-1}B], n x (blocks*m).
Eigen::MatrixXd reachability_matrix(const StateSpaceModel& model, int blocks);

/// Block rows C A^{blocks-1}, ..., CA, C from top to bottom
/// (newest sample first, matching the block stacking used everywhere here).
Eigen::MatrixXd observability_matrix(const StateSpaceModel& model, int blocks);

/// One entry per modelling assumption, with the computed witness.
ValidationReport validate_model(const StateSpaceModel& model);

}  // namespace robustkf
