#pragma once

#include "robustkf/spd_matrix.hpp"

namespace robustkf {

/// Root-solve target: |gamma(theta, P) - c| <= kThetaSolveTol * max(1, c).
inline constexpr double kThetaSolveTol = 1e-12;

/// Tolerance budget evaluated at risk parameter theta against covariance P:
///
///   gamma(theta, P) = 1/2 [log det(I - theta P) + tr((I - theta P)^{-1}) - n]
///                   = 1/2 sum_i [log(1 - theta l_i) + 1/(1 - theta l_i) - 1]
///
/// over the eigenvalues l_i of P. Requires 0 <= theta < 1/lambda_1(P) and P
/// positive semidefinite; the eigenvalue form avoids the cancellation of the
/// determinant route near the boundary. Nonnegative, zero iff theta = 0.
double gamma(double theta, const SpdMatrix& p);

/// d gamma / d theta = 1/2 sum_i [-l_i/(1 - theta l_i) + l_i/(1 - theta l_i)^2]
/// (evaluated in the equivalent product form theta l_i^2 / (1 - theta l_i)^2).
/// Strictly positive for theta > 0, P != 0.
double gamma_dtheta(double theta, const SpdMatrix& p);

/// Time-varying risk sensitivity parameter: the unique theta in
/// (0, 1/lambda_1(P)) with gamma(theta, P) = c, bound to the covariance it
/// was solved against.
class RiskParameter {
 public:
  /// Validates 0 < theta < 1/lambda_1(solved_against) and
  /// gamma(theta, solved_against) = tolerance_c within the solve tolerance.
  RiskParameter(double theta, SpdMatrix solved_against, double tolerance_c);

  double theta() const { return theta_; }
  const SpdMatrix& solved_against() const { return solved_against_; }
  double tolerance_c() const { return tolerance_c_; }

 private:
  double theta_;
  SpdMatrix solved_against_;
  double tolerance_c_;
};

/// Solves gamma(theta, P) = c for theta by safeguarded bisection with Newton
/// polish. Requires c > 0 (the risk-neutral case c = 0 is a separate code
/// path in callers, never a root solve) and P positive definite.
RiskParameter solve_theta(double c, const SpdMatrix& p);

}  // namespace robustkf
