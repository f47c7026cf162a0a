#pragma once

#include <Eigen/Dense>

#include "robustkf/spd_matrix.hpp"

namespace robustkf {

/// Distances below this (in log-spectral terms) snap to exactly zero, so
/// fixed-point detection is stable.
inline constexpr double kThompsonZeroTol = 1e-12;

/// Principal square root U Lambda^{1/2} U^T. Throws DomainError unless
/// positive definite.
SpdMatrix spd_sqrt(const SpdMatrix& p);

/// Matrix logarithm U log(Lambda) U^T (symmetric, not necessarily
/// definite). Throws DomainError unless positive definite.
Eigen::MatrixXd spd_log(const SpdMatrix& p);

/// Thompson part metric
///   d_T(P, Q) = ||log(P^{-1/2} Q P^{-1/2})||_2
///             = max{log lambda_1(P^{-1}Q), log lambda_1(Q^{-1}P)},
/// evaluated through the symmetric-definite pencil (Q, P). Returns exactly
/// 0 below kThompsonZeroTol.
double thompson_distance(const SpdMatrix& p, const SpdMatrix& q);

/// Upper bound on the Lipschitz constant, under the Thompson metric, of the
/// Riccati-like map f(P) = M [P^{-1} + Omega]^{-1} M^T + W:
///
///   (sqrt(g) / (1 + sqrt(1 + g)))^2,   g = lambda_1(Omega^{-1} M^T W^{-1} M),
///
/// with g evaluated as lambda_1 of the symmetric congruence
/// Omega^{-1/2} M^T W^{-1} M Omega^{-1/2}. Always < 1.
double contraction_bound(const Eigen::MatrixXd& m, const SpdMatrix& omega,
                         const SpdMatrix& w);

/// Loewner-order test: lambda_min(P - Q) >= -slack.
bool loewner_geq(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q,
                 double slack = 0.0);

/// Default slack for Loewner checks in sampled property suites:
/// 1e-8 * max(1, ||p||_2).
double default_loewner_slack(const Eigen::MatrixXd& p);

}  // namespace robustkf
