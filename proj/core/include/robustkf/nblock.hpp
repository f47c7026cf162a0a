#pragma once

#include <optional>

#include <Eigen/Dense>

#include "robustkf/model.hpp"
#include "robustkf/riccati.hpp"

namespace robustkf {

/// Per-step risk parameters over one block of N steps, newest first:
/// entry i belongs to the step whose covariance is P_{kN+N-1-i}. The
/// expanded diagonal form is diag(thetas) (x) I_n.
class ThetaBlock {
 public:
  /// Entries must be nonnegative and finite. An all-zero block selects the
  /// undistorted limit in consumers; mixing zero and positive entries is
  /// rejected there.
  explicit ThetaBlock(Eigen::VectorXd thetas);

  static ThetaBlock uniform(Eigen::Index count, double value);

  const Eigen::VectorXd& thetas() const { return thetas_; }
  Eigen::Index count() const { return thetas_.size(); }
  double max_theta() const { return thetas_.maxCoeff(); }
  bool is_zero() const;

  /// diag(thetas) (x) I_state_dim, one scalar per block of state_dim rows.
  Eigen::MatrixXd as_diagonal(Eigen::Index state_dim) const;

  /// The expanded diagonal as a vector (thetas repeated state_dim times
  /// each).
  Eigen::VectorXd expanded(Eigen::Index state_dim) const;

 private:
  Eigen::VectorXd thetas_;
};

/// Structural matrices of the downsampled model of x_{kN}: block
/// reachability/observability, the stacked transition powers feeding the
/// zero observations, the block Hankel matrices of impulse-response
/// parameters, and the undistorted Gramian and spectral threshold derived
/// from them. Block stacking pairs the newest sample with the top block
/// row and the leftmost block column everywhere, and is assembled in
/// build_nblock only.
struct NBlockSystem {
  Eigen::Index N = 0;
  Eigen::Index n = 0, m = 0, p = 0;

  Eigen::MatrixXd a_pow_n;            // A^N
  Eigen::MatrixXd reachability;       // [B AB ... A^{N-1}B], n x Nm
  Eigen::MatrixXd observability;      // rows CA^{N-1} ... C, Np x n
  Eigen::MatrixXd transition_stack;   // rows A^{N-1} ... I, Nn x n
  Eigen::MatrixXd noise_input_diag;   // I_N (x) D, Np x Np'
  Eigen::MatrixXd markov_hankel;      // blocks (i,j) = C A^{j-i-1} B, j > i
  Eigen::MatrixXd state_hankel;       // blocks (i,j) = A^{j-i-1} B, j > i

  Eigen::MatrixXd obs_noise_cov;      // D_N D_N^T + H H^T (Krein (1,1) block)
  Eigen::MatrixXd residual_info0;     // I + H^T (D_N D_N^T)^{-1} H
  Eigen::MatrixXd residual_cov0;      // its inverse (residual covariance
                                      // in the undistorted limit)
  Eigen::MatrixXd coupling;           // transition_stack
                                      //   - L H^T (obs_noise_cov)^{-1} O
  SpdMatrix obs_gramian;              // O^T (obs_noise_cov)^{-1} O
  Eigen::MatrixXd state_residual_gram;  // L residual_cov0 L^T

  /// 1 / lambda_1(state_residual_gram); +infinity when the state Hankel
  /// block vanishes (N = 1). Uniform risk blocks strictly below this keep
  /// the residual covariance positive definite and the Schur complement
  /// negative definite.
  double phi_tilde = 0.0;
};

/// Assembles the downsampled system. N >= 1; certification requires N >= n,
/// enforced by callers. The guard caps N(p+n) and Nm at max_block_dim.
NBlockSystem build_nblock(const StateSpaceModel& model, Eigen::Index N,
                          Eigen::Index max_block_dim = 4096);

struct KreinGramian {
  Eigen::MatrixXd k;      // (Np+Nn) x (Np+Nn) indefinite Gramian
  Eigen::MatrixXd schur;  // S = -Theta^{-1} + L (residual_info0)^{-1} L^T
};

/// Krein-space Gramian of the stacked observation noise, and the Schur
/// complement of its (1,1) block. Requires every theta > 0. The Schur
/// complement is negative definite when Theta < phi_tilde I; definiteness
/// is reported by consumers, not enforced here.
KreinGramian krein_gramian(const NBlockSystem& sys, const ThetaBlock& theta);

struct DistortedGramians {
  Eigen::MatrixXd omega;         // distorted observability-like Gramian, n x n
  double omega_min_eigenvalue;
  bool omega_positive_definite;
  Eigen::MatrixXd w;             // distorted reachability-like Gramian, n x n
  double w_min_eigenvalue;
  bool w_positive_definite;
  SpdMatrix residual_cov;        // Nm x Nm residual noise covariance
};

/// Distorted Gramians for Theta < phi_tilde I:
///   residual_cov = [I + H^T (D_N D_N^T)^{-1} H - L^T Theta L]^{-1}
///   omega        = obs_gramian + coupling^T S^{-1} coupling
///   w            = reachability residual_cov reachability^T.
/// An all-zero block returns the undistorted limit exactly.
DistortedGramians distorted_gramians(const NBlockSystem& sys,
                                     const ThetaBlock& theta);

struct NBlockGains {
  Eigen::MatrixXd g;            // Nm x Np
  Eigen::MatrixXd g_aug;        // Nm x Nn, gain on the zero observations
  Eigen::MatrixXd closed_loop;  // n x n map driving the downsampled iteration
};

/// Noise-space projection gains [g g_aug] = [H^T L^T] K^{-1} and the
/// resulting closed_loop = A^N - reachability (g O + g_aug O_stack).
/// An all-zero block returns the undistorted limit (g_aug = 0).
NBlockGains nblock_gains(const NBlockSystem& sys, const ThetaBlock& theta);

/// Downsampled covariance mapping
///   P -> closed_loop [P^{-1} + omega]^{-1} closed_loop^T + w.
/// N consecutive scalar robust steps from P_{kN}, with their solved thetas
/// collected into the block, land on the same matrix.
SpdMatrix nblock_map(const NBlockSystem& sys, const SpdMatrix& p,
                     const ThetaBlock& theta);

/// lambda_min of the distorted observability-like Gramian at the uniform
/// block Theta = phi I (phi = 0 gives the undistorted Gramian).
double omega_min_eigenvalue(const NBlockSystem& sys, double phi);

/// Largest uniform level phi <= phi_tilde (1 - 1e-6) keeping the distorted
/// observability-like Gramian positive definite (lambda_min above
/// definiteness_tol, default 1e-12 lambda_max(obs_gramian)), found by
/// bisection; lambda_min is nonincreasing in phi. Throws CertificationError
/// if even the undistorted Gramian fails the tolerance.
double find_phi(const NBlockSystem& sys,
                std::optional<double> definiteness_tol = {});

/// Collects the solved risk parameters of trace steps kN ... kN+N-1 into the
/// block for downsampled step k (newest first). The trace must be a robust
/// run covering those steps.
ThetaBlock theta_block_from_trace(const FilterTrace& trace,
                                  Eigen::Index block_index, Eigen::Index N);

}  // namespace robustkf
