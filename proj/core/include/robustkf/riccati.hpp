#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "robustkf/gamma.hpp"
#include "robustkf/model.hpp"

namespace robustkf {

/// Risk-neutral Riccati mapping
///   r(P) = A [P^{-1} + C^T (DD^T)^{-1} C]^{-1} A^T + BB^T.
/// Positive definite for any positive definite P since BB^T > 0.
SpdMatrix riccati_step(const StateSpaceModel& model, const SpdMatrix& p);

/// Risk-sensitive mapping with constant parameter theta >= 0:
///   r_theta(P) = A [P^{-1} + C^T (DD^T)^{-1} C - theta I]^{-1} A^T + BB^T.
/// Throws DomainError ("risk-sensitive breakdown") when the bracketed matrix
/// leaves the positive definite cone, which can happen for theta too large.
SpdMatrix rs_riccati_step(const StateSpaceModel& model, const SpdMatrix& p,
                          double theta);

struct RobustStepResult {
  SpdMatrix covariance;  // next prediction-error covariance
  RiskParameter theta;   // solved against the input covariance
};

/// One step of the distorted Riccati iteration: solves gamma(theta, P) = c
/// and applies the risk-sensitive mapping with that theta. Feasible for any
/// positive definite P because theta < 1/lambda_1(P); the result dominates
/// BB^T.
RobustStepResult robust_riccati_step(const StateSpaceModel& model,
                                     const SpdMatrix& p, double c);

struct GainPair {
  Eigen::MatrixXd gain;     // K, n x p
  SpdMatrix innovation_cov;  // R_nu = C (P^{-1} - theta I)^{-1} C^T + DD^T
};

/// Predictor gain K = A (P^{-1} - theta I)^{-1} C^T R_nu^{-1}. theta = 0
/// reduces to the standard Kalman predictor gain.
GainPair robust_gain(const StateSpaceModel& model, const SpdMatrix& p,
                     double theta);

/// Same, but checks that the risk parameter was solved against this exact
/// covariance; a mismatch is a contract violation.
GainPair robust_gain(const StateSpaceModel& model, const SpdMatrix& p,
                     const RiskParameter& theta);

struct FilterState {
  Eigen::VectorXd xhat;
  SpdMatrix covariance;
};

struct FilterStepResult {
  FilterState next;
  std::optional<RiskParameter> theta;  // nullopt on the risk-neutral path
  Eigen::MatrixXd gain;
  SpdMatrix innovation_cov;
  Eigen::VectorXd innovation;
};

/// One measurement-driven step:
///   nu = y - C xhat,  xhat+ = A xhat + K nu,  P+ = robust step of P.
/// c = 0 runs the risk-neutral path.
FilterStepResult filter_step(const StateSpaceModel& model,
                             const FilterState& state, double c,
                             const Eigen::VectorXd& y);

struct TraceStep {
  SpdMatrix covariance;                // P_t
  std::optional<RiskParameter> theta;  // solved against P_t; nullopt if c = 0
  Eigen::MatrixXd gain;                // K_t
  SpdMatrix innovation_cov;            // R_nu at step t
  std::optional<Eigen::VectorXd> xhat;  // present when observations are used
  double step_distance;  // d_T(P_t, P_{t-1}); 0 at t = 0
};

enum class IterationVerdict { kConverged, kMaxStepsReached };

struct FilterTrace {
  std::vector<TraceStep> steps;
  IterationVerdict verdict = IterationVerdict::kMaxStepsReached;
  std::optional<std::size_t> converged_at;
  double c = 0.0;
};

struct IterateOptions {
  std::size_t max_steps = 10000;
  double dist_tol = 1e-10;
};

/// Drives the covariance iteration (robust for c > 0, risk-neutral for
/// c = 0) until consecutive iterates are closer than dist_tol in the
/// Thompson metric. Negative c is rejected.
FilterTrace iterate_riccati(const StateSpaceModel& model, const SpdMatrix& p0,
                            double c, const IterateOptions& options = {});

/// Runs the filter over observation rows (one row per step, p columns),
/// starting from xhat = 0. The trace carries one step per observation plus
/// a final row holding the propagated state.
FilterTrace run_filter(const StateSpaceModel& model, const SpdMatrix& p0,
                       double c, const Eigen::MatrixXd& observations);

struct Simulation {
  Eigen::MatrixXd states;        // steps x n, row t = x_t
  Eigen::MatrixXd observations;  // steps x p, row t = y_t
};

/// Samples a trajectory of the nominal model: x_0 ~ N(0, P0),
/// x_{t+1} = A x_t + B u_t, y_t = C x_t + D v_t with independent standard
/// normal u, v. Bit-identical for a given seed.
Simulation simulate(const StateSpaceModel& model, std::size_t steps,
                    std::uint64_t seed);

}  // namespace robustkf
