#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "robustkf/nblock.hpp"
#include "robustkf/riccati.hpp"

namespace robustkf {

enum class CertificateVerdict {
  kNotRequested,         // no tolerance supplied
  kCertified,            // 0 < c < c_max
  kCertifiedRiskNeutral,  // c = 0, labeled special case
  kToleranceExceedsBound  // c >= c_max: outside the sufficient bound
};

std::string to_string(CertificateVerdict verdict);

/// Everything needed to conclude that the distorted Riccati iteration
/// converges for tolerances below c_max: the block length N, the ramp
/// length q, the downsampled onset step q_tilde = ceil((q+1)/N), the
/// spectral thresholds, the ramp lower bound, and a contraction-coefficient
/// witness evaluated just below the threshold.
struct ConvergenceCertificate {
  Eigen::Index N = 0;
  int q = 0;
  int q_tilde = 0;
  double phi_tilde = 0.0;
  double phi = 0.0;       // largest uniform level keeping both Gramians PD
  SpdMatrix ramp_bound;   // q-th risk-neutral iterate from BB^T
  double c_max = 0.0;     // gamma(phi, ramp_bound)
  double contraction_coefficient_at_phi = 0.0;  // < 1
  std::optional<double> user_c;
  CertificateVerdict verdict = CertificateVerdict::kNotRequested;
};

/// Risk-neutral ramp from BB^T: q+1 matrices, nondecreasing in the Loewner
/// order; a uniform lower bound for any covariance iteration after q+1
/// steps.
std::vector<SpdMatrix> lower_bound_ramp(const StateSpaceModel& model, int q);

/// Smallest q with lambda_1(ramp[q+1] - ramp[q]) < 1e-8, capped at 200; the
/// ramp approaches the risk-neutral fixed point, so c_max plateaus beyond
/// this.
int default_ramp_length(const StateSpaceModel& model);

/// Builds the block system, finds the spectral thresholds and the ramp
/// bound, and evaluates c_max = gamma(phi, ramp_bound). Requires N >= n and
/// q >= 0. The contraction witness is evaluated at the uniform block
/// phi (1 - 1e-6), where both Gramians are still positive definite.
ConvergenceCertificate compute_certificate(const StateSpaceModel& model,
                                           Eigen::Index N, int q,
                                           std::optional<double> user_c = {});

struct TrialResult {
  SpdMatrix initial;
  bool converged = false;
  std::size_t steps = 0;
  SpdMatrix limit;
  double final_step_distance = 0.0;
  double decay_estimate = 0.0;  // geometric mean of late step-distance ratios
};

struct EmpiricalReport {
  std::vector<TrialResult> trials;
  bool all_converged = false;
  double max_pairwise_distance = 0.0;  // Thompson distance between limits
  bool common_limit = false;           // max pairwise < 1e-6
  bool within_certified_range = false;  // c < c_max
  bool passed = false;                 // all converged to a common limit
};

/// Closes the loop on a certificate: runs the iteration from `trials`
/// initial conditions (1e-2 I, I, 1e2 I, then seeded random SPD) and checks
/// that all runs converge to a common fixed point. For c >= c_max this is a
/// report, not a guarantee either way.
EmpiricalReport verify_certificate_empirically(
    const StateSpaceModel& model, const ConvergenceCertificate& certificate,
    double c, int trials, std::uint64_t seed = 20240901,
    const IterateOptions& options = {});

}  // namespace robustkf
