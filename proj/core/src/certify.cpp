#include "robustkf/certify.hpp"

#include <cmath>
#include <limits>

#include "robustkf/psd.hpp"
#include "robustkf/random.hpp"

namespace robustkf {

std::string to_string(CertificateVerdict verdict) {
  switch (verdict) {
    case CertificateVerdict::kNotRequested:
      return "not requested";
    case CertificateVerdict::kCertified:
      return "certified";
    case CertificateVerdict::kCertifiedRiskNeutral:
      return "certified (risk-neutral)";
    case CertificateVerdict::kToleranceExceedsBound:
      return "c exceeds c_max";
  }
  return "unknown";
}

std::vector<SpdMatrix> lower_bound_ramp(const StateSpaceModel& model, int q) {
  if (q < 0) {
    throw StructuralError("lower_bound_ramp: q must be >= 0");
  }
  std::vector<SpdMatrix> ramp;
  ramp.reserve(static_cast<std::size_t>(q) + 1);
  ramp.emplace_back(model.BBt());
  for (int t = 0; t < q; ++t) {
    ramp.push_back(riccati_step(model, ramp.back()));
  }
  return ramp;
}

int default_ramp_length(const StateSpaceModel& model) {
  constexpr int kCap = 200;
  constexpr double kPlateauTol = 1e-8;
  SpdMatrix current(model.BBt());
  for (int q = 0; q < kCap; ++q) {
    SpdMatrix next = riccati_step(model, current);
    if (max_eigenvalue(next.matrix() - current.matrix()) < kPlateauTol) {
      return q;
    }
    current = std::move(next);
  }
  return kCap;
}

ConvergenceCertificate compute_certificate(const StateSpaceModel& model,
                                           Eigen::Index N, int q,
                                           std::optional<double> user_c) {
  if (N < model.n()) {
    throw StructuralError("compute_certificate: N must be >= n");
  }
  if (q < 0) {
    throw StructuralError("compute_certificate: q must be >= 0");
  }
  if (user_c.has_value() && (*user_c < 0.0 || !std::isfinite(*user_c))) {
    throw DomainError("compute_certificate: tolerance must be a finite "
                      "nonnegative number");
  }

  ConvergenceCertificate cert;
  cert.N = N;
  cert.q = q;
  cert.q_tilde = static_cast<int>((q + N) / N);  // ceil((q+1)/N)

  const NBlockSystem sys = build_nblock(model, N);
  cert.phi_tilde = sys.phi_tilde;
  cert.phi = find_phi(sys);

  cert.ramp_bound = lower_bound_ramp(model, q).back();

  if (cert.phi * cert.ramp_bound.lambda_max() >= 1.0) {
    // The ramp bound already caps every admissible risk parameter below
    // phi, so no finite tolerance can break the contraction.
    cert.c_max = std::numeric_limits<double>::infinity();
  } else {
    cert.c_max = gamma(cert.phi, cert.ramp_bound);
  }

  // Contraction witness just below the threshold, where both Gramians are
  // still positive definite.
  const ThetaBlock witness = ThetaBlock::uniform(N, cert.phi * (1.0 - 1e-6));
  const DistortedGramians gram = distorted_gramians(sys, witness);
  const NBlockGains gains = nblock_gains(sys, witness);
  cert.contraction_coefficient_at_phi = contraction_bound(
      gains.closed_loop, SpdMatrix(gram.omega), SpdMatrix(gram.w));

  cert.user_c = user_c;
  if (!user_c.has_value()) {
    cert.verdict = CertificateVerdict::kNotRequested;
  } else if (*user_c == 0.0) {
    cert.verdict = CertificateVerdict::kCertifiedRiskNeutral;
  } else if (*user_c < cert.c_max) {
    cert.verdict = CertificateVerdict::kCertified;
  } else {
    cert.verdict = CertificateVerdict::kToleranceExceedsBound;
  }
  return cert;
}

namespace {

double estimate_decay(const std::vector<TraceStep>& steps) {
  // Geometric mean of the last few step-distance ratios.
  std::vector<double> distances;
  for (const auto& step : steps) {
    if (step.step_distance > 0.0) {
      distances.push_back(step.step_distance);
    }
  }
  if (distances.size() < 2) {
    return 0.0;
  }
  const std::size_t window = std::min<std::size_t>(distances.size(), 11);
  const double first = distances[distances.size() - window];
  const double last = distances.back();
  if (first <= 0.0 || last <= 0.0) {
    return 0.0;
  }
  return std::pow(last / first, 1.0 / static_cast<double>(window - 1));
}

}  // namespace

EmpiricalReport verify_certificate_empirically(
    const StateSpaceModel& model, const ConvergenceCertificate& certificate,
    double c, int trials, std::uint64_t seed, const IterateOptions& options) {
  if (trials < 1) {
    throw StructuralError("verify_certificate_empirically: trials must be "
                          ">= 1");
  }
  if (!(c > 0.0)) {
    throw DomainError("verify_certificate_empirically: tolerance must be "
                      "positive");
  }
  const Eigen::Index n = model.n();

  EmpiricalReport report;
  report.within_certified_range = c < certificate.c_max;
  report.trials.reserve(static_cast<std::size_t>(trials));

  for (int i = 0; i < trials; ++i) {
    SpdMatrix p0;
    if (i == 0) {
      p0 = SpdMatrix(1e-2 * Eigen::MatrixXd::Identity(n, n));
    } else if (i == 1) {
      p0 = SpdMatrix::Identity(n);
    } else if (i == 2) {
      p0 = SpdMatrix(1e2 * Eigen::MatrixXd::Identity(n, n));
    } else {
      GaussianSampler sampler(derive_seed(seed, static_cast<std::uint64_t>(i)));
      p0 = random_spd(sampler, n);
    }
    const FilterTrace trace = iterate_riccati(model, p0, c, options);
    TrialResult trial;
    trial.initial = p0;
    trial.converged = trace.verdict == IterationVerdict::kConverged;
    trial.steps = trace.steps.size() - 1;
    trial.limit = trace.steps.back().covariance;
    trial.final_step_distance = trace.steps.back().step_distance;
    trial.decay_estimate = estimate_decay(trace.steps);
    report.trials.push_back(std::move(trial));
  }

  report.all_converged = true;
  for (const auto& trial : report.trials) {
    report.all_converged = report.all_converged && trial.converged;
  }
  report.max_pairwise_distance = 0.0;
  for (std::size_t i = 0; i < report.trials.size(); ++i) {
    for (std::size_t j = i + 1; j < report.trials.size(); ++j) {
      report.max_pairwise_distance =
          std::max(report.max_pairwise_distance,
                   thompson_distance(report.trials[i].limit,
                                     report.trials[j].limit));
    }
  }
  report.common_limit = report.max_pairwise_distance < 1e-6;
  report.passed = report.all_converged && report.common_limit;
  return report;
}

}  // namespace robustkf
