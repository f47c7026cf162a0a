#include "robustkf/riccati.hpp"

#include <Eigen/Cholesky>

#include <cmath>

#include "robustkf/psd.hpp"
#include "robustkf/random.hpp"

namespace robustkf {

namespace {

void require_covariance(const SpdMatrix& p, const StateSpaceModel& model,
                        const char* who) {
  if (p.order() != model.n()) {
    throw StructuralError(std::string(who) + ": covariance order mismatch");
  }
  if (!p.is_positive_definite()) {
    throw DomainError(std::string(who) +
                      ": covariance is not positive definite");
  }
}

}  // namespace

SpdMatrix rs_riccati_step(const StateSpaceModel& model, const SpdMatrix& p,
                          double theta) {
  require_covariance(p, model, "rs_riccati_step");
  if (theta < 0.0 || !std::isfinite(theta)) {
    throw DomainError("rs_riccati_step: theta must be nonnegative");
  }
  // Inner matrix P^{-1} + C^T(DD^T)^{-1}C - theta I, assembled from the
  // eigendecomposition of P.
  Eigen::MatrixXd inner =
      symmetrize(p.inverse() + model.observation_information());
  inner.diagonal().array() -= theta;
  const Eigen::LLT<Eigen::MatrixXd> llt(inner);
  if (llt.info() != Eigen::Success) {
    throw DomainError("rs_riccati_step: risk-sensitive breakdown, the "
                      "distorted information matrix left the cone");
  }
  return SpdMatrix(model.A() * llt.solve(model.A().transpose()) +
                   model.BBt());
}

SpdMatrix riccati_step(const StateSpaceModel& model, const SpdMatrix& p) {
  return rs_riccati_step(model, p, 0.0);
}

RobustStepResult robust_riccati_step(const StateSpaceModel& model,
                                     const SpdMatrix& p, double c) {
  require_covariance(p, model, "robust_riccati_step");
  RiskParameter theta = solve_theta(c, p);
  SpdMatrix next = rs_riccati_step(model, p, theta.theta());
  return {std::move(next), std::move(theta)};
}

GainPair robust_gain(const StateSpaceModel& model, const SpdMatrix& p,
                     double theta) {
  require_covariance(p, model, "robust_gain");
  if (theta < 0.0 || theta * p.lambda_max() >= 1.0) {
    throw DomainError("robust_gain: theta outside [0, 1/lambda_1(P))");
  }
  // (P^{-1} - theta I)^{-1} = U diag(l/(1 - theta l)) U^T.
  const Eigen::MatrixXd distorted = p.apply_spectral([theta](double lambda) {
    return lambda / (1.0 - theta * lambda);
  });
  const Eigen::MatrixXd cross = distorted * model.C().transpose();  // n x p
  SpdMatrix innovation_cov(model.C() * cross + model.DDt());
  const Eigen::LLT<Eigen::MatrixXd> llt(innovation_cov.matrix());
  if (llt.info() != Eigen::Success) {
    throw NumericError("robust_gain: innovation covariance is not positive "
                       "definite");
  }
  Eigen::MatrixXd gain =
      model.A() * llt.solve(cross.transpose()).transpose();
  return {std::move(gain), std::move(innovation_cov)};
}

GainPair robust_gain(const StateSpaceModel& model, const SpdMatrix& p,
                     const RiskParameter& theta) {
  const Eigen::MatrixXd& solved = theta.solved_against().matrix();
  if (solved.rows() != p.order() ||
      (solved - p.matrix()).lpNorm<Eigen::Infinity>() >
          1e-12 * std::max(1.0, p.matrix().lpNorm<Eigen::Infinity>())) {
    throw StructuralError("robust_gain: risk parameter was solved against a "
                          "different covariance");
  }
  return robust_gain(model, p, theta.theta());
}

FilterStepResult filter_step(const StateSpaceModel& model,
                             const FilterState& state, double c,
                             const Eigen::VectorXd& y) {
  require_covariance(state.covariance, model, "filter_step");
  if (y.size() != model.p()) {
    throw StructuralError("filter_step: observation dimension mismatch");
  }
  if (state.xhat.size() != model.n()) {
    throw StructuralError("filter_step: estimate dimension mismatch");
  }
  if (c < 0.0) {
    throw DomainError("filter_step: tolerance budget must be nonnegative");
  }

  std::optional<RiskParameter> theta;
  if (c > 0.0) {
    theta = solve_theta(c, state.covariance);
  }
  const double theta_value = theta ? theta->theta() : 0.0;
  GainPair gains = robust_gain(model, state.covariance, theta_value);

  FilterStepResult result;
  result.innovation = y - model.C() * state.xhat;
  result.next.xhat = model.A() * state.xhat + gains.gain * result.innovation;
  result.next.covariance =
      rs_riccati_step(model, state.covariance, theta_value);
  result.theta = std::move(theta);
  result.gain = std::move(gains.gain);
  result.innovation_cov = std::move(gains.innovation_cov);
  return result;
}

FilterTrace iterate_riccati(const StateSpaceModel& model, const SpdMatrix& p0,
                            double c, const IterateOptions& options) {
  require_covariance(p0, model, "iterate_riccati");
  if (c < 0.0) {
    throw DomainError("iterate_riccati: tolerance budget must be "
                      "nonnegative");
  }
  FilterTrace trace;
  trace.c = c;
  trace.steps.reserve(std::min<std::size_t>(options.max_steps + 1, 1024));

  SpdMatrix current = p0;
  double distance = 0.0;
  for (std::size_t t = 0;; ++t) {
    std::optional<RiskParameter> theta;
    if (c > 0.0) {
      theta = solve_theta(c, current);
    }
    const double theta_value = theta ? theta->theta() : 0.0;
    GainPair gains = robust_gain(model, current, theta_value);
    trace.steps.push_back({current, std::move(theta), std::move(gains.gain),
                           std::move(gains.innovation_cov), std::nullopt,
                           distance});
    if (t >= 1 && distance < options.dist_tol) {
      trace.verdict = IterationVerdict::kConverged;
      trace.converged_at = t;
      break;
    }
    if (t == options.max_steps) {
      trace.verdict = IterationVerdict::kMaxStepsReached;
      break;
    }
    SpdMatrix next = rs_riccati_step(model, current, theta_value);
    distance = thompson_distance(next, current);
    current = std::move(next);
  }
  return trace;
}

FilterTrace run_filter(const StateSpaceModel& model, const SpdMatrix& p0,
                       double c, const Eigen::MatrixXd& observations) {
  require_covariance(p0, model, "run_filter");
  if (observations.cols() != model.p()) {
    throw StructuralError("run_filter: observations must have p columns");
  }
  FilterTrace trace;
  trace.c = c;
  trace.steps.reserve(static_cast<std::size_t>(observations.rows()) + 1);

  FilterState state{Eigen::VectorXd::Zero(model.n()), p0};
  double distance = 0.0;
  for (Eigen::Index t = 0; t < observations.rows(); ++t) {
    FilterStepResult step =
        filter_step(model, state, c, observations.row(t).transpose());
    trace.steps.push_back({state.covariance, std::move(step.theta),
                           std::move(step.gain),
                           std::move(step.innovation_cov), state.xhat,
                           distance});
    distance = thompson_distance(step.next.covariance, state.covariance);
    state = std::move(step.next);
  }
  // Final row: the propagated state, with the gain it would use next.
  std::optional<RiskParameter> theta;
  if (c > 0.0) {
    theta = solve_theta(c, state.covariance);
  }
  GainPair gains =
      robust_gain(model, state.covariance, theta ? theta->theta() : 0.0);
  trace.steps.push_back({state.covariance, std::move(theta),
                         std::move(gains.gain),
                         std::move(gains.innovation_cov), state.xhat,
                         distance});
  trace.verdict = IterationVerdict::kMaxStepsReached;
  return trace;
}

Simulation simulate(const StateSpaceModel& model, std::size_t steps,
                    std::uint64_t seed) {
  const Eigen::Index n = model.n();
  const Eigen::Index m = model.m();
  const Eigen::Index p = model.p();
  const Eigen::Index pprime = model.D().cols();

  Simulation sim;
  sim.states.resize(static_cast<Eigen::Index>(steps), n);
  sim.observations.resize(static_cast<Eigen::Index>(steps), p);

  GaussianSampler sampler(seed);
  const Eigen::LLT<Eigen::MatrixXd> p0_llt(model.P0().matrix());
  if (p0_llt.info() != Eigen::Success) {
    throw DomainError("simulate: P0 is not positive definite");
  }
  Eigen::VectorXd x = p0_llt.matrixL() * sampler.vector(n);
  for (std::size_t t = 0; t < steps; ++t) {
    const Eigen::Index row = static_cast<Eigen::Index>(t);
    sim.states.row(row) = x.transpose();
    sim.observations.row(row) =
        (model.C() * x + model.D() * sampler.vector(pprime)).transpose();
    x = model.A() * x + model.B() * sampler.vector(m);
  }
  return sim;
}

}  // namespace robustkf
