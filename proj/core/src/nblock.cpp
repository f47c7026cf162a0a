#include "robustkf/nblock.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace robustkf {

namespace {

void require_block(const NBlockSystem& sys, const ThetaBlock& theta,
                   const char* who) {
  if (theta.count() != sys.N) {
    throw StructuralError(std::string(who) + ": risk block length must be N");
  }
}

// Positive entries only (the all-zero limit is dispatched before this).
void require_positive_block(const ThetaBlock& theta, const char* who) {
  if (theta.thetas().minCoeff() <= 0.0) {
    throw DomainError(std::string(who) +
                      ": risk block must be entirely positive (or entirely "
                      "zero for the undistorted limit)");
  }
}

}  // namespace

ThetaBlock::ThetaBlock(Eigen::VectorXd thetas) : thetas_(std::move(thetas)) {
  if (thetas_.size() == 0) {
    throw StructuralError("ThetaBlock: empty");
  }
  if (!thetas_.allFinite() || thetas_.minCoeff() < 0.0) {
    throw StructuralError("ThetaBlock: entries must be finite and "
                          "nonnegative");
  }
}

ThetaBlock ThetaBlock::uniform(Eigen::Index count, double value) {
  return ThetaBlock(Eigen::VectorXd::Constant(count, value));
}

bool ThetaBlock::is_zero() const { return thetas_.maxCoeff() == 0.0; }

Eigen::VectorXd ThetaBlock::expanded(Eigen::Index state_dim) const {
  Eigen::VectorXd diag(thetas_.size() * state_dim);
  for (Eigen::Index i = 0; i < thetas_.size(); ++i) {
    diag.segment(i * state_dim, state_dim).setConstant(thetas_(i));
  }
  return diag;
}

Eigen::MatrixXd ThetaBlock::as_diagonal(Eigen::Index state_dim) const {
  return expanded(state_dim).asDiagonal();
}

NBlockSystem build_nblock(const StateSpaceModel& model, Eigen::Index N,
                          Eigen::Index max_block_dim) {
  if (N < 1) {
    throw StructuralError("build_nblock: N must be >= 1");
  }
  const Eigen::Index n = model.n();
  const Eigen::Index m = model.m();
  const Eigen::Index p = model.p();
  if (N * (n + p) > max_block_dim || N * m > max_block_dim) {
    std::ostringstream os;
    os << "build_nblock: block dimension " << N * (n + p) << " exceeds cap "
       << max_block_dim;
    throw StructuralError(os.str());
  }

  NBlockSystem sys;
  sys.N = N;
  sys.n = n;
  sys.m = m;
  sys.p = p;

  std::vector<Eigen::MatrixXd> a_pow(static_cast<std::size_t>(N) + 1);
  a_pow[0] = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index k = 1; k <= N; ++k) {
    a_pow[k] = model.A() * a_pow[k - 1];
  }
  sys.a_pow_n = a_pow[N];

  sys.reachability.resize(n, N * m);
  for (Eigen::Index j = 0; j < N; ++j) {
    sys.reachability.middleCols(j * m, m) = a_pow[j] * model.B();
  }

  sys.observability.resize(N * p, n);
  sys.transition_stack.resize(N * n, n);
  for (Eigen::Index i = 0; i < N; ++i) {
    // Newest block on top: row block i carries the power N-1-i.
    sys.observability.middleRows(i * p, p) = model.C() * a_pow[N - 1 - i];
    sys.transition_stack.middleRows(i * n, n) = a_pow[N - 1 - i];
  }

  const Eigen::Index pprime = model.D().cols();
  sys.noise_input_diag = Eigen::MatrixXd::Zero(N * p, N * pprime);
  for (Eigen::Index i = 0; i < N; ++i) {
    sys.noise_input_diag.block(i * p, i * pprime, p, pprime) = model.D();
  }

  sys.markov_hankel = Eigen::MatrixXd::Zero(N * p, N * m);
  sys.state_hankel = Eigen::MatrixXd::Zero(N * n, N * m);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = i + 1; j < N; ++j) {
      const Eigen::MatrixXd lt = a_pow[j - i - 1] * model.B();
      sys.state_hankel.block(i * n, j * m, n, m) = lt;
      sys.markov_hankel.block(i * p, j * m, p, m) = model.C() * lt;
    }
  }

  sys.obs_noise_cov =
      symmetrize(sys.noise_input_diag * sys.noise_input_diag.transpose() +
                 sys.markov_hankel * sys.markov_hankel.transpose());
  const Eigen::LLT<Eigen::MatrixXd> obs_noise_llt(sys.obs_noise_cov);
  if (obs_noise_llt.info() != Eigen::Success) {
    throw DomainError("build_nblock: stacked observation noise covariance "
                      "is not positive definite (is DD^T singular?)");
  }

  const Eigen::MatrixXd dn_dnt = symmetrize(
      sys.noise_input_diag * sys.noise_input_diag.transpose());
  const Eigen::LLT<Eigen::MatrixXd> dn_llt(dn_dnt);
  if (dn_llt.info() != Eigen::Success) {
    throw DomainError("build_nblock: D_N D_N^T is not positive definite");
  }
  sys.residual_info0 = symmetrize(
      Eigen::MatrixXd::Identity(N * m, N * m) +
      sys.markov_hankel.transpose() * dn_llt.solve(sys.markov_hankel));
  const Eigen::LLT<Eigen::MatrixXd> info0_llt(sys.residual_info0);
  sys.residual_cov0 =
      symmetrize(info0_llt.solve(Eigen::MatrixXd::Identity(N * m, N * m)));

  const Eigen::MatrixXd obs_noise_inv_obs =
      obs_noise_llt.solve(sys.observability);
  sys.obs_gramian =
      SpdMatrix(sys.observability.transpose() * obs_noise_inv_obs);
  sys.coupling =
      sys.transition_stack -
      sys.state_hankel * (sys.markov_hankel.transpose() * obs_noise_inv_obs);

  sys.state_residual_gram = symmetrize(
      sys.state_hankel * sys.residual_cov0 * sys.state_hankel.transpose());
  const double lambda1 = max_eigenvalue(sys.state_residual_gram);
  sys.phi_tilde = lambda1 > 0.0
                      ? 1.0 / lambda1
                      : std::numeric_limits<double>::infinity();
  return sys;
}

KreinGramian krein_gramian(const NBlockSystem& sys, const ThetaBlock& theta) {
  require_block(sys, theta, "krein_gramian");
  require_positive_block(theta, "krein_gramian");
  const Eigen::Index np = sys.N * sys.p;
  const Eigen::Index nn = sys.N * sys.n;
  const Eigen::VectorXd theta_inv =
      theta.expanded(sys.n).cwiseInverse();

  KreinGramian out;
  out.k.resize(np + nn, np + nn);
  out.k.topLeftCorner(np, np) = sys.obs_noise_cov;
  out.k.topRightCorner(np, nn) =
      sys.markov_hankel * sys.state_hankel.transpose();
  out.k.bottomLeftCorner(nn, np) = out.k.topRightCorner(np, nn).transpose();
  out.k.bottomRightCorner(nn, nn) =
      symmetrize(sys.state_hankel * sys.state_hankel.transpose());
  out.k.bottomRightCorner(nn, nn).diagonal() -= theta_inv;

  out.schur = sys.state_residual_gram;
  out.schur.diagonal() -= theta_inv;
  return out;
}

DistortedGramians distorted_gramians(const NBlockSystem& sys,
                                     const ThetaBlock& theta) {
  require_block(sys, theta, "distorted_gramians");
  DistortedGramians out;
  if (theta.is_zero()) {
    out.omega = sys.obs_gramian.matrix();
    out.residual_cov = SpdMatrix(sys.residual_cov0);
    out.w = symmetrize(sys.reachability * sys.residual_cov0 *
                       sys.reachability.transpose());
  } else {
    require_positive_block(theta, "distorted_gramians");
    if (!(theta.max_theta() < sys.phi_tilde)) {
      throw DomainError("distorted_gramians: risk block reaches the "
                        "spectral threshold phi_tilde");
    }
    const Eigen::VectorXd expanded = theta.expanded(sys.n);

    // Schur complement S = -Theta^{-1} + L residual_cov0 L^T, negative
    // definite below phi_tilde; LDLT handles the sign.
    Eigen::MatrixXd schur = sys.state_residual_gram;
    schur.diagonal() -= expanded.cwiseInverse();
    const Eigen::LDLT<Eigen::MatrixXd> schur_ldlt(schur);
    if (schur_ldlt.info() != Eigen::Success) {
      throw NumericError("distorted_gramians: Schur complement "
                         "factorization failed");
    }
    out.omega = symmetrize(sys.obs_gramian.matrix() +
                           sys.coupling.transpose() *
                               schur_ldlt.solve(sys.coupling));

    Eigen::MatrixXd residual_info = sys.residual_info0;
    residual_info -= symmetrize(sys.state_hankel.transpose() *
                                expanded.asDiagonal() * sys.state_hankel);
    const Eigen::LLT<Eigen::MatrixXd> residual_llt(
        symmetrize(residual_info));
    if (residual_llt.info() != Eigen::Success) {
      throw DomainError("distorted_gramians: residual information lost "
                        "positive definiteness");
    }
    out.residual_cov = SpdMatrix(residual_llt.solve(
        Eigen::MatrixXd::Identity(residual_info.rows(),
                                  residual_info.cols())));
    out.w = symmetrize(sys.reachability * out.residual_cov.matrix() *
                       sys.reachability.transpose());
  }
  out.omega_min_eigenvalue = min_eigenvalue(out.omega);
  out.omega_positive_definite = is_positive_definite(out.omega);
  out.w_min_eigenvalue = min_eigenvalue(out.w);
  out.w_positive_definite = is_positive_definite(out.w);
  return out;
}

NBlockGains nblock_gains(const NBlockSystem& sys, const ThetaBlock& theta) {
  require_block(sys, theta, "nblock_gains");
  const Eigen::Index np = sys.N * sys.p;
  const Eigen::Index nn = sys.N * sys.n;
  const Eigen::Index nm = sys.N * sys.m;

  NBlockGains out;
  if (theta.is_zero()) {
    // Theta -> 0 limit: the zero observations carry no weight.
    const Eigen::LLT<Eigen::MatrixXd> llt(sys.obs_noise_cov);
    out.g = llt.solve(sys.markov_hankel).transpose();
    out.g_aug = Eigen::MatrixXd::Zero(nm, nn);
    out.closed_loop =
        sys.a_pow_n - sys.reachability * (out.g * sys.observability);
    return out;
  }
  require_positive_block(theta, "nblock_gains");

  const KreinGramian gram = krein_gramian(sys, theta);
  Eigen::MatrixXd stacked(np + nn, nm);
  stacked.topRows(np) = sys.markov_hankel;
  stacked.bottomRows(nn) = sys.state_hankel;

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(gram.k);
  const double rcond = lu.rcond();
  if (!std::isfinite(rcond) || rcond < 1e-14) {
    std::ostringstream os;
    os << "nblock_gains: Krein Gramian numerically singular (rcond = "
       << rcond << ")";
    throw NumericError(os.str());
  }
  const Eigen::MatrixXd solved = lu.solve(stacked);
  out.g = solved.topRows(np).transpose();
  out.g_aug = solved.bottomRows(nn).transpose();
  out.closed_loop =
      sys.a_pow_n - sys.reachability * (out.g * sys.observability +
                                        out.g_aug * sys.transition_stack);
  return out;
}

SpdMatrix nblock_map(const NBlockSystem& sys, const SpdMatrix& p,
                     const ThetaBlock& theta) {
  if (p.order() != sys.n) {
    throw StructuralError("nblock_map: covariance order mismatch");
  }
  if (!p.is_positive_definite()) {
    throw DomainError("nblock_map: covariance is not positive definite");
  }
  const DistortedGramians gram = distorted_gramians(sys, theta);
  const NBlockGains gains = nblock_gains(sys, theta);

  Eigen::MatrixXd inner = symmetrize(p.inverse() + gram.omega);
  const Eigen::LLT<Eigen::MatrixXd> llt(inner);
  if (llt.info() != Eigen::Success) {
    throw DomainError("nblock_map: P^{-1} + omega is not positive definite");
  }
  return SpdMatrix(gains.closed_loop *
                       llt.solve(gains.closed_loop.transpose()) +
                   gram.w);
}

double omega_min_eigenvalue(const NBlockSystem& sys, double phi) {
  if (phi < 0.0 || !std::isfinite(phi)) {
    throw DomainError("omega_min_eigenvalue: phi must be nonnegative and "
                      "finite");
  }
  return distorted_gramians(sys, ThetaBlock::uniform(sys.N, phi))
      .omega_min_eigenvalue;
}

double find_phi(const NBlockSystem& sys,
                std::optional<double> definiteness_tol) {
  const double tol =
      definiteness_tol.value_or(1e-12 * sys.obs_gramian.lambda_max());
  if (!(sys.obs_gramian.lambda_min() > tol)) {
    throw CertificationError("find_phi: undistorted Gramian is not positive "
                             "definite; is the model observable with "
                             "N >= n?");
  }

  double hi0;
  if (std::isfinite(sys.phi_tilde)) {
    hi0 = sys.phi_tilde * (1.0 - 1e-6);
  } else {
    // No finite spectral threshold (the state Hankel block vanishes);
    // expand until the Gramian degrades.
    hi0 = 1.0;
    while (omega_min_eigenvalue(sys, hi0) > tol && hi0 < 1e12) {
      hi0 *= 2.0;
    }
  }
  if (omega_min_eigenvalue(sys, hi0) > tol) {
    return hi0;
  }

  double lo = 0.0;
  double hi = hi0;
  while (hi - lo > 1e-9 * hi0) {
    const double mid = 0.5 * (lo + hi);
    if (omega_min_eigenvalue(sys, mid) > tol) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (lo == 0.0) {
    throw CertificationError("find_phi: positive-definiteness threshold "
                             "collapsed to zero");
  }
  return lo;
}

ThetaBlock theta_block_from_trace(const FilterTrace& trace,
                                  Eigen::Index block_index, Eigen::Index N) {
  if (block_index < 0 || N < 1) {
    throw StructuralError("theta_block_from_trace: bad block index or N");
  }
  const Eigen::Index last = block_index * N + N - 1;
  if (static_cast<std::size_t>(last) >= trace.steps.size()) {
    throw StructuralError("theta_block_from_trace: trace too short for "
                          "this block");
  }
  Eigen::VectorXd thetas(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    // Newest first: entry i belongs to step kN+N-1-i.
    const auto& step = trace.steps[static_cast<std::size_t>(last - i)];
    if (!step.theta.has_value()) {
      throw StructuralError("theta_block_from_trace: trace step has no "
                            "solved risk parameter (risk-neutral run?)");
    }
    thetas(i) = step.theta->theta();
  }
  return ThetaBlock(std::move(thetas));
}

}  // namespace robustkf
