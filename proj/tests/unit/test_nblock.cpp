#include <cmath>

#include <doctest.h>

#include <Eigen/LU>

#include <robustkf/certify.hpp>
#include <robustkf/nblock.hpp>
#include <robustkf/psd.hpp>

#include "test_support.hpp"

using namespace robustkf;
using testsupport::example_model;
using testsupport::random_spd;
using testsupport::rel_frobenius_error;
using testsupport::uniform;

namespace {

// Impulse response of the model: the state trajectory from x_0 = (column of
// B), read through C after t-1 further transitions. Independent of the
// matrix-power route used by the builder.
Eigen::MatrixXd impulse_markov(const StateSpaceModel& model, int t) {
  Eigen::MatrixXd x = model.B();
  for (int k = 1; k < t; ++k) {
    x = model.A() * x;
  }
  return model.C() * x;
}

}  // namespace

TEST_SUITE("nblock") {

TEST_CASE("single-block system degenerates cleanly") {
  const StateSpaceModel model = example_model();
  const NBlockSystem sys = build_nblock(model, 1);
  CHECK(sys.markov_hankel.isZero(0.0));
  CHECK(sys.state_hankel.isZero(0.0));
  CHECK(sys.markov_hankel.rows() == 1);
  CHECK(sys.state_hankel.rows() == 2);
  CHECK((sys.reachability - model.B()).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((sys.observability - model.C()).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((sys.transition_stack - Eigen::MatrixXd::Identity(2, 2))
            .lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(std::isinf(sys.phi_tilde));

  // No cross terms: the projection gains vanish and the map keeps A.
  const NBlockGains gains = nblock_gains(sys, ThetaBlock::uniform(1, 1e-3));
  CHECK(gains.g.isZero(1e-14));
  CHECK(gains.g_aug.isZero(1e-14));
  CHECK(rel_frobenius_error(gains.closed_loop, model.A()) < 1e-14);
}

TEST_CASE("block Hankel pattern matches the impulse response") {
  const StateSpaceModel model = example_model();
  const Eigen::Index N = 8;
  const NBlockSystem sys = build_nblock(model, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < N; ++j) {
      const Eigen::MatrixXd block =
          sys.markov_hankel.block(i * model.p(), j * model.m(), model.p(),
                                  model.m());
      if (j > i) {
        CHECK(rel_frobenius_error(
                  block, impulse_markov(model, static_cast<int>(j - i))) <
              1e-13);
      } else {
        CHECK(block.isZero(0.0));
      }
    }
  }
  // first super-diagonal block is C B
  Eigen::MatrixXd cb(1, 2);
  cb << 1.0, -1.0;
  CHECK(rel_frobenius_error(sys.markov_hankel.block(0, 2, 1, 2), cb) < 1e-15);
  // last block row is zero
  CHECK(sys.markov_hankel.bottomRows(model.p()).isZero(0.0));
  CHECK(sys.state_hankel.bottomRows(model.n()).isZero(0.0));
}

TEST_CASE("spectral threshold of the example system") {
  const NBlockSystem sys = build_nblock(example_model(), 8);
  // reported as 1.6e-2; frozen at full precision from an independent
  // evaluation
  CHECK(std::abs(sys.phi_tilde - 1.6e-2) / 1.6e-2 < 0.05);
  CHECK(sys.phi_tilde ==
        doctest::Approx(0.015967146083834528).epsilon(1e-10));
}

TEST_CASE("Krein Gramian: direct assembly, factored form, and Schur sign") {
  const NBlockSystem sys = build_nblock(example_model(), 8);
  std::mt19937_64 rng(51);
  Eigen::VectorXd thetas(8);
  for (Eigen::Index i = 0; i < 8; ++i) {
    thetas(i) = uniform(rng, 0.1, 0.9) * sys.phi_tilde;
  }
  const ThetaBlock block(thetas);
  const KreinGramian gram = krein_gramian(sys, block);

  const Eigen::Index np = 8 * sys.p;
  const Eigen::Index nn = 8 * sys.n;
  CHECK(rel_frobenius_error(gram.k.topLeftCorner(np, np),
                            sys.obs_noise_cov) < 1e-14);

  // three-factor congruence reassembles the Gramian
  const Eigen::MatrixXd m11 = sys.obs_noise_cov;
  const Eigen::MatrixXd cross =
      sys.state_hankel * sys.markov_hankel.transpose() * m11.inverse();
  Eigen::MatrixXd lower = Eigen::MatrixXd::Identity(np + nn, np + nn);
  lower.bottomLeftCorner(nn, np) = cross;
  Eigen::MatrixXd core = Eigen::MatrixXd::Zero(np + nn, np + nn);
  core.topLeftCorner(np, np) = m11;
  core.bottomRightCorner(nn, nn) = gram.schur;
  const Eigen::MatrixXd refactored = lower * core * lower.transpose();
  CHECK(rel_frobenius_error(refactored, gram.k) < 1e-10);

  // uniform theta below the threshold: Schur complement negative definite
  const KreinGramian uniform_gram =
      krein_gramian(sys, ThetaBlock::uniform(8, 0.9 * sys.phi_tilde));
  CHECK(max_eigenvalue(uniform_gram.schur) < 0.0);

  CHECK_THROWS_AS(krein_gramian(sys, ThetaBlock::uniform(8, 0.0)),
                  DomainError);
}

TEST_CASE("distorted Gramians: undistorted limit and positivity") {
  const NBlockSystem sys = build_nblock(example_model(), 8);
  const DistortedGramians zero =
      distorted_gramians(sys, ThetaBlock::uniform(8, 0.0));
  CHECK((zero.omega - sys.obs_gramian.matrix()).lpNorm<Eigen::Infinity>() ==
        0.0);
  CHECK(zero.omega_positive_definite);
  CHECK(zero.w_positive_definite);
  CHECK(zero.omega_min_eigenvalue ==
        doctest::Approx(0.033555717877022218).epsilon(1e-9));
  CHECK((zero.residual_cov.matrix() - sys.residual_cov0)
            .lpNorm<Eigen::Infinity>() == 0.0);

  std::mt19937_64 rng(52);
  for (int i = 0; i < 10; ++i) {
    Eigen::VectorXd thetas(8);
    for (Eigen::Index k = 0; k < 8; ++k) {
      thetas(k) = uniform(rng, 0.05, 0.95) * sys.phi_tilde;
    }
    const DistortedGramians gram = distorted_gramians(sys, ThetaBlock(thetas));
    CHECK(gram.residual_cov.is_positive_definite());
    CHECK(gram.w_positive_definite);  // W stays definite below phi_tilde
  }
}

TEST_CASE("distorted Gramians: dual assembly through the full Krein "
          "Gramian") {
  const NBlockSystem sys = build_nblock(example_model(), 8);
  std::mt19937_64 rng(53);
  for (int i = 0; i < 5; ++i) {
    Eigen::VectorXd thetas(8);
    for (Eigen::Index k = 0; k < 8; ++k) {
      thetas(k) = uniform(rng, 0.05, 0.9) * sys.phi_tilde;
    }
    const ThetaBlock block(thetas);
    const DistortedGramians gram = distorted_gramians(sys, block);

    const KreinGramian kg = krein_gramian(sys, block);
    Eigen::MatrixXd stacked(8 * sys.p + 8 * sys.n, sys.n);
    stacked.topRows(8 * sys.p) = sys.observability;
    stacked.bottomRows(8 * sys.n) = sys.transition_stack;
    const Eigen::MatrixXd direct =
        stacked.transpose() * kg.k.partialPivLu().solve(stacked);
    CHECK(rel_frobenius_error(symmetrize(direct), gram.omega) < 1e-9);
  }
}

TEST_CASE("ordered risk blocks order the Gramians oppositely") {
  const NBlockSystem sys = build_nblock(example_model(), 8);
  std::mt19937_64 rng(54);
  for (int i = 0; i < 30; ++i) {
    Eigen::VectorXd lower(8), upper(8);
    if (i % 2 == 0) {
      // scalar multiples of the identity block
      const double phi2 = uniform(rng, 0.05, 0.6) * sys.phi_tilde;
      const double phi1 =
          phi2 + uniform(rng, 0.0, 0.95 * sys.phi_tilde - phi2);
      lower.setConstant(phi2);
      upper.setConstant(phi1);
    } else {
      for (Eigen::Index k = 0; k < 8; ++k) {
        lower(k) = uniform(rng, 0.05, 0.6) * sys.phi_tilde;
        upper(k) = lower(k) + uniform(rng, 0.0, 0.95 * sys.phi_tilde - lower(k));
      }
    }
    const DistortedGramians g2 = distorted_gramians(sys, ThetaBlock(lower));
    const DistortedGramians g1 = distorted_gramians(sys, ThetaBlock(upper));
    CHECK(loewner_geq(g2.omega, g1.omega, 1e-9));  // omega shrinks
    CHECK(loewner_geq(g1.w, g2.w, 1e-9));          // w grows
  }
}

TEST_CASE("first variation signs for a small nonnegative increment") {
  const NBlockSystem sys = build_nblock(example_model(), 8);
  std::mt19937_64 rng(55);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  for (int i = 0; i < 10; ++i) {
    Eigen::VectorXd base(8), bumped(8);
    for (Eigen::Index k = 0; k < 8; ++k) {
      base(k) = uniform(rng, 0.1, 0.7) * sys.phi_tilde;
      bumped(k) = base(k) + uniform(rng, 0.0, 1e-6);
    }
    const DistortedGramians g = distorted_gramians(sys, ThetaBlock(base));
    const DistortedGramians gb = distorted_gramians(sys, ThetaBlock(bumped));
    CHECK(loewner_geq(g.omega + 1e-8 * eye, gb.omega, 0.0));
    CHECK(loewner_geq(gb.w + 1e-8 * eye, g.w, 0.0));
  }
}

TEST_CASE("gains: closed-loop regression and contraction at the operating "
          "point") {
  const NBlockSystem sys = build_nblock(example_model(), 8);
  const ThetaBlock block = ThetaBlock::uniform(8, 1e-3);
  const NBlockGains gains = nblock_gains(sys, block);
  // The closed-loop map is not Schur stable here (the raw N-step
  // transition dominates); what certifies convergence is the metric
  // contraction bound. Both recorded as regression baselines.
  const double rho = testsupport::spectral_radius(gains.closed_loop);
  CHECK(rho == doctest::Approx(3.4283886136838992).epsilon(1e-6));
  const DistortedGramians gram = distorted_gramians(sys, block);
  REQUIRE(gram.omega_positive_definite);
  REQUIRE(gram.w_positive_definite);
  const double bound = contraction_bound(
      gains.closed_loop, SpdMatrix(gram.omega), SpdMatrix(gram.w));
  CHECK(bound < 1.0);
  CHECK(bound == doctest::Approx(0.7214569999529163).epsilon(1e-6));
}

TEST_CASE("gains: undistorted limit is continuous") {
  const NBlockSystem sys = build_nblock(example_model(), 8);
  const NBlockGains at_zero = nblock_gains(sys, ThetaBlock::uniform(8, 0.0));
  const NBlockGains near_zero =
      nblock_gains(sys, ThetaBlock::uniform(8, 1e-12));
  CHECK(rel_frobenius_error(near_zero.closed_loop, at_zero.closed_loop) <
        1e-6);
  CHECK(at_zero.g_aug.isZero(0.0));
}

TEST_CASE("downsampled map agrees with the per-step robust iteration") {
  const StateSpaceModel model = example_model();
  const Eigen::Index N = 8;
  const NBlockSystem sys = build_nblock(model, N);
  // Start large enough that every solved theta is already below the
  // spectral threshold.
  const FilterTrace trace = iterate_riccati(
      model, SpdMatrix(100.0 * Eigen::MatrixXd::Identity(2, 2)), 0.05,
      {5 * 8 + 1, 0.0});
  double worst = 0.0;
  for (Eigen::Index k = 0; k < 5; ++k) {
    const ThetaBlock block = theta_block_from_trace(trace, k, N);
    const SpdMatrix mapped =
        nblock_map(sys, trace.steps[static_cast<std::size_t>(k * N)].covariance,
                   block);
    const Eigen::MatrixXd& expected =
        trace.steps[static_cast<std::size_t>((k + 1) * N)].covariance.matrix();
    worst = std::max(worst, rel_frobenius_error(mapped.matrix(), expected));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("theta block from a trace pairs the boundary index correctly") {
  const StateSpaceModel model = example_model();
  const FilterTrace trace = iterate_riccati(
      model, SpdMatrix(100.0 * Eigen::MatrixXd::Identity(2, 2)), 0.05,
      {17, 0.0});
  const ThetaBlock block = theta_block_from_trace(trace, 1, 8);
  // newest first: entry 0 is the parameter of step kN+N-1, the last entry
  // is the parameter solved against P_{kN}
  CHECK(block.thetas()(0) == trace.steps[15].theta->theta());
  CHECK(block.thetas()(7) == trace.steps[8].theta->theta());
  CHECK_THROWS_AS(theta_block_from_trace(trace, 3, 8), StructuralError);
  const FilterTrace neutral =
      iterate_riccati(model, SpdMatrix::Identity(2), 0.0, {10, 0.0});
  CHECK_THROWS_AS(theta_block_from_trace(neutral, 0, 8), StructuralError);
}

TEST_CASE("downsampled map contracts under the certified bound") {
  const NBlockSystem sys = build_nblock(example_model(), 8);
  const double phi = find_phi(sys);
  const ThetaBlock block = ThetaBlock::uniform(8, 0.5 * phi);
  const DistortedGramians gram = distorted_gramians(sys, block);
  REQUIRE(gram.omega_positive_definite);
  REQUIRE(gram.w_positive_definite);
  const NBlockGains gains = nblock_gains(sys, block);
  const double bound = contraction_bound(
      gains.closed_loop, SpdMatrix(gram.omega), SpdMatrix(gram.w));
  std::mt19937_64 rng(56);
  for (int i = 0; i < 20; ++i) {
    const SpdMatrix p = random_spd(rng, 2, 0.1, 200.0);
    const SpdMatrix q = random_spd(rng, 2, 0.1, 200.0);
    CHECK(thompson_distance(nblock_map(sys, p, block),
                            nblock_map(sys, q, block)) <=
          bound * thompson_distance(p, q) + 1e-9);
  }
}

TEST_CASE("downsampled map fixes the scalar fixed point") {
  const StateSpaceModel model = example_model();
  const NBlockSystem sys = build_nblock(model, 8);
  const FilterTrace trace =
      iterate_riccati(model, SpdMatrix::Identity(2), 0.05, {});
  REQUIRE(trace.verdict == IterationVerdict::kConverged);
  const SpdMatrix& limit = trace.steps.back().covariance;
  const double theta_star = trace.steps.back().theta->theta();
  const SpdMatrix mapped =
      nblock_map(sys, limit, ThetaBlock::uniform(8, theta_star));
  CHECK(rel_frobenius_error(mapped.matrix(), limit.matrix()) < 1e-7);
}

TEST_CASE("find_phi on the example system") {
  const NBlockSystem sys = build_nblock(example_model(), 8);
  const double phi = find_phi(sys);
  CHECK(std::abs(phi - 1.3e-3) / 1.3e-3 < 0.10);  // reported as 1.3e-3
  CHECK(phi == doctest::Approx(1.28326710e-3).epsilon(1e-5));
  // the Gramian is positive definite at phi and lost slightly above
  CHECK(omega_min_eigenvalue(sys, phi) > 0.0);
  CHECK(omega_min_eigenvalue(sys, phi * 1.01) <= 0.0);
}

TEST_CASE("Gramian minimum eigenvalue is nonincreasing over the sweep "
          "range") {
  const NBlockSystem sys = build_nblock(example_model(), 8);
  double previous = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 50; ++i) {
    const double phi = 8e-3 * i / 50.0;
    const double value = omega_min_eigenvalue(sys, phi);
    CHECK(value <= previous + 1e-12);
    previous = value;
  }
}

TEST_CASE("domain guards") {
  const NBlockSystem sys = build_nblock(example_model(), 8);
  CHECK_THROWS_AS(
      distorted_gramians(sys, ThetaBlock::uniform(8, sys.phi_tilde)),
      DomainError);
  Eigen::VectorXd mixed = Eigen::VectorXd::Constant(8, 1e-4);
  mixed(3) = 0.0;
  CHECK_THROWS_AS(distorted_gramians(sys, ThetaBlock(mixed)), DomainError);
  CHECK_THROWS_AS(distorted_gramians(sys, ThetaBlock::uniform(7, 1e-4)),
                  StructuralError);
  CHECK_THROWS_AS(ThetaBlock(Eigen::VectorXd::Constant(8, -1e-4)),
                  StructuralError);
  CHECK_THROWS_AS(build_nblock(example_model(), 0), StructuralError);
  CHECK_THROWS_AS(build_nblock(example_model(), 100000), StructuralError);
  CHECK_THROWS_AS(nblock_map(sys, SpdMatrix::Identity(3),
                             ThetaBlock::uniform(8, 1e-4)),
                  StructuralError);
}

TEST_CASE("multi-output model end to end") {
  // Dimensions that would expose any p/m/n mix-up in the block stacking.
  Eigen::MatrixXd a(3, 3), b(3, 3), c(2, 3), d(2, 2);
  a << 0.6, 0.2, 0.0, 0.1, 0.9, 0.3, 0.0, 0.0, 1.05;
  b << 1.0, 0.1, 0.0, 0.0, 0.8, 0.2, 0.1, 0.0, 1.2;
  c << 1.0, -1.0, 0.5, 0.2, 0.7, -0.3;
  d << 1.0, 0.0, 0.3, 0.8;
  const StateSpaceModel model(a, b, c, d);
  REQUIRE(validate_model(model).passed());

  const Eigen::Index stride = 5;
  const NBlockSystem sys = build_nblock(model, stride);
  CHECK(sys.markov_hankel.rows() == 10);   // N p
  CHECK(sys.markov_hankel.cols() == 15);   // N m
  CHECK(sys.state_hankel.rows() == 15);    // N n
  const double phi = find_phi(sys);
  CHECK(phi > 0.0);
  CHECK(phi < sys.phi_tilde);

  const ConvergenceCertificate cert = compute_certificate(model, stride, 30);
  REQUIRE(cert.c_max > 0.0);
  CHECK(cert.contraction_coefficient_at_phi < 1.0);

  const double budget = 0.5 * cert.c_max;
  const FilterTrace trace = iterate_riccati(
      model, SpdMatrix(50.0 * Eigen::MatrixXd::Identity(3, 3)), budget,
      {4 * 5 + 1, 0.0});
  for (Eigen::Index k = 0; k < 4; ++k) {
    const ThetaBlock block = theta_block_from_trace(trace, k, stride);
    const SpdMatrix mapped = nblock_map(
        sys, trace.steps[static_cast<std::size_t>(k * stride)].covariance,
        block);
    const Eigen::MatrixXd& expected =
        trace.steps[static_cast<std::size_t>((k + 1) * stride)]
            .covariance.matrix();
    CHECK(rel_frobenius_error(mapped.matrix(), expected) < 1e-8);
  }

  const EmpiricalReport report =
      verify_certificate_empirically(model, cert, budget, 4);
  CHECK(report.passed);
}

TEST_CASE("theta block diagonal expansion") {
  Eigen::VectorXd thetas(2);
  thetas << 2.0, 3.0;
  const ThetaBlock block(thetas);
  const Eigen::MatrixXd diag = block.as_diagonal(2);
  REQUIRE(diag.rows() == 4);
  Eigen::VectorXd expected(4);
  expected << 2.0, 2.0, 3.0, 3.0;
  CHECK((diag.diagonal() - expected).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(diag.lpNorm<1>() == doctest::Approx(10.0));  // off-diagonals zero
}

}  // TEST_SUITE("nblock")
