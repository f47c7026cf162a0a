#include <doctest.h>

#include <robustkf/model.hpp>

#include "test_support.hpp"

using namespace robustkf;
using testsupport::example_model;

TEST_SUITE("model") {

TEST_CASE("example model passes every check") {
  const ValidationReport report = validate_model(example_model());
  REQUIRE(report.checks.size() == 5);
  for (const auto& check : report.checks) {
    CAPTURE(check.name);
    CHECK(check.passed);
  }
  CHECK(report.passed());
}

TEST_CASE("validation is deterministic") {
  const StateSpaceModel model = example_model();
  const ValidationReport a = validate_model(model);
  const ValidationReport b = validate_model(model);
  REQUIRE(a.checks.size() == b.checks.size());
  for (std::size_t i = 0; i < a.checks.size(); ++i) {
    CHECK(a.checks[i].name == b.checks[i].name);
    CHECK(a.checks[i].passed == b.checks[i].passed);
    CHECK(a.checks[i].witness == b.checks[i].witness);  // bitwise
    CHECK(a.checks[i].detail == b.checks[i].detail);
  }
}

TEST_CASE("zero transition with identity inputs is valid") {
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 2);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  const StateSpaceModel model(zero, eye, eye, eye);
  CHECK(validate_model(model).passed());
}

TEST_CASE("rank-one noise input fails the BB^T check") {
  Eigen::MatrixXd b(2, 1);
  b << 1.0, 0.0;
  const StateSpaceModel model(Eigen::MatrixXd::Identity(2, 2), b,
                              Eigen::MatrixXd::Identity(2, 2),
                              Eigen::MatrixXd::Identity(2, 2));
  const ValidationReport report = validate_model(model);
  CHECK_FALSE(report.passed());
  bool found = false;
  for (const auto& check : report.checks) {
    if (check.name == "BBt_positive_definite") {
      found = true;
      CHECK_FALSE(check.passed);
    }
  }
  CHECK(found);
}

TEST_CASE("dimension mismatch is a structural error, not a failed check") {
  const Eigen::MatrixXd a2 = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(StateSpaceModel(a2, Eigen::MatrixXd::Identity(3, 2),
                                  Eigen::MatrixXd::Identity(2, 2),
                                  Eigen::MatrixXd::Identity(2, 2)),
                  StructuralError);
  CHECK_THROWS_AS(StateSpaceModel(a2, a2, Eigen::MatrixXd::Identity(1, 3),
                                  Eigen::MatrixXd::Identity(1, 1)),
                  StructuralError);
  CHECK_THROWS_AS(
      StateSpaceModel(a2, a2, a2, a2,
                      SpdMatrix(Eigen::MatrixXd::Identity(3, 3))),
      StructuralError);
}

TEST_CASE("non-finite entries are rejected") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(2, 2);
  a(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(StateSpaceModel(a, Eigen::MatrixXd::Identity(2, 2),
                                  Eigen::MatrixXd::Identity(2, 2),
                                  Eigen::MatrixXd::Identity(2, 2)),
                  StructuralError);
}

TEST_CASE("wide noise input is accepted when DD^T is positive definite") {
  Eigen::MatrixXd d(1, 2);
  d << 1.0, 0.5;
  const StateSpaceModel model(example_model().A(), example_model().B(),
                              example_model().C(), d);
  CHECK(validate_model(model).passed());
}

TEST_CASE("numeric rank") {
  CHECK(numeric_rank(Eigen::MatrixXd::Identity(4, 4)) == 4);
  CHECK(numeric_rank(Eigen::MatrixXd::Zero(3, 5)) == 0);
  const StateSpaceModel model = example_model();
  CHECK(numeric_rank(reachability_matrix(model, 2)) == 2);
}

TEST_CASE("adding reachability blocks never decreases rank") {
  Eigen::MatrixXd b(2, 1);
  b << 0.0, 1.0;  // single input: one block is rank 1, two blocks rank 2
  const StateSpaceModel model(example_model().A(), b, example_model().C(),
                              example_model().D());
  Eigen::Index previous = 0;
  for (int blocks = 1; blocks <= 4; ++blocks) {
    const Eigen::Index rank =
        numeric_rank(reachability_matrix(model, blocks));
    CHECK(rank >= previous);
    previous = rank;
  }
  CHECK(numeric_rank(reachability_matrix(model, 1)) == 1);
  CHECK(previous == 2);
}

TEST_CASE("symmetrize is an exact fixed point") {
  std::mt19937_64 rng(11);
  const Eigen::MatrixXd x = testsupport::random_matrix(rng, 5, 5, 3.0);
  const Eigen::MatrixXd once = symmetrize(x);
  const Eigen::MatrixXd twice = symmetrize(once);
  CHECK((once - twice).lpNorm<Eigen::Infinity>() == 0.0);  // bitwise
  CHECK((once - once.transpose()).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("SpdMatrix eigenvalues are sorted decreasing") {
  std::mt19937_64 rng(12);
  const SpdMatrix p = testsupport::random_spd(rng, 6);
  for (Eigen::Index i = 1; i < p.order(); ++i) {
    CHECK(p.eigenvalues()(i - 1) >= p.eigenvalues()(i));
  }
  CHECK(p.lambda_max() == p.eigenvalues()(0));
  CHECK(p.lambda_min() == p.eigenvalues()(p.order() - 1));
}

TEST_CASE("definiteness threshold is scale-relative") {
  Eigen::VectorXd d(2);
  d << 1.0, 5e-11;  // below 1e-10 * max(1, 1)
  CHECK_FALSE(SpdMatrix(Eigen::MatrixXd(d.asDiagonal())).is_positive_definite());
  d << 1e-5, 1e-5;  // well-conditioned small matrix stays positive definite
  CHECK(SpdMatrix(Eigen::MatrixXd(d.asDiagonal())).is_positive_definite());
}

TEST_CASE("SpdMatrix rejects non-square and non-finite input") {
  CHECK_THROWS_AS(SpdMatrix(Eigen::MatrixXd::Zero(2, 3)), StructuralError);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
  bad(1, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(SpdMatrix{bad}, StructuralError);
}

}  // TEST_SUITE("model")
