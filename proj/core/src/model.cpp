#include "robustkf/model.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace robustkf {

namespace {

std::string definiteness_detail(double lambda_min) {
  std::ostringstream os;
  os << "min eigenvalue " << lambda_min;
  return os.str();
}

std::string rank_detail(Eigen::Index rank, Eigen::Index required) {
  std::ostringstream os;
  os << "rank " << rank << " of " << required;
  return os.str();
}

}  // namespace

StateSpaceModel::StateSpaceModel(Eigen::MatrixXd a, Eigen::MatrixXd b,
                                 Eigen::MatrixXd c, Eigen::MatrixXd d,
                                 std::optional<SpdMatrix> p0)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(std::move(d)) {
  const Eigen::Index n = a_.rows();
  if (a_.cols() != n || n == 0) {
    throw StructuralError("model: A must be square and non-empty");
  }
  if (b_.rows() != n) {
    throw StructuralError("model: B must have as many rows as A");
  }
  if (c_.cols() != n) {
    throw StructuralError("model: C must have as many columns as A");
  }
  if (c_.rows() == 0 || b_.cols() == 0) {
    throw StructuralError("model: B and C must be non-empty");
  }
  if (d_.rows() != c_.rows()) {
    throw StructuralError("model: D must have as many rows as C");
  }
  if (d_.cols() == 0) {
    throw StructuralError("model: D must be non-empty");
  }
  if (!a_.allFinite() || !b_.allFinite() || !c_.allFinite() ||
      !d_.allFinite()) {
    throw StructuralError("model: matrices must have finite entries");
  }
  if (p0.has_value()) {
    if (p0->order() != n) {
      throw StructuralError("model: P0 must be n x n");
    }
    p0_ = std::move(*p0);
  } else {
    p0_ = SpdMatrix::Identity(n);
  }
  bbt_ = symmetrize(b_ * b_.transpose());
  ddt_ = symmetrize(d_ * d_.transpose());
  ddt_positive_definite_ = robustkf::is_positive_definite(ddt_);
  if (ddt_positive_definite_) {
    const Eigen::LLT<Eigen::MatrixXd> llt(ddt_);
    obs_info_ = symmetrize(c_.transpose() * llt.solve(c_));
  }
}

const Eigen::MatrixXd& StateSpaceModel::observation_information() const {
  if (!ddt_positive_definite_) {
    throw DomainError(
        "model: DD^T is singular; observation information is undefined");
  }
  return obs_info_;
}

bool ValidationReport::passed() const {
  for (const auto& check : checks) {
    if (!check.passed) {
      return false;
    }
  }
  return true;
}

Eigen::Index numeric_rank(const Eigen::MatrixXd& mat, double tol) {
  if (mat.size() == 0) {
    return 0;
  }
  if (!mat.allFinite()) {
    throw StructuralError("numeric_rank: matrix has non-finite entries");
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) {
    return 0;
  }
  const double threshold = sv(0) * tol;
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > threshold) {
    ++rank;
  }
  return rank;
}

Eigen::MatrixXd reachability_matrix(const StateSpaceModel& model, int blocks) {
  if (blocks < 1) {
    throw StructuralError("reachability_matrix: blocks must be >= 1");
  }
  const Eigen::Index n = model.n();
  const Eigen::Index m = model.m();
  Eigen::MatrixXd reach(n, blocks * m);
  Eigen::MatrixXd power = model.B();
  for (int j = 0; j < blocks; ++j) {
    reach.middleCols(j * m, m) = power;
    if (j + 1 < blocks) {
      power = model.A() * power;
    }
  }
  return reach;
}

Eigen::MatrixXd observability_matrix(const StateSpaceModel& model,
                                     int blocks) {
  if (blocks < 1) {
    throw StructuralError("observability_matrix: blocks must be >= 1");
  }
  const Eigen::Index n = model.n();
  const Eigen::Index p = model.p();
  Eigen::MatrixXd obs(blocks * p, n);
  Eigen::MatrixXd row = model.C();
  // Newest block on top: row i holds C A^{blocks-1-i}.
  for (int i = blocks - 1; i >= 0; --i) {
    obs.middleRows(i * p, p) = row;
    if (i > 0) {
      row = row * model.A();
    }
  }
  return obs;
}

ValidationReport validate_model(const StateSpaceModel& model) {
  ValidationReport report;
  const int n = static_cast<int>(model.n());

  const double bbt_min = min_eigenvalue(model.BBt());
  report.checks.push_back({"BBt_positive_definite",
                           robustkf::is_positive_definite(model.BBt()),
                           bbt_min, definiteness_detail(bbt_min)});

  const double ddt_min = min_eigenvalue(model.DDt());
  report.checks.push_back({"DDt_positive_definite",
                           robustkf::is_positive_definite(model.DDt()),
                           ddt_min, definiteness_detail(ddt_min)});

  const Eigen::Index reach_rank = numeric_rank(reachability_matrix(model, n));
  report.checks.push_back({"reachable", reach_rank == model.n(),
                           static_cast<double>(reach_rank),
                           rank_detail(reach_rank, model.n())});

  const Eigen::Index obs_rank = numeric_rank(observability_matrix(model, n));
  report.checks.push_back({"observable", obs_rank == model.n(),
                           static_cast<double>(obs_rank),
                           rank_detail(obs_rank, model.n())});

  const double p0_min = model.P0().lambda_min();
  report.checks.push_back({"P0_positive_definite",
                           model.P0().is_positive_definite(), p0_min,
                           definiteness_detail(p0_min)});
  return report;
}

}  // namespace robustkf
