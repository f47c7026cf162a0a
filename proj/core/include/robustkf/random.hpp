#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "robustkf/spd_matrix.hpp"

namespace robustkf {

/// Fixed splitting rule for per-run seeds derived from a master seed
/// (splitmix64 of master xor index). Identical across platforms.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Standard-normal sampler over mt19937_64 with an explicit Box-Muller
/// transform, so streams are bit-identical for a given seed everywhere.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : engine_(seed) {}

  double next();
  Eigen::VectorXd vector(Eigen::Index size);
  Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// G G^T + ridge I for a standard-normal G; positive definite for ridge > 0.
SpdMatrix random_spd(GaussianSampler& sampler, Eigen::Index order,
                     double ridge = 1e-3);

}  // namespace robustkf
