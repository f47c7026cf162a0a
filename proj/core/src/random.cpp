#include "robustkf/random.hpp"

#include <cmath>
#include <numbers>

namespace robustkf {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master ^ (index * 0x9e3779b97f4a7c15ULL);
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double GaussianSampler::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Uniform in (0, 1]: top 53 bits, shifted away from zero for the log.
  const double u1 =
      (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Eigen::VectorXd GaussianSampler::vector(Eigen::Index size) {
  Eigen::VectorXd v(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    v(i) = next();
  }
  return v;
}

Eigen::MatrixXd GaussianSampler::matrix(Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd g(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      g(i, j) = next();
    }
  }
  return g;
}

SpdMatrix random_spd(GaussianSampler& sampler, Eigen::Index order,
                     double ridge) {
  const Eigen::MatrixXd g = sampler.matrix(order, order);
  return SpdMatrix(g * g.transpose() +
                   ridge * Eigen::MatrixXd::Identity(order, order));
}

}  // namespace robustkf
