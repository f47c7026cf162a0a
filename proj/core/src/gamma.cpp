#include "robustkf/gamma.hpp"

#include <cmath>
#include <limits>

namespace robustkf {

namespace {

// log(1 - x) + 1/(1 - x) - 1 for x in [0, 1). The two summands cancel to
// O(x^2); below the series threshold the power series
// sum_{k>=2} ((k-1)/k) x^k keeps full relative accuracy.
double gamma_term(double x) {
  if (x == 0.0) {
    return 0.0;
  }
  if (x < 0.1) {
    double term = x * x;  // x^2, coefficient (2-1)/2
    double sum = 0.5 * term;
    for (int k = 3; k < 64; ++k) {
      term *= x;
      const double contribution = term * (k - 1.0) / k;
      sum += contribution;
      if (contribution < sum * 1e-17) {
        break;
      }
    }
    return sum;
  }
  const double u = 1.0 - x;
  return std::log1p(-x) + x / u;
}

void check_gamma_domain(double theta, const SpdMatrix& p, const char* who) {
  if (p.order() == 0) {
    throw StructuralError(std::string(who) + ": empty matrix");
  }
  if (theta < 0.0 || !std::isfinite(theta)) {
    throw DomainError(std::string(who) + ": theta must be nonnegative");
  }
  const double scale = std::max(1.0, std::abs(p.lambda_max()));
  if (p.lambda_min() < -kDefinitenessTol * scale) {
    throw DomainError(std::string(who) +
                      ": matrix must be positive semidefinite");
  }
  if (theta * p.lambda_max() >= 1.0) {
    throw DomainError(std::string(who) +
                      ": tolerance budget saturates the spectral bound "
                      "(theta >= 1/lambda_1(P))");
  }
}

}  // namespace

double gamma(double theta, const SpdMatrix& p) {
  check_gamma_domain(theta, p, "gamma");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.order(); ++i) {
    const double lambda = std::max(0.0, p.eigenvalues()(i));
    sum += gamma_term(theta * lambda);
  }
  return 0.5 * sum;
}

double gamma_dtheta(double theta, const SpdMatrix& p) {
  check_gamma_domain(theta, p, "gamma_dtheta");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.order(); ++i) {
    const double lambda = std::max(0.0, p.eigenvalues()(i));
    const double u = 1.0 - theta * lambda;
    sum += theta * lambda * lambda / (u * u);
  }
  return 0.5 * sum;
}

RiskParameter::RiskParameter(double theta, SpdMatrix solved_against,
                             double tolerance_c)
    : theta_(theta),
      solved_against_(std::move(solved_against)),
      tolerance_c_(tolerance_c) {
  if (!solved_against_.is_positive_definite()) {
    throw DomainError("RiskParameter: covariance is not positive definite");
  }
  if (!(theta_ > 0.0) || theta_ * solved_against_.lambda_max() >= 1.0) {
    throw DomainError(
        "RiskParameter: theta outside (0, 1/lambda_1(covariance))");
  }
  const double residual =
      std::abs(gamma(theta_, solved_against_) - tolerance_c_);
  if (residual > kThetaSolveTol * std::max(1.0, tolerance_c_)) {
    throw DomainError("RiskParameter: gamma(theta, covariance) does not "
                      "match the tolerance budget");
  }
}

RiskParameter solve_theta(double c, const SpdMatrix& p) {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw DomainError("solve_theta: tolerance budget must be positive "
                      "(c = 0 is the risk-neutral path, handled by callers)");
  }
  if (!p.is_positive_definite()) {
    throw DomainError("solve_theta: covariance is not positive definite");
  }
  constexpr double kBracketEps = 1e-14;
  const double lambda1 = p.lambda_max();
  const double tol = kThetaSolveTol * std::max(1.0, c);

  double lo = 0.0;                            // gamma(lo) - c = -c < 0
  double hi = (1.0 - kBracketEps) / lambda1;  // gamma -> +inf at the boundary
  if (gamma(hi, p) < c) {
    throw DomainError("solve_theta: tolerance budget exceeds the "
                      "representable range near the spectral bound");
  }

  double theta = 0.5 * (lo + hi);
  double best_theta = theta;
  double best_residual = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 200; ++iter) {
    const double f = gamma(theta, p) - c;
    if (std::abs(f) < best_residual) {
      best_residual = std::abs(f);
      best_theta = theta;
    }
    if (std::abs(f) <= tol) {
      break;
    }
    if (f > 0.0) {
      hi = theta;
    } else {
      lo = theta;
    }
    const double derivative = gamma_dtheta(theta, p);
    double next = 0.5 * (lo + hi);
    if (derivative > 0.0 && std::isfinite(derivative)) {
      const double newton = theta - f / derivative;
      if (newton > lo && newton < hi) {
        next = newton;
      }
    }
    if (next == theta) {
      break;  // interval exhausted at machine precision
    }
    theta = next;
  }
  if (best_residual > tol) {
    throw NumericError("solve_theta: root solve failed to reach tolerance");
  }
  return RiskParameter(best_theta, p, c);
}

}  // namespace robustkf
