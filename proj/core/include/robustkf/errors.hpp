#pragma once

#include <stdexcept>

namespace robustkf {

/// Inconsistent dimensions or a broken call contract.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input outside the mathematical domain of an operation
/// (non positive definite matrix, saturated risk parameter, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A computation that should succeed on valid input failed numerically.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The convergence certification procedure cannot produce a certificate.
class CertificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace robustkf
