#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace starbody {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr const char* kVersion = "0.3.0";

// Default tolerances: exact identities and duality round-trips.
inline constexpr double kExactTol = 1e-12;
inline constexpr double kDualityTol = 1e-9;

/// Malformed input: wrong dimensions, invalid parameters, unsupported kinds.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation is not defined for this body kind (e.g. support of a
/// non-convex body).
class Unsupported : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A numerical procedure failed: sampler acceptance collapse, singular
/// covariance, or a theorem-guaranteed relation violated beyond tolerance.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A verification instance whose hypotheses do not hold on the panel.
class InstanceInvalid : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidInput(msg);
}

inline void require_dim(Eigen::Index got, int want, const char* what) {
  if (got != want) {
    throw InvalidInput(std::string(what) + ": dimension mismatch (got " + std::to_string(got) +
                       ", expected " + std::to_string(want) + ")");
  }
}

}  // namespace starbody
