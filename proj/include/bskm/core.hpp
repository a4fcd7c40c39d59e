#pragma once

#include <Eigen/Core>

#include <charconv>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace bskm {

/// Primal points live in R^d.
using Vector = Eigen::VectorXd;
/// Dual elements (gradients, dual-space noise). Same storage, different role.
using DualVector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  DimensionMismatch(std::size_t expected, std::size_t got)
      : Error("dimension mismatch: expected " + std::to_string(expected) + ", got " +
              std::to_string(got)) {}
};

struct InsufficientTrace : Error {
  using Error::Error;
};

struct DegenerateFit : Error {
  using Error::Error;
};

inline bool all_finite(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return v.allFinite();
}

inline void require_finite(const Eigen::Ref<const Eigen::VectorXd>& v, const char* what) {
  if (!v.allFinite()) throw DomainError(std::string(what) + ": non-finite coordinate");
}

inline void require_dim(const Eigen::Ref<const Eigen::VectorXd>& v, Eigen::Index dim) {
  if (v.size() != dim)
    throw DimensionMismatch(static_cast<std::size_t>(dim), static_cast<std::size_t>(v.size()));
}

/// Numerically stable softmax: max-subtraction keeps exp() in range for any finite input.
/// Shortest decimal form that reads back to the same double ("1.5", not "1.500000").
inline std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline Vector softmax(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  const double top = logits.maxCoeff();
  Vector e = (logits.array() - top).exp().matrix();
  return e / e.sum();
}

}  // namespace bskm
