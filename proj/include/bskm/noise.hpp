#pragma once

// Martingale-difference noise models and coordinate trimming.

#include "bskm/core.hpp"
#include "bskm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace bskm {

enum class NoiseKind { zero, gaussian, student_t };

/// Where a draw enters the update. primal: added to T(x) before the mirror map.
/// dual: added to grad theta(T(x)). The two coincide for the Euclidean geometry.
enum class NoiseSpace { primal, dual };

inline const char* to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::zero: return "zero";
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::student_t: return "student_t";
  }
  return "?";
}

inline const char* to_string(NoiseSpace s) { return s == NoiseSpace::primal ? "primal" : "dual"; }

struct NoiseModel {
  NoiseKind kind = NoiseKind::zero;
  double sigma = 0.0;  // gaussian
  double dof = 2.0;    // student_t
  double scale = 1.0;  // student_t
  std::uint64_t seed = 0;
  NoiseSpace space = NoiseSpace::primal;

  static NoiseModel zero() { return {}; }
  static NoiseModel gaussian(double sigma, std::uint64_t seed = 0) {
    if (!(sigma > 0.0)) throw ConfigError("gaussian sigma must be positive");
    NoiseModel m;
    m.kind = NoiseKind::gaussian;
    m.sigma = sigma;
    m.seed = seed;
    return m;
  }
  static NoiseModel student_t(double dof, double scale = 1.0, std::uint64_t seed = 0) {
    if (!(dof > 0.0) || !(scale > 0.0)) throw ConfigError("student_t needs positive dof and scale");
    NoiseModel m;
    m.kind = NoiseKind::student_t;
    m.dof = dof;
    m.scale = scale;
    m.seed = seed;
    return m;
  }
};

inline Vector sample(const NoiseModel& model, RngStream& rng, Eigen::Index d) {
  Vector v = Vector::Zero(d);
  switch (model.kind) {
    case NoiseKind::zero: break;
    case NoiseKind::gaussian:
      for (double& x : v) x = model.sigma * rng.normal();
      break;
    case NoiseKind::student_t:
      for (double& x : v) x = model.scale * rng.student_t(model.dof);
      break;
  }
  return v;
}

/// Zeroes the min(k, d) largest-magnitude coordinates. Ties on |u_i| zero the lower index first.
inline Vector trim(const Eigen::Ref<const Vector>& u, Eigen::Index k) {
  Vector out = u;
  const Eigen::Index d = u.size();
  k = std::clamp<Eigen::Index>(k, 0, d);
  if (k == 0) return out;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(d));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double ma = std::abs(u[a]), mb = std::abs(u[b]);
    return ma != mb ? ma > mb : a < b;
  });
  for (Eigen::Index i = 0; i < k; ++i) out[idx[static_cast<std::size_t>(i)]] = 0.0;
  return out;
}

enum class TrimKind { none, fixed, log_schedule };

struct TrimSchedule {
  TrimKind kind = TrimKind::none;
  std::int64_t k = 0;  // fixed only

  static TrimSchedule none() { return {}; }
  static TrimSchedule fixed(std::int64_t k) {
    if (k < 0) throw ConfigError("fixed trim level must be nonnegative");
    return {TrimKind::fixed, k};
  }
  static TrimSchedule log_schedule() { return {TrimKind::log_schedule, 0}; }

  std::string name() const {
    switch (kind) {
      case TrimKind::none: return "none";
      case TrimKind::fixed: return "fixed(" + std::to_string(k) + ")";
      case TrimKind::log_schedule: return "log_schedule";
    }
    return "?";
  }
};

/// k_n: 0, min(k, d), or min(ceil(ln(n + 2)), d).
inline std::int64_t trim_level(const TrimSchedule& s, std::int64_t n, std::int64_t d) {
  switch (s.kind) {
    case TrimKind::none: return 0;
    case TrimKind::fixed: return std::min(s.k, d);
    case TrimKind::log_schedule:
      return std::min(static_cast<std::int64_t>(std::ceil(std::log(static_cast<double>(n) + 2.0))), d);
  }
  return 0;
}

}  // namespace bskm
