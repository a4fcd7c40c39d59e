#pragma once

// Legendre distance-generating functions and the Bregman machinery built on them.
//
// Normalizations:
//   euclidean            theta(x) = 1/2 |x|^2
//   neg_entropy_simplex  theta(x) = sum x_i ln x_i   (0 ln 0 := 0), used on the open simplex
//   p_norm               theta(x) = (1/p) |x|_p^p,   p in (1, 2]
// A scaled geometry multiplies theta by a positive factor kappa. Scaling composes, so a
// geometry is always a base kind plus one accumulated factor.

#include "bskm/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>
#include <utility>

namespace bskm {

enum class GeometryKind { euclidean, neg_entropy_simplex, p_norm };

inline const char* to_string(GeometryKind k) {
  switch (k) {
    case GeometryKind::euclidean: return "euclidean";
    case GeometryKind::neg_entropy_simplex: return "neg_entropy_simplex";
    case GeometryKind::p_norm: return "p_norm";
  }
  return "?";
}

inline constexpr double kSimplexSumTol = 1e-9;
inline constexpr double kDefaultFloor = 1e-12;

struct LegendreGeometry {
  GeometryKind kind = GeometryKind::euclidean;
  double p = 2.0;          // exponent, p_norm only
  double factor = 1.0;     // kappa accumulated by scaled()
  double modulus_c = 0.5;  // delta(r) >= c r^q
  double modulus_q = 2.0;
  double floor = kDefaultFloor;  // interior safeguard epsilon (simplex)

  static LegendreGeometry euclidean() { return {}; }

  // Pinsker: KL(x,y) >= 1/2 |x-y|_1^2 >= 1/2 |x-y|_2^2, so c = 1/2, q = 2.
  static LegendreGeometry neg_entropy_simplex(double eps = kDefaultFloor) {
    LegendreGeometry g;
    g.kind = GeometryKind::neg_entropy_simplex;
    g.floor = eps;
    return g;
  }

  // Local modulus (p-1)/8 r^2 for small r.
  static LegendreGeometry p_norm(double p) {
    if (!(p > 1.0 && p <= 2.0)) throw ConfigError("p_norm requires p in (1, 2]");
    LegendreGeometry g;
    g.kind = GeometryKind::p_norm;
    g.p = p;
    g.modulus_c = (p - 1.0) / 8.0;
    return g;
  }

  bool is_scaled() const { return factor != 1.0; }

  std::string name() const {
    std::string base = to_string(kind);
    if (kind == GeometryKind::p_norm) base += "(p=" + shortest(p) + ")";
    if (is_scaled()) return "scaled(" + shortest(factor) + ", " + base + ")";
    return base;
  }
};

inline LegendreGeometry scaled(double kappa, LegendreGeometry base) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ConfigError("scale factor must be positive and finite");
  base.factor *= kappa;
  base.modulus_c *= kappa;
  return base;
}

namespace detail {

inline void check_simplex(const LegendreGeometry& g, const Eigen::Ref<const Vector>& x) {
  require_finite(x, "simplex point");
  if (x.minCoeff() < g.floor) throw DomainError("simplex point has a coordinate below the domain floor");
  if (std::abs(x.sum() - 1.0) > kSimplexSumTol) throw DomainError("simplex point does not sum to 1");
}

inline void check_positive(const Eigen::Ref<const Vector>& x) {
  require_finite(x, "entropy point");
  if (!(x.minCoeff() > 0.0)) throw DomainError("entropy point must be strictly positive");
}

inline double signed_pow(double v, double e) { return std::copysign(std::pow(std::abs(v), e), v); }

}  // namespace detail

inline bool in_domain(const LegendreGeometry& g, const Eigen::Ref<const Vector>& x) {
  if (x.size() < 1 || !x.allFinite()) return false;
  if (g.kind != GeometryKind::neg_entropy_simplex) return true;
  return x.minCoeff() >= g.floor && std::abs(x.sum() - 1.0) <= kSimplexSumTol;
}

/// theta(x). The entropy is evaluated in its orthant form, which agrees with the simplex form on the simplex.
inline double value(const LegendreGeometry& g, const Eigen::Ref<const Vector>& x) {
  require_finite(x, "value");
  switch (g.kind) {
    case GeometryKind::euclidean: return g.factor * 0.5 * x.squaredNorm();
    case GeometryKind::neg_entropy_simplex: {
      if (x.minCoeff() < 0.0) throw DomainError("entropy undefined for negative coordinates");
      double s = 0.0;
      for (double v : x) s += v > 0.0 ? v * std::log(v) : 0.0;
      return g.factor * s;
    }
    case GeometryKind::p_norm: return g.factor * x.array().abs().pow(g.p).sum() / g.p;
  }
  return 0.0;
}

inline DualVector grad(const LegendreGeometry& g, const Eigen::Ref<const Vector>& x) {
  require_finite(x, "grad");
  switch (g.kind) {
    case GeometryKind::euclidean: return g.factor * x;
    case GeometryKind::neg_entropy_simplex:
      detail::check_simplex(g, x);
      return g.factor * (1.0 + x.array().log()).matrix();
    case GeometryKind::p_norm: {
      DualVector u(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) u[i] = g.factor * detail::signed_pow(x[i], g.p - 1.0);
      return u;
    }
  }
  return x;
}

/// Inverse mirror map. On the simplex this is softmax(u / kappa); the shift by 1 cancels.
inline Vector grad_conjugate(const LegendreGeometry& g, const Eigen::Ref<const DualVector>& u) {
  require_finite(u, "grad_conjugate");
  switch (g.kind) {
    case GeometryKind::euclidean: return u / g.factor;
    case GeometryKind::neg_entropy_simplex: return softmax(u / g.factor);
    case GeometryKind::p_norm: {
      Vector x(u.size());
      for (Eigen::Index i = 0; i < u.size(); ++i) x[i] = detail::signed_pow(u[i] / g.factor, 1.0 / (g.p - 1.0));
      return x;
    }
  }
  return u;
}

/// D(x, y) = theta(x) - theta(y) - <grad theta(y), x - y>, evaluated in closed form per kind.
///
/// For the entropy the orthant form sum x ln(x/y) - x + y is used. It equals KL(x || y) when both
/// points lie on the simplex, and stays a valid divergence for strictly positive points off it
/// (needed when measuring Euclidean iterates in the entropy geometry).
inline double bregman(const LegendreGeometry& g, const Eigen::Ref<const Vector>& x,
                      const Eigen::Ref<const Vector>& y) {
  require_finite(x, "bregman");
  require_finite(y, "bregman");
  require_dim(y, x.size());
  double s = 0.0;
  switch (g.kind) {
    case GeometryKind::euclidean: s = 0.5 * (x - y).squaredNorm(); break;
    case GeometryKind::neg_entropy_simplex:
      detail::check_positive(x);
      detail::check_positive(y);
      for (Eigen::Index i = 0; i < x.size(); ++i) s += x[i] * std::log(x[i] / y[i]) - x[i] + y[i];
      break;
    case GeometryKind::p_norm: {
      const double p = g.p;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double gy = detail::signed_pow(y[i], p - 1.0);
        s += std::pow(std::abs(x[i]), p) / p - std::pow(std::abs(y[i]), p) / p - gy * (x[i] - y[i]);
      }
      break;
    }
  }
  return g.factor * s;
}

/// |D(x,z) - D(x,y) - D(y,z) + <grad(z) - grad(y), x - y>|. Zero up to rounding for any valid triple.
/// (Expanding the three distances fixes the sign: x=0, y=1, z=2 on the line gives 2 = 1/2 + 1/2 + 1.)
inline double three_point_defect(const LegendreGeometry& g, const Eigen::Ref<const Vector>& x,
                                 const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Vector>& z) {
  const double lhs = bregman(g, x, z);
  const double rhs = bregman(g, x, y) + bregman(g, y, z) - (grad(g, z) - grad(g, y)).dot(x - y);
  return std::abs(lhs - rhs);
}

inline double modulus_lower_bound(const LegendreGeometry& g, double r) {
  return g.modulus_c * std::pow(r, g.modulus_q);
}

/// p = (q - 1) / q.
inline double rate_exponent(const LegendreGeometry& g) { return (g.modulus_q - 1.0) / g.modulus_q; }

/// Lipschitz constant of grad theta near x: kappa for euclidean, kappa / min x_i on the simplex,
/// kappa (p-1) min|x_i|^(p-2) for p_norm (floored away from zero).
inline double gradient_lipschitz(const LegendreGeometry& g, const Eigen::Ref<const Vector>& x) {
  switch (g.kind) {
    case GeometryKind::euclidean: return g.factor;
    case GeometryKind::neg_entropy_simplex: return g.factor / std::max(x.minCoeff(), g.floor);
    case GeometryKind::p_norm: {
      const double m = std::max(x.array().abs().minCoeff(), g.floor);
      return g.factor * (g.p - 1.0) * std::pow(m, g.p - 2.0);
    }
  }
  return g.factor;
}

struct Safeguarded {
  Vector point;
  int clamped = 0;
};

/// Pulls a point back into the domain interior. On the simplex: coordinates below the floor are set
/// to it exactly and the remaining mass is spread proportionally over the others. Other kinds have
/// full-space domains and pass through.
inline Safeguarded safeguard(const LegendreGeometry& g, Vector x) {
  require_finite(x, "safeguard");
  Safeguarded out;
  if (g.kind == GeometryKind::neg_entropy_simplex) {
    const auto d = x.size();
    if (static_cast<double>(d) * g.floor >= 1.0) throw DomainError("domain floor too large for this dimension");
    std::vector<bool> pinned(static_cast<std::size_t>(d), false);
    for (Eigen::Index i = 0; i < d; ++i) {
      if (x[i] < g.floor) {
        pinned[static_cast<std::size_t>(i)] = true;
        ++out.clamped;
      }
    }
    // Rescaling the free coordinates can push another one under the floor; pin it and repeat.
    for (bool changed = true; changed;) {
      changed = false;
      double free_mass = 0.0;
      Eigen::Index n_pinned = 0;
      for (Eigen::Index i = 0; i < d; ++i) {
        if (pinned[static_cast<std::size_t>(i)]) ++n_pinned;
        else free_mass += x[i];
      }
      if (n_pinned == d) {
        x.setConstant(1.0 / static_cast<double>(d));
        break;
      }
      const double target = 1.0 - static_cast<double>(n_pinned) * g.floor;
      for (Eigen::Index i = 0; i < d; ++i) {
        if (pinned[static_cast<std::size_t>(i)]) continue;
        if (x[i] * target / free_mass < g.floor) {
          pinned[static_cast<std::size_t>(i)] = true;
          changed = true;
        }
      }
      if (!changed) {
        for (Eigen::Index i = 0; i < d; ++i)
          x[i] = pinned[static_cast<std::size_t>(i)] ? g.floor : std::max(x[i] * target / free_mass, g.floor);
      }
    }
  }
  out.point = std::move(x);
  return out;
}

/// Time-varying geometry theta_n = kappa_n * theta with kappa_n held in [lower, upper].
struct GeometrySchedule {
  LegendreGeometry base;
  std::function<double(std::int64_t)> scale_fn = [](std::int64_t) { return 1.0; };
  double lower = 1.0;
  double upper = 1.0;
  std::string description = "constant(1)";

  /// kappa_n = 1 + amplitude / (n + 1), bounded by [1, 1 + amplitude].
  static GeometrySchedule harmonic_decay(LegendreGeometry base, double amplitude = 1.0) {
    if (!(amplitude >= 0.0)) throw ConfigError("harmonic_decay amplitude must be nonnegative");
    GeometrySchedule s;
    s.base = base;
    s.scale_fn = [amplitude](std::int64_t n) { return 1.0 + amplitude / static_cast<double>(n + 1); };
    s.lower = 1.0;
    s.upper = 1.0 + amplitude;
    s.description = "harmonic_decay(" + shortest(amplitude) + ")";
    return s;
  }

  static GeometrySchedule constant(LegendreGeometry base, double kappa = 1.0) {
    GeometrySchedule s;
    s.base = base;
    s.scale_fn = [kappa](std::int64_t) { return kappa; };
    s.lower = kappa;
    s.upper = kappa;
    s.description = "constant(" + shortest(kappa) + ")";
    return s;
  }
};

inline LegendreGeometry geometry_at(const GeometrySchedule& sched, std::int64_t n) {
  if (!(sched.lower > 0.0) || sched.lower > sched.upper)
    throw ConfigError("geometry schedule needs 0 < lower <= upper");
  const double k = sched.scale_fn(n);
  if (!std::isfinite(k)) throw ConfigError("geometry schedule produced a non-finite scale");
  return scaled(std::clamp(k, sched.lower, sched.upper), sched.base);
}

}  // namespace bskm
