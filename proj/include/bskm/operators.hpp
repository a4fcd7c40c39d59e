#pragma once

// Nonexpansive maps with fixed points: the softmax policy map, an averaged affine map with a
// closed-form fixed point, and the identity. Plus an empirical Lipschitz probe and a
// deterministic Krasnoselskii-Mann fixed-point oracle.

#include "bskm/core.hpp"
#include "bskm/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>

namespace bskm {

enum class OperatorKind { softmax_policy, affine_average, identity };

inline const char* to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::softmax_policy: return "softmax_policy";
    case OperatorKind::affine_average: return "affine_average";
    case OperatorKind::identity: return "identity";
  }
  return "?";
}

/// Largest singular value of m, by power iteration on m^T m from a fixed start.
inline double operator_norm_estimate(const Matrix& m, int iters = 500) {
  if (m.size() == 0) return 0.0;
  Vector v = Vector::Ones(m.cols()) / std::sqrt(static_cast<double>(m.cols()));
  double sigma = 0.0;
  for (int i = 0; i < iters; ++i) {
    Vector w = m.transpose() * (m * v);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    sigma = std::sqrt(nw);
  }
  return sigma;
}

struct OperatorSpec {
  OperatorKind kind = OperatorKind::identity;
  Eigen::Index dim = 1;
  Matrix matrix;  // A (softmax_policy) or M (affine_average)
  double eta = 1.0;
  Vector offset;  // b (affine_average)
  double lambda = 1.0;

  static OperatorSpec identity(Eigen::Index dim) {
    if (dim < 1) throw ConfigError("operator dim must be >= 1");
    OperatorSpec op;
    op.dim = dim;
    return op;
  }

  /// T(x) = softmax(eta A x).
  static OperatorSpec softmax_policy(Matrix a, double eta) {
    if (a.rows() != a.cols() || a.rows() < 1) throw ConfigError("softmax_policy matrix must be square and nonempty");
    if (!(eta > 0.0)) throw ConfigError("softmax_policy eta must be positive");
    if (!a.allFinite()) throw ConfigError("softmax_policy matrix has non-finite entries");
    OperatorSpec op;
    op.kind = OperatorKind::softmax_policy;
    op.dim = a.rows();
    op.matrix = std::move(a);
    op.eta = eta;
    return op;
  }

  /// T(x) = (1 - lambda) x + lambda (M x + b), with |M|_2 <= 1.
  static OperatorSpec affine_average(Matrix m, Vector b, double lambda) {
    if (m.rows() != m.cols() || m.rows() < 1) throw ConfigError("affine_average matrix must be square and nonempty");
    if (b.size() != m.rows()) throw ConfigError("affine_average offset has the wrong dimension");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("affine_average lambda must lie in [0, 1]");
    if (operator_norm_estimate(m) > 1.0 + 1e-9) throw ConfigError("affine_average matrix is not nonexpansive");
    OperatorSpec op;
    op.kind = OperatorKind::affine_average;
    op.dim = m.rows();
    op.matrix = std::move(m);
    op.offset = std::move(b);
    op.lambda = lambda;
    return op;
  }

  /// Whether the natural domain is the probability simplex.
  bool simplex_valued() const { return kind == OperatorKind::softmax_policy; }
};

inline Vector apply(const OperatorSpec& op, const Eigen::Ref<const Vector>& x) {
  require_dim(x, op.dim);
  require_finite(x, "operator input");
  switch (op.kind) {
    case OperatorKind::identity: return x;
    case OperatorKind::softmax_policy: return softmax(op.eta * (op.matrix * x));
    case OperatorKind::affine_average:
      return (1.0 - op.lambda) * x + op.lambda * (op.matrix * x + op.offset);
  }
  return x;
}

/// Uniform point on the simplex, the starting point for every simplex-valued run.
inline Vector uniform_point(Eigen::Index dim) {
  return Vector::Constant(dim, 1.0 / static_cast<double>(dim));
}

/// max |T(x) - T(y)| / |x - y| over sampled pairs. Pairs come from the simplex for the softmax map
/// and from a standard normal otherwise.
inline double nonexpansiveness_probe(const OperatorSpec& op, int trials, std::uint64_t seed) {
  if (trials < 1) throw ConfigError("probe needs at least one trial");
  RngStream rng(seed, 0x70726f6265ULL);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    Vector x, y;
    if (op.simplex_valued()) {
      x = rng.simplex_point(op.dim);
      y = rng.simplex_point(op.dim);
    } else {
      x = rng.normal_vector(op.dim);
      y = rng.normal_vector(op.dim);
    }
    const double dx = (x - y).norm();
    if (dx == 0.0) continue;
    worst = std::max(worst, (apply(op, x) - apply(op, y)).norm() / dx);
  }
  return worst;
}

struct FixedPointRef {
  Vector point;
  double residual_norm = 0.0;
  std::int64_t iterations_used = 0;
};

struct NoConvergence : Error {
  FixedPointRef best;
  NoConvergence(FixedPointRef b, double tol)
      : Error("fixed-point oracle: residual " + std::to_string(b.residual_norm) + " above tolerance " +
              std::to_string(tol)),
        best(std::move(b)) {}
};

/// Noise-free Euclidean KM with alpha = 1/2 from the uniform point, until |x - T x|_2 <= tol.
inline FixedPointRef fixed_point_oracle(const OperatorSpec& op, double tol, std::int64_t max_iter = 1'000'000) {
  if (!(tol > 0.0)) throw ConfigError("oracle tolerance must be positive");
  Vector x = uniform_point(op.dim);
  FixedPointRef best{x, std::numeric_limits<double>::infinity(), 0};
  for (std::int64_t it = 0;; ++it) {
    const Vector tx = apply(op, x);
    const double r = (x - tx).norm();
    if (r < best.residual_norm) best = {x, r, it};
    if (r <= tol) return best;
    if (it >= max_iter) throw NoConvergence(best, tol);
    x = 0.5 * x + 0.5 * tx;
  }
}

/// Solves (I - M) x = b; the fixed point of the averaged affine map for any lambda > 0.
inline Vector affine_fixed_point(const OperatorSpec& op) {
  if (op.kind != OperatorKind::affine_average) throw ConfigError("affine_fixed_point needs an affine_average operator");
  const Matrix lhs = Matrix::Identity(op.dim, op.dim) - op.matrix;
  return lhs.fullPivLu().solve(op.offset);
}

/// Softmax policy instance built from a seeded Gaussian matrix.
struct PolicyInstance {
  OperatorSpec op;
  double scale = 1.0;  // multiplier applied to the raw Gaussian matrix
  double probe = 0.0;  // nonexpansiveness_probe of the final operator
  bool auto_scaled = false;
};

struct PolicyOptions {
  Eigen::Index dim = 10;
  double eta = 2.0;
  std::uint64_t matrix_seed = 0;
  std::optional<double> scale;  // empty: pick the largest scale that passes the probe
  int probe_trials = 10'000;
  std::uint64_t probe_seed = 0x5eed;
};

/// A_raw ~ N(0, 1) entrywise; with automatic scaling, bisects for the largest multiplier whose
/// probe value stays <= 1.
inline PolicyInstance make_softmax_policy(const PolicyOptions& opt) {
  if (opt.dim < 1) throw ConfigError("operator dim must be >= 1");
  RngStream rng(opt.matrix_seed, 0x6d6174726978ULL);
  Matrix raw(opt.dim, opt.dim);
  for (Eigen::Index j = 0; j < raw.cols(); ++j)
    for (Eigen::Index i = 0; i < raw.rows(); ++i) raw(i, j) = rng.normal();

  auto probe_at = [&](double s) {
    return nonexpansiveness_probe(OperatorSpec::softmax_policy(s * raw, opt.eta), opt.probe_trials, opt.probe_seed);
  };

  PolicyInstance inst;
  if (opt.scale) {
    inst.scale = *opt.scale;
  } else {
    inst.auto_scaled = true;
    double lo = 0.0, hi = 1.0;
    while (probe_at(hi) <= 1.0 && hi < 1e6) {
      lo = hi;
      hi *= 2.0;
    }
    for (int i = 0; i < 40; ++i) {
      const double mid = 0.5 * (lo + hi);
      (probe_at(mid) <= 1.0 ? lo : hi) = mid;
    }
    inst.scale = lo;
  }
  inst.op = OperatorSpec::softmax_policy(inst.scale * raw, opt.eta);
  inst.probe = nonexpansiveness_probe(inst.op, opt.probe_trials, opt.probe_seed);
  return inst;
}

struct AffineOptions {
  Eigen::Index dim = 10;
  std::uint64_t matrix_seed = 0;
  double norm = 1.0;  // spectral norm of M
  double lambda = 0.5;
};

/// M = norm * G / |G|_2 and b ~ N(0, I) from one seeded stream.
inline OperatorSpec make_affine_average(const AffineOptions& opt) {
  if (opt.dim < 1) throw ConfigError("operator dim must be >= 1");
  if (!(opt.norm >= 0.0 && opt.norm <= 1.0)) throw ConfigError("affine_average norm must lie in [0, 1]");
  RngStream rng(opt.matrix_seed, 0x616666696e65ULL);
  Matrix g(opt.dim, opt.dim);
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.normal();
  const double top = Eigen::JacobiSVD<Matrix>(g).singularValues()(0);
  Matrix m = top > 0.0 ? Matrix(opt.norm * g / top) : g;
  Vector b = rng.normal_vector(opt.dim);
  return OperatorSpec::affine_average(std::move(m), std::move(b), opt.lambda);
}

}  // namespace bskm
