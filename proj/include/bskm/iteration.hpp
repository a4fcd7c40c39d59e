#pragma once

// Bregman stochastic Krasnoselskii-Mann iteration:
//
//   x_{n+1} = grad theta_n^* ( (1 - a_n) grad theta_n(x_n) + a_n grad theta_n(T x_n + u_n) )
//
// with a fixed geometry, a time-varying geometry schedule, and optional trimming of u_n.

#include "bskm/core.hpp"
#include "bskm/geometry.hpp"
#include "bskm/noise.hpp"
#include "bskm/operators.hpp"
#include "bskm/rng.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace bskm {

enum class StepKind { harmonic_offset, polynomial, constant };

inline constexpr double kMaxStep = 1.0 - 1e-9;

struct StepSchedule {
  StepKind kind = StepKind::harmonic_offset;
  double a = 10.0;      // harmonic_offset: 1 / (n + a)
  double gamma = 1.0;   // polynomial: (n + 1)^-gamma
  double alpha = 0.5;   // constant

  static StepSchedule harmonic_offset(double a) {
    if (!(a > 1.0)) throw ConfigError("harmonic_offset requires a > 1");
    StepSchedule s;
    s.a = a;
    return s;
  }
  static StepSchedule polynomial(double gamma) {
    if (!(gamma > 0.5 && gamma <= 1.0)) throw ConfigError("polynomial step requires gamma in (1/2, 1]");
    StepSchedule s;
    s.kind = StepKind::polynomial;
    s.gamma = gamma;
    return s;
  }
  static StepSchedule constant(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("constant step requires alpha in (0, 1)");
    StepSchedule s;
    s.kind = StepKind::constant;
    s.alpha = alpha;
    return s;
  }

  /// Sum a_n = inf and sum a_n^2 < inf.
  bool robbins_monro() const { return kind != StepKind::constant; }

  std::string name() const {
    switch (kind) {
      case StepKind::harmonic_offset: return "harmonic_offset(" + shortest(a) + ")";
      case StepKind::polynomial: return "polynomial(" + shortest(gamma) + ")";
      case StepKind::constant: return "constant(" + shortest(alpha) + ")";
    }
    return "?";
  }
};

inline double step_size(const StepSchedule& s, std::int64_t n) {
  switch (s.kind) {
    case StepKind::harmonic_offset:
      if (!(s.a > 1.0)) throw ConfigError("harmonic_offset requires a > 1");
      return 1.0 / (static_cast<double>(n) + s.a);
    case StepKind::polynomial:
      // (0 + 1)^-gamma = 1 sits on the boundary of (0, 1).
      return std::min(std::pow(static_cast<double>(n) + 1.0, -s.gamma), kMaxStep);
    case StepKind::constant: return s.alpha;
  }
  return 0.0;
}

struct StepResult {
  Vector next;
  DualVector dual_noise;  // grad theta(T x + u) - grad theta(T x) (+ u in dual mode): the a_n-free perturbation
  int clamped = 0;        // coordinates pulled up to the domain floor during this step
};

/// One update with full diagnostics. Noise is trimmed first, then enters either the primal image
/// point or its dual image, according to `space`.
inline StepResult skm_update(const LegendreGeometry& g, const OperatorSpec& op, const Eigen::Ref<const Vector>& x,
                             double alpha, const Eigen::Ref<const Vector>& noise_vec, std::int64_t k,
                             NoiseSpace space = NoiseSpace::primal, bool want_dual_noise = false) {
  require_dim(noise_vec, x.size());
  const Vector tx = apply(op, x);
  const Vector kept = trim(noise_vec, k);

  StepResult out;
  Safeguarded y = safeguard(g, space == NoiseSpace::primal ? Vector(tx + kept) : tx);
  out.clamped += y.clamped;

  DualVector gy = grad(g, y.point);
  if (space == NoiseSpace::dual) gy += kept;
  if (want_dual_noise) {
    if (space == NoiseSpace::dual) {
      out.dual_noise = kept;
    } else {
      // Perturbation measured against the clean image point, safeguarded the same way.
      out.dual_noise = gy - grad(g, safeguard(g, tx).point);
    }
  }

  const DualVector mixed = (1.0 - alpha) * grad(g, x) + alpha * gy;
  Safeguarded next = safeguard(g, grad_conjugate(g, mixed));
  out.clamped += next.clamped;
  out.next = std::move(next.point);
  return out;
}

inline Vector skm_step(const LegendreGeometry& g, const OperatorSpec& op, const Eigen::Ref<const Vector>& x,
                       double alpha, const Eigen::Ref<const Vector>& noise_vec, std::int64_t k,
                       NoiseSpace space = NoiseSpace::primal) {
  return skm_update(g, op, x, alpha, noise_vec, k, space).next;
}

/// |skm_step(euclidean) - ((1 - a) x + a (T x + u))|_inf.
inline double hilbert_equivalence_check(const OperatorSpec& op, const Eigen::Ref<const Vector>& x, double alpha,
                                        const Eigen::Ref<const Vector>& noise_vec) {
  const Vector stepped = skm_step(LegendreGeometry::euclidean(), op, x, alpha, noise_vec, 0);
  const Vector closed = (1.0 - alpha) * x + alpha * (apply(op, x) + noise_vec);
  return (stepped - closed).cwiseAbs().maxCoeff();
}

using GeometryChoice = std::variant<LegendreGeometry, GeometrySchedule>;

struct IterationConfig {
  OperatorSpec op;
  GeometryChoice geometry = LegendreGeometry::euclidean();
  StepSchedule steps;
  NoiseModel noise;
  TrimSchedule trim;
  std::int64_t n_iters = 1000;
  std::optional<Vector> init;  // empty: uniform point
  std::uint64_t seed = 0;
  std::int64_t record_every = 0;  // 0: 1 up to 1e4 iterations, 10 beyond
  // Geometry the residual is measured in. Empty: the geometry in effect at each step.
  std::optional<LegendreGeometry> metric;
};

inline LegendreGeometry geometry_for(const IterationConfig& c, std::int64_t n) {
  if (const auto* fixed = std::get_if<LegendreGeometry>(&c.geometry)) return *fixed;
  return geometry_at(std::get<GeometrySchedule>(c.geometry), n);
}

inline std::int64_t record_stride(const IterationConfig& c) {
  if (c.record_every > 0) return c.record_every;
  return c.n_iters <= 10'000 ? 1 : 10;
}

inline Vector initial_point(const IterationConfig& c) { return c.init ? *c.init : uniform_point(c.op.dim); }

/// Per-run noise stream: (run seed, noise seed) select an independent substream.
inline RngStream noise_stream(const IterationConfig& c) { return RngStream(c.seed, c.noise.seed); }

/// Row n describes iterate x_n. step_sum and avg_residual include row n itself:
/// step_sum = A_{n+1} = sum_{m<=n} a_m, avg_residual = (1 / A_{n+1}) sum_{m<=n} a_m D_m.
struct TraceRow {
  std::int64_t n = 0;
  double alpha = 0.0;
  double bregman_residual = 0.0;
  double norm_residual = 0.0;
  double step_sum = 0.0;
  double avg_residual = 0.0;
  double dist_to_ref = std::numeric_limits<double>::quiet_NaN();
  std::int64_t clamp_count = 0;  // cumulative
};

struct Trace {
  std::vector<TraceRow> rows;
  Vector final_iterate;
  double final_bregman_residual = 0.0;
  double final_norm_residual = 0.0;
  double final_dist_to_ref = std::numeric_limits<double>::quiet_NaN();
  std::int64_t n_iters = 0;
  std::int64_t stride = 1;
  std::int64_t total_clamps = 0;
  bool diverged = false;

  /// Averaged residual over all n_iters steps (the last row's running value).
  double final_avg_residual() const { return rows.empty() ? 0.0 : rows.back().avg_residual; }
};

inline constexpr double kDivergenceBound = 1e12;

struct Diverged : Error {
  Trace trace;
  explicit Diverged(Trace t)
      : Error("iteration diverged after " + std::to_string(t.rows.empty() ? 0 : t.rows.back().n) + " steps"),
        trace(std::move(t)) {}
};

inline Trace run(const IterationConfig& c, const std::optional<FixedPointRef>& ref = std::nullopt) {
  if (c.n_iters < 1) throw ConfigError("n_iters must be >= 1");
  Vector x = initial_point(c);
  require_dim(x, c.op.dim);
  if (!in_domain(geometry_for(c, 0), x)) throw DomainError("initial point is outside the geometry's domain");
  if (ref) require_dim(ref->point, c.op.dim);

  RngStream rng = noise_stream(c);
  const std::int64_t stride = record_stride(c);
  const auto d = static_cast<std::int64_t>(c.op.dim);

  Trace trace;
  trace.n_iters = c.n_iters;
  trace.stride = stride;
  trace.rows.reserve(static_cast<std::size_t>(c.n_iters / stride + 2));

  double step_sum = 0.0, weighted = 0.0;
  std::int64_t clamps = 0;
  for (std::int64_t n = 0; n < c.n_iters; ++n) {
    const LegendreGeometry g = geometry_for(c, n);
    const LegendreGeometry& metric = c.metric ? *c.metric : g;
    const Vector tx = apply(c.op, x);
    const double res = bregman(metric, x, tx);
    const double alpha = step_size(c.steps, n);
    step_sum += alpha;
    weighted += alpha * res;

    if (n % stride == 0 || n + 1 == c.n_iters) {
      TraceRow row;
      row.n = n;
      row.alpha = alpha;
      row.bregman_residual = res;
      row.norm_residual = (x - tx).norm();
      row.step_sum = step_sum;
      row.avg_residual = weighted / step_sum;
      if (ref) row.dist_to_ref = (x - ref->point).lpNorm<1>();
      row.clamp_count = clamps;
      trace.rows.push_back(row);
    }

    const Vector u = sample(c.noise, rng, c.op.dim);
    const std::int64_t k = trim_level(c.trim, n, d);
    StepResult step = skm_update(g, c.op, x, alpha, u, k, c.noise.space);
    clamps += step.clamped;
    if (!step.next.allFinite() || step.next.cwiseAbs().maxCoeff() > kDivergenceBound) {
      trace.final_iterate = x;
      trace.total_clamps = clamps;
      trace.diverged = true;
      throw Diverged(std::move(trace));
    }
    x = std::move(step.next);
  }

  const LegendreGeometry g_end = geometry_for(c, c.n_iters);
  const Vector tx = apply(c.op, x);
  trace.final_bregman_residual = bregman(c.metric ? *c.metric : g_end, x, tx);
  trace.final_norm_residual = (x - tx).norm();
  if (ref) trace.final_dist_to_ref = (x - ref->point).lpNorm<1>();
  trace.final_iterate = std::move(x);
  trace.total_clamps = clamps;
  return trace;
}

}  // namespace bskm
