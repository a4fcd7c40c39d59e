#pragma once

// Diagnostics over iteration traces: step sums A_N, the step-weighted averaged residual, log-log
// rate fits against A_N, an envelope test for the A_N^-p bound shape, and a Monte-Carlo check of
// the one-step Bregman decrease inequality.

#include "bskm/core.hpp"
#include "bskm/geometry.hpp"
#include "bskm/iteration.hpp"
#include "bskm/noise.hpp"
#include "bskm/operators.hpp"
#include "bskm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <variant>

namespace bskm {

/// A_N = sum_{n<N} a_n by direct summation.
inline double step_sum(const StepSchedule& s, std::int64_t N) {
  if (N < 1) throw ConfigError("step_sum needs N >= 1");
  double sum = 0.0;
  for (std::int64_t n = 0; n < N; ++n) sum += step_size(s, n);
  return sum;
}

/// (1 / A_N) sum_{n<N} a_n D_n over the recorded rows with n < N. With stride > 1 only the recorded
/// rows contribute (their own a_n as weights), which approximates the full sum.
inline double averaged_residual(const Trace& t, std::int64_t N) {
  if (N < 1) throw InsufficientTrace("averaged_residual needs N >= 1");
  if (t.rows.empty() || t.rows.back().n < N - 1)
    throw InsufficientTrace("trace does not cover " + std::to_string(N) + " iterations");
  double weights = 0.0, weighted = 0.0;
  for (const TraceRow& r : t.rows) {
    if (r.n >= N) break;
    weights += r.alpha;
    weighted += r.alpha * r.bregman_residual;
  }
  return weighted / weights;
}

struct RateFit {
  double fitted_slope = 0.0;
  double intercept = 0.0;
  double theoretical_p = 0.5;
  std::int64_t n_start = 0;
  std::int64_t n_end = 0;
  double r_squared = 0.0;
};

/// Least-squares slope of ln avg_residual against ln step_sum over the last `window_fraction` of rows.
inline RateFit fit_rate(const Trace& t, double p_theoretical, double window_fraction) {
  if (t.rows.size() < 100) throw ConfigError("fit_rate needs at least 100 trace rows");
  if (!(window_fraction > 0.0 && window_fraction <= 1.0)) throw ConfigError("window_fraction must lie in (0, 1]");
  const std::size_t total = t.rows.size();
  const auto count = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::ceil(window_fraction * static_cast<double>(total))));
  const std::size_t first = total - std::min(count, total);

  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  const auto m = static_cast<double>(total - first);
  for (std::size_t i = first; i < total; ++i) {
    const TraceRow& r = t.rows[i];
    if (!(r.avg_residual > 0.0)) throw DegenerateFit("avg_residual is not positive inside the fit window");
    if (!(r.step_sum > 0.0)) throw DegenerateFit("step_sum is not positive inside the fit window");
    const double x = std::log(r.step_sum), y = std::log(r.avg_residual);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double cxx = sxx - sx * sx / m, cxy = sxy - sx * sy / m, cyy = syy - sy * sy / m;
  if (!(cxx > 0.0)) throw DegenerateFit("step_sum is constant inside the fit window");

  RateFit fit;
  fit.fitted_slope = cxy / cxx;
  fit.intercept = (sy - fit.fitted_slope * sx) / m;
  fit.theoretical_p = p_theoretical;
  fit.n_start = t.rows[first].n;
  fit.n_end = t.rows.back().n;
  fit.r_squared = cyy > 0.0 ? (cxy * cxy) / (cxx * cyy) : 1.0;
  return fit;
}

/// Calibrates C on the first 10% of rows as max avg_n A_n^p / (1 + S_n), S_n = sum_{m<=n} a_m^2,
/// then requires avg_n <= 1.5 C (1 + S_n) / A_n^p on every later row.
inline bool bound_envelope_check(const Trace& t, double p) {
  if (t.rows.size() < 100) throw ConfigError("bound_envelope_check needs at least 100 trace rows");
  const std::size_t calib = static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(t.rows.size())));
  double sum_sq = 0.0, c = 0.0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const TraceRow& r = t.rows[i];
    sum_sq += r.alpha * r.alpha;
    const double scale = (1.0 + sum_sq) / std::pow(r.step_sum, p);
    if (i < calib) {
      c = std::max(c, r.avg_residual / scale);
    } else if (r.avg_residual > 1.5 * c * scale) {
      return false;
    }
  }
  return true;
}

struct DescentCheckReport {
  std::int64_t n_probe = 0;
  std::int64_t trials = 0;
  double alpha = 0.0;
  double residual_now = 0.0;  // D_n
  double lhs_mean = 0.0;      // mean D_{n+1} + 1/2 delta(|x_n - T x_n|) a_n
  double rhs = 0.0;           // (1 + L a_n^2) D_n + sigma^2 a_n^2
  double standard_error = 0.0;
  double fitted_L = 0.0;
  double fitted_sigma2 = 0.0;
  bool satisfied = false;
};

/// Monte-Carlo test of E[D_{n+1} | F_n] + 1/2 delta(|x_n - T x_n|) a_n <= (1 + L a_n^2) D_n + sigma^2 a_n^2.
///
/// The path to x_n uses the config's own noise stream. Each continuation draws from a separate
/// stream keyed by (seed, trial). sigma^2 is the empirical second moment of the dual-space
/// perturbation; L is the geometry's local gradient-Lipschitz constant at x_n.
inline DescentCheckReport descent_check(const IterationConfig& c, std::int64_t n_probe, std::int64_t trials) {
  const auto* fixed = std::get_if<LegendreGeometry>(&c.geometry);
  if (!fixed) throw ConfigError("descent_check requires a fixed geometry, not a schedule");
  if (trials < 1000) throw ConfigError("descent_check needs at least 1000 trials");
  if (n_probe < 0) throw ConfigError("n_probe must be nonnegative");
  const LegendreGeometry& g = *fixed;

  Vector x = initial_point(c);
  if (n_probe > 0) {
    IterationConfig prefix = c;
    prefix.n_iters = n_probe;
    prefix.record_every = n_probe;
    x = run(prefix).final_iterate;
  }

  const double alpha = step_size(c.steps, n_probe);
  const std::int64_t k = trim_level(c.trim, n_probe, static_cast<std::int64_t>(c.op.dim));
  const Vector tx = apply(c.op, x);

  DescentCheckReport rep;
  rep.n_probe = n_probe;
  rep.trials = trials;
  rep.alpha = alpha;
  rep.residual_now = bregman(g, x, tx);
  rep.fitted_L = gradient_lipschitz(g, x);

  // Welford accumulation of D_{n+1}.
  double mean = 0.0, m2 = 0.0, second_moment = 0.0;
  for (std::int64_t t = 0; t < trials; ++t) {
    RngStream rng(derive_seed(c.seed, static_cast<std::uint64_t>(t)), c.noise.seed ^ 0xdecadeULL);
    const Vector u = sample(c.noise, rng, c.op.dim);
    const StepResult step = skm_update(g, c.op, x, alpha, u, k, c.noise.space, true);
    const double next = bregman(g, step.next, apply(c.op, step.next));
    const double delta = next - mean;
    mean += delta / static_cast<double>(t + 1);
    m2 += delta * (next - mean);
    second_moment += step.dual_noise.squaredNorm();
  }
  const auto n = static_cast<double>(trials);
  rep.fitted_sigma2 = second_moment / n;
  rep.standard_error = std::sqrt(m2 / (n - 1.0) / n);
  rep.lhs_mean = mean + 0.5 * modulus_lower_bound(g, (x - tx).norm()) * alpha;
  rep.rhs = (1.0 + rep.fitted_L * alpha * alpha) * rep.residual_now + rep.fitted_sigma2 * alpha * alpha;
  rep.satisfied = rep.lhs_mean <= rep.rhs + 3.0 * rep.standard_error;
  return rep;
}

}  // namespace bskm
