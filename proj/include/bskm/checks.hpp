#pragma once

// Seeded invariant suites behind `skm check <suite>`.

#include "bskm/analysis.hpp"
#include "bskm/experiment.hpp"
#include "bskm/geometry.hpp"
#include "bskm/iteration.hpp"
#include "bskm/noise.hpp"
#include "bskm/operators.hpp"
#include "bskm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace bskm {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

inline const std::vector<std::string> kCheckSuites = {"geometry", "descent", "trim", "hilbert"};

namespace detail {

inline CheckResult worst_below(std::string name, double worst, double tol) {
  return {std::move(name), worst < tol, "max " + format_sci(worst, 3) + " (tol " + format_sci(tol, 0) + ")"};
}

// Random point in the domain interior of g.
inline Vector domain_point(const LegendreGeometry& g, RngStream& rng, Eigen::Index d) {
  if (g.kind == GeometryKind::neg_entropy_simplex) return 0.9 * rng.simplex_point(d) + 0.1 * uniform_point(d);
  return rng.normal_vector(d);
}

}  // namespace detail

inline std::vector<CheckResult> check_geometry(int trials = 1000, std::uint64_t seed = 11) {
  std::vector<CheckResult> out;
  const std::vector<LegendreGeometry> geoms = {LegendreGeometry::euclidean(), LegendreGeometry::neg_entropy_simplex(),
                                               LegendreGeometry::p_norm(1.5), scaled(2.0, LegendreGeometry::neg_entropy_simplex())};
  for (const auto& g : geoms) {
    RngStream rng(seed, static_cast<std::uint64_t>(g.kind));
    double defect = 0.0, round_trip = 0.0, self = 0.0, negative = 0.0;
    for (int t = 0; t < trials; ++t) {
      const Eigen::Index d = 2 + t % 9;
      const Vector x = detail::domain_point(g, rng, d), y = detail::domain_point(g, rng, d),
                   z = detail::domain_point(g, rng, d);
      defect = std::max(defect, three_point_defect(g, x, y, z));
      round_trip = std::max(round_trip, (grad_conjugate(g, grad(g, x)) - x).cwiseAbs().maxCoeff());
      self = std::max(self, std::abs(bregman(g, x, x)));
      negative = std::max(negative, -bregman(g, x, y));
    }
    const std::string tag = g.name();
    out.push_back(detail::worst_below(tag + ": three-point identity", defect, 1e-10));
    out.push_back(detail::worst_below(tag + ": conjugate round trip", round_trip, 1e-8));
    out.push_back(detail::worst_below(tag + ": D(x, x) = 0", self, 1e-12));
    out.push_back(detail::worst_below(tag + ": D >= 0", std::max(negative, 0.0), 1e-12));
  }

  RngStream rng(seed, 0x6b6c);
  double kl = 0.0, half = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Eigen::Index d = 2 + t % 9;
    const Vector x = 0.9 * rng.simplex_point(d) + 0.1 * uniform_point(d);
    const Vector y = 0.9 * rng.simplex_point(d) + 0.1 * uniform_point(d);
    double direct = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) direct += x[i] * std::log(x[i] / y[i]);
    kl = std::max(kl, std::abs(bregman(LegendreGeometry::neg_entropy_simplex(), x, y) - direct));
    const Vector a = rng.normal_vector(d), b = rng.normal_vector(d);
    half = std::max(half, std::abs(bregman(LegendreGeometry::euclidean(), a, b) - 0.5 * (a - b).squaredNorm()));
  }
  out.push_back(detail::worst_below("neg_entropy_simplex: Bregman = KL", kl, 1e-10));
  out.push_back(detail::worst_below("euclidean: Bregman = |x - y|^2 / 2", half, 1e-12));
  return out;
}

inline std::vector<CheckResult> check_hilbert(int trials = 1000, std::uint64_t seed = 12) {
  RngStream rng(seed, 0);
  const Eigen::Index d = 10;
  const std::vector<OperatorSpec> ops = {
      make_affine_average({d, 3, 1.0, 0.5}),
      make_softmax_policy({d, 2.0, 1, 1.0, 1000, 0x5eed}).op,
      OperatorSpec::identity(d),
  };
  std::vector<CheckResult> out;
  for (const auto& op : ops) {
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
      const Vector x = rng.normal_vector(d);
      const Vector u = 0.1 * rng.normal_vector(d);
      const double alpha = 0.001 + 0.998 * rng.uniform();
      worst = std::max(worst, hilbert_equivalence_check(op, x, alpha, u));
    }
    out.push_back(detail::worst_below(std::string("euclidean step = closed-form KM (") + to_string(op.kind) + ")",
                                      worst, 1e-12));
  }
  return out;
}

/// Indices ordered by descending magnitude, lower index first among ties.
inline std::vector<Eigen::Index> trim_order(const Vector& u) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(u.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return std::abs(u[a]) > std::abs(u[b]); });
  return idx;
}

inline std::vector<CheckResult> check_trim() {
  std::int64_t cases = 0, oracle_mismatch = 0, bad_identity = 0, bad_full = 0, bad_norm = 0;
  for (Eigen::Index d = 1; d <= 5; ++d) {
    const auto total = static_cast<std::int64_t>(std::pow(5.0, static_cast<double>(d)));
    for (std::int64_t code = 0; code < total; ++code) {
      Vector u(d);
      std::int64_t c = code;
      for (Eigen::Index i = 0; i < d; ++i, c /= 5) u[i] = static_cast<double>(c % 5) - 2.0;
      const auto order = trim_order(u);
      for (Eigen::Index k = 0; k <= d + 1; ++k) {
        ++cases;
        const Vector got = trim(u, k);
        Vector want = u;
        for (Eigen::Index j = 0; j < std::min(k, d); ++j) want[order[static_cast<std::size_t>(j)]] = 0.0;
        if (got != want) ++oracle_mismatch;
        if (k == 0 && got != u) ++bad_identity;
        if (k >= d && !got.isZero(0.0)) ++bad_full;
        if (got.norm() > u.norm()) ++bad_norm;
      }
    }
  }
  const std::string n = " over " + std::to_string(cases) + " cases";
  return {{"trim matches sort-based oracle (ties to lower index)", oracle_mismatch == 0,
           std::to_string(oracle_mismatch) + " mismatches" + n},
          {"Trim_0 = identity", bad_identity == 0, std::to_string(bad_identity) + " failures"},
          {"Trim_d = 0", bad_full == 0, std::to_string(bad_full) + " failures"},
          {"trim never increases the norm", bad_norm == 0, std::to_string(bad_norm) + " failures"}};
}

/// Softmax policy instance used by the descent suite and the bundled first example.
inline OperatorSpec example_policy_operator(std::uint64_t matrix_seed = 1) {
  OperatorConfig oc;
  oc.kind = OperatorKind::softmax_policy;
  oc.dim = 10;
  oc.eta = 2.0;
  oc.matrix_seed = matrix_seed;
  return build_operator(oc).op;
}

inline std::vector<CheckResult> check_descent(std::int64_t trials = 10'000) {
  const OperatorSpec op = example_policy_operator();
  std::vector<CheckResult> out;
  for (const auto& g : {LegendreGeometry::euclidean(), LegendreGeometry::neg_entropy_simplex()}) {
    for (std::int64_t n : {10, 100}) {
      IterationConfig c;
      c.op = op;
      c.geometry = g;
      c.steps = StepSchedule::harmonic_offset(10.0);
      c.noise = NoiseModel::gaussian(0.1);
      c.noise.space = NoiseSpace::dual;
      c.seed = 7;
      const DescentCheckReport r = descent_check(c, n, trials);
      out.push_back({g.name() + ": one-step descent at n=" + std::to_string(n), r.satisfied,
                     "lhs " + format_sci(r.lhs_mean) + " <= rhs " + format_sci(r.rhs) + " + 3*" +
                         format_sci(r.standard_error, 2)});
    }
  }
  return out;
}

inline std::vector<CheckResult> run_check_suite(const std::string& suite) {
  if (suite == "geometry") return check_geometry();
  if (suite == "hilbert") return check_hilbert();
  if (suite == "trim") return check_trim();
  if (suite == "descent") return check_descent();
  throw ConfigError("unknown check suite '" + suite + "' (geometry, descent, trim, hilbert)");
}

}  // namespace bskm
