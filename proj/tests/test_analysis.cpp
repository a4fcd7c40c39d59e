#include "bskm/analysis.hpp"
#include "bskm/checks.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

using bskm::StepSchedule;
using bskm::Trace;

namespace {

// mpmath: sum_{n<1e4} (n+1)^-0.75 with the first term exactly 1.
constexpr double kPolySum = 36.559214606804777;
// mpmath: H_{1e6}.
constexpr double kHarmonic1e6 = 14.392726722865724;

Trace synthetic(const std::function<double(double)>& avg_of_a, int rows) {
  Trace t;
  double a = 0.0;
  for (int i = 0; i < rows; ++i) {
    bskm::TraceRow r;
    r.n = i;
    r.alpha = 1.0 / (i + 10.0);
    a += r.alpha;
    r.step_sum = a;
    r.avg_residual = avg_of_a(a);
    r.bregman_residual = r.avg_residual;
    t.rows.push_back(r);
  }
  t.n_iters = rows;
  return t;
}

}  // namespace

TEST(StepSum, MatchesHighPrecisionValues) {
  EXPECT_NEAR(bskm::step_sum(StepSchedule::polynomial(0.75), 10'000), kPolySum, 1e-9);
  EXPECT_NEAR(bskm::step_sum(StepSchedule::polynomial(1.0), 1'000'000), kHarmonic1e6, 1e-8);
  EXPECT_THROW(bskm::step_sum(StepSchedule::polynomial(0.75), 0), bskm::ConfigError);
}

TEST(StepSum, SlowerDecayAccumulatesFaster) {
  EXPECT_GT(bskm::step_sum(StepSchedule::polynomial(0.6), 5000), bskm::step_sum(StepSchedule::polynomial(0.9), 5000));
}

TEST(AveragedResidual, MatchesTraceColumn) {
  bskm::IterationConfig c;
  c.op = bskm::example_policy_operator();
  c.geometry = bskm::LegendreGeometry::neg_entropy_simplex();
  c.noise = bskm::NoiseModel::gaussian(0.1);
  c.n_iters = 400;
  const auto t = bskm::run(c);
  EXPECT_NEAR(bskm::averaged_residual(t, 400), t.final_avg_residual(), 1e-12);
  EXPECT_NEAR(bskm::averaged_residual(t, 100), t.rows[99].avg_residual, 1e-12);
  EXPECT_THROW(bskm::averaged_residual(t, 401), bskm::InsufficientTrace);
}

TEST(FitRate, RecoversAKnownExponent) {
  for (double p : {0.5, 0.75, 1.0}) {
    const auto fit = bskm::fit_rate(synthetic([p](double a) { return 3.0 * std::pow(a, -p); }, 2000), 0.5, 0.5);
    EXPECT_NEAR(fit.fitted_slope, -p, 1e-9);
    EXPECT_NEAR(fit.intercept, std::log(3.0), 1e-8);
    EXPECT_NEAR(fit.r_squared, 1.0, 1e-9);
    EXPECT_EQ(fit.n_end, 1999);
  }
}

TEST(FitRate, RejectsShortOrDegenerateTraces) {
  EXPECT_THROW(bskm::fit_rate(synthetic([](double) { return 1.0; }, 50), 0.5, 0.5), bskm::ConfigError);
  EXPECT_THROW(bskm::fit_rate(synthetic([](double) { return 0.0; }, 200), 0.5, 0.5), bskm::DegenerateFit);
}

TEST(Envelope, AcceptsTheBoundShapeAndRejectsGrowth) {
  for (double p : {0.5, 0.75, 0.9})
    EXPECT_TRUE(bskm::bound_envelope_check(synthetic([p](double a) { return std::pow(a, -p); }, 1000), p));
  int i = 0;
  EXPECT_FALSE(bskm::bound_envelope_check(synthetic([&i](double) { return ++i; }, 1000), 0.5));
}

TEST(Envelope, InvariantUnderRescaling) {
  const auto base = synthetic([](double a) { return std::pow(a, -0.4) * (1.0 + 0.3 * std::sin(a)); }, 1000);
  const bool ref = bskm::bound_envelope_check(base, 0.5);
  for (double k : {1e-6, 0.25, 8.0}) {
    Trace t = base;
    for (auto& r : t.rows) r.avg_residual *= k;
    EXPECT_EQ(bskm::bound_envelope_check(t, 0.5), ref);
  }
}

TEST(Descent, HoldsForBothGeometries) {
  for (const auto& g : {bskm::LegendreGeometry::euclidean(), bskm::LegendreGeometry::neg_entropy_simplex()}) {
    bskm::IterationConfig c;
    c.op = bskm::example_policy_operator();
    c.geometry = g;
    c.noise = bskm::NoiseModel::gaussian(0.1);
    c.noise.space = bskm::NoiseSpace::dual;
    c.seed = 21;
    const auto r = bskm::descent_check(c, 10, 2000);
    EXPECT_TRUE(r.satisfied) << g.name() << " lhs " << r.lhs_mean << " rhs " << r.rhs;
    EXPECT_NEAR(r.fitted_sigma2, 10 * 0.01, 0.01);
    EXPECT_DOUBLE_EQ(r.alpha, 1.0 / 20.0);
  }
}

TEST(Descent, RejectsSchedulesAndTooFewTrials) {
  bskm::IterationConfig c;
  c.op = bskm::example_policy_operator();
  EXPECT_THROW(bskm::descent_check(c, 10, 999), bskm::ConfigError);
  c.geometry = bskm::GeometrySchedule::harmonic_decay(bskm::LegendreGeometry::neg_entropy_simplex());
  EXPECT_THROW(bskm::descent_check(c, 10, 1000), bskm::ConfigError);
}
