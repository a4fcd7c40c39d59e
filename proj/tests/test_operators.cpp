#include "bskm/checks.hpp"
#include "bskm/operators.hpp"

#include <gtest/gtest.h>

#include <cmath>

using bskm::Matrix;
using bskm::OperatorSpec;
using bskm::Vector;

TEST(SoftmaxPolicy, ZeroMatrixGivesUniform) {
  const auto op = OperatorSpec::softmax_policy(Matrix::Zero(4, 4), 2.0);
  const Vector out = bskm::apply(op, Vector::Constant(4, 0.25));
  for (double v : out) EXPECT_DOUBLE_EQ(v, 0.25);
  EXPECT_EQ(bskm::nonexpansiveness_probe(op, 100, 1), 0.0);
}

TEST(SoftmaxPolicy, DiagonalExample) {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 1.0;
  const Vector out = bskm::apply(OperatorSpec::softmax_policy(a, 1.0), Vector::Unit(2, 0));
  EXPECT_NEAR(out[0], std::exp(1.0) / (std::exp(1.0) + 1.0), 1e-15);
  EXPECT_NEAR(out[1], 1.0 / (std::exp(1.0) + 1.0), 1e-15);
}

TEST(SoftmaxPolicy, OutputStaysOnTheOpenSimplexForLargeLogits) {
  const auto op = OperatorSpec::softmax_policy(Matrix::Identity(3, 3) * 400.0, 2.0);
  const Vector out = bskm::apply(op, Vector::Unit(3, 1));
  EXPECT_NEAR(out.sum(), 1.0, 1e-12);
  EXPECT_TRUE(out.allFinite());
}

TEST(SoftmaxPolicy, RejectsBadInputs) {
  EXPECT_THROW(OperatorSpec::softmax_policy(Matrix::Zero(2, 3), 1.0), bskm::ConfigError);
  EXPECT_THROW(OperatorSpec::softmax_policy(Matrix::Zero(2, 2), 0.0), bskm::ConfigError);
  const auto op = OperatorSpec::softmax_policy(Matrix::Zero(2, 2), 1.0);
  EXPECT_THROW(bskm::apply(op, Vector::Zero(3)), bskm::DimensionMismatch);
  EXPECT_THROW(bskm::apply(op, Vector::Constant(2, NAN)), bskm::DomainError);
}

TEST(SoftmaxPolicy, AutoScaledInstanceIsNonexpansive) {
  const auto inst = bskm::make_softmax_policy({10, 2.0, 1, std::nullopt, 10'000, 0x5eed});
  EXPECT_TRUE(inst.auto_scaled);
  EXPECT_LE(inst.probe, 1.0 + 1e-9);
  EXPECT_GT(inst.scale, 0.0);
  // Slightly larger scales must fail the probe, or the search stopped early.
  bskm::PolicyOptions bigger{10, 2.0, 1, inst.scale * 1.05, 10'000, 0x5eed};
  EXPECT_GT(bskm::make_softmax_policy(bigger).probe, 1.0);
}

TEST(SoftmaxPolicy, SmallNormMatrixPassesTheProbe) {
  bskm::RngStream rng(4);
  Matrix a(10, 10);
  for (Eigen::Index j = 0; j < 10; ++j)
    for (Eigen::Index i = 0; i < 10; ++i) a(i, j) = rng.normal();
  a *= 0.4 / bskm::operator_norm_estimate(a);
  EXPECT_LE(bskm::nonexpansiveness_probe(OperatorSpec::softmax_policy(a, 2.0), 10'000, 9), 1.0 + 1e-9);
}

TEST(AffineAverage, ClosedFormFixedPoint) {
  const auto op = bskm::make_affine_average({6, 2, 0.9, 0.5});
  const Vector fp = bskm::affine_fixed_point(op);
  EXPECT_LT((bskm::apply(op, fp) - fp).norm(), 1e-12);
  EXPECT_NEAR(bskm::operator_norm_estimate(op.matrix), 0.9, 1e-9);
}

TEST(AffineAverage, RejectsExpansiveMatrices) {
  EXPECT_THROW(OperatorSpec::affine_average(Matrix::Identity(2, 2) * 1.01, Vector::Zero(2), 0.5), bskm::ConfigError);
  EXPECT_THROW(OperatorSpec::affine_average(Matrix::Identity(2, 2), Vector::Zero(2), 1.5), bskm::ConfigError);
}

TEST(Oracle, ConstantMapConvergesImmediately) {
  const auto op = OperatorSpec::softmax_policy(Matrix::Zero(5, 5), 2.0);
  const auto ref = bskm::fixed_point_oracle(op, 1e-12);
  EXPECT_EQ(ref.residual_norm, 0.0);
  EXPECT_EQ(ref.iterations_used, 0);
}

TEST(Oracle, ExamplePolicyReachesTolerance) {
  const auto ref = bskm::fixed_point_oracle(bskm::example_policy_operator(), 1e-12);
  EXPECT_LE(ref.residual_norm, 1e-12);
}

TEST(Oracle, ReportsBestIterateOnFailure) {
  // A rotation by 90 degrees averaged with lambda = 1: fixed point b-dependent, KM still converges,
  // but one iteration is not enough.
  Matrix rot(2, 2);
  rot << 0, -1, 1, 0;
  const auto op = OperatorSpec::affine_average(rot, Vector::Ones(2), 1.0);
  try {
    bskm::fixed_point_oracle(op, 1e-12, 1);
    FAIL() << "expected NoConvergence";
  } catch (const bskm::NoConvergence& e) {
    EXPECT_GT(e.best.residual_norm, 1e-12);
    EXPECT_EQ(e.best.point.size(), 2);
  }
}
