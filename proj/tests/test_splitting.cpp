#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "semitrotter/errors.hpp"
#include "semitrotter/model.hpp"
#include "semitrotter/splitting.hpp"
#include "test_util.hpp"

using namespace semitrotter;

namespace {

const double kPi = 3.14159265358979323846;

struct Pair {
  ComplexMatrix a, b;
};

Pair small_model(std::size_t n = 32, double h = 1.0 / 32) {
  const ModelParams p{h, 0.5, parse_expr("cos(x)"), Grid(-kPi, kPi, n)};
  return {build_A(p), build_B(p)};
}

// Dense reference product, independent of the FFT path.
ComplexMatrix naive_step(const StagePlan& plan, const ComplexMatrix& a, const ComplexMatrix& b, double dt) {
  ComplexMatrix u = ComplexMatrix::identity(a.rows());
  for (const Stage& s : plan.stages) u = matmul(unitary_exp(s.gen == Generator::A ? a : b, dt * s.coeff), u);
  return u;
}

}  // namespace

TEST(Splitting, LowOrderPlans) {
  const StagePlan p1 = suzuki_plan(1);
  ASSERT_EQ(p1.stages.size(), 2u);
  EXPECT_EQ(p1.stages[0], (Stage{1.0, Generator::A}));
  EXPECT_EQ(p1.stages[1], (Stage{1.0, Generator::B}));
  EXPECT_FALSE(p1.is_palindromic());

  const StagePlan p2 = suzuki_plan(2);
  ASSERT_EQ(p2.stages.size(), 3u);
  EXPECT_EQ(p2.stages[0], (Stage{0.5, Generator::A}));
  EXPECT_EQ(p2.stages[1], (Stage{1.0, Generator::B}));
  EXPECT_EQ(p2.stages[2], (Stage{0.5, Generator::A}));
}

TEST(Splitting, SuzukiWeight) {
  EXPECT_NEAR(suzuki_weight(2), 0.4144907717943757, 1e-15);
  for (int k = 2; k <= 5; ++k) {
    const double u = suzuki_weight(k);
    const double e = 2.0 * k - 1.0;
    EXPECT_NEAR(4.0 * std::pow(u, e) + std::pow(1.0 - 4.0 * u, e), 0.0, 1e-14) << k;
  }
}

TEST(Splitting, HigherOrderPlanStructure) {
  const std::size_t want_len[] = {3, 11, 51, 251};
  for (int i = 0; i < 4; ++i) {
    const int p = 2 * (i + 1);
    const StagePlan plan = suzuki_plan(p);
    EXPECT_EQ(plan.order, p);
    EXPECT_EQ(plan.stages.size(), want_len[i]) << p;
    EXPECT_NEAR(plan.coefficient_sum(Generator::A), 1.0, 1e-13) << p;
    EXPECT_NEAR(plan.coefficient_sum(Generator::B), 1.0, 1e-13) << p;
    EXPECT_TRUE(plan.is_palindromic()) << p;
    for (std::size_t j = 1; j < plan.stages.size(); ++j) EXPECT_NE(plan.stages[j].gen, plan.stages[j - 1].gen);
  }
  EXPECT_THROW(suzuki_plan(0), InvalidArgument);
  EXPECT_THROW(suzuki_plan(3), InvalidArgument);
  EXPECT_THROW(suzuki_plan(12), InvalidArgument);
}

TEST(Splitting, ZeroStepIsIdentity) {
  const auto [a, b] = small_model();
  for (const int p : {1, 2, 4}) EXPECT_LT(spectral_norm(trotter_step(suzuki_plan(p), a, b, 0.0) - ComplexMatrix::identity(32)), 1e-13);
  EXPECT_EQ(trotter_evolve(suzuki_plan(2), a, b, 0.1, 0), ComplexMatrix::identity(32));
}

TEST(Splitting, FastStepMatchesDenseProduct) {
  const auto [a, b] = small_model(16, 0.1);
  for (const int p : {1, 2, 4}) {
    const StagePlan plan = suzuki_plan(p);
    EXPECT_LT(spectral_norm(trotter_step(plan, a, b, 0.07) - naive_step(plan, a, b, 0.07)), 1e-11) << p;
  }
  // Non-circulant A and non-diagonal B take the dense route.
  std::mt19937_64 rng(3);
  const ComplexMatrix x = testutil::random_hermitian(rng, 10), y = testutil::random_hermitian(rng, 10);
  EXPECT_LT(spectral_norm(trotter_step(suzuki_plan(2), x, y, 0.2) - naive_step(suzuki_plan(2), x, y, 0.2)), 1e-11);
}

TEST(Splitting, CommutingGeneratorsAreExact) {
  const Grid g(-kPi, kPi, 16);
  const ComplexMatrix a = build_diag(g, parse_expr("cos(x)")), b = build_diag(g, parse_expr("sin(x)^2"));
  const ComplexMatrix exact = exact_unitary(a + b, 0.3);
  for (const int p : {1, 2, 4, 6}) EXPECT_LT(spectral_norm(trotter_step(suzuki_plan(p), a, b, 0.3) - exact), 1e-12) << p;
}

TEST(Splitting, StrangLocalErrorIsThirdOrder) {
  const auto [a, b] = small_model(16, 0.25);
  const ComplexMatrix h = a + b;
  auto err = [&](double dt) { return spectral_norm(trotter_step(suzuki_plan(2), a, b, dt) - exact_unitary(h, dt)); };
  EXPECT_NEAR(err(0.01) / err(0.005), 8.0, 0.2);
}

TEST(Splitting, EvolveMatchesRepeatedSteps) {
  const auto [a, b] = small_model();
  const StagePlan plan = suzuki_plan(4);
  const ComplexMatrix u = trotter_step(plan, a, b, 0.05);
  const ComplexMatrix want = matrix_power(u, 6);
  EXPECT_LT(spectral_norm(trotter_evolve(plan, a, b, 0.05, 6, StepPrecision::Double) - want), 1e-12);
  EXPECT_LT(spectral_norm(trotter_evolve(plan, a, b, 0.05, 6, StepPrecision::Extended) - want), 1e-12);
}

TEST(Splitting, ExtendedPrecisionReducesDrift) {
  const auto [a, b] = small_model(64, 1.0 / 64);
  const StagePlan plan = suzuki_plan(6);
  const ComplexMatrix d = trotter_evolve(plan, a, b, 1.0 / 64, 32, StepPrecision::Double);
  const ComplexMatrix e = trotter_evolve(plan, a, b, 1.0 / 64, 32, StepPrecision::Extended);
  EXPECT_LT(spectral_norm(d - e), 1e-11);
  EXPECT_LT(unitarity_defect(e), unitarity_defect(d));
  EXPECT_LT(unitarity_defect(e), 1e-13);
  // 251 * 32 applications is above the Auto threshold.
  EXPECT_EQ(trotter_evolve(plan, a, b, 1.0 / 64, 32), e);
  // 3 * 2 is below it.
  EXPECT_EQ(trotter_evolve(suzuki_plan(2), a, b, 0.1, 2), trotter_evolve(suzuki_plan(2), a, b, 0.1, 2, StepPrecision::Double));
}

TEST(Splitting, StepInputValidation) {
  const auto [a, b] = small_model(16);
  EXPECT_THROW(trotter_step(suzuki_plan(2), a, ComplexMatrix::identity(8), 0.1), DimensionError);
  ComplexMatrix skew(16, 16);
  skew(0, 1) = 1.0;
  EXPECT_THROW(trotter_step(suzuki_plan(2), a, skew, 0.1), InvalidArgument);
}

TEST(Splitting, ExactUnitaryGroupLaw) {
  const auto [a, b] = small_model(24, 0.2);
  const ComplexMatrix h = a + b;
  EXPECT_LT(spectral_norm(exact_unitary(h, 0.7) - matmul(exact_unitary(h, 0.3), exact_unitary(h, 0.4))), 1e-10);
  EXPECT_LT(unitarity_defect(exact_unitary(h, 2.0)), 1e-12);
}

TEST(Splitting, HeisenbergEvolution) {
  const auto [a, b] = small_model(16, 0.2);
  const ComplexMatrix u = exact_unitary(a + b, 0.1);
  const Grid g(-kPi, kPi, 16);
  const ComplexMatrix o = build_diag(g, parse_expr("cos(x)"));
  EXPECT_EQ(heisenberg_evolve(u, o, 0), o);
  const ComplexMatrix o3 = heisenberg_evolve(u, o, 3);
  EXPECT_NEAR(spectral_norm(o3), spectral_norm(o), 1e-10);
  const ComplexMatrix u3 = matrix_power(u, 3);
  EXPECT_LT(spectral_norm(o3 - matmul(u3.adjoint(), matmul(o, u3))), 1e-11);
  EXPECT_THROW(heisenberg_evolve(u, ComplexMatrix::identity(4), 1), DimensionError);
}

TEST(Splitting, StepCount) {
  EXPECT_EQ(compute_steps(2.0, 1e-4, 2, 1.0), 283u);
  EXPECT_EQ(compute_steps(1.0, 1.0, 2, 1.0), 1u);
  std::size_t prev = 0;
  for (const double eps : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}) {
    const std::size_t n = compute_steps(1.0, eps, 4, 3.0);
    EXPECT_GE(n, prev);
    EXPECT_LE(3.0 / std::pow(static_cast<double>(n), 4), eps);
    if (n > 1) EXPECT_GT(3.0 / std::pow(static_cast<double>(n - 1), 4), eps);
    prev = n;
  }
  EXPECT_THROW(compute_steps(0.0, 1e-3, 2, 1.0), InvalidArgument);
  EXPECT_THROW(compute_steps(1.0, 1e-3, 0, 1.0), InvalidArgument);
  EXPECT_THROW(compute_steps(1.0, -1.0, 2, 1.0), InvalidArgument);
}
