#pragma once

// Suzuki splitting schedules and the unitaries they produce.

#include <cstddef>
#include <vector>

#include "semitrotter/linalg.hpp"

namespace semitrotter {

enum class Generator { A, B };

struct Stage {
  double coeff;
  Generator gen;

  friend bool operator==(const Stage&, const Stage&) = default;
};

/// Ordered stages; stage 0 acts first on the state. Adjacent stages always
/// carry different generators.
struct StagePlan {
  int order = 0;
  std::vector<Stage> stages;

  double coefficient_sum(Generator g) const;
  bool is_palindromic() const;
};

/// u_k = 1 / (4 - 4^{1/(2k-1)}) for the step from order 2k-2 to order 2k.
double suzuki_weight(int k);

/// p = 1: Lie-Trotter [(1,A),(1,B)]; p = 2: Strang [(1/2,A),(1,B),(1/2,A)];
/// p = 2k: the fivefold Suzuki recursion with junctions merged, giving
/// 2 * 5^{k-1} + 1 stages. Throws InvalidArgument unless p == 1 or p is even
/// and <= 10.
StagePlan suzuki_plan(int p);

/// One step U_p(dt) = prod_j exp(-i dt c_j H_j), rightmost factor = stage 0.
/// Circulant A stages are applied through their DFT diagonalisation and
/// diagonal B stages by direct phase multiplication; anything else falls back
/// to a dense Hermitian exponential.
ComplexMatrix trotter_step(const StagePlan& plan, const ComplexMatrix& a, const ComplexMatrix& b, double dt);

/// Working precision for a stage product. Rounding grows linearly with the
/// number of stage applications, and a p = 6 run with 32 steps (1632 stages)
/// in double sits near 1e-13, above its splitting error.
enum class StepPrecision { Auto, Double, Extended };

/// Auto uses long double once steps * stages reaches this many applications.
inline constexpr std::size_t kExtendedStageThreshold = 512;

/// U_p(dt)^steps, applying every stage of every step to one working matrix
/// that is rounded to double once at the end.
ComplexMatrix trotter_evolve(const StagePlan& plan, const ComplexMatrix& a, const ComplexMatrix& b, double dt,
                             std::size_t steps, StepPrecision precision = StepPrecision::Auto);

/// exp(-i H t).
ComplexMatrix exact_unitary(const ComplexMatrix& h, double t);

/// (U^dagger)^n O U^n by n successive conjugations.
ComplexMatrix heisenberg_evolve(const ComplexMatrix& u, const ComplexMatrix& o, std::size_t n);

/// Integer power by repeated multiplication.
ComplexMatrix matrix_power(const ComplexMatrix& u, std::size_t n);

/// Smallest n >= 1 with C t^{p+1} / n^p <= eps. Throws InvalidArgument unless
/// t, eps, C > 0 and p >= 1.
std::size_t compute_steps(double t, double eps, int p, double c);

}  // namespace semitrotter
