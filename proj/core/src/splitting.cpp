#include "semitrotter/splitting.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <optional>
#include <string>

#include "fftw_lock.hpp"
#include "semitrotter/errors.hpp"

namespace semitrotter {

double StagePlan::coefficient_sum(Generator g) const {
  double s = 0.0;
  for (const Stage& st : stages)
    if (st.gen == g) s += st.coeff;
  return s;
}

bool StagePlan::is_palindromic() const {
  for (std::size_t i = 0, j = stages.size(); i < j--; ++i)
    if (stages[i].gen != stages[j].gen || stages[i].coeff != stages[j].coeff) return false;
  return true;
}

double suzuki_weight(int k) { return 1.0 / (4.0 - std::pow(4.0, 1.0 / (2.0 * k - 1.0))); }

namespace {

void push_merged(std::vector<Stage>& out, Stage s) {
  if (!out.empty() && out.back().gen == s.gen) {
    out.back().coeff += s.coeff;
  } else {
    out.push_back(s);
  }
}

}  // namespace

StagePlan suzuki_plan(int p) {
  if (p == 1) return {1, {{1.0, Generator::A}, {1.0, Generator::B}}};
  if (p < 1 || p % 2 != 0 || p > 10) throw InvalidArgument("suzuki_plan: order must be 1 or even <= 10, got " + std::to_string(p));
  if (p == 2) return {2, {{0.5, Generator::A}, {1.0, Generator::B}, {0.5, Generator::A}}};

  const StagePlan inner = suzuki_plan(p - 2);
  const double u = suzuki_weight(p / 2);
  StagePlan plan{p, {}};
  for (const double scale : {u, u, 1.0 - 4.0 * u, u, u})
    for (const Stage& s : inner.stages) push_merged(plan.stages, {s.coeff * scale, s.gen});

  // Merging sums in a different order on the two halves; restore exact mirror
  // symmetry so the plan is palindromic in floating point as well.
  const std::size_t l = plan.stages.size();
  for (std::size_t i = 0; i < l / 2; ++i) plan.stages[l - 1 - i].coeff = plan.stages[i].coeff;
  return plan;
}

namespace {

// FFTW entry points per precision.
template <class Real>
struct Fftw;

template <>
struct Fftw<double> {
  using plan = fftw_plan;
  using complex = fftw_complex;
  static plan many(int n, int howmany, complex* buf, int sign) {
    std::lock_guard lock(detail::fftw_planner_mutex());
    return fftw_plan_many_dft(1, &n, howmany, buf, nullptr, 1, n, buf, nullptr, 1, n, sign, FFTW_ESTIMATE);
  }
  static void execute(plan p) { fftw_execute(p); }
  static void destroy(plan p) {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};

template <>
struct Fftw<long double> {
  using plan = fftwl_plan;
  using complex = fftwl_complex;
  static plan many(int n, int howmany, complex* buf, int sign) {
    std::lock_guard lock(detail::fftwl_planner_mutex());
    return fftwl_plan_many_dft(1, &n, howmany, buf, nullptr, 1, n, buf, nullptr, 1, n, sign, FFTW_ESTIMATE);
  }
  static void execute(plan p) { fftwl_execute(p); }
  static void destroy(plan p) {
    std::lock_guard lock(detail::fftwl_planner_mutex());
    fftwl_destroy_plan(p);
  }
};

// How one generator's exponential is applied: phases on the diagonal,
// phases in Fourier space, or a dense eigendecomposition.
struct Route {
  enum class Kind { Diagonal, Circulant, Dense } kind;
  std::vector<long double> values;  // diagonal entries or circulant eigenvalues
  std::optional<HermitianEigen> dense;
};

Route make_route(const ComplexMatrix& m) {
  const std::size_t n = m.rows();
  if (m.is_diagonal()) {
    Route r{Route::Kind::Diagonal, std::vector<long double>(n), std::nullopt};
    for (std::size_t i = 0; i < n; ++i) r.values[i] = m(i, i).real();
    return r;
  }
  if (auto row = circulant_first_row(m)) {
    // lambda_k = sum_m c_m exp(+2 pi i m k / N), summed directly in long double.
    Route r{Route::Kind::Circulant, std::vector<long double>(n), std::nullopt};
    const long double two_pi = 6.283185307179586476925286766559L;
    for (std::size_t k = 0; k < n; ++k) {
      long double acc = 0.0L;
      for (std::size_t j = 0; j < n; ++j) {
        const long double ang = two_pi * static_cast<long double>((j * k) % n) / static_cast<long double>(n);
        acc += static_cast<long double>((*row)[j].real()) * std::cos(ang) -
               static_cast<long double>((*row)[j].imag()) * std::sin(ang);
      }
      r.values[k] = acc;
    }
    return r;
  }
  return {Route::Kind::Dense, {}, hermitian_eig(m)};
}

// Column-major n x n working matrix in precision Real, so every column DFT is
// contiguous.
template <class Real>
class EvolutionState {
 public:
  using C = std::complex<Real>;

  explicit EvolutionState(std::size_t n) : n_(n), data_(n * n) {
    const int len = static_cast<int>(n);
    auto* buf = reinterpret_cast<typename Fftw<Real>::complex*>(data_.data());
    forward_ = Fftw<Real>::many(len, len, buf, FFTW_FORWARD);
    backward_ = Fftw<Real>::many(len, len, buf, FFTW_BACKWARD);
    for (std::size_t i = 0; i < n; ++i) data_[i * n + i] = Real(1);
  }
  ~EvolutionState() {
    Fftw<Real>::destroy(forward_);
    Fftw<Real>::destroy(backward_);
  }
  EvolutionState(const EvolutionState&) = delete;
  EvolutionState& operator=(const EvolutionState&) = delete;

  void scale_rows(const std::vector<C>& d) {
    for (std::size_t c = 0; c < n_; ++c) {
      C* col = data_.data() + c * n_;
      for (std::size_t r = 0; r < n_; ++r) col[r] *= d[r];
    }
  }

  void apply(const Route& route, long double theta, std::vector<C>& phases) {
    switch (route.kind) {
      case Route::Kind::Diagonal:
        for (std::size_t i = 0; i < n_; ++i) phases[i] = std::polar(Real(1), static_cast<Real>(-theta * route.values[i]));
        scale_rows(phases);
        break;
      case Route::Kind::Circulant: {
        const Real inv_n = Real(1) / static_cast<Real>(n_);
        for (std::size_t i = 0; i < n_; ++i) phases[i] = std::polar(inv_n, static_cast<Real>(-theta * route.values[i]));
        Fftw<Real>::execute(forward_);
        scale_rows(phases);
        Fftw<Real>::execute(backward_);
        break;
      }
      case Route::Kind::Dense: {
        const ComplexMatrix e = unitary_exp(*route.dense, static_cast<double>(theta));
        std::vector<C> out(n_ * n_);
        for (std::size_t c = 0; c < n_; ++c)
          for (std::size_t k = 0; k < n_; ++k) {
            const C xkc = data_[c * n_ + k];
            for (std::size_t r = 0; r < n_; ++r) out[c * n_ + r] += C(e(r, k).real(), e(r, k).imag()) * xkc;
          }
        data_ = std::move(out);
        break;
      }
    }
  }

  ComplexMatrix round() const {
    ComplexMatrix m(n_, n_);
    for (std::size_t c = 0; c < n_; ++c)
      for (std::size_t r = 0; r < n_; ++r) {
        const C z = data_[c * n_ + r];
        m(r, c) = Complex(static_cast<double>(z.real()), static_cast<double>(z.imag()));
      }
    return m;
  }

 private:
  std::size_t n_;
  std::vector<C> data_;
  typename Fftw<Real>::plan forward_;
  typename Fftw<Real>::plan backward_;
};

template <class Real>
ComplexMatrix evolve(const StagePlan& plan, const Route& ra, const Route& rb, std::size_t n, double dt,
                     std::size_t steps) {
  EvolutionState<Real> u(n);
  std::vector<std::complex<Real>> phases(n);
  for (std::size_t step = 0; step < steps; ++step) {
    for (const Stage& s : plan.stages) {
      const long double theta = static_cast<long double>(dt) * static_cast<long double>(s.coeff);
      u.apply(s.gen == Generator::A ? ra : rb, theta, phases);
    }
  }
  return u.round();
}

}  // namespace

ComplexMatrix trotter_evolve(const StagePlan& plan, const ComplexMatrix& a, const ComplexMatrix& b, double dt,
                             std::size_t steps, StepPrecision precision) {
  if (!a.is_square() || !b.is_square() || a.rows() != b.rows()) {
    throw DimensionError("trotter_step: A and B must be square with equal size");
  }
  if (hermiticity_defect(a) > 1e-10 || hermiticity_defect(b) > 1e-10) {
    throw InvalidArgument("trotter_step: A and B must be Hermitian");
  }
  const std::size_t n = a.rows();
  if (dt == 0.0 || steps == 0) return ComplexMatrix::identity(n);

  const Route route_a = make_route(a);
  const Route route_b = make_route(b);
  if (precision == StepPrecision::Auto) {
    precision = steps * plan.stages.size() >= kExtendedStageThreshold ? StepPrecision::Extended : StepPrecision::Double;
  }
  return precision == StepPrecision::Extended ? evolve<long double>(plan, route_a, route_b, n, dt, steps)
                                              : evolve<double>(plan, route_a, route_b, n, dt, steps);
}

ComplexMatrix trotter_step(const StagePlan& plan, const ComplexMatrix& a, const ComplexMatrix& b, double dt) {
  return trotter_evolve(plan, a, b, dt, 1, StepPrecision::Double);
}

ComplexMatrix exact_unitary(const ComplexMatrix& h, double t) { return unitary_exp(h, t); }

ComplexMatrix heisenberg_evolve(const ComplexMatrix& u, const ComplexMatrix& o, std::size_t n) {
  if (!u.is_square() || !o.is_square() || u.rows() != o.rows()) {
    throw DimensionError("heisenberg_evolve: U and O must be square with equal size");
  }
  ComplexMatrix cur = o;
  for (std::size_t i = 0; i < n; ++i) cur = adjoint_matmul(u, matmul(cur, u));
  return cur;
}

ComplexMatrix matrix_power(const ComplexMatrix& u, std::size_t n) {
  if (n == 0) return ComplexMatrix::identity(u.rows());
  ComplexMatrix acc = u;
  for (std::size_t i = 1; i < n; ++i) acc = matmul(u, acc);
  return acc;
}

std::size_t compute_steps(double t, double eps, int p, double c) {
  if (!(t > 0.0 && eps > 0.0 && c > 0.0) || p < 1) throw InvalidArgument("compute_steps: need t, eps, C > 0 and p >= 1");
  const double budget = c * std::pow(t, p + 1);
  auto ok = [&](double n) { return budget / std::pow(n, p) <= eps; };
  double n = std::max(1.0, std::ceil(std::pow(budget / eps, 1.0 / p)));
  while (n > 1.0 && ok(n - 1.0)) n -= 1.0;
  while (!ok(n)) n += 1.0;
  return static_cast<std::size_t>(n);
}

}  // namespace semitrotter
