#include "semitrotter/linalg.hpp"

#include <cblas.h>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>

#include "fftw_lock.hpp"
#include "semitrotter/errors.hpp"

namespace semitrotter {

namespace detail {

std::mutex& fftw_planner_mutex() {
  static std::mutex mu;
  return mu;
}

std::mutex& fftwl_planner_mutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace detail

namespace {

constexpr double kHermitianTol = 1e-10;

void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

void require_hermitian(const ComplexMatrix& m, const char* op) {
  if (!m.is_square()) throw DimensionError(std::string(op) + ": matrix is not square");
  if (hermiticity_defect(m) > kHermitianTol) throw InvalidArgument(std::string(op) + ": matrix is not Hermitian");
}

enum class Trans { None, Adjoint };

ComplexMatrix gemm(Trans ta, const ComplexMatrix& a, Trans tb, const ComplexMatrix& b) {
  const std::size_t m = ta == Trans::None ? a.rows() : a.cols();
  const std::size_t ka = ta == Trans::None ? a.cols() : a.rows();
  const std::size_t kb = tb == Trans::None ? b.rows() : b.cols();
  const std::size_t n = tb == Trans::None ? b.cols() : b.rows();
  if (ka != kb) {
    throw DimensionError("matmul: inner dimensions " + std::to_string(ka) + " and " + std::to_string(kb) + " differ");
  }
  ComplexMatrix c(m, n);
  if (m == 0 || n == 0) return c;
  if (ka == 0) return c;
  const Complex one(1.0), zero(0.0);
  cblas_zgemm(CblasRowMajor, ta == Trans::None ? CblasNoTrans : CblasConjTrans,
              tb == Trans::None ? CblasNoTrans : CblasConjTrans, static_cast<int>(m), static_cast<int>(n),
              static_cast<int>(ka), &one, a.data().data(), static_cast<int>(a.cols()), b.data().data(),
              static_cast<int>(b.cols()), &zero, c.data().data(), static_cast<int>(n));
  return c;
}

// Householder reduction of a Hermitian matrix to real symmetric tridiagonal
// form: A = Q D S D^dagger Q^dagger with S = tridiag(sub, diag, sub).
struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> sub;        // size n, sub[n-1] = 0
  std::vector<Complex> phases;    // D
  std::vector<std::vector<Complex>> reflectors;  // w_k on indices k+1..n-1
  std::vector<double> betas;
};

Tridiagonal tridiagonalize(const ComplexMatrix& m, bool keep_reflectors) {
  const int n = static_cast<int>(m.rows());
  // Work in the lower triangle of a row-major copy.
  std::vector<Complex> a(m.data().begin(), m.data().end());
  auto at = [&](int r, int c) -> Complex& { return a[static_cast<std::size_t>(r) * n + c]; };

  Tridiagonal t;
  t.diag.assign(n, 0.0);
  t.sub.assign(n, 0.0);
  std::vector<Complex> offdiag(n, Complex(0.0));
  std::vector<Complex> w(n), p(n);

  for (int k = 0; k + 2 < n; ++k) {
    const int len = n - k - 1;
    double tail2 = 0.0;
    for (int i = 0; i < len; ++i) {
      w[i] = at(k + 1 + i, k);
      if (i > 0) tail2 += std::norm(w[i]);
    }
    const double xnorm2 = tail2 + std::norm(w[0]);
    if (tail2 <= 0.0) {
      offdiag[k] = w[0];
      if (keep_reflectors) {
        t.reflectors.emplace_back();
        t.betas.push_back(0.0);
      }
      continue;
    }
    const double xnorm = std::sqrt(xnorm2);
    const double a0 = std::abs(w[0]);
    const Complex phase = a0 > 0.0 ? w[0] / a0 : Complex(1.0);
    w[0] += phase * xnorm;
    const double wnorm2 = tail2 + std::norm(w[0]);
    const double beta = 2.0 / wnorm2;
    offdiag[k] = -phase * xnorm;

    Complex* sub_a = &at(k + 1, k + 1);
    // p = beta * A22 w
    const Complex cbeta(beta), zero(0.0);
    cblas_zhemv(CblasRowMajor, CblasLower, len, &cbeta, sub_a, n, w.data(), 1, &zero, p.data(), 1);
    // K = beta/2 * w^dagger p ; q = p - K w
    Complex wp(0.0);
    for (int i = 0; i < len; ++i) wp += std::conj(w[i]) * p[i];
    const Complex kk = 0.5 * beta * wp;
    for (int i = 0; i < len; ++i) p[i] -= kk * w[i];
    // A22 <- A22 - w q^dagger - q w^dagger
    const Complex minus_one(-1.0);
    cblas_zher2(CblasRowMajor, CblasLower, len, &minus_one, w.data(), 1, p.data(), 1, sub_a, n);

    if (keep_reflectors) {
      t.reflectors.emplace_back(w.begin(), w.begin() + len);
      t.betas.push_back(beta);
    }
  }
  for (int i = 0; i < n; ++i) t.diag[i] = at(i, i).real();
  if (n >= 2) offdiag[n - 2] = at(n - 1, n - 2);

  t.phases.assign(n, Complex(1.0));
  for (int i = 0; i + 1 < n; ++i) {
    const double mag = std::abs(offdiag[i]);
    t.sub[i] = mag;
    t.phases[i + 1] = mag > 0.0 ? t.phases[i] * (offdiag[i] / mag) : t.phases[i];
  }
  return t;
}

// Implicit QL with Wilkinson-type shifts on a real symmetric tridiagonal
// matrix. `zt` (optional) holds the transposed eigenvector matrix: row i is
// the i-th eigenvector.
void tridiagonal_ql(std::vector<double>& d, std::vector<double>& e, std::vector<double>* zt) {
  const int n = static_cast<int>(d.size());
  constexpr int kMaxSweeps = 60;
  const double eps = std::numeric_limits<double>::epsilon();
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m = l;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (iter++ == kMaxSweeps) throw ConvergenceError("hermitian_eig: QL iteration stalled", iter);
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i = m - 1;
        for (; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          e[i + 1] = (r = std::hypot(f, g));
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          d[i + 1] = g + (p = s * r);
          g = c * r - b;
          if (zt) {
            double* row_hi = zt->data() + static_cast<std::size_t>(i + 1) * n;
            double* row_lo = zt->data() + static_cast<std::size_t>(i) * n;
            cblas_drot(n, row_hi, 1, row_lo, 1, c, s);
          }
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

using detail::fftw_planner_mutex;

// In-place batched DFT over the columns of a row-major rows x cols block.
void dft_columns(Complex* data, int rows, int cols, int sign) {
  if (rows == 0 || cols == 0) return;
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_many_dft(1, &rows, cols, buf, nullptr, cols, 1, buf, nullptr, cols, 1, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard lock(fftw_planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const Complex> diag) {
  ComplexMatrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const double> diag) {
  ComplexMatrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = std::conj((*this)(r, c));
  return t;
}

double ComplexMatrix::max_abs() const {
  double best = 0.0;
  for (const Complex& z : data_) best = std::max(best, std::abs(z));
  return best;
}

bool ComplexMatrix::is_diagonal() const {
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c)
      if (r != c && (*this)(r, c) != Complex(0.0)) return false;
  return true;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
  require_same_shape(*this, o, "operator+");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
  require_same_shape(*this, o, "operator-");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(Complex s) {
  for (Complex& z : data_) z *= s;
  return *this;
}

ComplexMatrix matmul(const ComplexMatrix& x, const ComplexMatrix& y) { return gemm(Trans::None, x, Trans::None, y); }

ComplexMatrix adjoint_matmul(const ComplexMatrix& x, const ComplexMatrix& y) {
  return gemm(Trans::Adjoint, x, Trans::None, y);
}

ComplexMatrix commutator(const ComplexMatrix& x, const ComplexMatrix& y) {
  if (!x.is_square() || !y.is_square() || x.rows() != y.rows()) {
    throw DimensionError("commutator: operands must be square with equal size");
  }
  ComplexMatrix xy = matmul(x, y);
  xy -= matmul(y, x);
  return xy;
}

double hermiticity_defect(const ComplexMatrix& m) {
  if (!m.is_square()) return std::numeric_limits<double>::infinity();
  const double scale = m.max_abs();
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = r; c < m.cols(); ++c) worst = std::max(worst, std::abs(m(r, c) - std::conj(m(c, r))));
  return worst / scale;
}

HermitianEigen hermitian_eig(const ComplexMatrix& m) {
  require_hermitian(m, "hermitian_eig");
  const std::size_t n = m.rows();
  HermitianEigen out;
  if (n == 0) return out;

  Tridiagonal t = tridiagonalize(m, true);
  std::vector<double> zt(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) zt[i * n + i] = 1.0;
  tridiagonal_ql(t.diag, t.sub, &zt);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return t.diag[a] < t.diag[b]; });

  // D Z with columns sorted by eigenvalue.
  ComplexMatrix dz(n, n);
  out.values.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t src = order[c];
    out.values[c] = t.diag[src];
    const double* zrow = zt.data() + src * n;
    for (std::size_t r = 0; r < n; ++r) dz(r, c) = t.phases[r] * zrow[r];
  }

  // Apply Q = H_0 H_1 ... H_{n-3} from the left, innermost first.
  for (std::size_t k = t.reflectors.size(); k-- > 0;) {
    const auto& w = t.reflectors[k];
    if (w.empty()) continue;
    const double beta = t.betas[k];
    const std::size_t off = k + 1;
    const std::size_t len = w.size();
    // y^T = w^dagger * DZ[off:, :]
    std::vector<Complex> y(n, Complex(0.0));
    const Complex one(1.0), zero(0.0);
    cblas_zgemv(CblasRowMajor, CblasConjTrans, static_cast<int>(len), static_cast<int>(n), &one,
                &dz(off, 0), static_cast<int>(n), w.data(), 1, &zero, y.data(), 1);
    // conj trans gives (DZ^dagger w); we need w^dagger DZ = conj of that.
    for (Complex& v : y) v = std::conj(v);
    const Complex alpha(-beta);
    cblas_zgeru(CblasRowMajor, static_cast<int>(len), static_cast<int>(n), &alpha, w.data(), 1, y.data(), 1,
                &dz(off, 0), static_cast<int>(n));
  }
  out.vectors = std::move(dz);
  return out;
}

std::vector<double> hermitian_eigenvalues(const ComplexMatrix& m) {
  require_hermitian(m, "hermitian_eigenvalues");
  if (m.rows() == 0) return {};
  Tridiagonal t = tridiagonalize(m, false);
  tridiagonal_ql(t.diag, t.sub, nullptr);
  std::sort(t.diag.begin(), t.diag.end());
  return t.diag;
}

ComplexMatrix unitary_exp(const HermitianEigen& eig, double theta) {
  const std::size_t n = eig.values.size();
  ComplexMatrix scaled = eig.vectors;
  for (std::size_t c = 0; c < n; ++c) {
    const Complex ph = std::polar(1.0, -theta * eig.values[c]);
    for (std::size_t r = 0; r < n; ++r) scaled(r, c) *= ph;
  }
  return gemm(Trans::None, scaled, Trans::Adjoint, eig.vectors);
}

ComplexMatrix unitary_exp(const ComplexMatrix& m, double theta) {
  require_hermitian(m, "unitary_exp");
  if (theta == 0.0) return ComplexMatrix::identity(m.rows());
  if (m.is_diagonal()) {
    ComplexMatrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) out(i, i) = std::polar(1.0, -theta * m(i, i).real());
    return out;
  }
  return unitary_exp(hermitian_eig(m), theta);
}

namespace {

extern "C" void dstevx_(const char* jobz, const char* range, const int* n, double* d, double* e, const double* vl,
                        const double* vu, const int* il, const int* iu, const double* abstol, int* m, double* w,
                        double* z, const int* ldz, double* work, int* iwork, int* ifail, int* info, std::size_t,
                        std::size_t);

struct RitzTop {
  double theta1;
  double theta2;  // -inf when the tridiagonal is 1 x 1
  double last;    // |last component| of the top eigenvector
};

// Two largest eigenvalues of the Lanczos tridiagonal and the last component of
// the top eigenvector.
RitzTop top_ritz_pairs(const std::vector<double>& alpha, const std::vector<double>& beta) {
  const int n = static_cast<int>(alpha.size());
  if (n == 1) return {alpha[0], -std::numeric_limits<double>::infinity(), 1.0};
  std::vector<double> d = alpha, e(beta.begin(), beta.begin() + (n - 1));
  const int il = n - 1, iu = n, ldz = n;
  const double vl = 0.0, vu = 0.0, abstol = 0.0;
  int m = 0, info = 0;
  std::vector<double> w(static_cast<std::size_t>(n)), z(static_cast<std::size_t>(2 * n)), work(5 * static_cast<std::size_t>(n));
  std::vector<int> iwork(5 * static_cast<std::size_t>(n)), ifail(static_cast<std::size_t>(n));
  dstevx_("V", "I", &n, d.data(), e.data(), &vl, &vu, &il, &iu, &abstol, &m, w.data(), z.data(), &ldz, work.data(),
          iwork.data(), ifail.data(), &info, 1, 1);
  if (info != 0 || m != 2) throw ConvergenceError("spectral_norm: tridiagonal eigensolver failed", alpha.size());
  // Ascending: w[1] is the largest, its vector is the second column.
  return {w[1], w[0], std::abs(z[static_cast<std::size_t>(2 * n - 1)])};
}

}  // namespace

double spectral_norm_dense(const ComplexMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  ComplexMatrix g = adjoint_matmul(m, m);
  for (std::size_t r = 0; r < g.rows(); ++r) {
    g(r, r) = g(r, r).real();
    for (std::size_t c = r + 1; c < g.cols(); ++c) {
      const Complex avg = 0.5 * (g(r, c) + std::conj(g(c, r)));
      g(r, c) = avg;
      g(c, r) = std::conj(avg);
    }
  }
  const auto values = hermitian_eigenvalues(g);
  return std::sqrt(std::max(values.back(), 0.0));
}

double spectral_norm(const ComplexMatrix& m, const SpectralNormOptions& opts) {
  const std::size_t rows = m.rows(), cols = m.cols();
  if (rows == 0 || cols == 0 || m.max_abs() == 0.0) return 0.0;
  if (cols <= 2) return spectral_norm_dense(m);

  // Lanczos on G = M^dagger M with full reorthogonalisation. The top Ritz
  // value theta satisfies |lambda_max - theta| <= beta_j |s_j|, which is the
  // stopping test.
  const int ir = static_cast<int>(rows), ic = static_cast<int>(cols);
  const std::size_t max_steps = std::min<std::size_t>(cols, std::max<std::size_t>(opts.max_iterations, 1));
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> gauss;
  std::vector<Complex> basis;  // row j = q_j
  basis.reserve(std::min<std::size_t>(max_steps, 512) * cols);
  std::vector<Complex> q(cols), w(cols), mq(rows);
  for (Complex& z : q) z = Complex(gauss(rng), gauss(rng));
  {
    const double nrm = cblas_dznrm2(ic, q.data(), 1);
    for (Complex& z : q) z /= nrm;
  }
  std::vector<double> alpha, beta;
  const Complex one(1.0), zero(0.0);
  double theta = 0.0;
  std::size_t j = 0;
  for (; j < max_steps; ++j) {
    basis.insert(basis.end(), q.begin(), q.end());
    const int k = static_cast<int>(j + 1);
    cblas_zgemv(CblasRowMajor, CblasNoTrans, ir, ic, &one, m.data().data(), ic, q.data(), 1, &zero, mq.data(), 1);
    cblas_zgemv(CblasRowMajor, CblasConjTrans, ir, ic, &one, m.data().data(), ic, mq.data(), 1, &zero, w.data(), 1);
    Complex a;
    cblas_zdotc_sub(ic, q.data(), 1, w.data(), 1, &a);
    alpha.push_back(a.real());
    // Two passes of Gram-Schmidt against every basis vector.
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < k; ++i) {
        const Complex* qi = basis.data() + static_cast<std::size_t>(i) * cols;
        Complex c;
        cblas_zdotc_sub(ic, qi, 1, w.data(), 1, &c);
        c = -c;
        cblas_zaxpy(ic, &c, qi, 1, w.data(), 1);
      }
    }
    const double b = cblas_dznrm2(ic, w.data(), 1);

    const auto [theta1, theta2, last] = top_ritz_pairs(alpha, beta);
    theta = theta1;
    const double r = b * last;
    // Residual bound, or the sharper r^2 / gap bound once a Ritz gap is visible.
    const bool gap_ok = j >= 10 && theta1 > theta2 && r * r <= opts.tolerance * theta1 * (theta1 - theta2);
    if (r <= opts.tolerance * theta1 || gap_ok || b <= 1e-14 * std::max(theta1, 1e-300)) {
      return std::sqrt(std::max(theta1, 0.0));
    }

    beta.push_back(b);
    for (std::size_t i = 0; i < cols; ++i) q[i] = w[i] / b;
  }
  if (j == cols) return std::sqrt(std::max(theta, 0.0));  // full Krylov space: exact
  if (std::max(rows, cols) <= opts.dense_fallback_limit) return spectral_norm_dense(m);
  throw ConvergenceError("spectral_norm: Lanczos did not converge", j);
}

double unitarity_defect(const ComplexMatrix& u) {
  ComplexMatrix g = adjoint_matmul(u, u);
  g -= ComplexMatrix::identity(g.rows());
  return spectral_norm(g);
}

std::vector<Complex> circulant_eigenvalues(std::span<const Complex> first_row) {
  std::vector<Complex> lambda(first_row.begin(), first_row.end());
  dft_columns(lambda.data(), static_cast<int>(lambda.size()), 1, FFTW_BACKWARD);
  return lambda;
}

ComplexMatrix circulant_from_row(std::span<const Complex> first_row) {
  const std::size_t n = first_row.size();
  ComplexMatrix c(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k) c(j, k) = first_row[(k + n - j) % n];
  return c;
}

std::optional<std::vector<Complex>> circulant_first_row(const ComplexMatrix& m, double rel_tol) {
  if (!m.is_square()) return std::nullopt;
  const std::size_t n = m.rows();
  const double tol = rel_tol * m.max_abs();
  std::vector<Complex> row(m.row(0).begin(), m.row(0).end());
  for (std::size_t j = 1; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k)
      if (std::abs(m(j, k) - row[(k + n - j) % n]) > tol) return std::nullopt;
  return row;
}

ComplexMatrix circulant_exp(std::span<const Complex> first_row, double theta) {
  const std::size_t n = first_row.size();
  const double scale = std::transform_reduce(first_row.begin(), first_row.end(), 0.0,
                                             [](double a, double b) { return std::max(a, b); },
                                             [](const Complex& z) { return std::abs(z); });
  for (std::size_t r = 0; r < n; ++r) {
    if (std::abs(first_row[(n - r) % n] - std::conj(first_row[r])) > kHermitianTol * scale) {
      throw InvalidArgument("circulant_exp: circulant is not Hermitian");
    }
  }
  const auto lambda = circulant_eigenvalues(first_row);
  std::vector<Complex> row(n);
  for (std::size_t m = 0; m < n; ++m) row[m] = std::polar(1.0 / static_cast<double>(n), -theta * lambda[m].real());
  dft_columns(row.data(), static_cast<int>(n), 1, FFTW_FORWARD);
  return circulant_from_row(row);
}

void apply_circulant_left(std::span<const Complex> eigenvalues, ComplexMatrix& x) {
  const std::size_t n = eigenvalues.size();
  if (x.rows() != n) throw DimensionError("apply_circulant_left: size mismatch");
  const int rows = static_cast<int>(x.rows()), cols = static_cast<int>(x.cols());
  dft_columns(x.data().data(), rows, cols, FFTW_FORWARD);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t m = 0; m < n; ++m) {
    const Complex f = eigenvalues[m] * inv_n;
    for (Complex& z : x.row(m)) z *= f;
  }
  dft_columns(x.data().data(), rows, cols, FFTW_BACKWARD);
}

void apply_diagonal_left(std::span<const Complex> d, ComplexMatrix& x) {
  if (x.rows() != d.size()) throw DimensionError("apply_diagonal_left: size mismatch");
  for (std::size_t r = 0; r < d.size(); ++r)
    for (Complex& z : x.row(r)) z *= d[r];
}

}  // namespace semitrotter
