#include "semitrotter/symbolic_lie.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "semitrotter/errors.hpp"
#include "semitrotter/fit.hpp"

namespace semitrotter {

namespace {

using Poly = std::map<Monomial, Rational>;

Monomial multiply(const Monomial& a, const Monomial& b) {
  Monomial out = a;
  for (const auto& [factor, mult] : b) out[factor] += mult;
  return out;
}

Poly differentiate(const Poly& p) {
  Poly out;
  for (const auto& [mono, c] : p) {
    for (const auto& [factor, mult] : mono) {
      Monomial next = mono;
      if (--next[factor] == 0) next.erase(factor);
      ++next[{factor.first, factor.second + 1}];
      Rational& slot = out[next];
      slot += c * mult;
      if (slot == 0) out.erase(next);
    }
  }
  return out;
}

Rational binomial(int n, int k) {
  Rational r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::string rational_string(const Rational& q) {
  std::ostringstream os;
  os << numerator(q);
  if (denominator(q) != 1) os << "/" << denominator(q);
  return os.str();
}

std::string monomial_string(const Monomial& m) {
  if (m.empty()) return "1";
  std::string s;
  for (const auto& [factor, mult] : m) {
    for (int i = 0; i < mult; ++i) {
      if (!s.empty()) s += "·";
      s += factor.first + "^(" + std::to_string(factor.second) + ")";
    }
  }
  return s;
}

}  // namespace

SymOp SymOp::monomial(const Rational& scalar, const std::string& base, int hpow, int dord) {
  Monomial m;
  if (!base.empty()) m[{base, 0}] = 1;
  SymOp op;
  op.add_term(scalar, m, hpow, dord);
  return op;
}

SymOp SymOp::from_term(const SymTerm& t) {
  SymOp op;
  op.add_term(t.coeff.scalar, t.coeff.factors, t.hpow, t.dord);
  return op;
}

void SymOp::add_term(const Rational& scalar, const Monomial& m, int hpow, int dord) {
  if (scalar == 0) return;
  if (dord < 0) throw InvalidArgument("SymOp: negative derivative order");
  Key key{dord, hpow, m};
  auto [it, inserted] = terms_.try_emplace(std::move(key), scalar);
  if (!inserted) {
    it->second += scalar;
    if (it->second == 0) terms_.erase(it);
  }
}

std::vector<SymTerm> SymOp::terms() const {
  std::vector<SymTerm> out;
  out.reserve(terms_.size());
  for (const auto& [key, c] : terms_) out.push_back({{c, key.factors}, key.hpow, key.dord});
  return out;
}

SymOp& SymOp::operator+=(const SymOp& o) {
  for (const auto& [key, c] : o.terms_) add_term(c, key.factors, key.hpow, key.dord);
  return *this;
}

SymOp& SymOp::operator-=(const SymOp& o) {
  for (const auto& [key, c] : o.terms_) add_term(-c, key.factors, key.hpow, key.dord);
  return *this;
}

SymOp& SymOp::operator*=(const Rational& s) {
  if (s == 0) {
    terms_.clear();
    return *this;
  }
  for (auto& [key, c] : terms_) c *= s;
  return *this;
}

SymOp compose(const SymOp& p, const SymOp& q) {
  SymOp out;
  int max_d = 0;
  for (const auto& [key, c] : p.terms_) max_d = std::max(max_d, key.dord);

  for (const auto& [qkey, qc] : q.terms_) {
    // z^{(r)} for r = 0..max_d
    std::vector<Poly> derivs;
    derivs.push_back(Poly{{qkey.factors, Rational(1)}});
    for (int r = 1; r <= max_d; ++r) derivs.push_back(differentiate(derivs.back()));

    for (const auto& [pkey, pc] : p.terms_) {
      const Rational base = pc * qc;
      for (int r = 0; r <= pkey.dord; ++r) {
        const Rational weight = base * binomial(pkey.dord, r);
        for (const auto& [mono, c] : derivs[r]) {
          out.add_term(weight * c, multiply(pkey.factors, mono), pkey.hpow + qkey.hpow, pkey.dord - r + qkey.dord);
        }
      }
    }
  }
  return out;
}

SymOp sym_commutator(const SymOp& p, const SymOp& q) { return compose(p, q) - compose(q, p); }

int height(const SymOp& p) {
  int h = 0;
  for (const auto& t : p.terms()) h = std::max(h, t.dord);
  return h;
}

std::optional<int> width(const SymOp& p) {
  std::optional<int> w;
  for (const auto& t : p.terms())
    if (!w || t.hpow < *w) w = t.hpow;
  return w;
}

SymOp a_sym() { return SymOp::monomial(1, "", 1, 2); }
SymOp b_sym() { return SymOp::monomial(1, "V", -1, 0); }
SymOp observable_sym(int q, const std::string& base) { return SymOp::monomial(1, base, q, q); }

SymOp grade_n_commutator(const std::vector<Generator>& word) {
  if (word.empty()) throw InvalidArgument("grade_n_commutator: empty word");
  auto gen = [](Generator g) { return g == Generator::A ? a_sym() : b_sym(); };
  SymOp c = gen(word.front());
  for (std::size_t i = 1; i < word.size(); ++i) c = sym_commutator(gen(word[i]), c);
  return c;
}

std::string to_string(const SymOp& p) {
  auto terms = p.terms();
  if (terms.empty()) return "0";
  std::vector<std::pair<std::tuple<int, int, std::string>, std::string>> lines;
  for (const auto& t : terms) {
    const std::string mono = monomial_string(t.coeff.factors);
    lines.push_back({{-t.dord, t.hpow, mono},
                     rational_string(t.coeff.scalar) + " * " + mono + " * h^" + std::to_string(t.hpow) + " * d^" +
                         std::to_string(t.dord)});
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += "\n";
    out += lines[i].second;
  }
  return out;
}

namespace {

class RandomOps {
 public:
  explicit RandomOps(std::uint64_t seed) : rng_(seed) {}

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  SymOp op() {
    SymOp p;
    const int nterms = uniform(1, 4);
    static const char* bases[] = {"f", "g"};
    for (int t = 0; t < nterms; ++t) {
      int num = uniform(-3, 3);
      if (num == 0) num = 1;
      const Rational scalar(num, uniform(1, 3));
      Monomial m;
      const int nfactors = uniform(0, 2);
      for (int f = 0; f < nfactors; ++f) ++m[{bases[uniform(0, 1)], uniform(0, 2)}];
      p.add_term(scalar, m, uniform(-3, 3), uniform(0, 4));
    }
    return p;
  }

  std::vector<Generator> word(int max_len) {
    std::vector<Generator> w(static_cast<std::size_t>(uniform(1, max_len)));
    for (auto& g : w) g = uniform(0, 1) ? Generator::B : Generator::A;
    return w;
  }

 private:
  std::mt19937_64 rng_;
};

std::string word_string(const std::vector<Generator>& w) {
  std::string s;
  for (const auto g : w) s += g == Generator::A ? 'A' : 'B';
  return s;
}

bool width_at_least(const SymOp& p, std::optional<int> bound) {
  const auto w = width(p);
  if (!w) return true;       // +inf
  if (!bound) return false;  // finite >= +inf fails
  return *w >= *bound;
}

std::optional<int> add_widths(std::optional<int> a, std::optional<int> b) {
  if (!a || !b) return std::nullopt;
  return *a + *b;
}

bool height_le_width(const SymOp& p) {
  const auto w = width(p);
  return !w || height(p) <= *w;
}

}  // namespace

HeightWidthReport verify_height_width(std::size_t trials, std::uint64_t seed) {
  HeightWidthReport rep;
  RandomOps gen(seed);
  auto note = [&](const std::string& what) {
    if (!rep.first_counterexample) rep.first_counterexample = what;
  };

  for (std::size_t trial = 0; trial < trials; ++trial) {
    ++rep.trials;

    // Pairwise height reduction and width expansion.
    const SymOp p = gen.op();
    const SymOp q = gen.op();
    const SymOp pq = sym_commutator(p, q);
    ++rep.pair_checks;
    if (!pq.is_zero() && height(pq) > height(p) + height(q) - 1) {
      ++rep.height_reduction_failures;
      note("height reduction, trial " + std::to_string(trial) + ":\nP =\n" + to_string(p) + "\nQ =\n" + to_string(q));
    }
    if (!width_at_least(pq, add_widths(width(p), width(q)))) {
      ++rep.width_expansion_failures;
      note("width expansion, trial " + std::to_string(trial) + ":\nP =\n" + to_string(p) + "\nQ =\n" + to_string(q));
    }

    // Single layer [C_n, O_q].
    const auto word = gen.word(4);
    const int obs_q = gen.uniform(0, 3);
    const SymOp c = grade_n_commutator(word);
    const SymOp o = observable_sym(obs_q);
    const SymOp layer = sym_commutator(c, o);
    ++rep.single_layer_checks;
    const int n = static_cast<int>(word.size());
    const int m = static_cast<int>(std::count(word.begin(), word.end(), Generator::A));
    bool ok = height_le_width(layer);
    if (!c.is_zero()) ok = ok && height(c) <= 2 * m - (n - 1) && width_at_least(c, 2 * m - n);
    if (!ok) {
      ++rep.single_layer_failures;
      note("single layer, trial " + std::to_string(trial) + ": word " + word_string(word) + ", q = " +
           std::to_string(obs_q));
    }

    // Nested W_k.
    const int layers = gen.uniform(1, 3);
    SymOp w = observable_sym(gen.uniform(0, 3));
    std::string desc;
    for (int k = 0; k < layers; ++k) {
      const auto wk = gen.word(4);
      desc += (desc.empty() ? "" : ",") + word_string(wk);
      w = sym_commutator(grade_n_commutator(wk), w);
      ++rep.nested_checks;
      if (!height_le_width(w)) {
        ++rep.nested_failures;
        note("nested, trial " + std::to_string(trial) + ": words " + desc);
        break;
      }
      if (w.is_zero()) break;
    }
  }
  return rep;
}

double discrete_height_estimate(const std::function<ComplexMatrix(const Grid&)>& builder,
                                const std::vector<std::size_t>& sizes, double a, double b) {
  if (sizes.size() < 3) throw InvalidArgument("discrete_height_estimate: need at least three grid sizes");
  std::vector<std::pair<double, double>> pts;
  bool any_nonzero = false;
  for (const std::size_t n : sizes) {
    const double nrm = spectral_norm(builder(Grid(a, b, n)));
    if (nrm > 0.0) any_nonzero = true;
    pts.emplace_back(static_cast<double>(n), nrm);
  }
  if (!any_nonzero) return -std::numeric_limits<double>::infinity();
  for (const auto& [x, y] : pts)
    if (y <= 0.0) throw InvalidArgument("discrete_height_estimate: operator vanishes on part of the grid sequence");
  return fit_slope(pts).slope;
}

}  // namespace semitrotter
