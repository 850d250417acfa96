#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <map>
#include <set>

#include "semitrotter/commutator_lab.hpp"
#include "semitrotter/errors.hpp"
#include "semitrotter/model.hpp"
#include "test_util.hpp"

using namespace semitrotter;

namespace {

const double kPi = 3.14159265358979323846;

struct Ops {
  ComplexMatrix a, b, o;
};

Ops model_ops(std::size_t n, double h) {
  const Grid g(-kPi, kPi, n);
  const ModelParams p{h, 0.5, parse_expr("cos(x)"), g};
  return {build_A(p), build_B(p), build_observable({default_observable_terms(), h}, g, SchemeKind::FiniteDifference)};
}

ComplexMatrix pauli(char which) {
  ComplexMatrix m(2, 2);
  if (which == 'x') m(0, 1) = m(1, 0) = 1.0;
  if (which == 'y') {
    m(0, 1) = Complex(0, -1);
    m(1, 0) = Complex(0, 1);
  }
  if (which == 'z') {
    m(0, 0) = 1.0;
    m(1, 1) = -1.0;
  }
  return m;
}

}  // namespace

TEST(CommutatorLab, WordParsing) {
  const CommWord w{Generator::B, Generator::A};
  EXPECT_EQ(parse_comm_word("BA"), w);
  EXPECT_EQ(parse_comm_word("B,A"), w);
  EXPECT_EQ(parse_comm_word("(B, A)"), w);
  EXPECT_TRUE(parse_comm_word("").empty());
  EXPECT_EQ(to_string(w), "(B,A)");
  EXPECT_THROW(parse_comm_word("BOA"), ParseError);
}

TEST(CommutatorLab, NestedChain) {
  const auto [a, b, o] = model_ops(16, 0.25);
  EXPECT_EQ(nested_comm({}, a, b, o), o);
  const ComplexMatrix want = commutator(a, commutator(b, o));
  EXPECT_EQ(nested_comm(parse_comm_word("BA"), a, b, o), want);
  // Diagonal observable commutes with the diagonal potential.
  const ComplexMatrix diag_o = build_diag(Grid(-kPi, kPi, 16), parse_expr("sin(x)"));
  EXPECT_EQ(nested_comm(parse_comm_word("B"), a, b, diag_o).max_abs(), 0.0);
}

TEST(CommutatorLab, BracketExpressions) {
  const auto [a, b, o] = model_ops(16, 0.25);
  const CommExpr e = CommExpr::parse(" [ [A,B] , O ]");
  EXPECT_EQ(e.to_string(), "[[A,B],O]");
  EXPECT_EQ(e.evaluate(a, b, o), commutator(commutator(a, b), o));
  EXPECT_EQ(CommExpr::parse("O").evaluate(a, b, o), o);
  const CommExpr built = CommExpr::bracket(CommExpr::leaf(CommExpr::Leaf::A), CommExpr::leaf(CommExpr::Leaf::B));
  EXPECT_EQ(built.to_string(), "[A,B]");

  try {
    CommExpr::parse("[A;B]");
    FAIL() << "expected ParseError";
  } catch (const ParseError& err) {
    EXPECT_EQ(err.offset(), 2u);
  }
  EXPECT_THROW(CommExpr::parse("[A,B"), ParseError);
  EXPECT_THROW(CommExpr::parse("[A,B] O"), ParseError);
  EXPECT_THROW(CommExpr::parse(""), ParseError);
}

TEST(CommutatorLab, BetaWordsEnumerateAllChains) {
  for (int p = 1; p <= 6; ++p) {
    const auto words = beta_words(p);
    EXPECT_EQ(words.size(), std::size_t{1} << (p + 1)) << p;
    const std::set<CommWord> unique(words.begin(), words.end());
    EXPECT_EQ(unique.size(), words.size());
    for (const auto& w : words) EXPECT_EQ(w.size(), static_cast<std::size_t>(p + 1));
  }
  EXPECT_THROW(beta_words(0), InvalidArgument);
}

TEST(CommutatorLab, CoefficientsVanishWhenEverythingCommutes) {
  const Grid g(-kPi, kPi, 8);
  const ComplexMatrix a = build_diag(g, parse_expr("cos(x)")), b = build_diag(g, parse_expr("x")),
                      o = build_diag(g, parse_expr("sin(x)"));
  EXPECT_EQ(compute_beta_comm(2, a, b, o), 0.0);
  EXPECT_EQ(compute_alpha_comm(2, 3, a, b, o), 0.0);
  EXPECT_EQ(compute_alpha_tilde(2, a + b, o), 0.0);
  EXPECT_EQ(compute_beta_comm(1, a, b, ComplexMatrix::identity(8)), 0.0);
}

TEST(CommutatorLab, AlphaTildeOnPauliMatrices) {
  // ad_Z^k X alternates between 2^k X and 2^k Y directions.
  for (int p = 1; p <= 5; ++p) EXPECT_NEAR(compute_alpha_tilde(p, pauli('z'), pauli('x')), std::pow(2.0, p + 1), 1e-12);
  EXPECT_THROW(compute_alpha_tilde(0, pauli('z'), pauli('x')), InvalidArgument);
}

TEST(CommutatorLab, AlphaWeightsHandEnumeration) {
  // p = 1 over stages (A, B): q = (2,0) -> AA, (0,2) -> BB, (1,1) -> AB.
  const auto w = alpha_weights(1, 2, Generator::A);
  ASSERT_EQ(w.size(), 3u);
  std::map<CommWord, double> got(w.begin(), w.end());
  EXPECT_EQ(got.at(parse_comm_word("AA")), 1.0);
  EXPECT_EQ(got.at(parse_comm_word("BB")), 1.0);
  EXPECT_EQ(got.at(parse_comm_word("AB")), 2.0);
  EXPECT_EQ(got.count(parse_comm_word("BA")), 0u);

  // Total multinomial mass is plan_len^{p+1}.
  for (const int p : {1, 2, 4}) {
    for (const std::size_t len : {2u, 3u, 11u}) {
      double total = 0.0;
      for (const auto& [word, weight] : alpha_weights(p, len, Generator::B)) total += weight;
      EXPECT_NEAR(total, std::pow(static_cast<double>(len), p + 1), 1e-9 * total) << p << " " << len;
    }
  }
  EXPECT_THROW(alpha_weights(1, 0, Generator::A), InvalidArgument);
}

TEST(CommutatorLab, AlphaMatchesDirectSumForStrang) {
  const auto [a, b, o] = model_ops(16, 0.25);
  // Strang: stages A, B, A; p + 1 = 3 adjoints distributed over them.
  double want = 0.0;
  for (const auto& [w, weight] : alpha_weights(2, 3, Generator::A)) want += weight * spectral_norm(nested_comm(w, a, b, o));
  double other = 0.0;
  for (const auto& [w, weight] : alpha_weights(2, 3, Generator::B)) other += weight * spectral_norm(nested_comm(w, a, b, o));
  EXPECT_NEAR(compute_alpha_comm(2, 3, a, b, o), std::max(want, other), 1e-9 * want);
}

TEST(CommutatorLab, AlphaTildeBoundedByBeta) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const ComplexMatrix a = testutil::random_hermitian(rng, 6), b = testutil::random_hermitian(rng, 6),
                        o = testutil::random_hermitian(rng, 6);
    for (const int p : {1, 2, 3}) {
      const double beta = compute_beta_comm(p, a, b, o);
      EXPECT_LE(compute_alpha_tilde(p, a + b, o), std::pow(2.0, p + 1) * beta * (1 + 1e-12));
    }
  }
}

TEST(CommutatorLab, BetaIsUniformInH) {
  std::vector<double> betas;
  for (const std::size_t n : {32u, 64u, 128u}) betas.push_back(compute_beta_comm(2, model_ops(n, 1.0 / n).a,
                                                                                 model_ops(n, 1.0 / n).b,
                                                                                 model_ops(n, 1.0 / n).o));
  const auto [lo, hi] = std::minmax_element(betas.begin(), betas.end());
  EXPECT_LT(*hi / *lo, 1.5);
}
