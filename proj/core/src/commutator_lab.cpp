#include "semitrotter/commutator_lab.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <string>

#include "semitrotter/errors.hpp"

namespace semitrotter {

CommWord parse_comm_word(std::string_view text) {
  CommWord w;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == 'A') {
      w.push_back(Generator::A);
    } else if (c == 'B') {
      w.push_back(Generator::B);
    } else if (!(std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == '(' || c == ')')) {
      throw ParseError("comm word: unexpected character '" + std::string(1, c) + "'", i);
    }
  }
  return w;
}

std::string to_string(const CommWord& w) {
  std::string s = "(";
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) s += ",";
    s += w[i] == Generator::A ? "A" : "B";
  }
  return s + ")";
}

ComplexMatrix nested_comm(const CommWord& word, const ComplexMatrix& a, const ComplexMatrix& b,
                          const ComplexMatrix& o) {
  ComplexMatrix cur = o;
  for (const Generator g : word) cur = commutator(g == Generator::A ? a : b, cur);
  return cur;
}

struct CommExpr::Node {
  Leaf leaf = Leaf::O;
  std::shared_ptr<const Node> lhs, rhs;
};

CommExpr CommExpr::leaf(Leaf l) { return CommExpr(std::make_shared<const Node>(Node{l, nullptr, nullptr})); }

CommExpr CommExpr::bracket(CommExpr lhs, CommExpr rhs) {
  return CommExpr(std::make_shared<const Node>(Node{Leaf::O, std::move(lhs.node_), std::move(rhs.node_)}));
}

CommExpr CommExpr::parse(std::string_view text) {
  std::size_t pos = 0;
  auto skip = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  };
  std::function<CommExpr()> term = [&]() -> CommExpr {
    skip();
    if (pos >= text.size()) throw ParseError("comm expr: unexpected end of input", pos);
    const char c = text[pos];
    if (c == 'A' || c == 'B' || c == 'O') {
      ++pos;
      return leaf(c == 'A' ? Leaf::A : c == 'B' ? Leaf::B : Leaf::O);
    }
    if (c != '[') throw ParseError("comm expr: expected 'A', 'B', 'O' or '['", pos);
    ++pos;
    CommExpr lhs = term();
    skip();
    if (pos >= text.size() || text[pos] != ',') throw ParseError("comm expr: expected ','", pos);
    ++pos;
    CommExpr rhs = term();
    skip();
    if (pos >= text.size() || text[pos] != ']') throw ParseError("comm expr: expected ']'", pos);
    ++pos;
    return bracket(std::move(lhs), std::move(rhs));
  };
  CommExpr e = term();
  skip();
  if (pos != text.size()) throw ParseError("comm expr: trailing characters", pos);
  return e;
}

ComplexMatrix CommExpr::evaluate(const ComplexMatrix& a, const ComplexMatrix& b, const ComplexMatrix& o) const {
  if (!node_->lhs) return node_->leaf == Leaf::A ? a : node_->leaf == Leaf::B ? b : o;
  return commutator(CommExpr(node_->lhs).evaluate(a, b, o), CommExpr(node_->rhs).evaluate(a, b, o));
}

std::string CommExpr::to_string() const {
  if (!node_->lhs) return node_->leaf == Leaf::A ? "A" : node_->leaf == Leaf::B ? "B" : "O";
  return "[" + CommExpr(node_->lhs).to_string() + "," + CommExpr(node_->rhs).to_string() + "]";
}

std::vector<CommWord> beta_words(int p) {
  if (p < 1) throw InvalidArgument("beta_words: p must be >= 1");
  const std::size_t len = static_cast<std::size_t>(p) + 1;
  // Each raw word in {A,B}^{p+1} collapses to a unique (H_j, q_j) block list
  // and every block list expands to exactly one raw word, so deduplicating the
  // collapsed forms leaves all 2^{p+1} words.
  std::map<std::vector<std::pair<Generator, int>>, CommWord> unique;
  for (std::size_t mask = 0; mask < (std::size_t{1} << len); ++mask) {
    CommWord w(len);
    for (std::size_t i = 0; i < len; ++i) w[i] = (mask >> i) & 1 ? Generator::B : Generator::A;
    std::vector<std::pair<Generator, int>> blocks;
    for (const Generator g : w) {
      if (!blocks.empty() && blocks.back().first == g) {
        ++blocks.back().second;
      } else {
        blocks.emplace_back(g, 1);
      }
    }
    unique.emplace(std::move(blocks), std::move(w));
  }
  std::vector<CommWord> out;
  out.reserve(unique.size());
  for (auto& [blocks, w] : unique) out.push_back(std::move(w));
  return out;
}

namespace {

// Depth-first evaluation of ||ad-chain(O)|| for a set of words sharing inner
// prefixes.
void for_each_word_norm(const std::vector<CommWord>& words, const ComplexMatrix& a, const ComplexMatrix& b,
                        const ComplexMatrix& o, const std::function<void(std::size_t, double)>& visit) {
  std::vector<std::size_t> idx(words.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return words[x] < words[y]; });

  std::vector<ComplexMatrix> stack{o};  // stack[d] = chain of the current prefix of length d
  CommWord current;
  for (const std::size_t i : idx) {
    const CommWord& w = words[i];
    std::size_t common = 0;
    while (common < current.size() && common < w.size() && current[common] == w[common]) ++common;
    current.resize(common);
    stack.resize(common + 1);
    for (std::size_t d = common; d < w.size(); ++d) {
      stack.push_back(commutator(w[d] == Generator::A ? a : b, stack.back()));
      current.push_back(w[d]);
    }
    visit(i, spectral_norm(stack.back()));
  }
}

}  // namespace

double compute_beta_comm(int p, const ComplexMatrix& a, const ComplexMatrix& b, const ComplexMatrix& o) {
  const auto words = beta_words(p);
  double best = 0.0;
  for_each_word_norm(words, a, b, o, [&](std::size_t, double nrm) { best = std::max(best, nrm); });
  return best;
}

std::vector<std::pair<CommWord, double>> alpha_weights(int p, std::size_t plan_len, Generator first) {
  if (p < 1) throw InvalidArgument("alpha_weights: p must be >= 1");
  if (plan_len == 0) throw InvalidArgument("alpha_weights: empty plan");
  const std::size_t len = static_cast<std::size_t>(p) + 1;
  std::vector<double> inv_fact(len + 1, 1.0);
  double fact = 1.0;
  for (std::size_t q = 1; q <= len; ++q) {
    fact *= static_cast<double>(q);
    inv_fact[q] = 1.0 / fact;
  }
  const double full_fact = fact;

  std::vector<std::pair<CommWord, double>> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << len); ++mask) {
    CommWord w(len);
    for (std::size_t i = 0; i < len; ++i) w[i] = (mask >> i) & 1 ? Generator::B : Generator::A;
    // g[i]: weighted count of ways the first i letters are consumed by the
    // stages seen so far.
    std::vector<double> g(len + 1, 0.0);
    g[0] = 1.0;
    for (std::size_t j = 0; j < plan_len; ++j) {
      const Generator stage_gen = (j % 2 == 0) == (first == Generator::A) ? Generator::A : Generator::B;
      std::vector<double> next = g;
      for (std::size_t i = 0; i < len; ++i) {
        if (g[i] == 0.0) continue;
        for (std::size_t q = 1; i + q <= len && w[i + q - 1] == stage_gen; ++q) next[i + q] += g[i] * inv_fact[q];
      }
      g = std::move(next);
    }
    if (g[len] > 0.0) out.emplace_back(std::move(w), g[len] * full_fact);
  }
  return out;
}

double compute_alpha_comm(int p, std::size_t plan_len, const ComplexMatrix& a, const ComplexMatrix& b,
                          const ComplexMatrix& o) {
  // Norms depend only on the word, so evaluate every word once.
  const auto words = beta_words(p);
  std::map<CommWord, double> norms;
  for_each_word_norm(words, a, b, o, [&](std::size_t i, double nrm) { norms[words[i]] = nrm; });

  double best = 0.0;
  for (const Generator first : {Generator::A, Generator::B}) {
    double total = 0.0;
    for (const auto& [w, weight] : alpha_weights(p, plan_len, first)) total += weight * norms.at(w);
    best = std::max(best, total);
  }
  return best;
}

double compute_alpha_tilde(int p, const ComplexMatrix& h, const ComplexMatrix& o) {
  if (p < 1) throw InvalidArgument("compute_alpha_tilde: p must be >= 1");
  ComplexMatrix cur = o;
  for (int i = 0; i <= p; ++i) cur = commutator(h, cur);
  return spectral_norm(cur);
}

}  // namespace semitrotter
