#include "semitrotter/model.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <string>

#include "semitrotter/errors.hpp"

namespace semitrotter {

void ModelParams::validate() const {
  if (!(h > 0.0 && h <= 1.0)) throw InvalidArgument("model: h must lie in (0, 1], got " + std::to_string(h));
  if (!(kinetic_coeff > 0.0)) throw InvalidArgument("model: kinetic_coeff must be positive");
}

void PolyObservableSpec::validate() const {
  if (terms.empty()) throw InvalidArgument("observable: no terms");
  if (!(h > 0.0)) throw InvalidArgument("observable: h must be positive");
  std::set<std::size_t> seen;
  for (const auto& t : terms)
    if (!seen.insert(t.degree).second) throw InvalidArgument("observable: duplicate degree " + std::to_string(t.degree));
}

std::vector<ObservableTerm> parse_observable_terms(std::string_view text) {
  std::vector<ObservableTerm> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(';', start), text.size());
    std::string_view item = text.substr(start, end - start);
    start = end + 1;
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    item.remove_prefix(first);
    const std::size_t colon = item.find(':');
    if (colon == std::string_view::npos) throw InvalidArgument("observable: expected 'degree: expression'");
    std::string_view deg = item.substr(0, colon);
    while (!deg.empty() && (deg.back() == ' ' || deg.back() == '\t')) deg.remove_suffix(1);
    std::size_t degree = 0;
    const auto [ptr, ec] = std::from_chars(deg.data(), deg.data() + deg.size(), degree);
    if (ec != std::errc() || ptr != deg.data() + deg.size()) {
      throw InvalidArgument("observable: bad degree '" + std::string(deg) + "'");
    }
    out.push_back({degree, parse_expr(item.substr(colon + 1))});
    if (end == text.size()) break;
  }
  return out;
}

std::vector<ObservableTerm> default_observable_terms() {
  return {{0, parse_expr("cos(x)")}, {1, parse_expr("sin(x)")}};
}

namespace {

ComplexMatrix second_derivative(const Grid& g, SchemeKind scheme) {
  return scheme == SchemeKind::Spectral ? build_spectral_derivative(g, 2) : build_laplacian(g);
}

}  // namespace

ComplexMatrix build_A(const ModelParams& p) {
  p.validate();
  return second_derivative(p.grid, p.scheme) * Complex(-p.kinetic_coeff * p.h);
}

ComplexMatrix build_B(const ModelParams& p) {
  p.validate();
  auto v = sample(p.grid, p.potential);
  for (double& x : v) x /= p.h;
  return ComplexMatrix::diagonal(std::span<const double>(v));
}

ComplexMatrix build_H(const ModelParams& p) { return build_A(p) + build_B(p); }

ComplexMatrix build_observable(const PolyObservableSpec& spec, const Grid& g, SchemeKind scheme) {
  spec.validate();
  const std::size_t n = g.size();
  ComplexMatrix o(n, n);
  for (const auto& term : spec.terms) {
    const ComplexMatrix d = scheme == SchemeKind::Spectral ? build_spectral_derivative(g, term.degree)
                                                           : build_Dk(g, term.degree, spec.odd);
    const auto y = sample(g, term.coeff);
    const double hm = std::pow(spec.h, static_cast<double>(term.degree));
    for (std::size_t r = 0; r < n; ++r) {
      const double scale = y[r] * hm;
      if (scale == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) o(r, c) += scale * d(r, c);
    }
  }
  if (spec.symmetrize) {
    ComplexMatrix sym = o + o.adjoint();
    o = sym * Complex(0.5);
  }
  return o;
}

}  // namespace semitrotter
