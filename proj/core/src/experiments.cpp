#include "semitrotter/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "semitrotter/commutator_lab.hpp"
#include "semitrotter/errors.hpp"
#include "semitrotter/expr.hpp"
#include "semitrotter/model.hpp"
#include "semitrotter/splitting.hpp"
#include "semitrotter/symbolic_lie.hpp"

namespace semitrotter {

namespace {

const std::set<std::string, std::less<>> kExperiments = {"dt-sweep", "h-sweep", "comm-sweep", "beta",
                                                         "verify-symbolic"};

std::vector<double> h_ladder() {
  return {1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512, 1.0 / 1024};
}

bool near_integer(double v, double tol = 1e-9) { return std::abs(v - std::round(v)) <= tol; }

// ---------------------------------------------------------------- config text

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string strip_comment(std::string_view line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return std::string(line.substr(0, i));
    }
  }
  return std::string(line);
}

std::string unquote(std::string_view s, std::size_t line_no) {
  s = trim(s);
  if (!s.empty() && (s.front() == '"' || s.front() == '\'')) {
    if (s.size() < 2 || s.back() != s.front()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": unterminated quote");
    }
    return std::string(s.substr(1, s.size() - 2));
  }
  return std::string(s);
}

// Top-level comma split; brackets, parentheses and quotes protect commas.
std::vector<std::string> split_list(std::string_view value, std::size_t line_no) {
  std::vector<std::string> out;
  int depth = 0;
  char quote = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= value.size(); ++i) {
    const char c = i < value.size() ? value[i] : ',';
    if (quote) {
      if (c == quote) quote = 0;
      if (i == value.size()) throw ConfigError("config line " + std::to_string(line_no) + ": unterminated quote");
      continue;
    }
    if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '[' || c == '(') {
      ++depth;
    } else if (c == ']' || c == ')') {
      --depth;
    } else if (c == ',' && depth <= 0) {
      const std::string item = unquote(value.substr(start, i - start), line_no);
      if (item.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty list element");
      out.push_back(item);
      start = i + 1;
    }
  }
  return out;
}

double parse_number(const std::string& text, const std::string& key) {
  try {
    // x = NaN makes any stray use of the variable non-finite, which eval rejects.
    return parse_expr(text)(std::numeric_limits<double>::quiet_NaN());
  } catch (const Error& e) {
    throw ConfigError("config key '" + key + "': bad number '" + text + "': " + e.what());
  }
}

std::size_t parse_count(const std::string& text, const std::string& key) {
  const double v = parse_number(text, key);
  if (!(v >= 0.0) || !near_integer(v) || v > 1e15) {
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + text + "'");
  }
  return static_cast<std::size_t>(std::llround(v));
}

bool parse_bool(const std::string& text, const std::string& key) {
  std::string t;
  for (const char c : text) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (t == "true" || t == "yes" || t == "on" || t == "1" || t == "gaussian") return true;
  if (t == "false" || t == "no" || t == "off" || t == "0" || t == "none") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + text + "'");
}

// ---------------------------------------------------------------- model setup

struct Setup {
  double h;
  Grid grid;
  ComplexMatrix a, b, o;
  ComplexMatrix H() const { return a + b; }
};

Setup make_setup(const RunConfig& cfg, double h) {
  const Grid grid(cfg.a, cfg.b, cfg.grid_size(h));
  const ModelParams mp{h, cfg.kinetic_coeff, parse_expr(cfg.potential), grid, cfg.scheme};
  const PolyObservableSpec spec{parse_observable_terms(cfg.observable), h};
  return {h, grid, build_A(mp), build_B(mp), build_observable(spec, grid, cfg.scheme)};
}

// Normalised Gaussian wavepacket centred on the middle of the domain.
std::vector<Complex> gaussian_state(const Grid& g) {
  const double centre = 0.5 * (g.a() + g.b());
  const double sigma = 0.5;
  std::vector<Complex> psi(g.size());
  double norm2 = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double d = g.node(j) - centre;
    psi[j] = std::exp(-d * d / (2.0 * sigma * sigma));
    norm2 += std::norm(psi[j]);
  }
  for (auto& v : psi) v /= std::sqrt(norm2);
  return psi;
}

Complex expectation(const ComplexMatrix& m, const std::vector<Complex>& psi) {
  Complex acc = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Complex row_dot = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) row_dot += m(r, c) * psi[c];
    acc += std::conj(psi[r]) * row_dot;
  }
  return acc;
}

// ---------------------------------------------------------------- worker pool

template <class R, class Fn>
std::vector<R> parallel_map(std::size_t jobs, Fn fn) {
  std::vector<std::optional<R>> slots(jobs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs) return;
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(jobs);
      }
    }
  };
  const std::size_t workers = worker_count(jobs);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<R> out;
  out.reserve(jobs);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// ---------------------------------------------------------------- fitting

void add_fit(ExperimentResult& res, const std::string& metric, std::optional<int> p, const std::string& x_name,
             const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() < 2) return;
  for (const auto& [x, y] : pts) {
    if (!(y > 0.0)) {
      res.notes.push_back("no fit for " + metric + (p ? " p=" + std::to_string(*p) : "") +
                          ": non-positive value " + format_double(y));
      return;
    }
  }
  FitRow f{res.config.experiment, p, std::string(scheme_name(res.config.scheme)), metric, x_name,
           fit_slope(pts)};
  char buf[200];
  std::snprintf(buf, sizeof buf, "fit %s%s vs %s: slope %.4f, r2 %.6f", metric.c_str(),
                p ? (" p=" + std::to_string(*p)).c_str() : "", x_name.c_str(), f.fit.slope, f.fit.r2);
  res.notes.push_back(buf);
  res.fits.push_back(std::move(f));
}

std::vector<std::pair<double, double>> points_of(const ExperimentResult& res, const std::string& metric,
                                                 std::optional<int> p, bool x_is_dt) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : res.rows) {
    if (r.metric != metric || r.p != p) continue;
    pts.emplace_back(x_is_dt ? r.dt.value_or(0.0) : r.h.value_or(0.0), r.value);
  }
  return pts;
}

// ---------------------------------------------------------------- error sweeps

struct ErrorJob {
  double h;
  int p;
};

std::vector<ResultRow> error_rows(const RunConfig& cfg, const Setup& s, const ComplexMatrix& u_exact,
                                  const ComplexMatrix& t_exact, int p) {
  const StagePlan plan = suzuki_plan(p);
  const std::string scheme(scheme_name(cfg.scheme));
  const std::size_t n_grid = s.grid.size();
  std::optional<std::vector<Complex>> psi;
  Complex exact_expect = 0.0;
  if (cfg.state) {
    psi = gaussian_state(s.grid);
    exact_expect = expectation(t_exact, *psi);
  }
  std::vector<ResultRow> rows;
  for (const double dt : cfg.dt) {
    const std::size_t n = cfg.steps(dt);
    const ComplexMatrix un = trotter_evolve(plan, s.a, s.b, dt, n);
    const ComplexMatrix tn = heisenberg_evolve(un, s.o, 1);
    auto row = [&](const std::string& metric, double v) {
      rows.push_back({cfg.experiment, p, scheme, n_grid, s.h, dt, cfg.t_final, metric, v});
    };
    row("observable_error", spectral_norm(tn - t_exact));
    row("unitary_error", spectral_norm(un - u_exact));
    if (psi) row("state_error", std::abs(expectation(tn, *psi) - exact_expect));
  }
  return rows;
}

ExperimentResult run_error_sweep(const RunConfig& cfg) {
  cfg.validate();
  ExperimentResult res;
  res.config = cfg;

  // Model and exact evolution are shared by every order at a given h.
  struct Exact {
    Setup setup;
    ComplexMatrix u, t;
  };
  auto exacts = parallel_map<Exact>(cfg.h.size(), [&](std::size_t i) {
    Setup s = make_setup(cfg, cfg.h[i]);
    const HermitianEigen eig = hermitian_eig(s.H());
    ComplexMatrix u = unitary_exp(eig, cfg.t_final);
    ComplexMatrix t = adjoint_matmul(u, matmul(s.o, u));
    return Exact{std::move(s), std::move(u), std::move(t)};
  });

  std::vector<ErrorJob> jobs;
  for (std::size_t i = 0; i < cfg.h.size(); ++i)
    for (const int p : cfg.orders) jobs.push_back({static_cast<double>(i), p});
  auto chunks = parallel_map<std::vector<ResultRow>>(jobs.size(), [&](std::size_t j) {
    const Exact& e = exacts[static_cast<std::size_t>(jobs[j].h)];
    return error_rows(cfg, e.setup, e.u, e.t, jobs[j].p);
  });
  for (auto& c : chunks) res.rows.insert(res.rows.end(), c.begin(), c.end());
  sort_rows(res.rows);

  const bool by_dt = cfg.experiment == "dt-sweep";
  std::vector<std::string> metrics{"observable_error", "unitary_error"};
  if (cfg.state) metrics.push_back("state_error");
  for (const int p : cfg.orders)
    for (const auto& m : metrics) add_fit(res, m, p, by_dt ? "dt" : "h", points_of(res, m, p, by_dt));
  return res;
}

}  // namespace

// ---------------------------------------------------------------- RunConfig

std::size_t RunConfig::grid_size(double h_value) const {
  if (grid_scaling == GridScaling::Fixed) return N;
  const double raw = static_cast<double>(N) * h_ref / h_value;
  const auto even = static_cast<std::size_t>(std::llround(raw / 2.0)) * 2;
  return std::max<std::size_t>(even, 4);
}

std::size_t RunConfig::steps(double dt_value) const {
  const double ratio = t_final / dt_value;
  if (!near_integer(ratio) || std::llround(ratio) < 1) {
    throw ConfigError("t_final / dt = " + format_double(ratio) + " is not a positive integer");
  }
  return static_cast<std::size_t>(std::llround(ratio));
}

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (!kExperiments.count(experiment)) fail("unknown experiment '" + experiment + "'");
  if (!(std::isfinite(a) && std::isfinite(b) && b > a)) fail("domain must satisfy a < b");
  if (N < 4 || N % 2) fail("N must be an even count >= 4");
  if (!(h_ref > 0.0)) fail("h_ref must be positive");
  if (!(t_final > 0.0)) fail("t_final must be positive");
  if (!(kinetic_coeff > 0.0)) fail("kinetic_coeff must be positive");
  if (h.empty() || dt.empty() || orders.empty()) fail("h, dt and orders lists must be non-empty");
  for (const double v : h)
    if (!(v > 0.0 && v <= 1.0)) fail("every h must lie in (0, 1]");
  for (const double v : dt) {
    if (!(v > 0.0)) fail("every dt must be positive");
    steps(v);
  }
  for (const int p : orders)
    if (!(p == 1 || (p >= 2 && p <= 10 && p % 2 == 0))) fail("orders must be 1 or even up to 10");
  if (trials == 0) fail("trials must be positive");
  if (height_sizes.size() < 3) fail("height_sizes needs at least three grid sizes");
  for (const auto n : height_sizes)
    if (n < 4 || n % 2) fail("height_sizes must be even counts >= 4");
  if (experiment == "dt-sweep" && h.size() != 1) fail("dt-sweep takes a single h");
  if (experiment == "h-sweep" && dt.size() != 1) fail("h-sweep takes a single dt");
  try {
    parse_expr(potential);
    PolyObservableSpec{parse_observable_terms(observable), 1.0}.validate();
    for (const auto& w : words) CommExpr::parse(w);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail(e.what());
  }
}

RunConfig default_config(std::string_view experiment) {
  RunConfig c;
  c.experiment = std::string(experiment);
  if (experiment == "h-sweep") {
    c.h = h_ladder();
    c.dt = {0.1};
    c.orders = {2, 4, 6};
  } else if (experiment == "comm-sweep") {
    c.h = h_ladder();
    c.orders = {2};
  } else if (experiment == "beta") {
    c.h = {1.0 / 32, 1.0 / 64, 1.0 / 256};
    c.dt = {1.0 / 16, 1.0 / 32};
    c.orders = {2};
  } else if (!kExperiments.count(experiment)) {
    throw ConfigError("unknown experiment '" + std::string(experiment) + "'");
  }
  return c;
}

RunConfig parse_config(std::string_view text, std::string_view fallback_experiment) {
  struct Entry {
    std::string value;
    std::size_t line;
  };
  std::map<std::string, Entry> entries;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip_comment(raw);
    const std::string_view body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(trim(body.substr(0, eq)));
    const std::string value(trim(body.substr(eq + 1)));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    if (value.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty value for '" + key + "'");
    if (!entries.emplace(key, Entry{value, line_no}).second) {
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }

  std::string experiment(fallback_experiment);
  if (auto it = entries.find("experiment"); it != entries.end()) experiment = unquote(it->second.value, it->second.line);
  RunConfig c = default_config(experiment);

  for (const auto& [key, e] : entries) {
    const auto scalar = [&] { return unquote(e.value, e.line); };
    const auto list = [&] { return split_list(e.value, e.line); };
    const auto reals = [&] {
      std::vector<double> out;
      for (const auto& item : list()) out.push_back(parse_number(item, key));
      return out;
    };
    const auto counts = [&] {
      std::vector<std::size_t> out;
      for (const auto& item : list()) out.push_back(parse_count(item, key));
      return out;
    };
    if (key == "experiment") {
      continue;
    } else if (key == "a") {
      c.a = parse_number(scalar(), key);
    } else if (key == "b") {
      c.b = parse_number(scalar(), key);
    } else if (key == "N") {
      c.N = parse_count(scalar(), key);
    } else if (key == "grid_scaling") {
      const std::string v = scalar();
      if (v == "fixed") {
        c.grid_scaling = GridScaling::Fixed;
      } else if (v == "inverse-h") {
        c.grid_scaling = GridScaling::InverseH;
      } else {
        throw ConfigError("config key 'grid_scaling': expected fixed or inverse-h, got '" + v + "'");
      }
    } else if (key == "h_ref") {
      c.h_ref = parse_number(scalar(), key);
    } else if (key == "h") {
      c.h = reals();
    } else if (key == "dt") {
      c.dt = reals();
    } else if (key == "t_final" || key == "t") {
      c.t_final = parse_number(scalar(), key);
    } else if (key == "orders") {
      c.orders.clear();
      for (const auto n : counts()) c.orders.push_back(static_cast<int>(n));
    } else if (key == "potential") {
      c.potential = scalar();
    } else if (key == "observable") {
      c.observable = scalar();
    } else if (key == "scheme") {
      try {
        c.scheme = parse_scheme(scalar());
      } catch (const Error& err) {
        throw ConfigError(std::string("config key 'scheme': ") + err.what());
      }
    } else if (key == "kinetic_coeff") {
      c.kinetic_coeff = parse_number(scalar(), key);
    } else if (key == "seed") {
      c.seed = parse_count(scalar(), key);
    } else if (key == "output_dir") {
      c.output_dir = scalar();
    } else if (key == "words") {
      c.words = list();
    } else if (key == "trials") {
      c.trials = parse_count(scalar(), key);
    } else if (key == "height_sizes") {
      c.height_sizes = counts();
    } else if (key == "state") {
      c.state = parse_bool(scalar(), key);
    } else {
      throw ConfigError("config line " + std::to_string(e.line) + ": unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path, std::string_view fallback_experiment) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fallback_experiment);
}

// ---------------------------------------------------------------- results

const FitRow& ExperimentResult::fit(std::string_view metric, std::optional<int> p) const {
  for (const auto& f : fits)
    if (f.metric == metric && (!p || f.p == p)) return f;
  throw InvalidArgument("no fit for metric '" + std::string(metric) + "'");
}

std::vector<ResultRow> ExperimentResult::select(std::string_view metric, std::optional<int> p) const {
  std::vector<ResultRow> out;
  for (const auto& r : rows)
    if (r.metric == metric && (!p || r.p == p)) out.push_back(r);
  return out;
}

void sort_rows(std::vector<ResultRow>& rows) {
  // Absent keys sort first; dt descending keeps sweeps in refinement order.
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& x, const ResultRow& y) {
    if (x.p != y.p) return x.p < y.p;
    if (x.h != y.h) return x.h < y.h;
    const double dx = x.dt.value_or(std::numeric_limits<double>::infinity());
    const double dy = y.dt.value_or(std::numeric_limits<double>::infinity());
    return dx > dy;
  });
}

ExperimentResult run_dt_sweep(const RunConfig& cfg) {
  if (cfg.experiment != "dt-sweep") throw ConfigError("run_dt_sweep: config is for '" + cfg.experiment + "'");
  return run_error_sweep(cfg);
}

ExperimentResult run_h_sweep(const RunConfig& cfg) {
  if (cfg.experiment != "h-sweep") throw ConfigError("run_h_sweep: config is for '" + cfg.experiment + "'");
  return run_error_sweep(cfg);
}

ExperimentResult run_comm_sweep(const RunConfig& cfg) {
  if (cfg.experiment != "comm-sweep") throw ConfigError("run_comm_sweep: config is for '" + cfg.experiment + "'");
  cfg.validate();
  ExperimentResult res;
  res.config = cfg;
  std::vector<CommExpr> exprs;
  std::vector<std::string> names;
  for (const auto& w : cfg.words) {
    exprs.push_back(CommExpr::parse(w));
    names.push_back("norm:" + exprs.back().to_string());
  }
  const std::string scheme(scheme_name(cfg.scheme));

  auto chunks = parallel_map<std::vector<ResultRow>>(cfg.h.size(), [&](std::size_t i) {
    const Setup s = make_setup(cfg, cfg.h[i]);
    std::vector<ResultRow> rows;
    for (std::size_t w = 0; w < exprs.size(); ++w) {
      const double v = spectral_norm(exprs[w].evaluate(s.a, s.b, s.o));
      rows.push_back({cfg.experiment, std::nullopt, scheme, s.grid.size(), s.h, std::nullopt, std::nullopt, names[w], v});
    }
    for (const int p : cfg.orders) {
      const double beta = compute_beta_comm(p, s.a, s.b, s.o);
      rows.push_back({cfg.experiment, p, scheme, s.grid.size(), s.h, std::nullopt, std::nullopt, "beta_comm", beta});
    }
    return rows;
  });
  for (auto& c : chunks) res.rows.insert(res.rows.end(), c.begin(), c.end());
  sort_rows(res.rows);

  for (const auto& name : names) add_fit(res, name, std::nullopt, "h", points_of(res, name, std::nullopt, false));
  for (const int p : cfg.orders) add_fit(res, "beta_comm", p, "h", points_of(res, "beta_comm", p, false));
  return res;
}

ExperimentResult run_beta(const RunConfig& cfg) {
  if (cfg.experiment != "beta") throw ConfigError("run_beta: config is for '" + cfg.experiment + "'");
  cfg.validate();
  ExperimentResult res;
  res.config = cfg;
  const std::string scheme(scheme_name(cfg.scheme));

  auto chunks = parallel_map<std::vector<ResultRow>>(cfg.h.size(), [&](std::size_t i) {
    const Setup s = make_setup(cfg, cfg.h[i]);
    const std::size_t n = s.grid.size();
    const ComplexMatrix H = s.H();
    const HermitianEigen eig = hermitian_eig(H);
    std::vector<ResultRow> rows;
    for (const int p : cfg.orders) {
      const StagePlan plan = suzuki_plan(p);
      const double beta = compute_beta_comm(p, s.a, s.b, s.o);
      const double alpha = compute_alpha_comm(p, plan.stages.size(), s.a, s.b, s.o);
      const double alpha_tilde = compute_alpha_tilde(p, H, s.o);
      rows.push_back({cfg.experiment, p, scheme, n, s.h, std::nullopt, std::nullopt, "beta_comm", beta});
      rows.push_back({cfg.experiment, p, scheme, n, s.h, std::nullopt, std::nullopt, "alpha_comm", alpha});
      rows.push_back({cfg.experiment, p, scheme, n, s.h, std::nullopt, std::nullopt, "alpha_tilde", alpha_tilde});
      for (const double dt : cfg.dt) {
        const ComplexMatrix u = trotter_step(plan, s.a, s.b, dt);
        const ComplexMatrix ue = unitary_exp(eig, dt);
        const ComplexMatrix step = heisenberg_evolve(u, s.o, 1);
        const ComplexMatrix exact = heisenberg_evolve(ue, s.o, 1);
        const double err = spectral_norm(step - exact);
        const double bound = (alpha + alpha_tilde) * std::pow(dt, p + 1);
        rows.push_back({cfg.experiment, p, scheme, n, s.h, dt, dt, "local_error", err});
        rows.push_back({cfg.experiment, p, scheme, n, s.h, dt, dt, "local_bound", bound});
      }
    }
    return rows;
  });
  for (auto& c : chunks) res.rows.insert(res.rows.end(), c.begin(), c.end());
  sort_rows(res.rows);

  for (const int p : cfg.orders)
    for (const char* m : {"beta_comm", "alpha_comm", "alpha_tilde"}) add_fit(res, m, p, "h", points_of(res, m, p, false));
  return res;
}

ExperimentResult run_verify_symbolic(const RunConfig& cfg) {
  if (cfg.experiment != "verify-symbolic") {
    throw ConfigError("run_verify_symbolic: config is for '" + cfg.experiment + "'");
  }
  cfg.validate();
  ExperimentResult res;
  res.config = cfg;
  const std::string scheme(scheme_name(cfg.scheme));
  auto row = [&](const std::string& metric, double v, std::optional<int> p = std::nullopt,
                 std::optional<std::size_t> n = std::nullopt, std::optional<double> dt = std::nullopt) {
    res.rows.push_back({cfg.experiment, p, scheme, n, std::nullopt, dt, std::nullopt, metric, v});
  };

  // Randomised height/width calculus.
  const HeightWidthReport rep = verify_height_width(cfg.trials, cfg.seed);
  row("symbolic_trials", static_cast<double>(rep.trials));
  row("height_reduction_failures", static_cast<double>(rep.height_reduction_failures));
  row("width_expansion_failures", static_cast<double>(rep.width_expansion_failures));
  row("single_layer_failures", static_cast<double>(rep.single_layer_failures));
  row("nested_failures", static_cast<double>(rep.nested_failures));
  row("symbolic_failures", static_cast<double>(rep.total_failures()));
  res.notes.push_back("symbolic trials " + std::to_string(rep.trials) + ", failures " +
                      std::to_string(rep.total_failures()));
  if (rep.first_counterexample) res.notes.push_back("first counterexample: " + *rep.first_counterexample);

  // [V h^-1, h d^2] = -V'' - 2 V' d.
  SymOp expected;
  expected.add_term(-1, Monomial{{{"V", 2}, 1}}, 0, 0);
  expected.add_term(-2, Monomial{{{"V", 1}, 1}}, 0, 1);
  const SymOp got = sym_commutator(b_sym(), a_sym());
  row("hand_check", got == expected ? 1.0 : 0.0);
  res.notes.push_back("[h^-1 V, h d^2] =\n" + to_string(got));

  // Discrete heights.
  const Expr y1 = parse_expr("sin(x) + 2");
  const Expr y2 = parse_expr("cos(x) + 2");
  auto height_row = [&](const std::string& metric, std::optional<int> k,
                        const std::function<ComplexMatrix(const Grid&)>& build) {
    const double slope = discrete_height_estimate(build, cfg.height_sizes, cfg.a, cfg.b);
    row(metric, slope, k);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s: N-growth exponent %.4f", metric.c_str(), slope);
    res.notes.push_back(buf);
  };
  for (int k = 1; k <= 4; ++k) {
    height_row("height:D_" + std::to_string(k), k,
               [k](const Grid& g) { return build_Dk(g, static_cast<std::size_t>(k)); });
  }
  height_row("height:[D_F,Y]", std::nullopt,
             [&](const Grid& g) { return commutator(build_forward_diff(g), build_diag(g, y1)); });
  for (int k = 1; k <= 2; ++k) {
    for (int j = 1; j <= 2; ++j) {
      height_row("height:[Y_" + std::to_string(k) + "D_" + std::to_string(k) + ",Y_" + std::to_string(j) + "D_" +
                     std::to_string(j) + "]",
                 std::nullopt, [&, k, j](const Grid& g) {
                   const ComplexMatrix left = matmul(build_diag(g, y1), build_Dk(g, static_cast<std::size_t>(k)));
                   const ComplexMatrix right = matmul(build_diag(g, y2), build_Dk(g, static_cast<std::size_t>(j)));
                   return commutator(left, right);
                 });
    }
  }

  // Structural invariants.
  for (const std::size_t n : cfg.height_sizes) {
    const Grid g(cfg.a, cfg.b, n);
    const ComplexMatrix d2 = build_laplacian(g);
    const ComplexMatrix df = build_forward_diff(g);
    const ComplexMatrix db = build_backward_diff(g);
    row("d2_minus_db_df", (d2 - matmul(db, df)).max_abs(), std::nullopt, n);
    row("d2_minus_df_db", (d2 - matmul(df, db)).max_abs(), std::nullopt, n);
  }
  for (const int p : {1, 2, 4, 6, 8}) {
    const StagePlan plan = suzuki_plan(p);
    row("plan_stage_count", static_cast<double>(plan.stages.size()), p);
    row("plan_coefficient_sum_error",
        std::max(std::abs(plan.coefficient_sum(Generator::A) - 1.0), std::abs(plan.coefficient_sum(Generator::B) - 1.0)),
        p);
    row("plan_palindromic", plan.is_palindromic() ? 1.0 : 0.0, p);
  }
  const Setup s = make_setup(cfg, cfg.h.front());
  for (const int p : cfg.orders) {
    const StagePlan plan = suzuki_plan(p);
    for (const double dt : cfg.dt) {
      row("unitarity_defect", unitarity_defect(trotter_step(plan, s.a, s.b, dt)), p, s.grid.size(), dt);
    }
  }
  row("unitarity_defect_exact", unitarity_defect(exact_unitary(s.H(), cfg.t_final)), std::nullopt, s.grid.size());
  sort_rows(res.rows);
  return res;
}

ExperimentResult run_experiment(const RunConfig& cfg) {
  if (cfg.experiment == "dt-sweep") return run_dt_sweep(cfg);
  if (cfg.experiment == "h-sweep") return run_h_sweep(cfg);
  if (cfg.experiment == "comm-sweep") return run_comm_sweep(cfg);
  if (cfg.experiment == "beta") return run_beta(cfg);
  if (cfg.experiment == "verify-symbolic") return run_verify_symbolic(cfg);
  throw ConfigError("unknown experiment '" + cfg.experiment + "'");
}

// ---------------------------------------------------------------- CSV

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

template <class T>
std::string opt_field(const std::optional<T>& v) {
  if (!v) return "";
  if constexpr (std::is_floating_point_v<T>) {
    return format_double(*v);
  } else {
    return std::to_string(*v);
  }
}

}  // namespace

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
  std::string out = "experiment,p,scheme,N,h,dt,t,metric,value\n";
  for (const auto& r : rows) {
    out += csv_escape(r.experiment) + "," + opt_field(r.p) + "," + csv_escape(r.scheme) + "," + opt_field(r.N) + "," +
           opt_field(r.h) + "," + opt_field(r.dt) + "," + opt_field(r.t) + "," + csv_escape(r.metric) + "," +
           format_double(r.value) + "\n";
  }
  return out;
}

std::string fits_to_csv(const std::vector<FitRow>& fits) {
  std::string out = "experiment,p,scheme,metric,x,slope,intercept,r2,points\n";
  for (const auto& f : fits) {
    out += csv_escape(f.experiment) + "," + opt_field(f.p) + "," + csv_escape(f.scheme) + "," + csv_escape(f.metric) +
           "," + csv_escape(f.x) + "," + format_double(f.fit.slope) + "," + format_double(f.fit.intercept) + "," +
           format_double(f.fit.r2) + "," + std::to_string(f.fit.points.size()) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------- SVG

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};

}  // namespace

std::string render_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<PlotSeries>& series, const std::vector<ReferenceLine>& refs) {
  constexpr double W = 640, H = 480, L = 80, R = 170, T = 40, B = 60;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (!(x > 0.0 && y > 0.0)) continue;
      xmin = std::min(xmin, std::log10(x));
      xmax = std::max(xmax, std::log10(x));
      ymin = std::min(ymin, std::log10(y));
      ymax = std::max(ymax, std::log10(y));
    }
  }
  if (!std::isfinite(xmin)) {
    xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  }
  xmin = std::floor(xmin), xmax = std::ceil(xmax), ymin = std::floor(ymin), ymax = std::ceil(ymax);
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  auto px = [&](double lx) { return L + (lx - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double ly) { return H - B - (ly - ymin) / (ymax - ymin) * (H - T - B); };

  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << " " << H << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
     << xml_escape(title) << "</text>\n";
  os << "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\"/>\n";
  os << "</g>\n<g class=\"ticks\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (double e = xmin; e <= xmax + 1e-9; e += 1) {
    os << "<line x1=\"" << px(e) << "\" y1=\"" << H - B << "\" x2=\"" << px(e) << "\" y2=\"" << H - B + 5
       << "\" stroke=\"black\"/><text x=\"" << px(e) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">1e"
       << static_cast<int>(e) << "</text>\n";
  }
  for (double e = ymin; e <= ymax + 1e-9; e += 1) {
    os << "<line x1=\"" << L - 5 << "\" y1=\"" << py(e) << "\" x2=\"" << L << "\" y2=\"" << py(e)
       << "\" stroke=\"black\"/><text x=\"" << L - 8 << "\" y=\"" << py(e) + 4 << "\" text-anchor=\"end\">1e"
       << static_cast<int>(e) << "</text>\n";
  }
  os << "</g>\n";
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << xml_escape(x_label) << "</text>\n";
  os << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
     << "font-size=\"13\" transform=\"rotate(-90 18 " << (T + H - B) / 2 << ")\">" << xml_escape(y_label)
     << "</text>\n";

  double legend_y = T + 10;
  auto legend = [&](const std::string& label, const char* colour, bool dashed) {
    os << "<line x1=\"" << W - R + 10 << "\" y1=\"" << legend_y << "\" x2=\"" << W - R + 35 << "\" y2=\"" << legend_y
       << "\" stroke=\"" << colour << "\"" << (dashed ? " stroke-dasharray=\"6,4\"" : "")
       << "/><text x=\"" << W - R + 40 << "\" y=\"" << legend_y + 4
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << xml_escape(label) << "</text>\n";
    legend_y += 18;
  };

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* colour = kPalette[i % std::size(kPalette)];
    os << "<polyline class=\"series\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (const auto& [x, y] : series[i].points) {
      if (!(x > 0.0 && y > 0.0)) continue;
      os << (first ? "" : " ") << px(std::log10(x)) << "," << py(std::log10(y));
      first = false;
    }
    os << "\"/>\n";
    legend(series[i].label, colour, false);
  }
  const double lo = std::pow(10.0, xmin), hi = std::pow(10.0, xmax);
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto& r = refs[i];
    if (!(r.anchor_x > 0.0 && r.anchor_y > 0.0)) continue;
    auto ref_y = [&](double x) { return std::log10(r.anchor_y) + r.exponent * (std::log10(x) - std::log10(r.anchor_x)); };
    const char* colour = kPalette[i % std::size(kPalette)];
    os << "<line class=\"reference\" x1=\"" << px(std::log10(lo)) << "\" y1=\"" << py(ref_y(lo)) << "\" x2=\""
       << px(std::log10(hi)) << "\" y2=\"" << py(ref_y(hi)) << "\" stroke=\"" << colour
       << "\" stroke-dasharray=\"6,4\" opacity=\"0.6\"/>\n";
    legend(r.label, colour, true);
  }
  // Clip region is implicit; reference lines may overshoot the frame.
  os << "</svg>\n";
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

std::vector<std::filesystem::path> write_outputs(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const std::string& text) {
    write_text_file(dir / name, text);
    written.push_back(dir / name);
  };
  emit("results.csv", rows_to_csv(result.rows));
  emit("fits.csv", fits_to_csv(result.fits));
  std::string report;
  for (const auto& n : result.notes) report += n + "\n";
  emit("report.txt", report);

  const RunConfig& cfg = result.config;
  auto series_by_p = [&](const std::string& metric, bool by_dt) {
    std::vector<PlotSeries> out;
    for (const int p : cfg.orders) {
      PlotSeries s{"p=" + std::to_string(p), {}};
      for (const auto& r : result.select(metric, p)) s.points.emplace_back(by_dt ? *r.dt : *r.h, r.value);
      if (!s.points.empty()) out.push_back(std::move(s));
    }
    return out;
  };

  if (cfg.experiment == "dt-sweep") {
    for (const char* metric : {"observable_error", "unitary_error"}) {
      auto series = series_by_p(metric, true);
      std::vector<ReferenceLine> refs;
      for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& pt = series[i].points.front();
        refs.push_back({"dt^" + std::to_string(cfg.orders[i]), static_cast<double>(cfg.orders[i]), pt.first, pt.second});
      }
      emit(std::string(metric) + ".svg", render_svg(metric, "dt", metric, series, refs));
    }
  } else if (cfg.experiment == "h-sweep") {
    for (const char* metric : {"observable_error", "unitary_error"}) {
      auto series = series_by_p(metric, false);
      std::vector<ReferenceLine> refs;
      const double exponent = std::string(metric) == "unitary_error" ? -1.0 : 0.0;
      if (!series.empty()) {
        const auto& pt = series.front().points.front();
        refs.push_back({exponent < 0 ? "h^-1" : "h^0", exponent, pt.first, pt.second});
      }
      emit(std::string(metric) + ".svg", render_svg(metric, "h", metric, series, refs));
    }
  } else if (cfg.experiment == "comm-sweep") {
    std::vector<PlotSeries> series;
    for (const auto& w : cfg.words) {
      const std::string name = "norm:" + CommExpr::parse(w).to_string();
      PlotSeries s{CommExpr::parse(w).to_string(), {}};
      for (const auto& r : result.select(name)) s.points.emplace_back(*r.h, r.value);
      series.push_back(std::move(s));
    }
    for (const int p : cfg.orders) {
      PlotSeries s{"beta_comm p=" + std::to_string(p), {}};
      for (const auto& r : result.select("beta_comm", p)) s.points.emplace_back(*r.h, r.value);
      series.push_back(std::move(s));
    }
    std::vector<ReferenceLine> refs;
    if (!series.empty() && !series.front().points.empty()) {
      const auto& pt = series.front().points.front();
      refs.push_back({"h^-1", -1.0, pt.first, pt.second});
      if (series.size() > 1 && !series[1].points.empty()) {
        refs.push_back({"h^0", 0.0, series[1].points.front().first, series[1].points.front().second});
      }
    }
    emit("commutator_norms.svg", render_svg("commutator norms", "h", "spectral norm", series, refs));
  } else if (cfg.experiment == "beta") {
    std::vector<PlotSeries> series;
    std::vector<ReferenceLine> refs;
    for (const int p : cfg.orders) {
      for (const double h : cfg.h) {
        PlotSeries s{"p=" + std::to_string(p) + " h=" + format_double(h), {}};
        for (const auto& r : result.select("local_error", p))
          if (r.h == h) s.points.emplace_back(*r.dt, r.value);
        if (s.points.empty()) continue;
        if (refs.size() < std::size(kPalette) && s.points.front().second > 0) {
          refs.push_back({"dt^" + std::to_string(p + 1), static_cast<double>(p + 1), s.points.front().first,
                          s.points.front().second});
        }
        series.push_back(std::move(s));
      }
    }
    emit("local_error.svg", render_svg("one-step observable error", "dt", "local_error", series, refs));
  }
  return written;
}

std::size_t worker_count(std::size_t jobs) {
  std::size_t n = std::max<unsigned>(std::thread::hardware_concurrency(), 1u);
  if (const char* env = std::getenv("SEMITROTTER_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

}  // namespace semitrotter
