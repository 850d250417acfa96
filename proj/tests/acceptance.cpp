// Acceptance suite: runs each experiment at its default configuration and
// checks the slope, ratio and invariant thresholds. One line per criterion;
// non-zero exit when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "semitrotter/experiments.hpp"
#include "semitrotter/model.hpp"
#include "semitrotter/splitting.hpp"

using namespace semitrotter;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

template <class F>
double timed(F&& f) {
  const auto start = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double value_at(const ExperimentResult& res, const std::string& metric, std::optional<int> p, double h,
                std::optional<double> dt = std::nullopt) {
  for (const auto& r : res.select(metric, p)) {
    if (r.h && std::abs(*r.h - h) <= 1e-12 * h && (!dt || (r.dt && std::abs(*r.dt - *dt) <= 1e-12))) return r.value;
  }
  throw std::runtime_error("missing row " + metric);
}

int failures = 0;

void report(int k, const std::string& title, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  if (!o.pass) ++failures;
  std::printf("[%s] criterion %d: %s | %s\n", o.pass ? "PASS" : "FAIL", k, title.c_str(), o.detail.c_str());
  std::fflush(stdout);
}

}  // namespace

int main() {
  ExperimentResult dt_fd;
  ExperimentResult beta;

  report(1, "convergence order in dt", [&] {
    Outcome o;
    const double secs = timed([&] { dt_fd = run_experiment(default_config("dt-sweep")); });
    for (const int p : {1, 2, 4, 6}) {
      for (const char* m : {"observable_error", "unitary_error"}) {
        const SlopeFit& f = dt_fd.fit(m, p).fit;
        o.require(f.slope >= p - 0.3 && f.r2 >= 0.98,
                  std::string(m) + fmt(" p=%.0f slope %.3f r2 %.4f", p, f.slope, f.r2));
      }
    }
    o.require(secs <= 60.0, fmt("runtime %.1f s", secs));
    return o;
  });

  report(2, "observable error uniform in h", [&] {
    Outcome o;
    ExperimentResult res;
    const double secs = timed([&] { res = run_experiment(default_config("h-sweep")); });
    for (const int p : {2, 4, 6}) {
      const double so = res.fit("observable_error", p).fit.slope;
      const double su = res.fit("unitary_error", p).fit.slope;
      o.require(so >= -0.2 && so <= 0.2, fmt("p=%.0f observable slope %.3f", p, so));
      o.require(su >= -1.3 && su <= -0.7, fmt("p=%.0f unitary slope %.3f", p, su));
    }
    o.require(secs <= 60.0, fmt("runtime %.1f s", secs));
    return o;
  });

  report(3, "nested commutator scaling in h", [&] {
    Outcome o;
    ExperimentResult res;
    const double secs = timed([&] { res = run_experiment(default_config("comm-sweep")); });
    const double s1 = res.fit("norm:[A,B]").fit.slope;
    o.require(std::abs(s1 + 1.0) <= 0.1, fmt("[A,B] slope %.3f", s1));
    for (const char* w : {"[[A,B],O]", "[A,[[A,B],O]]", "[A,[A,[[A,B],O]]]"}) {
      const double s = res.fit(std::string("norm:") + w).fit.slope;
      o.require(std::abs(s) <= 0.15, std::string(w) + fmt(" slope %.3f", s));
    }
    o.require(secs <= 30.0, fmt("runtime %.1f s", secs));
    return o;
  });

  report(4, "beta_comm uniform in h", [&] {
    Outcome o;
    const double secs = timed([&] { beta = run_experiment(default_config("beta")); });
    const double lo = value_at(beta, "beta_comm", 2, 1.0 / 32), hi = value_at(beta, "beta_comm", 2, 1.0 / 256);
    const double ratio = std::max(lo, hi) / std::min(lo, hi);
    o.require(ratio <= 2.0, fmt("beta(1/32) %.4g beta(1/256) %.4g ratio %.3f", lo, hi, ratio));
    o.require(secs <= 30.0, fmt("runtime %.1f s", secs));
    return o;
  });

  report(5, "one-step error bound and local order", [&] {
    Outcome o;
    const double h = 1.0 / 64;
    double err[2];
    const double dts[2] = {1.0 / 16, 1.0 / 32};
    for (int i = 0; i < 2; ++i) {
      err[i] = value_at(beta, "local_error", 2, h, dts[i]);
      const double bound = value_at(beta, "local_bound", 2, h, dts[i]);
      o.require(err[i] <= bound, fmt("dt=1/%.0f err %.3g bound %.3g", 1.0 / dts[i], err[i], bound));
    }
    const double ratio = err[0] / err[1];
    o.require(ratio >= std::pow(2.0, 2.5) && ratio <= std::pow(2.0, 3.5), fmt("err(dt)/err(dt/2) %.3f", ratio));
    return o;
  });

  ExperimentResult sym;
  report(6, "symbolic height/width calculus", [&] {
    Outcome o;
    sym = run_experiment(default_config("verify-symbolic"));
    const double trials = sym.select("symbolic_trials").front().value;
    const double fails = sym.select("symbolic_failures").front().value;
    const double hand = sym.select("hand_check").front().value;
    o.require(trials == 1000.0 && fails == 0.0, fmt("%.0f trials, %.0f violations", trials, fails));
    o.require(hand == 1.0, "[V, d^2] = -V'' - 2V'd term-for-term");
    return o;
  });

  report(7, "discrete heights", [&] {
    Outcome o;
    for (int k = 1; k <= 4; ++k) {
      const double s = sym.select("height:D_" + std::to_string(k)).front().value;
      o.require(std::abs(s - k) <= 0.1, fmt("D_%.0f %.3f", k, s));
    }
    const double df = sym.select("height:[D_F,Y]").front().value;
    o.require(df <= 0.15, fmt("[D_F,Y] %.3f", df));
    for (int k = 1; k <= 2; ++k) {
      for (int j = 1; j <= 2; ++j) {
        const std::string name = "height:[Y_" + std::to_string(k) + "D_" + std::to_string(k) + ",Y_" +
                                 std::to_string(j) + "D_" + std::to_string(j) + "]";
        const double s = sym.select(name).front().value;
        o.require(s <= k + j - 1 + 0.15, fmt("[Y_%.0fD,Y_%.0fD] %.3f", k, j, s));
      }
    }
    return o;
  });

  report(8, "structural invariants", [&] {
    Outcome o;
    double worst = 0.0;
    for (const char* m : {"unitarity_defect", "unitarity_defect_exact"})
      for (const auto& r : sym.select(m)) worst = std::max(worst, r.value);
    // Evolved products from the default dt sweep.
    const RunConfig cfg = default_config("dt-sweep");
    const double h = cfg.h.front();
    const Grid g(cfg.a, cfg.b, cfg.grid_size(h));
    const ModelParams mp{h, cfg.kinetic_coeff, parse_expr(cfg.potential), g, cfg.scheme};
    const ComplexMatrix a = build_A(mp), b = build_B(mp);
    for (const int p : cfg.orders)
      for (const double dt : cfg.dt)
        worst = std::max(worst, unitarity_defect(trotter_evolve(suzuki_plan(p), a, b, dt, cfg.steps(dt))));
    o.require(worst <= 1e-10, fmt("max unitarity defect %.2e", worst));

    double d2 = 0.0;
    for (const char* m : {"d2_minus_db_df", "d2_minus_df_db"})
      for (const auto& r : sym.select(m)) d2 = std::max(d2, r.value);
    o.require(d2 == 0.0, fmt("D_2 factorisation residual %.1e", d2));

    const int orders[] = {2, 4, 6, 8};
    const double counts[] = {3, 11, 51, 251};
    for (int i = 0; i < 4; ++i) {
      const int p = orders[i];
      const double n = sym.select("plan_stage_count", p).front().value;
      const double sum = sym.select("plan_coefficient_sum_error", p).front().value;
      const double pal = sym.select("plan_palindromic", p).front().value;
      o.require(n == counts[i] && sum <= 1e-13 && pal == 1.0,
                fmt("p=%.0f stages %.0f sum error %.1e", p, n, sum) + (pal == 1.0 ? " palindromic" : " not palindromic"));
    }
    return o;
  });

  report(9, "finite-difference and spectral slopes agree", [&] {
    Outcome o;
    RunConfig cfg = default_config("dt-sweep");
    cfg.scheme = SchemeKind::Spectral;
    cfg.orders = {2};
    const ExperimentResult spectral = run_experiment(cfg);
    const double fd = dt_fd.fit("observable_error", 2).fit.slope;
    const double sp = spectral.fit("observable_error", 2).fit.slope;
    o.require(std::abs(fd - sp) <= 0.3, fmt("fd %.3f spectral %.3f", fd, sp));
    return o;
  });

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
