// semitrotter command-line driver.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "semitrotter/errors.hpp"
#include "semitrotter/experiments.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitConvergence = 3;

struct Options {
  std::string config;
  std::string out;
  bool state = false;
  bool quiet = false;
};

int run(const std::string& experiment, const Options& opt) {
  using namespace semitrotter;
  RunConfig cfg = opt.config.empty() ? default_config(experiment) : load_config(opt.config, experiment);
  if (cfg.experiment != experiment) {
    throw ConfigError("config file is for '" + cfg.experiment + "', not '" + experiment + "'");
  }
  if (opt.state) cfg.state = true;
  const std::string out_dir = opt.out.empty() ? cfg.output_dir : opt.out;

  const auto start = std::chrono::steady_clock::now();
  const ExperimentResult res = run_experiment(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto files = write_outputs(res, out_dir);

  if (!opt.quiet) {
    for (const auto& n : res.notes) std::cout << n << "\n";
    std::printf("%s: %zu rows in %.2f s\n", experiment.c_str(), res.rows.size(), secs);
    for (const auto& f : files) std::cout << "wrote " << f.string() << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Splitting-error experiments for semiclassical Schroedinger dynamics"};
  app.require_subcommand(1);

  Options opt;
  std::string chosen;
  const std::pair<const char*, const char*> commands[] = {
      {"dt-sweep", "Observable and unitary error against the time step"},
      {"h-sweep", "Observable and unitary error against the semiclassical parameter"},
      {"comm-sweep", "Nested commutator norms against the semiclassical parameter"},
      {"beta", "Commutator coefficients and the one-step error bound"},
      {"verify-symbolic", "Symbolic height/width checks, discrete heights and structural invariants"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "Config file (key = value lines)")->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "Output directory (overrides output_dir)");
    sub->add_flag("--state", opt.state, "Also report the Gaussian wavepacket expectation error");
    sub->add_flag("-q,--quiet", opt.quiet, "Suppress the report");
    sub->callback([&chosen, n = std::string(name)] { chosen = n; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    return run(chosen, opt);
  } catch (const semitrotter::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const semitrotter::ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
}
