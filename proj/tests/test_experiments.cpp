#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "semitrotter/errors.hpp"
#include "semitrotter/experiments.hpp"

using namespace semitrotter;

namespace {

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

RunConfig tiny_dt_sweep() {
  RunConfig cfg = default_config("dt-sweep");
  cfg.N = 16;
  cfg.h_ref = 1.0 / 16;
  cfg.h = {1.0 / 16};
  cfg.dt = {0.25, 0.125, 0.0625};
  cfg.orders = {1, 2};
  return cfg;
}

}  // namespace

TEST(Config, ParsesScalarsListsAndExpressions) {
  const RunConfig cfg = parse_config(R"cfg(
# comment line
experiment = beta
N = 32
h = 1/32, 1/64   # trailing comment
dt = 0.25, 2^-3
orders = 2, 4
potential = "cos(x)"
output_dir = "runs # 1"
observable = "0: 1; 2: cos(x)"
scheme = spectral
grid_scaling = fixed
state = yes
words = "[A,B]", "[[A,B],O]"
)cfg");
  EXPECT_EQ(cfg.experiment, "beta");
  EXPECT_EQ(cfg.N, 32u);
  ASSERT_EQ(cfg.h.size(), 2u);
  EXPECT_DOUBLE_EQ(cfg.h[1], 1.0 / 64);
  ASSERT_EQ(cfg.dt.size(), 2u);
  EXPECT_DOUBLE_EQ(cfg.dt[1], 0.125);
  EXPECT_EQ(cfg.orders, (std::vector<int>{2, 4}));
  EXPECT_EQ(cfg.output_dir, "runs # 1");
  EXPECT_EQ(cfg.scheme, SchemeKind::Spectral);
  EXPECT_EQ(cfg.grid_scaling, GridScaling::Fixed);
  EXPECT_TRUE(cfg.state);
  EXPECT_EQ(cfg.words, (std::vector<std::string>{"[A,B]", "[[A,B],O]"}));
  EXPECT_EQ(cfg.grid_size(1.0 / 1024), 32u);
}

TEST(Config, FallbackExperimentSuppliesDefaults) {
  const RunConfig cfg = parse_config("dt = 0.1", "h-sweep");
  EXPECT_EQ(cfg.experiment, "h-sweep");
  EXPECT_EQ(cfg.h, default_config("h-sweep").h);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("frobnicate = 1"), ConfigError);
  EXPECT_THROW(parse_config("N = 8\nN = 16"), ConfigError);
  EXPECT_THROW(parse_config("N"), ConfigError);
  EXPECT_THROW(parse_config("h = 1/"), ConfigError);
  EXPECT_THROW(parse_config("scheme = wavelet"), ConfigError);
  EXPECT_THROW(parse_config("experiment = nope"), ConfigError);
  EXPECT_THROW(parse_config("orders = 3"), ConfigError);
  EXPECT_THROW(parse_config("state = maybe"), ConfigError);
  EXPECT_THROW(parse_config("potential = \"cos(x"), ConfigError);
  EXPECT_THROW(parse_config("dt = 0.3"), ConfigError);           // t_final / dt not an integer
  EXPECT_THROW(parse_config("h = 1/32, 1/64"), ConfigError);      // dt-sweep needs one h
  EXPECT_THROW(load_config("/nonexistent/config.txt"), ConfigError);
}

TEST(Config, GridScalingAndSteps) {
  RunConfig cfg;
  EXPECT_EQ(cfg.grid_size(1.0 / 64), 64u);
  EXPECT_EQ(cfg.grid_size(1.0 / 256), 256u);
  EXPECT_EQ(cfg.grid_size(1.0 / 32), 32u);
  for (const double dt : cfg.dt) EXPECT_DOUBLE_EQ(static_cast<double>(cfg.steps(dt)) * dt, cfg.t_final);
  EXPECT_THROW(cfg.steps(0.3), ConfigError);
}

TEST(Csv, EscapingFollowsRfc4180) {
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("norm:[A,B]"), "\"norm:[A,B]\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_escape("a\nb"), "\"a\nb\"");
  EXPECT_EQ(std::stod(format_double(0.1)), 0.1);
  EXPECT_EQ(std::stod(format_double(1.0 / 3)), 1.0 / 3);
}

TEST(Csv, RowsHaveFixedColumns) {
  ResultRow r{"comm-sweep", std::nullopt, "fd", 64, 1.0 / 64, std::nullopt, std::nullopt, "norm:[A,B]", 2.5};
  const std::string csv = rows_to_csv({r});
  std::istringstream in(csv);
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  EXPECT_EQ(header, "experiment,p,scheme,N,h,dt,t,metric,value");
  EXPECT_EQ(line, "comm-sweep,,fd,64,0.015625,,,\"norm:[A,B]\",2.5");
}

TEST(Fit, SlopeCases) {
  std::vector<std::pair<double, double>> sq;
  for (double x : {1.0, 2.0, 4.0, 8.0}) sq.emplace_back(x, 3 * x * x);
  const SlopeFit f = fit_slope(sq);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 3.0, 1e-12);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);

  const std::vector<std::pair<double, double>> flat{{1, 5}, {2, 5}, {4, 5}};
  EXPECT_NEAR(fit_slope(flat).slope, 0.0, 1e-12);

  const std::vector<std::pair<double, double>> one{{1, 1}};
  EXPECT_THROW(fit_slope(one), InvalidArgument);
  const std::vector<std::pair<double, double>> neg{{1, 1}, {2, -1}};
  EXPECT_THROW(fit_slope(neg), InvalidArgument);
  const std::vector<std::pair<double, double>> same_x{{2, 1}, {2, 3}};
  EXPECT_THROW(fit_slope(same_x), InvalidArgument);
}

TEST(Sweep, RowCountOrderingAndDeterminism) {
  const RunConfig cfg = tiny_dt_sweep();
  const ExperimentResult a = run_experiment(cfg);
  EXPECT_EQ(a.rows.size(), 2 * cfg.orders.size() * cfg.dt.size());
  for (const auto& r : a.rows) {
    ASSERT_TRUE(r.dt && r.t && r.N);
    EXPECT_NEAR(static_cast<double>(cfg.steps(*r.dt)) * *r.dt, *r.t, 1e-15);
    EXPECT_EQ(*r.N, 16u);
    EXPECT_TRUE(std::isfinite(r.value));
  }
  // Sorted by p, then dt descending.
  for (std::size_t i = 1; i < a.rows.size(); ++i) {
    EXPECT_LE(*a.rows[i - 1].p, *a.rows[i].p);
    if (a.rows[i - 1].p == a.rows[i].p) EXPECT_GE(*a.rows[i - 1].dt, *a.rows[i].dt);
  }
  const ExperimentResult b = run_experiment(cfg);
  EXPECT_EQ(rows_to_csv(a.rows), rows_to_csv(b.rows));
  EXPECT_EQ(fits_to_csv(a.fits), fits_to_csv(b.fits));
  EXPECT_NO_THROW(a.fit("observable_error", 2));
  EXPECT_THROW(a.fit("observable_error", 8), InvalidArgument);
}

TEST(Sweep, StateMetricIsOptIn) {
  RunConfig cfg = tiny_dt_sweep();
  cfg.orders = {2};
  EXPECT_TRUE(run_experiment(cfg).select("state_error").empty());
  cfg.state = true;
  EXPECT_EQ(run_experiment(cfg).select("state_error").size(), cfg.dt.size());
}

TEST(Sweep, SplittingIsExactWithoutCoupling) {
  RunConfig cfg = tiny_dt_sweep();
  for (const char* v : {"0", "2.5"}) {
    cfg.potential = v;
    for (const auto& r : run_experiment(cfg).rows) EXPECT_LE(r.value, 1e-9) << v << " " << r.metric;
  }
}

TEST(Sweep, SmallBetaRunIsFinite) {
  RunConfig cfg = default_config("beta");
  cfg.h = {1.0 / 16, 1.0 / 32};
  cfg.dt = {0.25, 0.125};
  const ExperimentResult res = run_experiment(cfg);
  const auto local = res.select("local_error", 2), bound = res.select("local_bound", 2);
  ASSERT_EQ(local.size(), bound.size());
  ASSERT_FALSE(local.empty());
  for (std::size_t i = 0; i < local.size(); ++i) EXPECT_LE(local[i].value, bound[i].value);
}

TEST(Svg, EmptyAndPopulatedPlots) {
  const std::string empty = render_svg("t", "x", "y", {}, {});
  EXPECT_EQ(empty.rfind("<svg", 0), 0u);
  EXPECT_NE(empty.find("</svg>"), std::string::npos);
  EXPECT_EQ(count_of(empty, "class=\"series\""), 0u);

  const std::vector<PlotSeries> series{{"p=1", {{0.1, 0.01}, {0.2, 0.04}}}, {"p=2", {{0.1, 1e-3}, {0.2, 8e-3}}}};
  const std::vector<ReferenceLine> refs{{"slope 2", 2.0, 0.1, 0.01}};
  const std::string svg = render_svg("errors <&>", "dt", "err", series, refs);
  EXPECT_EQ(count_of(svg, "<polyline class=\"series\""), 2u);
  EXPECT_EQ(count_of(svg, "<line class=\"reference\""), 1u);
  EXPECT_EQ(svg.find("<&>"), std::string::npos);
}

TEST(Output, WritesCsvReportAndPlots) {
  const auto dir = std::filesystem::temp_directory_path() / "semitrotter_test_outputs";
  std::filesystem::remove_all(dir);
  const auto files = write_outputs(run_experiment(tiny_dt_sweep()), dir);
  for (const char* name : {"results.csv", "fits.csv", "report.txt", "observable_error.svg", "unitary_error.svg"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / name)) << name;
  }
  EXPECT_EQ(files.size(), 5u);
  std::ifstream in(dir / "results.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "experiment,p,scheme,N,h,dt,t,metric,value");
  std::filesystem::remove_all(dir);
}

TEST(Workers, CountIsBounded) {
  EXPECT_GE(worker_count(1), 1u);
  EXPECT_LE(worker_count(1), 1u);
  EXPECT_GE(worker_count(100), 1u);
}
