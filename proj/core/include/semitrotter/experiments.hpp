#pragma once

// Batch experiments: configuration, sweeps, slope fits and CSV/SVG output.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "semitrotter/discretize.hpp"
#include "semitrotter/fit.hpp"

namespace semitrotter {

/// How the grid follows h. InverseH uses N = N * h_ref / h (rounded to an
/// even count), keeping dx proportional to h.
enum class GridScaling { Fixed, InverseH };

struct RunConfig {
  std::string experiment = "dt-sweep";
  double a = -3.14159265358979323846;
  double b = 3.14159265358979323846;
  std::size_t N = 64;
  GridScaling grid_scaling = GridScaling::InverseH;
  double h_ref = 1.0 / 64.0;
  std::vector<double> h{1.0 / 64.0};
  std::vector<double> dt{0.25, 0.125, 0.0625, 0.03125, 0.015625};
  double t_final = 0.5;
  std::vector<int> orders{1, 2, 4, 6};
  std::string potential = "cos(x)";
  std::string observable = "0: cos(x); 1: sin(x)";
  SchemeKind scheme = SchemeKind::FiniteDifference;
  double kinetic_coeff = 0.5;
  std::uint64_t seed = 42;
  std::string output_dir = "out";
  std::vector<std::string> words{"[A,B]", "[[A,B],O]", "[A,[[A,B],O]]", "[A,[A,[[A,B],O]]]"};
  std::size_t trials = 1000;
  std::vector<std::size_t> height_sizes{16, 32, 64, 128};
  bool state = false;

  /// Throws ConfigError on any violated invariant.
  void validate() const;
  std::size_t grid_size(double h_value) const;
  /// t_final / dt, which must be whole.
  std::size_t steps(double dt_value) const;
};

/// Defaults for one of dt-sweep, h-sweep, comm-sweep, beta, verify-symbolic.
RunConfig default_config(std::string_view experiment);

/// `key = value` lines, `#` comments, comma lists (commas inside brackets or
/// quotes do not split), quoted strings. Numbers accept expressions such as
/// 1/64. The `experiment` key selects the defaults the other keys override;
/// `fallback_experiment` is used when the key is absent.
RunConfig parse_config(std::string_view text, std::string_view fallback_experiment = "dt-sweep");
RunConfig load_config(const std::filesystem::path& path, std::string_view fallback_experiment = "dt-sweep");

/// One CSV line. Absent fields print empty.
struct ResultRow {
  std::string experiment;
  std::optional<int> p;
  std::string scheme;
  std::optional<std::size_t> N;
  std::optional<double> h;
  std::optional<double> dt;
  std::optional<double> t;
  std::string metric;
  double value = 0.0;
};

struct FitRow {
  std::string experiment;
  std::optional<int> p;
  std::string scheme;
  std::string metric;
  std::string x;  ///< "dt" or "h" or "N"
  SlopeFit fit;
};

struct ExperimentResult {
  RunConfig config;
  std::vector<ResultRow> rows;
  std::vector<FitRow> fits;
  std::vector<std::string> notes;  ///< human-readable report lines

  /// First fit matching metric (and p, when given); throws InvalidArgument.
  const FitRow& fit(std::string_view metric, std::optional<int> p = std::nullopt) const;
  /// Values of a metric in row order, optionally restricted to one p.
  std::vector<ResultRow> select(std::string_view metric, std::optional<int> p = std::nullopt) const;
};

ExperimentResult run_dt_sweep(const RunConfig& cfg);
ExperimentResult run_h_sweep(const RunConfig& cfg);
ExperimentResult run_comm_sweep(const RunConfig& cfg);
ExperimentResult run_beta(const RunConfig& cfg);
ExperimentResult run_verify_symbolic(const RunConfig& cfg);
/// Dispatch on cfg.experiment.
ExperimentResult run_experiment(const RunConfig& cfg);

/// Rows sorted by (p, h, dt), stable otherwise.
void sort_rows(std::vector<ResultRow>& rows);

std::string csv_escape(std::string_view field);
std::string format_double(double v);
std::string rows_to_csv(const std::vector<ResultRow>& rows);
std::string fits_to_csv(const std::vector<FitRow>& fits);

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

/// Dashed reference c * x^exponent, anchored through (anchor_x, anchor_y).
struct ReferenceLine {
  std::string label;
  double exponent = 1.0;
  double anchor_x = 1.0;
  double anchor_y = 1.0;
};

/// Self-contained SVG on log-log axes. Non-positive points are skipped; an
/// empty input still yields valid axes.
std::string render_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<PlotSeries>& series, const std::vector<ReferenceLine>& refs);

void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Write results.csv, fits.csv, report.txt and the experiment's SVG plots
/// into dir. Returns the written paths.
std::vector<std::filesystem::path> write_outputs(const ExperimentResult& result, const std::filesystem::path& dir);

/// Worker count: SEMITROTTER_THREADS if set and positive, else hardware
/// concurrency, never more than jobs.
std::size_t worker_count(std::size_t jobs);

}  // namespace semitrotter
