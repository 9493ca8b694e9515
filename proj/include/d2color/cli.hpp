#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "d2color/congest.hpp"
#include "d2color/graph.hpp"

namespace d2 {

/// Default directory for CSV output when --csv is a bare file name or absent.
inline constexpr const char* kOutDirEnv = "D2COLOR_OUT_DIR";
inline constexpr const char* kCsvVersion = "# d2color-csv v1";

struct CsvRow {
  std::size_t n = 0;
  std::size_t delta = 0;
  std::string algo;
  std::uint64_t seed = 0;
  std::size_t rounds_total = 0;
  std::string rounds_per_phase;  ///< label:rounds separated by ';'
  std::size_t distinct_colors = 0;
  std::size_t max_edge_bits = 0;
  bool valid = false;

  static std::string header();
  std::string str() const;
  static CsvRow parse(const std::string& line);
};

/// Rows of a CSV written by run_command; comment lines and the header are skipped.
std::vector<CsvRow> read_csv(std::istream& is);

/// "path:n=100", "cycle:n=..", "star:n=..", "gnp:n=..,p=..", "rr:n=..,d=..",
/// "clique_chain:d=7,copies=..".
Graph graph_from_spec(const std::string& spec, std::uint64_t seed);

/// log* n, iterated base-2 logarithm down to ≤ 1.
unsigned log_star(double x);

struct ModelFit {
  std::string name;
  double coef = 0;
  double intercept = 0;
  double rss = 0;
  double r2 = 0;
  bool degenerate = false;  ///< the feature does not vary over the points
};

struct FitReport {
  std::vector<ModelFit> models;  ///< log n·log Δ, log³ n, Δ² + log* n
  int best = -1;                 ///< index, −1 when non-informative
  bool informative = false;
  std::size_t points = 0;
  std::string text() const;
};

/// Least squares rounds ≈ a·f + b per candidate model. Throws
/// std::invalid_argument with fewer than four distinct (n, Δ) points.
FitReport fit_report(const std::vector<CsvRow>& rows);

/// Whole command line, argv[0] excluded. 0 ok, 1 invalid result or strict
/// bandwidth violation, 2 bad usage.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace d2
