#include "d2color/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "d2color/det_d2.hpp"
#include "d2color/rand_d2.hpp"
#include "d2color/splitting.hpp"
#include "d2color/verify.hpp"

namespace d2 {

// ---------------------------------------------------------------- csv

std::string CsvRow::header() {
  return "n,delta,algo,seed,rounds_total,rounds_per_phase,distinct_colors,max_edge_bits,valid";
}

std::string CsvRow::str() const {
  std::ostringstream os;
  os << n << ',' << delta << ',' << algo << ',' << seed << ',' << rounds_total << ',' << rounds_per_phase << ','
     << distinct_colors << ',' << max_edge_bits << ',' << (valid ? 1 : 0);
  return os.str();
}

CsvRow CsvRow::parse(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
  if (cells.size() != 9) throw std::invalid_argument("csv row needs 9 cells: " + line);
  CsvRow r;
  r.n = std::stoull(cells[0]);
  r.delta = std::stoull(cells[1]);
  r.algo = cells[2];
  r.seed = std::stoull(cells[3]);
  r.rounds_total = std::stoull(cells[4]);
  r.rounds_per_phase = cells[5];
  r.distinct_colors = std::stoull(cells[6]);
  r.max_edge_bits = std::stoull(cells[7]);
  r.valid = cells[8] == "1";
  return r;
}

std::vector<CsvRow> read_csv(std::istream& is) {
  std::vector<CsvRow> rows;
  for (std::string line; std::getline(is, line);) {
    if (line.empty() || line[0] == '#' || line == CsvRow::header()) continue;
    rows.push_back(CsvRow::parse(line));
  }
  return rows;
}

// ---------------------------------------------------------------- graphs

Graph graph_from_spec(const std::string& spec, std::uint64_t seed) {
  const auto colon = spec.find(':');
  std::string kind = spec.substr(0, colon);
  if (kind == "rr") kind = "random_regular";
  std::map<std::string, std::string> kv;
  if (colon != std::string::npos) {
    std::stringstream ss(spec.substr(colon + 1));
    for (std::string item; std::getline(ss, item, ',');) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("graph parameter without '=': " + item);
      kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
  }
  GenParams p;
  for (const auto& [key, value] : kv) {
    if (key == "n") p.n = std::stoull(value);
    else if (key == "p") p.p = std::stod(value);
    else if (key == "d") p.degree = std::stoull(value);
    else if (key == "copies") p.copies = std::stoull(value);
    else throw std::invalid_argument("unknown graph parameter: " + key);
  }
  return generate(parse_graph_kind(kind), p, seed);
}

// ---------------------------------------------------------------- fits

unsigned log_star(double x) {
  unsigned k = 0;
  while (x > 1) {
    x = std::log2(x);
    ++k;
  }
  return k;
}

namespace {

ModelFit fit_one(std::string name, const std::vector<double>& f, const std::vector<double>& y) {
  ModelFit m;
  m.name = std::move(name);
  const double n = static_cast<double>(f.size());
  double mf = 0, my = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    mf += f[i] / n;
    my += y[i] / n;
  }
  double sff = 0, sfy = 0, syy = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    sff += (f[i] - mf) * (f[i] - mf);
    sfy += (f[i] - mf) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  m.degenerate = sff <= 1e-12 * std::max(1.0, mf * mf);
  m.coef = m.degenerate ? 0 : sfy / sff;
  m.intercept = my - m.coef * mf;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double e = y[i] - (m.coef * f[i] + m.intercept);
    m.rss += e * e;
  }
  m.r2 = syy > 0 ? 1 - m.rss / syy : 0;
  return m;
}

}  // namespace

FitReport fit_report(const std::vector<CsvRow>& rows) {
  std::set<std::pair<std::size_t, std::size_t>> sizes;
  for (const auto& r : rows) sizes.emplace(r.n, r.delta);
  if (sizes.size() < 4) throw std::invalid_argument("fit needs at least 4 distinct (n, delta) points");
  std::vector<double> f1, f2, f3, y;
  for (const auto& r : rows) {
    const double ln = std::log2(static_cast<double>(std::max<std::size_t>(r.n, 2)));
    const double ld = std::log2(static_cast<double>(std::max<std::size_t>(r.delta, 2)));
    const double d = static_cast<double>(r.delta);
    f1.push_back(ln * ld);
    f2.push_back(ln * ln * ln);
    f3.push_back(d * d + log_star(static_cast<double>(r.n)));
    y.push_back(static_cast<double>(r.rounds_total));
  }
  FitReport rep;
  rep.points = rows.size();
  rep.models = {fit_one("log n * log Delta", f1, y), fit_one("log^3 n", f2, y), fit_one("Delta^2 + log* n", f3, y)};
  double my = 0, syy = 0;
  for (double v : y) my += v / static_cast<double>(y.size());
  for (double v : y) syy += (v - my) * (v - my);
  if (syy <= 1e-12 * std::max(1.0, my * my)) return rep;  // constant rounds
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rep.models.size(); ++i) {
    const auto& m = rep.models[i];
    if (m.degenerate || m.coef <= 0) continue;
    if (m.rss < best) {
      best = m.rss;
      rep.best = static_cast<int>(i);
    }
  }
  rep.informative = rep.best >= 0;
  return rep;
}

std::string FitReport::text() const {
  std::ostringstream os;
  os << "points: " << points << '\n';
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto& m = models[i];
    os << "model " << i + 1 << " [" << m.name << "]: rounds = " << std::setprecision(6) << m.coef << " * f + "
       << m.intercept << ", rss " << m.rss << ", r2 " << m.r2 << (m.degenerate ? " (degenerate)" : "") << '\n';
  }
  if (informative)
    os << "best: model " << best + 1 << " [" << models[best].name << "]\n";
  else
    os << "best: none (non-informative fit)\n";
  return os.str();
}

// ---------------------------------------------------------------- run

namespace {

struct RunSpec {
  std::string algo = "rand";
  std::string graph;
  std::string edges;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> graph_seed;
  double beta = 32.0;
  std::string profile = "desk";
  double epsilon = 1.0;
  std::string csv;
  std::string trace;
  std::size_t repeat = 1;
  unsigned threads = 1;
  unsigned jobs = 1;
  bool strict = false;
  bool quiet = false;
};

struct Outcome {
  CsvRow row;
  std::string trace_csv;
  std::string error;
  bool violation = false;
};

Outcome run_one(const Graph& g, const RunSpec& spec, std::uint64_t seed) {
  Outcome o;
  SimConfig sim;
  sim.beta = spec.beta;
  sim.seed = seed;
  sim.threads = spec.threads;
  sim.enforcement = spec.strict ? Enforcement::strict : Enforcement::audit;
  const std::uint64_t delta = g.max_degree();
  Coloring coloring;
  SimTrace trace;
  std::uint64_t bound = delta * delta + 1;
  try {
    if (spec.algo == "rand") {
      const RandConfig cfg = spec.profile == "paper" ? RandConfig::paper() : RandConfig{};
      auto r = d2_color_rand(g, sim, cfg);
      coloring = std::move(r.coloring);
      trace = std::move(r.trace);
    } else if (spec.algo == "det") {
      auto r = d2_color_det(g, sim);
      coloring = std::move(r.coloring);
      trace = std::move(r.trace);
    } else {
      auto r = color_g2_splitting(g, spec.epsilon, sim);
      coloring = std::move(r.coloring);
      trace = std::move(r.trace);
      bound = std::max<std::uint64_t>(
          1, static_cast<std::uint64_t>(std::floor((1.0 + spec.epsilon) * static_cast<double>(delta * delta))));
    }
  } catch (const BandwidthViolation& e) {
    o.error = e.what();
    o.violation = true;
  }
  const auto rep = check_d2(g, coloring.empty() ? Coloring(g.size(), kLive) : coloring, bound);
  o.row.n = g.size();
  o.row.delta = delta;
  o.row.algo = spec.algo;
  o.row.seed = seed;
  o.row.rounds_total = trace.rounds_used;
  std::string phases;
  for (const auto& [label, rounds] : trace.rounds_by_phase()) {
    if (!phases.empty()) phases += ';';
    phases += label + ':' + std::to_string(rounds);
  }
  o.row.rounds_per_phase = phases;
  o.row.distinct_colors = rep.distinct_colors;
  o.row.max_edge_bits = trace.max_bits();
  o.row.valid = rep.valid && !o.violation;
  if (spec.strict && trace.violation_count > 0) o.violation = true;
  o.trace_csv = trace.to_csv();
  return o;
}

std::filesystem::path output_path(const std::string& given, const std::string& fallback) {
  const char* dir = std::getenv(kOutDirEnv);
  if (given.empty()) {
    if (!dir) return {};
    return std::filesystem::path(dir) / fallback;
  }
  std::filesystem::path p(given);
  if (dir && p.is_relative() && !p.has_parent_path()) return std::filesystem::path(dir) / p;
  return p;
}

void append_rows(const std::filesystem::path& path, const std::vector<CsvRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream os(path, std::ios::app);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  if (fresh) os << kCsvVersion << '\n' << CsvRow::header() << '\n';
  for (const auto& r : rows) os << r.str() << '\n';
}

int do_run(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  if (spec.graph.empty() == spec.edges.empty()) {
    err << "exactly one of --graph and --edges is required\n";
    return 2;
  }
  Graph g;
  try {
    g = spec.edges.empty() ? graph_from_spec(spec.graph, spec.graph_seed.value_or(spec.seed))
                           : load_edge_list(spec.edges);
  } catch (const std::exception& e) {
    err << "graph: " << e.what() << '\n';
    return 2;
  }
  std::vector<Outcome> outs(spec.repeat);
  const unsigned jobs = std::max(1u, std::min<unsigned>(spec.jobs, static_cast<unsigned>(spec.repeat)));
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  std::vector<std::string> failures(jobs);
  for (unsigned j = 0; j < jobs; ++j)
    pool.emplace_back([&, j] {
      try {
        for (std::size_t i = next++; i < spec.repeat; i = next++) outs[i] = run_one(g, spec, spec.seed + i);
      } catch (const std::exception& e) {
        failures[j] = e.what();
      }
    });
  for (auto& t : pool) t.join();
  for (const auto& f : failures)
    if (!f.empty()) {
      err << "run failed: " << f << '\n';
      return 1;
    }
  std::vector<CsvRow> rows;
  for (const auto& o : outs) rows.push_back(o.row);
  const auto csv = output_path(spec.csv, "d2color.csv");
  if (!csv.empty()) append_rows(csv, rows);
  if (!spec.trace.empty()) {
    std::ofstream ts(output_path(spec.trace, spec.trace));
    ts << "# seed " << spec.seed << '\n' << outs.front().trace_csv;
  }
  if (!spec.quiet) {
    out << kCsvVersion << '\n' << CsvRow::header() << '\n';
    for (const auto& r : rows) out << r.str() << '\n';
  }
  int code = 0;
  for (const auto& o : outs) {
    if (!o.error.empty()) err << "seed " << o.row.seed << ": " << o.error << '\n';
    if (!o.row.valid || o.violation) code = 1;
  }
  return code;
}

int do_fit(const std::string& path, std::ostream& out, std::ostream& err) {
  std::ifstream is(path);
  if (!is) {
    err << "cannot read " << path << '\n';
    return 2;
  }
  try {
    out << fit_report(read_csv(is)).text();
  } catch (const std::invalid_argument& e) {
    err << "fit: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"distance-2 coloring in a simulated CONGEST network", "d2color"};
  RunSpec spec;
  app.add_option("--algo", spec.algo, "rand, det or split")->check(CLI::IsMember({"rand", "det", "split"}));
  app.add_option("--graph", spec.graph, "generator spec, e.g. rr:n=1024,d=8 or gnp:n=512,p=0.02");
  app.add_option("--edges", spec.edges, "edge-list file")->check(CLI::ExistingFile);
  app.add_option("--seed", spec.seed, "run seed (repeats use seed, seed+1, ...)");
  app.add_option("--graph-seed", spec.graph_seed, "generator seed, defaults to --seed");
  app.add_option("--beta", spec.beta, "bandwidth B = beta * ceil(log2 n) bits")->check(CLI::PositiveNumber);
  app.add_option("--profile", spec.profile, "constants profile")->check(CLI::IsMember({"paper", "desk"}));
  app.add_option("--epsilon", spec.epsilon, "split: (1+epsilon) Delta^2 colors")->check(CLI::PositiveNumber);
  app.add_option("--csv", spec.csv, std::string("append rows here; bare names go under $") + kOutDirEnv);
  app.add_option("--trace", spec.trace, "per-round trace CSV of the first repeat");
  app.add_option("--repeat", spec.repeat, "number of seeds")->check(CLI::PositiveNumber);
  app.add_option("--threads", spec.threads, "kernel threads per run")->check(CLI::PositiveNumber);
  app.add_option("--jobs", spec.jobs, "repeats run concurrently")->check(CLI::PositiveNumber);
  app.add_flag("--strict", spec.strict, "abort on the first bandwidth violation");
  app.add_flag("--quiet", spec.quiet, "no rows on stdout");
  std::string fit_csv;
  auto* fit = app.add_subcommand("fit", "least-squares fit of rounds against the candidate models");
  fit->add_option("csv", fit_csv, "sweep CSV")->required();

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << app.help();
    return 2;
  }
  if (*fit) return do_fit(fit_csv, out, err);
  try {
    return do_run(spec, out, err);
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return 1;
  }
}

}  // namespace d2
