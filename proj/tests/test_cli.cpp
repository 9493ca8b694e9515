#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "d2color/cli.hpp"

using namespace d2;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<CsvRow> rows_of(const std::string& text) {
  std::istringstream is(text);
  return read_csv(is);
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "d2color_test_cli";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  fs::remove_all(p);
  return p;
}

CsvRow planted(std::size_t n, std::size_t delta, double rounds) {
  CsvRow r;
  r.n = n;
  r.delta = delta;
  r.algo = "rand";
  r.rounds_total = static_cast<std::size_t>(std::llround(rounds));
  return r;
}

}  // namespace

TEST_CASE("det on a 3-path") {
  const auto r = cli({"--algo", "det", "--graph", "path:n=3"});
  CHECK(r.code == 0);
  const auto rows = rows_of(r.out);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].n == 3);
  CHECK(rows[0].delta == 2);
  CHECK(rows[0].distinct_colors == 3);
  CHECK(rows[0].valid);
  CHECK(r.out.rfind(kCsvVersion, 0) == 0);
}

TEST_CASE("rand rows repeat under a fixed seed") {
  const std::vector<std::string> args{"--algo", "rand", "--graph", "rr:n=256,d=4", "--seed", "5", "--repeat", "2"};
  const auto a = cli(args), b = cli(args);
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  const auto rows = rows_of(a.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].seed == 5);
  CHECK(rows[1].seed == 6);
  CHECK(rows[0].valid);
  // concurrent repeats are merged in seed order
  auto par = args;
  par.insert(par.end(), {"--jobs", "2"});
  CHECK(cli(par).out == a.out);
}

TEST_CASE("split on a generator graph and an edge list") {
  const auto r = cli({"--algo", "split", "--graph", "gnp:n=200,p=0.03", "--epsilon", "1"});
  CHECK(r.code == 0);
  const fs::path edges = scratch("tri.txt");
  std::ofstream(edges) << "# nodes 4\n0 1\n1 2\n2 0\n2 3\n";
  const auto e = cli({"--algo", "split", "--edges", edges.string()});
  CHECK(e.code == 0);
  const auto rows = rows_of(e.out);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].distinct_colors == 4);
}

TEST_CASE("usage errors exit 2") {
  CHECK(cli({"--algo", "nope", "--graph", "path:n=3"}).code == 2);
  CHECK(cli({"--algo", "det"}).code == 2);
  CHECK(cli({"--algo", "det", "--graph", "path:n=3", "--edges", "/nonexistent"}).code == 2);
  CHECK(cli({"--algo", "det", "--graph", "torus:n=3"}).code == 2);
  CHECK(cli({"--algo", "det", "--graph", "path:n=3", "--beta", "-1"}).code == 2);
  CHECK(cli({"--bogus"}).code == 2);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("strict mode turns a violation into exit 1") {
  const auto r = cli({"--algo", "det", "--graph", "rr:n=256,d=8", "--beta", "0.01", "--strict"});
  CHECK(r.code == 1);
  CHECK(r.err.find("bandwidth") != std::string::npos);
  // audit mode records but finishes
  CHECK(cli({"--algo", "det", "--graph", "rr:n=256,d=8", "--beta", "0.01"}).code == 0);
}

TEST_CASE("csv output, version header and the output directory variable") {
  const fs::path p = scratch("rows.csv");
  CHECK(cli({"--algo", "det", "--graph", "cycle:n=12", "--csv", p.string(), "--quiet"}).code == 0);
  CHECK(cli({"--algo", "det", "--graph", "cycle:n=13", "--csv", p.string(), "--quiet"}).code == 0);
  std::ifstream is(p);
  std::string first, second;
  std::getline(is, first);
  std::getline(is, second);
  CHECK(first == kCsvVersion);
  CHECK(second == CsvRow::header());
  is.seekg(0);
  const auto rows = read_csv(is);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].n == 13);

  const fs::path dir = scratch("outdir");
  ::setenv(kOutDirEnv, dir.string().c_str(), 1);
  CHECK(cli({"--algo", "det", "--graph", "path:n=5", "--csv", "bare.csv", "--quiet"}).code == 0);
  CHECK(fs::exists(dir / "bare.csv"));
  CHECK(cli({"--algo", "det", "--graph", "path:n=5", "--quiet"}).code == 0);
  CHECK(fs::exists(dir / "d2color.csv"));
  ::unsetenv(kOutDirEnv);
}

TEST_CASE("row round trip") {
  CsvRow r = planted(1024, 8, 321);
  r.rounds_per_phase = "a:1;b:320";
  r.valid = true;
  const CsvRow back = CsvRow::parse(r.str());
  CHECK(back.str() == r.str());
  CHECK_THROWS(CsvRow::parse("1,2,3"));
}

TEST_CASE("fit recovers a planted log n * log Delta model") {
  std::vector<CsvRow> rows;
  for (std::size_t e = 8; e <= 13; ++e)
    for (std::size_t d : {4, 8, 16}) rows.push_back(planted(std::size_t{1} << e, d, 7.0 * e * std::log2(d)));
  const auto rep = fit_report(rows);
  CHECK(rep.informative);
  CHECK(rep.best == 0);
  CHECK(rep.models[0].coef == doctest::Approx(7.0).epsilon(0.01));
  CHECK(rep.text().find("best: model 1") != std::string::npos);
}

TEST_CASE("fit picks Delta^2 for a quadratic sweep") {
  std::vector<CsvRow> rows;
  for (std::size_t d = 4; d <= 32; d += 4) rows.push_back(planted(1024, d, 3.0 * d * d + 40));
  const auto rep = fit_report(rows);
  CHECK(rep.best == 2);
  CHECK(rep.models[1].degenerate);  // n fixed
}

TEST_CASE("fit on constant rounds is non-informative") {
  std::vector<CsvRow> rows;
  for (std::size_t e = 8; e <= 12; ++e) rows.push_back(planted(std::size_t{1} << e, 8, 50));
  const auto rep = fit_report(rows);
  CHECK_FALSE(rep.informative);
  CHECK(rep.text().find("non-informative") != std::string::npos);
  rows.resize(3);
  CHECK_THROWS_AS(fit_report(rows), std::invalid_argument);
}

TEST_CASE("sweep through the harness feeds the fit subcommand") {
  const fs::path p = scratch("sweep.csv");
  for (int e = 8; e <= 11; ++e)
    CHECK(cli({"--algo", "rand", "--graph", "rr:n=" + std::to_string(1 << e) + ",d=4", "--csv", p.string(),
               "--quiet"})
              .code == 0);
  const auto r = cli({"fit", p.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("points: 4") != std::string::npos);
  const fs::path small = scratch("small.csv");
  CHECK(cli({"--algo", "det", "--graph", "path:n=4", "--csv", small.string(), "--quiet"}).code == 0);
  CHECK(cli({"fit", small.string()}).code == 1);
  CHECK(cli({"fit", "/nonexistent.csv"}).code == 2);
}
