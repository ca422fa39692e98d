#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "coldplasma/cli.hpp"
#include "coldplasma/io.hpp"
#include "doctest.h"

using namespace coldplasma;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli_run(std::vector<std::string> args) {
  args.insert(args.begin(), "coldplasma");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

CsvTable parse(const std::string& s) {
  std::istringstream is(s);
  return read_csv(is);
}

fs::path temp_dir() {
  const fs::path p = fs::temp_directory_path() / "coldplasma_test_io_cli";
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("double formatting round-trips") {
  for (double x : {0.1, 1.0 / 3, -2.5e-300, 6.02214076e23, 0.0, 4.9e-324}) CHECK(parse_double(format_double(x)) == x);
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(std::isnan(parse_double(format_double(std::nan("")))));
  CHECK(parse_double("inf") == INFINITY);
  CHECK_THROWS_AS(parse_double("1.5x"), CsvError);
  CHECK_THROWS_AS(parse_double(""), CsvError);
}

TEST_CASE("CSV quoting round-trips") {
  CsvTable t;
  t.header = {"x", "msg"};
  t.rows = {{"1", "plain"}, {"2", "has, comma"}, {"3", "quote \" and\nnewline"}, {"4", ""}};
  std::ostringstream os;
  write_csv(os, t);
  const auto back = parse(os.str());
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK(back.number(1, "x") == 2);
  CHECK_THROWS_AS(back.column("y"), CsvError);
  CHECK_THROWS_AS(parse("a,b\n1,2,3\n"), CsvError);
  CHECK_THROWS_AS(parse(""), CsvError);
}

TEST_CASE("scan table has the documented schema") {
  ScanRow good;
  good.A_star = 0.1;
  good.T = 6.2;
  good.lambda_abs = {1.5, 1.0, 1 / 1.5};
  good.S = 0.5;
  ScanRow bad;
  bad.A_star = 0.2;
  bad.error = "integrator failed, step underflow";
  const auto t = scan_table({good, bad}, 3);
  CHECK(t.header == std::vector<std::string>{"A_star", "T", "lambda_abs_1", "lambda_abs_2", "lambda_abs_3",
                                             "S", "class", "error"});
  std::ostringstream os;
  write_csv(os, t);
  const auto back = parse(os.str());
  CHECK(back.number(0, "lambda_abs_3") == 1 / 1.5);
  CHECK(back.rows[0][back.column("class")] == "real-pair-dominant");
  CHECK(back.rows[1][back.column("error")] == bad.error);
  CHECK(std::isnan(back.number(1, "S")));
}

TEST_CASE("blow-up report JSON round-trips") {
  BlowupReport r;
  r.system = NonlinearSystem::radial5;
  r.initial = Eigen::VectorXd::LinSpaced(5, 0.1, 0.5);
  r.t_max = 220;
  r.verdict = Verdict::BlewUp;
  r.reason = StopReason::StepUnderflow;
  r.t_c_estimate = 1.0 / 3;
  r.t_c_coarse = 0.3;
  r.max_norm = 1e6;
  r.max_A = 0.25;
  r.min_A = -1e6;
  r.max_density = INFINITY;
  r.min_density = 0.5;
  r.final_state = r.initial * 2;
  r.steps = 77;
  const auto back = blowup_report_from_json(nlohmann::json::parse(to_json(r).dump()));
  CHECK(back.system == r.system);
  CHECK(back.initial == r.initial);
  CHECK(back.verdict == r.verdict);
  CHECK(back.reason == r.reason);
  CHECK(back.t_c_estimate == r.t_c_estimate);
  CHECK(back.max_density == INFINITY);
  CHECK(back.final_state == r.final_state);
  CHECK(back.steps == 77);
}

TEST_CASE("cli spectrum") {
  const auto r = cli_run({"spectrum", "--bz0", "1"});
  REQUIRE(r.code == 0);
  const auto t = parse(r.out);
  REQUIRE(t.rows.size() == 5);
  const double phi = (1 + std::sqrt(5.0)) / 2;
  CHECK(t.number(0, "im") == doctest::Approx(phi).epsilon(1e-15));
  CHECK(t.number(2, "im") == doctest::Approx(phi - 1).epsilon(1e-15));
  CHECK(t.number(4, "abs") == 0);
  for (std::size_t i = 0; i < 5; ++i) CHECK(t.number(i, "re") == 0);
  const auto z = parse(cli_run({"spectrum", "--bz0", "0"}).out);
  CHECK(z.number(0, "im") == 1);
  CHECK(cli_run({"spectrum", "--bz0", "abc"}).code == cli::kUsage);
  CHECK(cli_run({"spectrum"}).code == cli::kUsage);
}

TEST_CASE("cli simulate") {
  SUBCASE("three periods conserve K") {
    const auto r = cli_run({"simulate", "--system", "axisym2", "--init", "0,0.1", "--periods", "3"});
    REQUIRE(r.code == 0);
    const auto t = parse(r.out);
    CHECK(t.header == std::vector<std::string>{"t", "a", "A", "density", "K"});
    const double k0 = t.number(0, "K");
    double drift = 0;
    for (std::size_t i = 0; i < t.rows.size(); ++i) drift = std::max(drift, std::abs(t.number(i, "K") - k0));
    CHECK(drift < 1e-8);
    CHECK(t.number(t.rows.size() - 1, "t") == doctest::Approx(3 * period_event(0.1)));
  }
  SUBCASE("zero state gives constant rows") {
    const auto r = cli_run({"simulate", "--system", "radial5", "--init", "0,0,0,0,0", "--t-max", "5", "--dt", "1"});
    REQUIRE(r.code == 0);
    const auto t = parse(r.out);
    CHECK(t.rows.size() == 6);
    for (const auto& row : t.rows)
      for (std::size_t j = 1; j <= 5; ++j) CHECK(parse_double(row[j]) == 0);
  }
  SUBCASE("usage errors name the field") {
    auto r = cli_run({"simulate", "--system", "radial5", "--init", "0,0.1", "--t-max", "5"});
    CHECK(r.code == cli::kUsage);
    CHECK(r.err.find("--init") != std::string::npos);
    r = cli_run({"simulate", "--system", "radial7", "--init", "0", "--t-max", "5"});
    CHECK(r.code == cli::kUsage);
    CHECK(r.err.find("--system") != std::string::npos);
    r = cli_run({"simulate", "--system", "axisym2", "--init", "0,0.1"});
    CHECK(r.code == cli::kUsage);
    CHECK(r.err.find("--t-max") != std::string::npos);
    CHECK(cli_run({"simulate", "--system", "axisym2", "--init", "0,0.1", "--t-max", "1", "--rtol", "0"}).code ==
          cli::kUsage);
  }
  SUBCASE("divergence is reported with a nonzero exit") {
    const auto r = cli_run({"simulate", "--system", "radial5", "--init", "0,0,0.1,0.1,0", "--t-max", "260"});
    CHECK(r.code == cli::kFailure);
    CHECK(r.err.find("Diverged") != std::string::npos);
    CHECK(parse(r.out).rows.size() > 100);
  }
}

TEST_CASE("cli period") {
  auto r = cli_run({"period", "--grid", "0.05:0.45:0.05"});
  REQUIRE(r.code == 0);
  auto t = parse(r.out);
  REQUIRE(t.rows.size() == 9);
  for (std::size_t i = 1; i < t.rows.size(); ++i) CHECK(t.number(i, "T_event") < t.number(i - 1, "T_event"));
  r = cli_run({"period", "--eps", "0.1"});
  t = parse(r.out);
  REQUIRE(t.rows.size() == 1);
  CHECK(std::abs(t.number(0, "T_quadrature") - t.number(0, "T_event")) < 1e-8);
  // the asymptotic law is off at order eps^3
  CHECK(std::abs(t.number(0, "T_asymptotic") - t.number(0, "T_event")) < 2.5e-3);
  r = cli_run({"period", "--eps", "0.6"});
  CHECK(r.code == cli::kUsage);
  CHECK(r.err.find("--eps") != std::string::npos);
  CHECK(cli_run({"period"}).code == cli::kUsage);
}

TEST_CASE("cli floquet-scan, files, plot script and config") {
  const auto dir = temp_dir();
  const auto csv = (dir / "scan.csv").string(), gp = (dir / "scan.gp").string();
  auto r = cli_run({"floquet-scan", "--system", "radial3", "--grid", "0.1:0.3:0.1", "--jobs", "2", "--out", csv,
                    "--plot-script", gp});
  REQUIRE(r.code == 0);
  std::ifstream f(csv);
  const auto t = read_csv(f);
  CHECK(t.rows.size() == 3);
  CHECK(t.number(2, "A_star") == doctest::Approx(0.3));
  CHECK(slurp(gp).find(csv) != std::string::npos);

  // byte-identical reruns, serial or parallel
  const auto a = cli_run({"floquet-scan", "--system", "electrostatic4", "--grid", "0.1:0.4:0.05", "--jobs", "1"});
  const auto b = cli_run({"floquet-scan", "--system", "electrostatic4", "--grid", "0.1:0.4:0.05", "--jobs", "3"});
  CHECK(a.out == b.out);

  // config sections, overridden by the command line
  const auto ini = (dir / "c.ini").string();
  std::ofstream(ini) << "[floquet-scan]\nsystem = electrostatic4\ngrid = 0.1:0.4:0.05\njobs = 1\n";
  CHECK(cli_run({"--config", ini, "floquet-scan"}).out == a.out);
  const auto over = cli_run({"--config", ini, "floquet-scan", "--system", "radial3"});
  CHECK(parse(over.out).header.size() == 3 + 2 + 2 + 1);

  CHECK(cli_run({"floquet-scan", "--system", "radial3", "--grid", "0.3:0.1:0.1"}).code == cli::kUsage);
  CHECK(cli_run({"floquet-scan", "--system", "radial3", "--grid", "0.1:0.7:0.1"}).code == cli::kUsage);
  CHECK(cli_run({"floquet-scan", "--system", "radial3", "--grid", "0.1:0.3"}).code == cli::kUsage);
}

TEST_CASE("cli blowup") {
  const auto dir = temp_dir();
  const auto series = (dir / "series.csv").string();
  auto r = cli_run({"blowup", "--init", "0,0,0.1,0.1,0", "--t-max", "260", "--series", series});
  REQUIRE(r.code == 0);
  const auto rep = blowup_report_from_json(nlohmann::json::parse(r.out));
  CHECK(rep.verdict == Verdict::BlewUp);
  std::ifstream f(series);
  const auto t = read_csv(f);
  CHECK(t.header.back() == "norm");
  CHECK(t.rows.size() == rep.steps + 1);

  r = cli_run({"blowup", "--init", "0,0,0.1,0.1,0", "--bz0", "0.04", "--t-max", "220"});
  CHECK(blowup_report_from_json(nlohmann::json::parse(r.out)).verdict == Verdict::BoundedThrough);
  r = cli_run({"blowup", "--system", "axisym2", "--init", "0,0.3", "--t-max", "1000"});
  CHECK(blowup_report_from_json(nlohmann::json::parse(r.out)).verdict == Verdict::BoundedThrough);

  r = cli_run({"blowup", "--init", "0,0,0.1,0.1", "--t-max", "50", "--bz0-grid", "0:0.04:0.02"});
  REQUIRE(r.code == 0);
  CHECK(parse(r.out).rows.size() == 3);

  r = cli_run({"blowup", "--init", "0,0,0.1,0.1,0", "--t-max", "0"});
  CHECK(r.code == cli::kUsage);
  CHECK(r.err.find("--t-max") != std::string::npos);
}

TEST_CASE("cli help documents the schemas") {
  const auto r = cli_run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("lambda_abs_1..n") != std::string::npos);
  CHECK(cli_run({}).code == cli::kUsage);
  CHECK(cli_run({"frobnicate"}).code == cli::kUsage);
}
