#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "monoreg/errors.hpp"
#include "monoreg/experiments.hpp"
#include "monoreg/problem_io.hpp"
#include "monoreg/report.hpp"

using namespace monoreg;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = MONOREG_FIXTURE_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("monoreg_test_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MONOREG_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string fixture(const char* name) { return (kFixtures / name).string(); }

std::string error_of(const std::string& text) {
  try {
    parse_problem(text, "t.json");
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("load the Example 1 fixture") {
  const ProblemFile p = load_problem(kFixtures / "example1.json");
  REQUIRE(std::holds_alternative<QuadraticProblem>(p.data));
  const auto& q = std::get<QuadraticProblem>(p.data);
  CHECK(q.B(0, 0) == 22);
  CHECK(q.B(1, 2) == 143);
  CHECK(q.B(2, 2) == 211);
  CHECK(q.C == Vector{{318.0, 669.0, 987.0}});
  CHECK(q.L == 330.0);
  CHECK(std::holds_alternative<AffineSymmetric>(to_operator(p)));
}

TEST_CASE("every fixture loads and round-trips") {
  for (const char* name : {"example1.json", "dc_box_linear.json", "dc_box_concave.json", "sign.json", "identity.json"}) {
    CAPTURE(name);
    const ProblemFile p = load_problem(kFixtures / name);
    const std::string once = serialize_problem(p);
    const ProblemFile back = parse_problem(once);
    CHECK(serialize_problem(back) == once);
    CHECK(nlohmann::json::parse(once) == nlohmann::json::parse(serialize_problem(back)));
    CHECK(kind_name(back.data) == kind_name(p.data));
  }
}

TEST_CASE("round-trip preserves awkward doubles exactly") {
  ProblemFile p{QuadraticProblem{SymMatrix::diagonal(Vector{{0.1, 1.0 / 3.0}}), Vector{{1e-300, -2.5e17}}, std::nullopt},
                {}};
  p.metadata.x0 = Vector{{0.30000000000000004, -0.0}};
  const fs::path dir = scratch("roundtrip");
  write_problem(p, dir / "p.json");
  const ProblemFile back = load_problem(dir / "p.json");
  const auto& q = std::get<QuadraticProblem>(back.data);
  CHECK(q.B(1, 1) == 1.0 / 3.0);
  CHECK(q.C(0) == 1e-300);
  CHECK(q.C(1) == -2.5e17);
  CHECK((*back.metadata.x0)(0) == 0.30000000000000004);
}

TEST_CASE("load_problem validation errors") {
  CHECK(error_of(R"({"kind": "quadratic", "B": [[1, 2], [2.5, 1]], "C": [0, 0]})").find("asymmetr") != std::string::npos);
  CHECK(error_of(R"({"kind": "composite", "Q": [[1]], "q": [0],
                    "constraint": {"type": "box", "lower": [2], "upper": [1]}})")
            .find("lower <= upper") != std::string::npos);
  CHECK(error_of(R"({"kind": "quadratic", "B": [[1, 0], [0, 1]], "C": [0]})").find("dimension") != std::string::npos);
  CHECK(error_of(R"({"kind": "nonsense"})").find("unknown problem kind") != std::string::npos);
  CHECK(error_of(R"({"B": [[1]]})").find("kind") != std::string::npos);
  CHECK(error_of(R"({"kind": "dc", "g": {"Q": [[-1]], "q": [0]}, "h": {"P": [[1]], "p": [0]}})").find("semidefinite") !=
        std::string::npos);
  CHECK_THROWS_AS(load_problem(kFixtures / "does_not_exist.json"), DataError);
}

TEST_CASE("syntax errors report line and column") {
  const std::string text = "{\n  \"kind\": \"quadratic\",\n  \"B\": [[1, 0], [0, 1]],,\n}";
  const std::string msg = error_of(text);
  CHECK(msg.find("t.json:3:") == 0);
}

TEST_CASE("emit_report") {
  const fs::path dir = scratch("report");
  ReportRow row;
  row.set("experiment", "x").set("seed", 7).set("value", 0.1).set("flag", true).set("missing", std::optional<double>{});
  emit_report({row}, dir / "one.csv");
  CHECK(slurp(dir / "one.csv") == "experiment,seed,value,flag,missing\nx,7,0.10000000000000001,true,NA\n");

  emit_report({row, row}, dir / "a.csv");
  emit_report({row, row}, dir / "b.csv");
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));

  CHECK_THROWS_AS(emit_report({}, dir / "empty.csv"), ArgumentError);
  ReportRow other;
  other.set("experiment", "x");
  CHECK_THROWS_AS(emit_report({row, other}, dir / "bad.csv"), ArgumentError);
  CHECK_THROWS_AS(emit_report({row}, dir / "no_such_dir" / "r.csv"), DataError);

  CHECK(format_double(1.0 / 3.0) == "0.33333333333333331");
  CHECK(std::stod(format_double(0.1 + 0.2)) == 0.1 + 0.2);
  CHECK(format_double(-0.0) == "0");
}

TEST_CASE("CLI: tikhonov-path on the identity fixture") {
  const fs::path out = scratch("identity");
  CHECK(run_cli("tikhonov-path --problem " + fixture("identity.json") + " --out " + out.string()) == 0);
  const std::string csv = slurp(out / "report.csv");
  CHECK(csv.rfind("experiment,seed,index,eps,", 0) == 0);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    CHECK(line.find("0;0;0") != std::string::npos);
    CHECK(line.find(",true") != std::string::npos);
  }
  CHECK(rows == 8);
  CHECK(slurp(out / "summary.txt").find("all checks passed") != std::string::npos);
}

TEST_CASE("CLI: fb-dc on the concave box fixture") {
  const fs::path out = scratch("fbdc");
  CHECK(run_cli("solve fb-dc --problem " + fixture("dc_box_concave.json") + " --x0 0.1 --out " + out.string()) == 0);
  const std::string csv = slurp(out / "report.csv");
  const std::string last = csv.substr(csv.rfind('\n', csv.size() - 2) + 1);
  CHECK(last.find(",1\n") != std::string::npos);
  CHECK(csv.find(",0.80000000000000004\n") != std::string::npos);
}

TEST_CASE("CLI: every subcommand on its fixture") {
  const std::string ex1 = fixture("example1.json");
  struct Case {
    std::string args;
    int code;
  };
  const Case cases[] = {
      {"tikhonov-path --problem " + ex1 + " --eps-schedule 0.1,0.001,0.00001", 0},
      {"tikhonov-path --problem " + fixture("sign.json"), 0},
      {"solve ppa --problem " + ex1, 0},
      {"solve agd --problem " + ex1 + " --iters 2000", 0},
      {"solve agd-strong --problem " + ex1 + " --eps 1e-5 --iters 2000", 0},
      {"solve fb-dc --problem " + fixture("dc_box_linear.json"), 0},
      {"solve dca --problem " + fixture("dc_box_concave.json"), 0},
      {"tradeoff --problem " + ex1 + " --iters 100", 0},
      {"probe --problem " + ex1 + " --seed 3", 0},
      {"probe --problem " + fixture("sign.json") + " --seed 3", 0},
      {"probe --problem " + ex1 + " --seed 3 --scale 0.5", 4},
  };
  int i = 0;
  for (const auto& c : cases) {
    CAPTURE(c.args);
    const fs::path out = scratch("sub" + std::to_string(i++));
    CHECK(run_cli(c.args + " --out " + out.string()) == c.code);
    CHECK(fs::exists(out / "report.csv"));
    CHECK(slurp(out / "summary.txt").find("seed:") != std::string::npos);
  }
}

TEST_CASE("CLI: exit codes") {
  const fs::path out = scratch("codes");
  const std::string o = " --out " + out.string();
  CHECK(run_cli("") == 1);
  CHECK(run_cli("frobnicate" + o) == 1);
  CHECK(run_cli("solve newton --problem " + fixture("example1.json") + o) == 1);
  CHECK(run_cli("tikhonov-path --problem " + fixture("identity.json") + " --eps-schedule 0.1,0.2" + o) == 1);
  CHECK(run_cli("tikhonov-path --problem " + fixture("identity.json") + " --eps-schedule 0.1,abc" + o) == 1);
  CHECK(run_cli("tikhonov-path --problem " + (out / "missing.json").string() + o) == 2);
  std::ofstream(out / "asym.json") << R"({"kind": "quadratic", "B": [[1, 2], [3, 1]], "C": [0, 0]})";
  CHECK(run_cli("tikhonov-path --problem " + (out / "asym.json").string() + o) == 2);
  std::ofstream(out / "inconsistent.json") << R"({"kind": "quadratic", "B": [[1, 0], [0, 0]], "C": [0, 1]})";
  CHECK(run_cli("solve agd --problem " + (out / "inconsistent.json").string() + o) == 2);
  std::ofstream(out / "unbounded.json")
      << R"({"kind": "dc", "g": {"Q": [[1]], "q": [0]}, "h": {"P": [[3]], "p": [0]}, "metadata": {"x0": [1]}})";
  CHECK(run_cli("solve fb-dc --problem " + (out / "unbounded.json").string() + o) == 3);
}

TEST_CASE("CLI: identical inputs give byte-identical reports") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const std::string args = "probe --problem " + fixture("example1.json") + " --seed 11";
  REQUIRE(run_cli(args + " --out " + a.string()) == 0);
  REQUIRE(run_cli(args + " --out " + b.string()) == 0);
  CHECK(slurp(a / "report.csv") == slurp(b / "report.csv"));
  CHECK(slurp(a / "summary.txt") == slurp(b / "summary.txt"));
  const fs::path c = scratch("det_c");
  REQUIRE(run_cli("probe --problem " + fixture("example1.json") + " --seed 12 --out " + c.string()) == 0);
  CHECK(slurp(a / "report.csv") != slurp(c / "report.csv"));
}

TEST_CASE("reproduce-example1 reports every reference quantity") {
  ExperimentConfig cfg;
  cfg.command = "reproduce-example1";
  const ExperimentResult r = run_experiment(cfg, std::nullopt);
  for (const char* name : {"least-norm solution", "regularized solution", "regularized gap", "a-priori bounds",
                           "accelerated gap", "accelerated envelope"}) {
    bool found = false;
    for (const auto& c : r.checks) found = found || c.name == name;
    CHECK_MESSAGE(found, name);
  }
  for (const auto& row : r.rows) {
    REQUIRE(row.fields().size() >= 2);
    CHECK(row.fields()[0].key == "experiment");
    CHECK(row.fields()[1].key == "seed");
  }
}
