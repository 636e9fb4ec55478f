// monoreg: Tikhonov paths, solver runs, trade-off analysis and R-continuity
// probes on problem files. Exit codes: 0 all checks passed, 1 usage error,
// 2 data error, 3 numerical failure, 4 invariant violation.

#include <charconv>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "monoreg/errors.hpp"
#include "monoreg/experiments.hpp"
#include "monoreg/problem_io.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3, kInvariant = 4 };

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, end - pos);
    double v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size())
      throw monoreg::ArgumentError(std::string(what) + ": '" + item + "' is not a number");
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

struct Options {
  std::string problem;
  std::string out;
  std::string eps_schedule;
  std::string x0;
  double gamma = 1.0;
  std::optional<std::size_t> iters;
  double tol = 1e-10;
  std::uint64_t seed = 0;
  std::optional<double> eps;
  std::size_t samples = 100;
  double scale = 1.0;
};

void add_common(CLI::App* cmd, Options& o, bool problem_required) {
  auto* p = cmd->add_option("--problem", o.problem, "problem file (JSON)");
  if (problem_required) p->required();
  cmd->add_option("--out", o.out, "output directory for report.csv and summary.txt")->required();
  cmd->add_option("--iters", o.iters, "iteration budget");
  cmd->add_option("--tol", o.tol, "stopping / inner tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--x0", o.x0, "start point, comma separated");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tikhonov regularization paths, error bounds and DC splitting diagnostics"};
  app.require_subcommand(1);
  Options o;
  std::string method;

  auto* path = app.add_subcommand("tikhonov-path", "regularization path with a-priori bound audit");
  add_common(path, o, true);
  path->add_option("--eps-schedule", o.eps_schedule, "strictly decreasing eps values, comma separated");

  auto* solve = app.add_subcommand("solve", "run one solver and check its diagnostics");
  solve->add_option("method", method, "ppa | agd | agd-strong | fb-dc | dca")
      ->required()
      ->check(CLI::IsMember({"ppa", "agd", "agd-strong", "fb-dc", "dca"}));
  add_common(solve, o, true);
  solve->add_option("--gamma", o.gamma, "step size")->check(CLI::PositiveNumber);
  solve->add_option("--eps", o.eps, "regularization weight (agd-strong)");

  auto* tradeoff = app.add_subcommand("tradeoff", "regularize-vs-direct accelerated gradient comparison");
  add_common(tradeoff, o, true);
  tradeoff->add_option("--eps", o.eps, "regularization weight");

  auto* probe = app.add_subcommand("probe", "empirical R-continuity probe");
  add_common(probe, o, true);
  probe->add_option("--samples", o.samples, "samples per sampler");
  probe->add_option("--scale", o.scale, "factor applied to the modulus constant")->check(CLI::PositiveNumber);

  auto* example = app.add_subcommand("reproduce-example1", "reproduce the 3x3 singular quadratic example");
  add_common(example, o, false);
  example->add_option("--eps", o.eps, "regularization weight");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  monoreg::ExperimentConfig cfg;
  cfg.command = app.get_subcommands().front()->get_name();
  cfg.method = method;
  cfg.gamma = o.gamma;
  cfg.iters = o.iters;
  cfg.tol = o.tol;
  cfg.seed = o.seed;
  cfg.eps = o.eps;
  cfg.samples = o.samples;
  cfg.scale = o.scale;

  try {
    if (!o.eps_schedule.empty()) cfg.eps_schedule = parse_list(o.eps_schedule, "--eps-schedule");
    if (!o.x0.empty()) {
      const auto v = parse_list(o.x0, "--x0");
      cfg.x0 = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    std::optional<monoreg::ProblemFile> problem;
    if (!o.problem.empty()) problem = monoreg::load_problem(o.problem);

    const monoreg::ExperimentResult result = monoreg::run_experiment(cfg, problem);
    monoreg::write_artifacts(result, o.out);
    std::cout << monoreg::render_summary(result);
    return result.ok() ? kOk : kInvariant;
  } catch (const monoreg::ArgumentError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const monoreg::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const monoreg::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << " (residual " << e.residual() << ")\n";
    return kNumerical;
  } catch (const monoreg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
}
