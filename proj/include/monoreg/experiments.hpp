#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "monoreg/problem_io.hpp"
#include "monoreg/report.hpp"

namespace monoreg {

struct ExperimentConfig {
  /// tikhonov-path | solve | tradeoff | probe | reproduce-example1
  std::string command;
  /// solve only: ppa | agd | agd-strong | fb-dc | dca
  std::string method;
  /// Empty means the default geometric schedule.
  std::vector<double> eps_schedule;
  double gamma = 1.0;
  std::optional<std::size_t> iters;
  double tol = 1e-10;
  std::uint64_t seed = 0;
  std::optional<Vector> x0;
  /// Regularization weight for agd-strong and tradeoff.
  std::optional<double> eps;
  /// probe: samples per sampler.
  std::size_t samples = 100;
  /// probe: multiplies the modulus constant before probing.
  double scale = 1.0;
};

struct Check {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct ExperimentResult {
  std::string id;
  std::uint64_t seed = 0;
  std::vector<ReportRow> rows;
  std::vector<std::string> summary;
  std::vector<Check> checks;

  bool ok() const;
};

/// Runs one experiment. reproduce-example1 accepts a missing problem and then
/// uses the built-in instance; every other command requires one.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::optional<ProblemFile>& problem);

/// The Example 1 instance: B, C with L = 330.
ProblemFile example1_problem();

std::string render_summary(const ExperimentResult& result);

/// Writes report.csv and summary.txt into `dir`, creating it if needed.
void write_artifacts(const ExperimentResult& result, const std::filesystem::path& dir);

/// "a;b;c" with 17 significant digits per entry.
std::string format_vector(const Vector& v);

}  // namespace monoreg
