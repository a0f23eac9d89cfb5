#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gaussbound {

struct CheckRow {
  std::string name;
  double value = 0.0;
  std::string expected;  // human-readable rule, e.g. "0.098 +- 0.010"
  bool pass = false;
};

struct ExperimentReport {
  std::string id;
  std::string title;
  std::vector<CheckRow> rows;
  double seconds = 0.0;
  [[nodiscard]] bool pass() const;
};

/// Acceptance criteria 1..11, each with its runtime budget as a final row.
ExperimentReport run_criterion(int number, std::uint64_t seed = 7);

/// Ids accepted by run_experiment.
const std::vector<std::string>& experiment_ids();

/// End-to-end experiment bundles; throws ParameterError on an unknown id.
ExperimentReport run_experiment(const std::string& id, std::uint64_t seed = 7);

/// Fixed-width text table of a report.
std::string format_report(const ExperimentReport& report);

}  // namespace gaussbound
