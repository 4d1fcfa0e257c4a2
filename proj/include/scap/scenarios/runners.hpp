#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "scap/scenarios/config.hpp"

namespace scap::scenarios {

/// One CSV row: scenario,seed,metric,time,value. Seed 0 marks an aggregate
/// over all seeds of a run.
struct Row {
  std::string scenario;
  std::uint64_t seed;
  std::string metric;
  double time;
  double value;
};

/// One operator verdict: scenario,seed,ts,bits (bit k-1 = device k).
struct VerdictRow {
  std::string scenario;
  std::uint64_t seed;
  std::uint32_t ts;
  double time;
  std::string bits;
};

struct ScenarioResult {
  std::vector<Row> rows;
  std::vector<VerdictRow> verdicts;

  void append(ScenarioResult&& other);
  /// Rows matching scenario label and metric, in order.
  std::vector<double> values(const std::string& scenario, const std::string& metric) const;
};

struct RunOptions {
  /// Event trace sink (line-delimited), or null.
  std::ostream* trace = nullptr;
  bool force_null_crypto = false;
};

/// Runs every point of a scenario for one seed.
ScenarioResult run_scenario(const ScenarioConfig& cfg, std::uint64_t seed, const RunOptions& opts = {});

/// Runs seeds first_seed .. first_seed+count-1 and appends seed-0 summary
/// rows (metric.mean / .median / .min / .max / .count) for every metric that
/// occurs once per seed.
ScenarioResult run_seeds(const ScenarioConfig& cfg, std::uint64_t first_seed, std::uint32_t count,
                         const RunOptions& opts = {});

struct Summary {
  double mean = 0, median = 0, min = 0, max = 0;
  std::size_t count = 0;
};
Summary summarize(std::vector<double> values);

void write_rows_csv(std::ostream& out, const std::vector<Row>& rows, bool header = true);
void write_verdicts_csv(std::ostream& out, const std::vector<VerdictRow>& rows, bool header = true);

}  // namespace scap::scenarios
