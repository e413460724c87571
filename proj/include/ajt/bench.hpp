#pragma once

// Evaluation matrix: every selected workload under every selected scenario.
//
// A cell is one simulation. Each cell's final memory is checked by the
// workload oracle; a failing oracle, a fault or a build error marks the whole
// row as failed and withholds its speedup.
//
// run_serial is the reference; run_parallel spreads the builds and then the
// cells over OpenMP threads and must produce the same report.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ajt/core.hpp"
#include "ajt/scenario.hpp"
#include "ajt/workloads.hpp"

namespace ajt::bench {

struct Options {
  std::vector<std::string> workloads;              // empty: all, in table order
  std::vector<scenario::Scenario> scenarios;       // empty: all four
  std::uint64_t seed = 1;
  core::CoreConfig config;
  nlohmann::json sizes = nlohmann::json::object();  // {"fft": {"n": 1024}, ...}
};

struct Cell {
  scenario::Scenario scenario = scenario::Scenario::Single;
  core::ExitKind exit = core::ExitKind::Halted;
  std::optional<pipe::Fault> fault;
  core::SimStats stats;
  workloads::OracleResult oracle;
};

enum class RowStatus { Ok, BuildError, Fault, OracleFailed };
std::string_view status_name(RowStatus s);

struct Row {
  std::string workload;
  RowStatus status = RowStatus::Ok;
  std::string error;
  nlohmann::ordered_json manifest;
  std::vector<Cell> cells;  // in scenario order; empty after a build error
  std::optional<double> speedup;

  const Cell* cell(scenario::Scenario s) const;
};

struct Report {
  std::string version;
  std::uint64_t seed = 0;
  std::string config_hash;
  nlohmann::ordered_json config;
  std::vector<scenario::Scenario> scenarios;
  std::vector<Row> rows;

  bool all_ok() const;
};

Report run_serial(const Options& opt);
Report run_parallel(const Options& opt);

nlohmann::ordered_json to_json(const Report& r);
/// workload,single,inactive,spinning,dual,speedup; failed rows and missing
/// scenarios leave their cells empty.
std::string to_csv(const Report& r);

}  // namespace ajt::bench
