#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "motforge/json_io.hpp"

namespace motforge {

enum class ScenarioKind {
  mot_solve,
  monotone_check,
  transform_apply,
  transform_classify,
  sep_fit,
  sep_compare,
  stop_go,
  symmetry_suite,
};

const char* to_string(ScenarioKind k);

struct Scenario {
  ScenarioKind kind = ScenarioKind::mot_solve;
  std::string name;
  std::uint64_t seed = 0;
  ojson body;  // validated, references resolved inline
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct Assertion {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct Report {
  std::string scenario;
  ojson body = ojson::object();
  std::vector<Table> tables;
  std::vector<Assertion> assertions;

  bool all_passed() const;
  ojson to_json() const;
};

enum class ReportFormat { json, csv };

// Loads and validates a scenario file. String values for measure / cost /
// transform / coupling / barrier inputs are references, resolved relative to
// the scenario file. Convex order is pre-checked where the kind requires it.
Scenario load_problem(const std::filesystem::path& path);

// Parses a scenario from inline JSON (used by load_problem and tests).
Scenario parse_scenario(ojson j, const std::string& default_name,
                        const std::filesystem::path& base_dir);

Report run_scenario(const Scenario& s);

// Writes <name>.json and/or per-table <name>_<table>.csv with stable field
// order and 17-significant-digit floats; returns the written paths.
std::vector<std::filesystem::path> emit_report(const Report& report,
                                               const std::filesystem::path& out_dir,
                                               ReportFormat format);

// Verbosity from MOTFORGE_LOG: 0 quiet (default), 1 info, 2 debug.
int log_level();

}  // namespace motforge
