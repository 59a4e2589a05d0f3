#pragma once

// Executes scenarios: prepares every run the requested observables need,
// extracts the moments, compares against the oracle and writes artifacts.
//
// Output layout under <out>/<scenario name>/:
//   results.json   header {timestamp, version} + deterministic body
//   series/*.csv   one population series per prepared run
// Compare reports go to <out>/<scenario name>-compare/compare.json.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "scenario.hpp"

namespace qprobe::scenario {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> truncation;
  std::optional<std::filesystem::path> out;  // parent directory for scenario outputs
  int jobs = 1;
  bool write = true;  // false: compute and report only
};

struct Report {
  int exit_code = kExitOk;
  std::string table;
  nlohmann::json document;  // {"header": ..., "body": ...}
  std::filesystem::path directory;
  std::string message;
};

Report run(const Scenario& s, const RunOptions& options);
Report compare(const Scenario& s, const RunOptions& options);

// Runs the Laboratory in planning mode: every preparation the scenario
// implies, with purposes, and no physics.
nlohmann::json plan(const Scenario& s, const RunOptions& options);

// Output directory for a scenario: --out, then the file's output.dir
// (relative to the scenario file), then ./results.
std::filesystem::path output_root(const Scenario& s, const RunOptions& options);

// Library and validation errors mapped to CLI exit codes.
int exit_code_for(const std::exception& e);

std::string version();

}  // namespace qprobe::scenario
