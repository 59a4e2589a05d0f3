#pragma once

// Declarative scenario files (YAML, `schema: 1`).
//
// A scenario names one field state, the observables to extract from it, the
// estimator, optional noise and dissipation, and where to write results.
// Unknown keys are rejected with their file position.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <qprobe/protocols.hpp>

namespace qprobe::scenario {

inline constexpr int kSchemaVersion = 1;

// Configuration problems; always maps to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridSpec {
  double min = -0.5;
  double max = 0.5;
  int points = 201;
};

struct ExplicitRun {
  RunSpec spec;
  int line = 0;
  bool mode_given = false;  // single-mode couplings on a multimode field must say which mode
};

// Estimator settings for exact data: short steps and high degrees that the
// shot-noise runs could not afford.
EstimatorConfig exact_data_estimator();

struct CompareSpec {
  int seeds = 20;
  int shots = 10000;
  std::vector<double> kernel_widths{0.2, 0.1, 0.05, 0.025};
  EstimatorConfig noiseless = exact_data_estimator();
};

struct Scenario {
  std::string name;
  std::string description;
  std::filesystem::path source;

  FieldStateSpec field;
  int truncation = 0;  // 0: choose from the observables
  double leakage_tol = kDefaultLeakageTol;

  GridSpec grid;
  EstimatorConfig estimator;
  bool method_given = false;

  std::optional<int> shots;
  std::optional<LindbladSpec> lindblad;
  LindbladOptions lindblad_options;
  bool escalate_leakage = true;

  std::uint64_t seed = 0x5eed;
  std::vector<MeasurementRequest> observables;
  std::vector<ExplicitRun> runs;

  std::optional<std::filesystem::path> output_dir;
  bool write_series = true;

  CompareSpec compare;
};

Scenario load(const std::filesystem::path& path);
Scenario parse(const std::string& text, const std::filesystem::path& source = "<string>");

// Checks combinations parse() cannot see on its own (mode counts against
// observables and explicit runs, grid direction under dissipation).
void validate(const Scenario& s);

// Field truncation actually used: override, then the file, then the largest
// default among the interactions the observables need.
int effective_truncation(const Scenario& s, std::optional<int> override_truncation = std::nullopt);

}  // namespace qprobe::scenario
