#pragma once

// Measurement protocols on a simulated field.
//
// A Laboratory owns one field state and prepares whatever probe runs an
// observable needs: it picks interaction, probe state, phase and projector,
// evolves (unitary, Lindblad, optionally shot-sampled), extracts the moment
// and fills in the oracle value. Runs are cached by their full specification,
// so companion runs shared between observables (the <n> run, for instance)
// are prepared once and show up once in the manifest.

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qprobe/extraction.hpp"
#include "qprobe/interactions.hpp"
#include "qprobe/oracle.hpp"
#include "qprobe/sampling.hpp"
#include "qprobe/states.hpp"

namespace qprobe {

enum class SecondMomentProtocol { TwoPhoton, TwoAtom };

std::string_view to_string(SecondMomentProtocol p);
SecondMomentProtocol parse_second_moment_protocol(std::string_view name);

struct RunSpec {
  Interaction interaction = Interaction::JC1;
  ProbeStateSpec probe = probe::Ground{};
  Projector projector = Projector::Excited;
  int mode = 0;  // field mode a single-mode coupling acts on

  std::string id() const;
};

struct MeasurementRequest {
  Observable observable = Observable::X;
  double phi1 = 0.0;
  double phi2 = 0.0;
  int mode = 0;
  SecondMomentProtocol protocol = SecondMomentProtocol::TwoPhoton;
  bool homodyne = false;  // first moments from the +- difference
  double a0 = 1.0;
  int sign1 = -1;
  int sign2 = 1;

  ObservableSpec oracle_spec() const;
};

struct LabOptions {
  EstimatorConfig estimator;
  std::vector<double> grid;  // tau samples kept for output, and the data for gridded estimators
  std::optional<ShotSpec> shots;
  std::optional<LindbladSpec> lindblad;
  LindbladOptions lindblad_options;
  int jobs = 1;
};

struct RunRecord {
  RunSpec spec;
  std::vector<std::string> purposes;
  std::uint64_t stream = 0;
  std::optional<PopulationSeries> series;  // absent when planning or without a grid
};

class Laboratory {
 public:
  Laboratory(FieldState field, LabOptions options);

  // A laboratory that only records which runs would be prepared.
  static Laboratory planner(int modes, int truncation);

  const FieldState& field() const noexcept { return field_; }
  const LabOptions& options() const noexcept { return options_; }
  const std::vector<RunRecord>& runs() const noexcept { return runs_; }

  // Later measurements use this estimator; prepared runs are kept.
  void set_estimator(const EstimatorConfig& estimator) { options_.estimator = estimator; }

  // Validates the request against the field (ShapeMismatch) and measures it.
  MomentResult measure(const MeasurementRequest& request);
  DuanResult duan(const MeasurementRequest& request);

  // Population signal of one run; prepares it on first use.
  const Signal& signal(const RunSpec& spec, const std::string& purpose);

 private:
  Laboratory(int modes, int truncation);

  MomentResult compute(const MeasurementRequest& r);
  MomentResult first_moment(Observable obs, double phi, int mode, bool homodyne);
  SquaredQuadratures second_moments(double phi, int mode, SecondMomentProtocol protocol);
  TwoModeMoments components(const MeasurementRequest& r);
  void check(const MeasurementRequest& r) const;
  std::shared_ptr<const Propagator> propagator(Interaction kind, const HilbertSpace& space);

  FieldState field_;
  LabOptions options_;
  bool planning_ = false;
  int modes_ = 1;
  std::vector<RunRecord> runs_;
  std::deque<Signal> signals_;  // stable references for callers
  std::map<std::string, std::size_t> index_;
  std::map<std::string, std::shared_ptr<const Propagator>> propagators_;
  std::map<int, DensityOperator> reduced_;
};

}  // namespace qprobe
