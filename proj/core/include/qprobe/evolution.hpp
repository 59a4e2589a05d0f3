#pragma once

// Probe-population time series: exact unitary evolution, closed-form series,
// and Lindblad (dissipative) evolution.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qprobe/opsalg.hpp"

namespace qprobe {

enum class Provenance { Unitary, Analytic, Lindblad, Sampled };

std::string_view to_string(Provenance p);

struct SeriesMetadata {
  int truncation = 0;
  double state_leakage = 0.0;     // truncation loss of the initial field state
  double max_top_population = 0.0;
  bool leakage_alarm = false;      // top Fock level exceeded kLeakageAlarmLevel somewhere
  bool difference = false;         // signed (P+ - P-) series; [0,1] bound waived
  std::optional<int> shots;
  std::optional<std::uint64_t> seed;
  std::string description;
};

inline constexpr double kLeakageAlarmLevel = 1e-6;

struct PopulationSeries {
  std::vector<double> tau;
  std::vector<double> values;
  std::string projector_label;
  Provenance provenance = Provenance::Unitary;
  SeriesMetadata meta;

  std::size_t size() const noexcept { return tau.size(); }
};

// Throws BadParameter if tau is not strictly increasing or sizes differ, and
// InvalidState if a probability series leaves [0, 1] by more than 1e-10.
void validate(const PopulationSeries& s);

// Pointwise a - b on a shared grid. The result is flagged as a difference.
PopulationSeries difference(const PopulationSeries& plus, const PopulationSeries& minus);

std::vector<double> linspace(double lo, double hi, int points);

// Exact Tr[U(tau) rho0 U^dag(tau) P] for arbitrary tau from one
// eigendecomposition of h: P(tau) = sum_jk W_jk exp(-i (l_j - l_k) tau).
class PopulationModel {
 public:
  PopulationModel(std::shared_ptr<const Propagator> propagator, const DensityOperator& rho0,
                  const Operator& projector);

  double operator()(double tau) const;
  // d^n/dtau^n at tau = 0, evaluated in closed form from the spectral weights.
  double exact_derivative(int order) const;

 private:
  struct WeightBlock {
    std::vector<Eigen::Index> rows;  // eigenvalue indices
    std::vector<Eigen::Index> cols;
    Matrix weights;
  };
  std::shared_ptr<const Propagator> prop_;
  std::vector<WeightBlock> weights_;
};

// Projector must be Hermitian and idempotent within 1e-10 (NotProjector).
void require_projector(const Operator& p);

PopulationSeries population_series(const DensityOperator& rho0, const Operator& h, const Operator& projector,
                                   const std::vector<double>& grid, int probe_qubits = 1,
                                   std::string projector_label = {});
// Reuses an existing eigendecomposition; grid points are split over `jobs` threads.
PopulationSeries population_series(std::shared_ptr<const Propagator> propagator, const DensityOperator& rho0,
                                   const Operator& projector, const std::vector<double>& grid, int probe_qubits = 1,
                                   std::string projector_label = {}, int jobs = 1);

// Closed form for P_e under JC1 with probe |+_phi>, exact for
// the hard-truncated ladder (the top excited level is stationary).
PopulationSeries analytic_pe_plusphi(const DensityOperator& rho_f, double phi, const std::vector<double>& grid);

enum class DifferenceKind { JC1Homodyne, JC2Homodyne, TwoAtom, ModeA };

std::string_view to_string(DifferenceKind k);

// Closed-form P(+) - P(-) series. `phase` is the probe phase actually
// prepared: psi for |+-_psi> (JC1, JC2, ModeA) or theta for the Bell pair
// |phi+-_theta> (TwoAtom). Measured level: e for JC1/ModeA, g for JC2,
// |psi+> for TwoAtom.
double analytic_difference(DifferenceKind kind, const DensityOperator& rho_f, double phase, double tau);
PopulationSeries analytic_difference_series(DifferenceKind kind, const DensityOperator& rho_f, double phase,
                                            const std::vector<double>& grid);

struct LindbladSpec {
  double field_decay = 0.0;      // kappa, collapse sqrt(kappa) a_j on every mode
  double probe_decay = 0.0;      // gamma, collapse sqrt(gamma) sigma_i on every qubit
  double probe_dephasing = 0.0;  // gamma_phi, collapse sqrt(gamma_phi / 2) sigma_z,i

  bool is_closed() const { return field_decay == 0.0 && probe_decay == 0.0 && probe_dephasing == 0.0; }
};

struct LindbladOptions {
  double step = 1e-3;
  int max_halvings = 4;
  double convergence_tol = 1e-8;
  double trace_tol = 1e-8;
};

PopulationSeries lindblad_series(const DensityOperator& rho0, const Operator& h, const LindbladSpec& spec,
                                 const Operator& projector, const std::vector<double>& grid, int probe_qubits = 1,
                                 std::string projector_label = {}, const LindbladOptions& options = {});

}  // namespace qprobe
