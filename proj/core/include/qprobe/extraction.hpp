#pragma once

// Field moments from derivatives of probe populations at tau = 0.
//
// Every function here takes already-prepared population signals (exact,
// dissipative or sampled) and returns a MomentResult. Which probe phase each
// signal must have been prepared with is spelled out by the *_probe_phase
// helpers; protocols.hpp does that bookkeeping for simulated fields.
//
// Phase conventions. Single-mode quadratures are
//   X_phi = (a e^{-i phi} + a^dag e^{i phi}) / 2,
//   Y_phi = (a e^{-i phi} - a^dag e^{i phi}) / 2i.
// Two-mode quantities (A, B, the two-mode X and Y, u and v) use
//   X_{phi_j} = (a_j^dag e^{-i phi_j} + a_j e^{i phi_j}) / 2,
// i.e. the single-mode X at -phi_j, with
//   A = a1^dag a2 e^{-i(phi1 - phi2)} + h.c.,  B = a1^dag a2^dag e^{-i(phi1 + phi2)} + h.c.

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qprobe/derivative.hpp"

namespace qprobe {

enum class Observable { X, Y, N, X2, Y2, VarX, VarY, A, B, X2TwoMode, Y2TwoMode, VarU, VarV, DuanSum };

std::string_view to_string(Observable o);
Observable parse_observable(std::string_view name);
bool is_two_mode(Observable o);

struct MomentResult {
  Observable observable = Observable::X;
  double extracted = 0.0;
  std::optional<double> oracle;
  std::vector<DerivativeEstimate> inputs;
  std::vector<double> phases;
  double error_estimate = 0.0;  // linear propagation of the input error estimates
  std::string note;

  std::optional<double> gap() const {
    if (!oracle) return std::nullopt;
    return std::abs(extracted - *oracle);
  }
};

// Probe phases each protocol has to be prepared with.
double y_probe_phase(double phi);                   // PlusPhi, JC1, measure e
double x_probe_phase(double phi);                   // phi - pi/2
double twophoton_probe_phase(double phi);           // +-, JC2, measure g
double twoatom_bell_phase(double phi);              // Bell +-, TwoAtomJC, measure psi+
double a_probe_phase(double phi1, double phi2);     // +-, ModeExchangeA, measure e
double b_probe_phase(double phi1, double phi2);     // +-, ModeSqueezeB, measure e

// Sign and scale of <A>, <B> relative to d(P+ - P-)/dtau at 0. Frozen after
// calibration against the oracle; see calibrate_correlator_prefactor.
inline constexpr double kCorrelatorPrefactorA = 1.0;
inline constexpr double kCorrelatorPrefactorB = 1.0;

// The prefactor c that maps a measured slope onto the oracle value.
double calibrate_correlator_prefactor(double slope, double oracle_value);

MomentResult extract_Y(double phi, const Signal& pe_plus, const EstimatorConfig& cfg);
MomentResult extract_X(double phi, const Signal& pe_plus_shifted, const EstimatorConfig& cfg);
MomentResult extract_Y_homodyne(double phi, const Signal& pe_plus, const Signal& pe_minus,
                                const EstimatorConfig& cfg);
// Same difference measurement at probe phase phi - pi/2.
MomentResult extract_X_homodyne(double phi, const Signal& pe_plus, const Signal& pe_minus,
                                const EstimatorConfig& cfg);

// <n> = (1/2) d^2 P_g^e / dtau^2 |_0 - 1, probe initially excited.
MomentResult extract_n(const Signal& pg_excited, const EstimatorConfig& cfg);

struct SquaredQuadratures {
  MomentResult x2;
  MomentResult y2;
};

// Runs: JC2 with probes |+-_psi>, psi = twophoton_probe_phase(phi), measuring
// g; plus the JC1 <n> run.
SquaredQuadratures extract_X2_Y2_twophoton(double phi, const Signal& pg_plus, const Signal& pg_minus,
                                           const Signal& pg_excited, const EstimatorConfig& cfg);

// Runs: TwoAtomJC with Bell probes |phi+-_theta>, theta = 2 phi, measuring
// |psi+>; plus the JC1 <n> run.
SquaredQuadratures extract_X2_Y2_twoatom(double phi, const Signal& bell_plus, const Signal& bell_minus,
                                         const Signal& pg_excited, const EstimatorConfig& cfg);

MomentResult extract_A(double phi1, double phi2, const Signal& pe_plus, const Signal& pe_minus,
                       const EstimatorConfig& cfg);
MomentResult extract_B(double phi1, double phi2, const Signal& pe_plus, const Signal& pe_minus,
                       const EstimatorConfig& cfg);

// Var = <Q^2> - <Q>^2 from two results.
MomentResult variance(const MomentResult& second, const MomentResult& first);

// Component moments for two-mode combinations, in the two-mode phase
// convention (x2_1 is <X_{phi1}^2> of mode 1 as defined above, and so on).
struct TwoModeMoments {
  double phi1 = 0.0;
  double phi2 = 0.0;
  std::optional<MomentResult> x1, y1, x2, y2;       // first moments
  std::optional<MomentResult> xx1, yy1, xx2, yy2;   // squared quadratures
  std::optional<MomentResult> a, b;
};

SquaredQuadratures two_mode_second_moments(const TwoModeMoments& m);

struct DuanResult {
  double sum = 0.0;
  double bound = 0.0;
  bool violates = false;
  MomentResult var_u;
  MomentResult var_v;
  MomentResult total;
};

// u = a0 x1 - s1 x2 / a0, v = a0 y1 - s2 y2 / a0 with x = sqrt(2) X, so that
// the vacuum gives Var(u) + Var(v) = a0^2 + 1/a0^2.
DuanResult duan_check(double a0, int sign1, int sign2, const TwoModeMoments& m, double tol = 1e-9);

}  // namespace qprobe
