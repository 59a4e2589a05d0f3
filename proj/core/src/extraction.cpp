#include "qprobe/extraction.hpp"

#include <cmath>
#include <numbers>

#include "qprobe/error.hpp"

namespace qprobe {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

constexpr std::pair<Observable, std::string_view> kObservableNames[] = {
    {Observable::X, "X"},         {Observable::Y, "Y"},
    {Observable::N, "n"},         {Observable::X2, "X2"},
    {Observable::Y2, "Y2"},       {Observable::VarX, "VarX"},
    {Observable::VarY, "VarY"},   {Observable::A, "A"},
    {Observable::B, "B"},         {Observable::X2TwoMode, "X2_two_mode"},
    {Observable::Y2TwoMode, "Y2_two_mode"}, {Observable::VarU, "VarU"},
    {Observable::VarV, "VarV"},   {Observable::DuanSum, "DuanSum"},
};

// sum_i c_i * d_i plus a constant, with errors propagated as sum |c_i| err_i.
MomentResult combine(Observable obs, std::vector<double> phases, std::initializer_list<std::pair<double, DerivativeEstimate>> terms,
                     double constant) {
  MomentResult r;
  r.observable = obs;
  r.phases = std::move(phases);
  r.extracted = constant;
  for (const auto& [c, d] : terms) {
    r.extracted += c * d.value;
    r.error_estimate += std::abs(c) * d.error_estimate;
    r.inputs.push_back(d);
  }
  return r;
}

const MomentResult& need(const std::optional<MomentResult>& m, std::string_view what) {
  if (!m) throw Error(ErrorCode::MissingComponent, "missing component moment: " + std::string(what));
  return *m;
}

MomentResult sum_results(Observable obs, std::vector<double> phases,
                         std::initializer_list<std::pair<double, const MomentResult*>> terms) {
  MomentResult r;
  r.observable = obs;
  r.phases = std::move(phases);
  for (const auto& [c, m] : terms) {
    r.extracted += c * m->extracted;
    r.error_estimate += std::abs(c) * m->error_estimate;
    r.inputs.insert(r.inputs.end(), m->inputs.begin(), m->inputs.end());
  }
  return r;
}

}  // namespace

std::string_view to_string(Observable o) {
  for (const auto& [k, name] : kObservableNames) {
    if (k == o) return name;
  }
  return "?";
}

Observable parse_observable(std::string_view name) {
  for (const auto& [k, n] : kObservableNames) {
    if (n == name) return k;
  }
  throw Error(ErrorCode::BadParameter, "unknown observable '" + std::string(name) + "'");
}

bool is_two_mode(Observable o) {
  switch (o) {
    case Observable::A:
    case Observable::B:
    case Observable::X2TwoMode:
    case Observable::Y2TwoMode:
    case Observable::VarU:
    case Observable::VarV:
    case Observable::DuanSum: return true;
    default: return false;
  }
}

double y_probe_phase(double phi) { return phi; }
double x_probe_phase(double phi) { return phi - kHalfPi; }
double twophoton_probe_phase(double phi) { return 2.0 * phi + kHalfPi; }
double twoatom_bell_phase(double phi) { return 2.0 * phi; }
double a_probe_phase(double phi1, double phi2) { return phi2 - phi1 - kHalfPi; }
double b_probe_phase(double phi1, double phi2) { return phi1 + phi2 - kHalfPi; }

double calibrate_correlator_prefactor(double slope, double oracle_value) {
  if (std::abs(slope) < 1e-12) throw Error(ErrorCode::BadParameter, "calibration state gives a vanishing slope");
  return oracle_value / slope;
}

MomentResult extract_Y(double phi, const Signal& pe_plus, const EstimatorConfig& cfg) {
  const auto d1 = derivative_at_zero(pe_plus, 1, cfg);
  return combine(Observable::Y, {phi}, {{1.0, d1}}, 0.0);
}

MomentResult extract_X(double phi, const Signal& pe_plus_shifted, const EstimatorConfig& cfg) {
  const auto d1 = derivative_at_zero(pe_plus_shifted, 1, cfg);
  return combine(Observable::X, {phi}, {{1.0, d1}}, 0.0);
}

MomentResult extract_Y_homodyne(double phi, const Signal& pe_plus, const Signal& pe_minus,
                                const EstimatorConfig& cfg) {
  const auto d1 = derivative_at_zero(Signal::difference(pe_plus, pe_minus), 1, cfg);
  auto r = combine(Observable::Y, {phi}, {{0.5, d1}}, 0.0);
  r.note = "homodyne";
  return r;
}

MomentResult extract_X_homodyne(double phi, const Signal& pe_plus, const Signal& pe_minus,
                                const EstimatorConfig& cfg) {
  auto r = extract_Y_homodyne(phi, pe_plus, pe_minus, cfg);
  r.observable = Observable::X;
  return r;
}

MomentResult extract_n(const Signal& pg_excited, const EstimatorConfig& cfg) {
  const auto d2 = derivative_at_zero(pg_excited, 2, cfg);
  return combine(Observable::N, {}, {{0.5, d2}}, -1.0);
}

SquaredQuadratures extract_X2_Y2_twophoton(double phi, const Signal& pg_plus, const Signal& pg_minus,
                                           const Signal& pg_excited, const EstimatorConfig& cfg) {
  const auto slope = derivative_at_zero(Signal::difference(pg_plus, pg_minus), 1, cfg);
  const auto curv = derivative_at_zero(pg_excited, 2, cfg);
  SquaredQuadratures out{combine(Observable::X2, {phi}, {{0.25, slope}, {0.25, curv}}, -0.25),
                         combine(Observable::Y2, {phi}, {{-0.25, slope}, {0.25, curv}}, -0.25)};
  out.x2.note = out.y2.note = "two-photon";
  return out;
}

SquaredQuadratures extract_X2_Y2_twoatom(double phi, const Signal& bell_plus, const Signal& bell_minus,
                                         const Signal& pg_excited, const EstimatorConfig& cfg) {
  const auto bell = derivative_at_zero(Signal::difference(bell_plus, bell_minus), 2, cfg);
  const auto curv = derivative_at_zero(pg_excited, 2, cfg);
  constexpr double c = 1.0 / 16.0;
  SquaredQuadratures out{combine(Observable::X2, {phi}, {{c, bell}, {0.25, curv}}, -0.25),
                         combine(Observable::Y2, {phi}, {{-c, bell}, {0.25, curv}}, -0.25)};
  out.x2.note = out.y2.note = "two-atom";
  return out;
}

MomentResult extract_A(double phi1, double phi2, const Signal& pe_plus, const Signal& pe_minus,
                       const EstimatorConfig& cfg) {
  const auto d1 = derivative_at_zero(Signal::difference(pe_plus, pe_minus), 1, cfg);
  return combine(Observable::A, {phi1, phi2}, {{kCorrelatorPrefactorA, d1}}, 0.0);
}

MomentResult extract_B(double phi1, double phi2, const Signal& pe_plus, const Signal& pe_minus,
                       const EstimatorConfig& cfg) {
  const auto d1 = derivative_at_zero(Signal::difference(pe_plus, pe_minus), 1, cfg);
  return combine(Observable::B, {phi1, phi2}, {{kCorrelatorPrefactorB, d1}}, 0.0);
}

MomentResult variance(const MomentResult& second, const MomentResult& first) {
  MomentResult r;
  if (second.observable == Observable::X2) {
    r.observable = Observable::VarX;
  } else if (second.observable == Observable::Y2) {
    r.observable = Observable::VarY;
  } else {
    throw Error(ErrorCode::BadParameter, "variance needs a squared quadrature");
  }
  r.phases = second.phases;
  r.extracted = second.extracted - first.extracted * first.extracted;
  r.error_estimate = second.error_estimate + 2.0 * std::abs(first.extracted) * first.error_estimate;
  r.inputs = second.inputs;
  r.inputs.insert(r.inputs.end(), first.inputs.begin(), first.inputs.end());
  r.note = second.note;
  return r;
}

SquaredQuadratures two_mode_second_moments(const TwoModeMoments& m) {
  const auto& xx1 = need(m.xx1, "X^2 of mode 1");
  const auto& xx2 = need(m.xx2, "X^2 of mode 2");
  const auto& yy1 = need(m.yy1, "Y^2 of mode 1");
  const auto& yy2 = need(m.yy2, "Y^2 of mode 2");
  const auto& a = need(m.a, "A");
  const auto& b = need(m.b, "B");
  // <X1 X2> = (A + B)/4 and <Y1 Y2> = (A - B)/4, each entering twice.
  std::vector<double> ph{m.phi1, m.phi2};
  return {sum_results(Observable::X2TwoMode, ph, {{1.0, &xx1}, {1.0, &xx2}, {0.5, &a}, {0.5, &b}}),
          sum_results(Observable::Y2TwoMode, ph, {{1.0, &yy1}, {1.0, &yy2}, {0.5, &a}, {-0.5, &b}})};
}

DuanResult duan_check(double a0, int sign1, int sign2, const TwoModeMoments& m, double tol) {
  if (!(a0 > 0.0)) throw Error(ErrorCode::BadParameter, "a0 must be positive");
  if (std::abs(sign1) != 1 || std::abs(sign2) != 1) throw Error(ErrorCode::BadParameter, "Duan signs must be +1 or -1");
  const auto& x1 = need(m.x1, "X of mode 1");
  const auto& x2 = need(m.x2, "X of mode 2");
  const auto& y1 = need(m.y1, "Y of mode 1");
  const auto& y2 = need(m.y2, "Y of mode 2");
  const auto& xx1 = need(m.xx1, "X^2 of mode 1");
  const auto& xx2 = need(m.xx2, "X^2 of mode 2");
  const auto& yy1 = need(m.yy1, "Y^2 of mode 1");
  const auto& yy2 = need(m.yy2, "Y^2 of mode 2");
  const auto& a = need(m.a, "A");
  const auto& b = need(m.b, "B");

  const double a2 = a0 * a0;
  const double s1 = sign1;
  const double s2 = sign2;
  std::vector<double> ph{m.phi1, m.phi2, a0, s1, s2};

  // Var(x) = 2 Var(X) and Cov(x1, x2) = 2 Cov(X1, X2) in the sqrt(2) scaling.
  auto var_of = [&](Observable obs, const MomentResult& q1, const MomentResult& q2, const MomentResult& qq1,
                    const MomentResult& qq2, double cross_a, double cross_b, double s) {
    const double var1 = qq1.extracted - q1.extracted * q1.extracted;
    const double var2 = qq2.extracted - q2.extracted * q2.extracted;
    const double cov = 0.25 * (cross_a * a.extracted + cross_b * b.extracted) - q1.extracted * q2.extracted;
    MomentResult r = sum_results(obs, ph, {{2.0 * a2, &qq1}, {2.0 / a2, &qq2}, {-s, &a}, {-s * cross_b, &b}});
    r.extracted = 2.0 * (a2 * var1 + var2 / a2 - 2.0 * s * cov);
    r.error_estimate += 4.0 * (a2 * std::abs(q1.extracted) * q1.error_estimate +
                               std::abs(q2.extracted) * q2.error_estimate / a2) +
                        4.0 * (std::abs(q2.extracted) * q1.error_estimate + std::abs(q1.extracted) * q2.error_estimate);
    return r;
  };

  DuanResult out;
  out.var_u = var_of(Observable::VarU, x1, x2, xx1, xx2, 1.0, 1.0, s1);
  out.var_v = var_of(Observable::VarV, y1, y2, yy1, yy2, 1.0, -1.0, s2);
  out.total = sum_results(Observable::DuanSum, ph, {{1.0, &out.var_u}, {1.0, &out.var_v}});
  out.sum = out.total.extracted;
  out.bound = a2 + 1.0 / a2;
  out.violates = out.sum < out.bound - tol;
  return out;
}

}  // namespace qprobe
