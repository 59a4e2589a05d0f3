#include "qprobe/protocols.hpp"

#include <algorithm>
#include <cstdio>

#include "qprobe/error.hpp"

namespace qprobe {

namespace {

std::string fmt_phase(double x) {
  if (x == 0.0) x = 0.0;  // drop the sign of -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string probe_label(const ProbeStateSpec& p) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, probe::Ground>) return "g";
        else if constexpr (std::is_same_v<T, probe::Excited>) return "e";
        else if constexpr (std::is_same_v<T, probe::PlusPhi>) return "plus(" + fmt_phase(s.phi) + ")";
        else if constexpr (std::is_same_v<T, probe::MinusPhi>) return "minus(" + fmt_phase(s.phi) + ")";
        else if constexpr (std::is_same_v<T, probe::BellPhiPlus>) return "bellplus(" + fmt_phase(s.theta) + ")";
        else if constexpr (std::is_same_v<T, probe::BellPhiMinus>) return "bellminus(" + fmt_phase(s.theta) + ")";
        else return "psiplus";
      },
      p);
}

std::string purpose_for(const char* what, int mode) { return std::string(what) + " mode " + std::to_string(mode); }

}  // namespace

std::string_view to_string(SecondMomentProtocol p) {
  return p == SecondMomentProtocol::TwoPhoton ? "two_photon" : "two_atom";
}

SecondMomentProtocol parse_second_moment_protocol(std::string_view name) {
  if (name == "two_photon") return SecondMomentProtocol::TwoPhoton;
  if (name == "two_atom") return SecondMomentProtocol::TwoAtom;
  throw Error(ErrorCode::BadParameter, "unknown second-moment protocol '" + std::string(name) + "'");
}

std::string RunSpec::id() const {
  std::string s(to_string(interaction));
  if (required_modes(interaction) == 1) s += "-m" + std::to_string(mode);
  s += "-" + probe_label(probe) + "-" + std::string(to_string(projector));
  return s;
}

ObservableSpec MeasurementRequest::oracle_spec() const {
  return ObservableSpec{observable, phi1, phi2, mode, a0, sign1, sign2};
}

Laboratory::Laboratory(FieldState field, LabOptions options)
    : field_(std::move(field)), options_(std::move(options)), modes_(field_.modes) {
  if (options_.lindblad && options_.lindblad->is_closed()) options_.lindblad.reset();
}

Laboratory::Laboratory(int modes, int truncation) : planning_(true), modes_(modes) {
  field_.modes = modes;
  field_.truncation = truncation;
}

Laboratory Laboratory::planner(int modes, int truncation) { return Laboratory(modes, truncation); }

std::shared_ptr<const Propagator> Laboratory::propagator(Interaction kind, const HilbertSpace& space) {
  std::string key(to_string(kind));
  for (int d : space.dims()) key += "x" + std::to_string(d);
  auto it = propagators_.find(key);
  if (it != propagators_.end()) return it->second;
  auto p = std::make_shared<const Propagator>(build_interaction(kind, space));
  propagators_.emplace(key, p);
  return p;
}

const Signal& Laboratory::signal(const RunSpec& spec, const std::string& purpose) {
  const std::string id = spec.id();
  if (auto it = index_.find(id); it != index_.end()) {
    auto& purposes = runs_[it->second].purposes;
    if (std::find(purposes.begin(), purposes.end(), purpose) == purposes.end()) purposes.push_back(purpose);
    return signals_[it->second];
  }

  const int need_modes = required_modes(spec.interaction);
  if (need_modes > modes_) {
    throw Error(ErrorCode::ShapeMismatch, std::string(to_string(spec.interaction)) + " needs a " +
                                              std::to_string(need_modes) + "-mode field");
  }
  if (need_modes == 1 && (spec.mode < 0 || spec.mode >= modes_)) {
    throw Error(ErrorCode::ShapeMismatch, "mode index " + std::to_string(spec.mode) + " out of range");
  }
  if (qubit_count(spec.probe) != required_qubits(spec.interaction)) {
    throw Error(ErrorCode::ShapeMismatch, "probe " + describe(spec.probe) + " does not fit " +
                                              std::string(to_string(spec.interaction)));
  }

  RunRecord rec{spec, {purpose}, static_cast<std::uint64_t>(runs_.size()), std::nullopt};

  if (planning_) {
    runs_.push_back(std::move(rec));
    signals_.emplace_back(Evaluable([](double) { return 0.0; }));
    index_.emplace(id, runs_.size() - 1);
    return signals_.back();
  }

  // A single-mode coupling only sees the reduced state of its mode.
  const DensityOperator* rho_f = &field_.rho;
  if (need_modes == 1 && modes_ > 1) {
    auto it = reduced_.find(spec.mode);
    if (it == reduced_.end()) {
      const int keep[] = {spec.mode};
      it = reduced_.emplace(spec.mode, partial_trace(field_.rho, keep)).first;
    }
    rho_f = &it->second;
  }

  const DensityOperator rho0 = compose(build_probe(spec.probe), *rho_f);
  const HilbertSpace& space = rho0.space();
  const Operator proj = build_projector(spec.projector, space);
  const int qubits = required_qubits(spec.interaction);
  const std::string label(to_string(spec.projector));

  std::optional<PopulationSeries> series;
  std::optional<Signal> sig;
  if (options_.lindblad) {
    const Operator h = build_interaction(spec.interaction, space);
    series = lindblad_series(rho0, h, *options_.lindblad, proj, options_.grid, qubits, label,
                             options_.lindblad_options);
  } else {
    auto prop = propagator(spec.interaction, space);
    auto model = std::make_shared<const PopulationModel>(prop, rho0, proj);
    sig.emplace(Evaluable([model](double t) { return (*model)(t); }));
    if (!options_.grid.empty()) {
      series = population_series(prop, rho0, proj, options_.grid, qubits, label, options_.jobs);
    }
  }
  if (series) {
    series->meta.state_leakage = field_.leakage;
    series->meta.description = id;
    if (options_.shots) {
      series = sample_series(*series, *options_.shots, rec.stream);
      series->meta.description = id;
    }
  }
  if (!sig || options_.shots) {
    if (!series) throw Error(ErrorCode::BadParameter, "noisy or dissipative runs need a tau grid");
    sig.emplace(*series);
  }
  rec.series = std::move(series);
  runs_.push_back(std::move(rec));
  signals_.push_back(std::move(*sig));
  index_.emplace(id, runs_.size() - 1);
  return signals_.back();
}

void Laboratory::check(const MeasurementRequest& r) const {
  if (is_two_mode(r.observable)) {
    if (modes_ != 2) {
      throw Error(ErrorCode::ShapeMismatch, std::string(to_string(r.observable)) + " needs a two-mode field");
    }
  } else if (r.mode < 0 || r.mode >= modes_) {
    throw Error(ErrorCode::ShapeMismatch, "mode index " + std::to_string(r.mode) + " out of range for a " +
                                              std::to_string(modes_) + "-mode field");
  }
}

MomentResult Laboratory::first_moment(Observable obs, double phi, int mode, bool homodyne) {
  const double psi = obs == Observable::X ? x_probe_phase(phi) : y_probe_phase(phi);
  const char* tag = obs == Observable::X ? "X" : "Y";
  const auto& est = options_.estimator;
  if (homodyne) {
    const auto& plus = signal({Interaction::JC1, probe::PlusPhi{psi}, Projector::Excited, mode}, purpose_for(tag, mode));
    const auto& minus = signal({Interaction::JC1, probe::MinusPhi{psi}, Projector::Excited, mode}, purpose_for(tag, mode));
    return obs == Observable::X ? extract_X_homodyne(phi, plus, minus, est) : extract_Y_homodyne(phi, plus, minus, est);
  }
  const auto& plus = signal({Interaction::JC1, probe::PlusPhi{psi}, Projector::Excited, mode}, purpose_for(tag, mode));
  return obs == Observable::X ? extract_X(phi, plus, est) : extract_Y(phi, plus, est);
}

SquaredQuadratures Laboratory::second_moments(double phi, int mode, SecondMomentProtocol protocol) {
  const auto& est = options_.estimator;
  const auto& n_run = signal({Interaction::JC1, probe::Excited{}, Projector::Ground, mode}, purpose_for("n", mode));
  if (protocol == SecondMomentProtocol::TwoPhoton) {
    const double psi = twophoton_probe_phase(phi);
    const auto p = purpose_for("X2/Y2 two-photon", mode);
    const auto& plus = signal({Interaction::JC2, probe::PlusPhi{psi}, Projector::Ground, mode}, p);
    const auto& minus = signal({Interaction::JC2, probe::MinusPhi{psi}, Projector::Ground, mode}, p);
    return extract_X2_Y2_twophoton(phi, plus, minus, n_run, est);
  }
  const double theta = twoatom_bell_phase(phi);
  const auto p = purpose_for("X2/Y2 two-atom", mode);
  const auto& plus = signal({Interaction::TwoAtomJC, probe::BellPhiPlus{theta}, Projector::PsiPlus, mode}, p);
  const auto& minus = signal({Interaction::TwoAtomJC, probe::BellPhiMinus{theta}, Projector::PsiPlus, mode}, p);
  return extract_X2_Y2_twoatom(phi, plus, minus, n_run, est);
}

TwoModeMoments Laboratory::components(const MeasurementRequest& r) {
  TwoModeMoments m;
  m.phi1 = r.phi1;
  m.phi2 = r.phi2;
  const auto& est = options_.estimator;
  // Two-mode quadratures at phi_j are single-mode quadratures at -phi_j.
  const double s1 = -r.phi1;
  const double s2 = -r.phi2;
  const bool need_first = r.observable == Observable::VarU || r.observable == Observable::VarV ||
                          r.observable == Observable::DuanSum;
  if (need_first) {
    m.x1 = first_moment(Observable::X, s1, 0, r.homodyne);
    m.y1 = first_moment(Observable::Y, s1, 0, r.homodyne);
    m.x2 = first_moment(Observable::X, s2, 1, r.homodyne);
    m.y2 = first_moment(Observable::Y, s2, 1, r.homodyne);
  }
  auto q1 = second_moments(s1, 0, r.protocol);
  auto q2 = second_moments(s2, 1, r.protocol);
  m.xx1 = std::move(q1.x2);
  m.yy1 = std::move(q1.y2);
  m.xx2 = std::move(q2.x2);
  m.yy2 = std::move(q2.y2);

  const double pa = a_probe_phase(r.phi1, r.phi2);
  const auto& a_plus = signal({Interaction::ModeExchangeA, probe::PlusPhi{pa}, Projector::Excited, 0}, "A");
  const auto& a_minus = signal({Interaction::ModeExchangeA, probe::MinusPhi{pa}, Projector::Excited, 0}, "A");
  m.a = extract_A(r.phi1, r.phi2, a_plus, a_minus, est);
  const double pb = b_probe_phase(r.phi1, r.phi2);
  const auto& b_plus = signal({Interaction::ModeSqueezeB, probe::PlusPhi{pb}, Projector::Excited, 0}, "B");
  const auto& b_minus = signal({Interaction::ModeSqueezeB, probe::MinusPhi{pb}, Projector::Excited, 0}, "B");
  m.b = extract_B(r.phi1, r.phi2, b_plus, b_minus, est);
  return m;
}

MomentResult Laboratory::compute(const MeasurementRequest& r) {
  const auto& est = options_.estimator;
  switch (r.observable) {
    case Observable::X:
    case Observable::Y: return first_moment(r.observable, r.phi1, r.mode, r.homodyne);
    case Observable::N:
      return extract_n(signal({Interaction::JC1, probe::Excited{}, Projector::Ground, r.mode}, purpose_for("n", r.mode)),
                       est);
    case Observable::X2: return second_moments(r.phi1, r.mode, r.protocol).x2;
    case Observable::Y2: return second_moments(r.phi1, r.mode, r.protocol).y2;
    case Observable::VarX:
      return variance(second_moments(r.phi1, r.mode, r.protocol).x2, first_moment(Observable::X, r.phi1, r.mode, r.homodyne));
    case Observable::VarY:
      return variance(second_moments(r.phi1, r.mode, r.protocol).y2, first_moment(Observable::Y, r.phi1, r.mode, r.homodyne));
    case Observable::A: {
      const double pa = a_probe_phase(r.phi1, r.phi2);
      const auto& plus = signal({Interaction::ModeExchangeA, probe::PlusPhi{pa}, Projector::Excited, 0}, "A");
      const auto& minus = signal({Interaction::ModeExchangeA, probe::MinusPhi{pa}, Projector::Excited, 0}, "A");
      return extract_A(r.phi1, r.phi2, plus, minus, est);
    }
    case Observable::B: {
      const double pb = b_probe_phase(r.phi1, r.phi2);
      const auto& plus = signal({Interaction::ModeSqueezeB, probe::PlusPhi{pb}, Projector::Excited, 0}, "B");
      const auto& minus = signal({Interaction::ModeSqueezeB, probe::MinusPhi{pb}, Projector::Excited, 0}, "B");
      return extract_B(r.phi1, r.phi2, plus, minus, est);
    }
    case Observable::X2TwoMode: return two_mode_second_moments(components(r)).x2;
    case Observable::Y2TwoMode: return two_mode_second_moments(components(r)).y2;
    case Observable::VarU: return duan(r).var_u;
    case Observable::VarV: return duan(r).var_v;
    case Observable::DuanSum: return duan(r).total;
  }
  throw Error(ErrorCode::BadParameter, "unsupported observable");
}

MomentResult Laboratory::measure(const MeasurementRequest& request) {
  check(request);
  MomentResult m = compute(request);
  if (!planning_) m.oracle = direct_moment(field_.rho, request.oracle_spec());
  return m;
}

DuanResult Laboratory::duan(const MeasurementRequest& request) {
  MeasurementRequest r = request;
  r.observable = Observable::DuanSum;
  check(r);
  DuanResult d = duan_check(r.a0, r.sign1, r.sign2, components(r));
  if (!planning_) {
    auto spec = r.oracle_spec();
    spec.observable = Observable::VarU;
    d.var_u.oracle = direct_moment(field_.rho, spec);
    spec.observable = Observable::VarV;
    d.var_v.oracle = direct_moment(field_.rho, spec);
    spec.observable = Observable::DuanSum;
    d.total.oracle = direct_moment(field_.rho, spec);
  }
  d.total.note = d.violates ? "violates separable bound" : "within separable bound";
  return d;
}

}  // namespace qprobe
