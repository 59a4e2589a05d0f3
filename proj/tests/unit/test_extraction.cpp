#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <span>

#include <qprobe/error.hpp>
#include <qprobe/evolution.hpp>
#include <qprobe/protocols.hpp>

using namespace qprobe;
using std::numbers::pi;

namespace {

Laboratory lab(const FieldStateSpec& spec, int n, double leakage_tol = kDefaultLeakageTol) {
  LabOptions o;
  o.estimator = EstimatorConfig::noiseless();
  return Laboratory(build_field(spec, n, leakage_tol), o);
}

MeasurementRequest req(Observable o, double phi1 = 0.0, double phi2 = 0.0) {
  MeasurementRequest r;
  r.observable = o;
  r.phi1 = phi1;
  r.phi2 = phi2;
  return r;
}

MeasurementRequest two_atom(Observable o, double phi) {
  auto r = req(o, phi);
  r.protocol = SecondMomentProtocol::TwoAtom;
  return r;
}

// Exact evaluable population for one probe preparation.
Signal model(Interaction k, const ProbeStateSpec& probe, Projector p, const DensityOperator& rho_f) {
  const auto joint = compose(build_probe(probe), rho_f);
  auto prop = std::make_shared<const Propagator>(build_interaction(k, joint.space()));
  PopulationModel m(prop, joint, build_projector(p, joint.space()));
  return Signal(Evaluable([m](double t) { return m(t); }));
}

double slope_of_difference(Interaction k, double phase, const DensityOperator& rho_f) {
  const auto d = Signal::difference(model(k, probe::PlusPhi{phase}, Projector::Excited, rho_f),
                                    model(k, probe::MinusPhi{phase}, Projector::Excited, rho_f));
  return derivative_at_zero(d, 1, EstimatorConfig::noiseless()).value;
}

void expect_oracle_gap_bounded(const MomentResult& r) {
  ASSERT_TRUE(r.oracle.has_value());
  EXPECT_LE(*r.gap(), std::max(10.0 * r.error_estimate, 1e-9)) << to_string(r.observable);
}

}  // namespace

TEST(FirstMoments, Examples) {
  auto vac = lab(field::Fock{0}, 12);
  EXPECT_NEAR(vac.measure(req(Observable::Y)).extracted, 0.0, 1e-12);
  EXPECT_NEAR(vac.measure(req(Observable::X)).extracted, 0.0, 1e-12);

  auto y = lab(field::Coherent{{0.0, 0.5}}, 40);
  EXPECT_NEAR(y.measure(req(Observable::Y)).extracted, 0.5, 1e-8);
  auto x = lab(field::Coherent{0.5}, 40);
  EXPECT_NEAR(x.measure(req(Observable::X)).extracted, 0.5, 1e-8);

  auto fock = lab(field::Fock{1}, 12);
  EXPECT_NEAR(fock.measure(req(Observable::Y)).extracted, 0.0, 1e-12);
}

TEST(FirstMoments, CoherentPhaseSweep) {
  const cplx alpha{0.6, -0.4};
  auto l = lab(field::Coherent{alpha}, 40);
  for (int k = 0; k < 8; ++k) {
    const double phi = k * pi / 4;
    const auto r = l.measure(req(Observable::X, phi));
    EXPECT_NEAR(r.extracted, std::abs(alpha) * std::cos(std::arg(alpha) - phi), 1e-8) << phi;
    expect_oracle_gap_bounded(r);
  }
}

TEST(FirstMoments, HomodyneEquivalence) {
  auto l = lab(field::Coherent{{0.3, 0.5}}, 40);
  for (double phi : {0.0, 0.7, -2.1}) {
    for (Observable o : {Observable::X, Observable::Y}) {
      auto h = req(o, phi);
      h.homodyne = true;
      EXPECT_NEAR(l.measure(h).extracted, l.measure(req(o, phi)).extracted, 1e-8);
    }
  }
  // Diagonal fields give an identically vanishing difference.
  auto th = lab(field::Thermal{0.5}, 40);
  auto h = req(Observable::Y, 0.4);
  h.homodyne = true;
  EXPECT_EQ(th.measure(h).extracted, 0.0);
}

TEST(FirstMoments, PhaseCovariance) {
  auto l = lab(field::Cat{{0.8, 0.3}, 0.0}, 40);
  const auto& rho = l.field().rho;
  for (double phi : {0.0, 0.4, 1.9}) {
    const auto x = extract_X(phi, model(Interaction::JC1, probe::PlusPhi{x_probe_phase(phi)}, Projector::Excited, rho),
                             EstimatorConfig::noiseless());
    const auto y = extract_Y(phi - pi / 2,
                             model(Interaction::JC1, probe::PlusPhi{y_probe_phase(phi - pi / 2)}, Projector::Excited, rho),
                             EstimatorConfig::noiseless());
    EXPECT_NEAR(x.extracted, y.extracted, 1e-8);
  }
  EXPECT_NEAR(x_probe_phase(1.0), 1.0 - pi / 2, 1e-15);
}

TEST(NumberOperator, Examples) {
  EXPECT_NEAR(lab(field::Fock{0}, 12).measure(req(Observable::N)).extracted, 0.0, 1e-10);
  auto th = lab(field::Thermal{0.85}, 60);
  const auto r = th.measure(req(Observable::N));
  EXPECT_NEAR(r.extracted, 0.85, 1e-4);
  EXPECT_NEAR(*r.oracle, 0.85, 1e-4);
  for (double nbar : {1.5, 2.9}) EXPECT_NEAR(lab(field::Thermal{nbar}, 60).measure(req(Observable::N)).extracted, nbar, 1e-3);
}

TEST(SecondMoments, TwoPhotonExamples) {
  auto vac = lab(field::Fock{0}, 12);
  EXPECT_NEAR(vac.measure(req(Observable::X2)).extracted, 0.25, 1e-10);
  EXPECT_NEAR(vac.measure(req(Observable::Y2)).extracted, 0.25, 1e-10);
  auto one = lab(field::Fock{1}, 12);
  EXPECT_NEAR(one.measure(req(Observable::X2)).extracted, 0.75, 1e-10);
  EXPECT_NEAR(one.measure(req(Observable::Y2)).extracted, 0.75, 1e-10);

  auto sq = lab(field::SqueezedVacuum{0.5, 0.0}, 60);
  const auto vx = sq.measure(req(Observable::VarX));
  const auto vy = sq.measure(req(Observable::VarY));
  EXPECT_NEAR(*vx.oracle, std::exp(-1.0) / 4, 1e-8);
  EXPECT_NEAR(*vy.oracle, std::exp(1.0) / 4, 1e-8);
  EXPECT_LE(*vx.gap(), 1e-6);
  EXPECT_LE(*vy.gap(), 1e-6);
}

TEST(SecondMoments, TwoAtomExamples) {
  auto vac = lab(field::Fock{0}, 12);
  EXPECT_NEAR(vac.measure(two_atom(Observable::X2, 0.0)).extracted, 0.25, 1e-10);
  EXPECT_NEAR(vac.measure(two_atom(Observable::Y2, 0.0)).extracted, 0.25, 1e-10);

  // Diagonal states: Bell difference vanishes, result is 1/4 + <n>/2.
  auto th = lab(field::Thermal{0.7}, 40);
  const auto r = th.measure(two_atom(Observable::X2, 0.3));
  ASSERT_EQ(r.inputs.size(), 2u);
  EXPECT_NEAR(r.inputs[0].value, 0.0, 1e-12);
  EXPECT_NEAR(r.extracted, 0.25 + *th.measure(req(Observable::N)).oracle / 2, 1e-6);
  EXPECT_DOUBLE_EQ(twoatom_bell_phase(0.4), 0.8);
}

TEST(SecondMoments, CrossProtocolAgreement) {
  for (const FieldStateSpec& spec : {FieldStateSpec{field::Cat{1.0, 0.0}}, FieldStateSpec{field::SqueezedVacuum{0.5, 0.0}},
                                     FieldStateSpec{field::Coherent{{0.4, 0.9}}}}) {
    auto l = lab(spec, 40);
    for (double phi : {0.0, pi / 8, pi / 4, 1.1}) {
      EXPECT_NEAR(l.measure(req(Observable::X2, phi)).extracted, l.measure(two_atom(Observable::X2, phi)).extracted, 1e-6)
          << describe(spec) << " " << phi;
      EXPECT_NEAR(l.measure(req(Observable::Y2, phi)).extracted, l.measure(two_atom(Observable::Y2, phi)).extracted, 1e-6);
    }
  }
}

TEST(SecondMoments, UncertaintyRelation) {
  for (const FieldStateSpec& spec :
       {FieldStateSpec{field::Fock{0}}, FieldStateSpec{field::SqueezedVacuum{0.25, 0.3}}, FieldStateSpec{field::Cat{1.0, 0.0}},
        FieldStateSpec{field::Thermal{0.4}}, FieldStateSpec{field::Coherent{{1.0, -0.5}}}}) {
    auto l = lab(spec, 40);
    for (double phi : {0.0, 0.5, 1.3}) {
      for (auto protocol : {SecondMomentProtocol::TwoPhoton, SecondMomentProtocol::TwoAtom}) {
        auto rx = req(Observable::VarX, phi);
        auto ry = req(Observable::VarY, phi);
        rx.protocol = ry.protocol = protocol;
        EXPECT_GE(l.measure(rx).extracted * l.measure(ry).extracted, 1.0 / 16 - 1e-6) << describe(spec);
      }
    }
  }
}

TEST(Correlators, CalibrationConstantsArePinned) {
  const auto split = build_field(field::SplitPhoton{0.0}, 4);
  const double a_oracle = direct_moment(split.rho, {Observable::A, 0.0, 0.0});
  EXPECT_NEAR(a_oracle, 1.0, 1e-12);
  const double ca = calibrate_correlator_prefactor(
      slope_of_difference(Interaction::ModeExchangeA, a_probe_phase(0.0, 0.0), split.rho), a_oracle);
  EXPECT_NEAR(ca, kCorrelatorPrefactorA, 1e-8);
  EXPECT_EQ(kCorrelatorPrefactorA, 1.0);

  const auto tmsv = build_field(field::TwoModeSqueezedVacuum{0.5}, 24);
  const double b_oracle = direct_moment(tmsv.rho, {Observable::B, 0.0, 0.0});
  EXPECT_NEAR(b_oracle, -std::sinh(1.0), 1e-6);
  const double cb = calibrate_correlator_prefactor(
      slope_of_difference(Interaction::ModeSqueezeB, b_probe_phase(0.0, 0.0), tmsv.rho), b_oracle);
  EXPECT_NEAR(cb, kCorrelatorPrefactorB, 1e-6);
  EXPECT_EQ(kCorrelatorPrefactorB, 1.0);

  EXPECT_THROW(calibrate_correlator_prefactor(0.0, 1.0), Error);
}

TEST(Correlators, Examples) {
  const cplx a1{0.4, 0.2}, a2{-0.3, 0.5};
  auto prod = lab(product(field::Coherent{a1}, field::Coherent{a2}), 16);
  EXPECT_NEAR(prod.measure(req(Observable::A)).extracted, 2 * (std::conj(a1) * a2).real(), 1e-8);

  auto split = lab(field::SplitPhoton{0.0}, 4);
  EXPECT_NEAR(split.measure(req(Observable::A, 0.3, 0.3)).extracted, 1.0, 1e-8);

  auto numbers = lab(product(field::Fock{1}, field::Fock{2}), 5);
  EXPECT_NEAR(numbers.measure(req(Observable::A, 0.2, 0.9)).extracted, 0.0, 1e-12);
  EXPECT_NEAR(numbers.measure(req(Observable::B, 0.2, 0.9)).extracted, 0.0, 1e-12);

  auto tmsv = lab(field::TwoModeSqueezedVacuum{0.5}, 24);
  const auto b = tmsv.measure(req(Observable::B));
  EXPECT_LE(*b.gap(), 1e-6);

  auto vac2 = lab(product(field::Fock{0}, field::Fock{0}), 6);
  EXPECT_NEAR(vac2.measure(req(Observable::B)).extracted, 0.0, 1e-12);
}

TEST(TwoMode, SecondMoments) {
  auto vac = lab(product(field::Fock{0}, field::Fock{0}), 8);
  EXPECT_NEAR(vac.measure(req(Observable::X2TwoMode)).extracted, 0.5, 1e-9);
  EXPECT_NEAR(vac.measure(req(Observable::Y2TwoMode)).extracted, 0.5, 1e-9);

  auto prod = lab(product(field::Coherent{{0.5, 0.2}}, field::Coherent{{-0.1, 0.4}}), 16);
  for (Observable o : {Observable::X2TwoMode, Observable::Y2TwoMode}) {
    EXPECT_LE(*prod.measure(req(o, 0.3, -0.6)).gap(), 1e-6);
  }

  auto tmsv = lab(field::TwoModeSqueezedVacuum{0.5}, 24);
  const double sum = tmsv.measure(req(Observable::X2TwoMode, 0.2, 0.1)).extracted +
                     tmsv.measure(req(Observable::Y2TwoMode, 0.2, 0.1)).extracted;
  // X^2 + Y^2 summed over both modes is 1 + n1 + n2 = 1 + 2 sinh^2 r.
  EXPECT_NEAR(sum, 1.0 + 2.0 * std::pow(std::sinh(0.5), 2), 1e-6);
}

TEST(TwoMode, MissingComponent) {
  TwoModeMoments m;
  try {
    two_mode_second_moments(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingComponent);
  }
  EXPECT_THROW(duan_check(1.0, -1, 1, m), Error);
}

TEST(Duan, Examples) {
  auto prod = lab(product(field::Coherent{0.5}, field::Coherent{{0.2, -0.3}}), 16);
  auto r = req(Observable::DuanSum);
  r.sign1 = 1;
  r.sign2 = 1;
  const auto p = prod.duan(r);
  EXPECT_NEAR(p.sum, 2.0, 1e-6);
  EXPECT_FALSE(p.violates);

  auto tmsv = lab(field::TwoModeSqueezedVacuum{0.5}, 24);
  const auto t = tmsv.duan(req(Observable::DuanSum));
  EXPECT_NEAR(t.sum, 2.0 * std::exp(-1.0), 1e-3);
  EXPECT_TRUE(t.violates);
  EXPECT_DOUBLE_EQ(t.bound, 2.0);

  auto vac = lab(product(field::Fock{0}, field::Fock{0}), 8);
  const auto v = vac.duan(req(Observable::DuanSum));
  EXPECT_NEAR(v.sum, 2.0, 1e-9);
  EXPECT_FALSE(v.violates);

  auto scaled = req(Observable::DuanSum);
  scaled.a0 = 2.0;
  const auto s = vac.duan(scaled);
  EXPECT_NEAR(s.sum, 4.25, 1e-9);
  EXPECT_DOUBLE_EQ(s.bound, 4.25);
}

TEST(OracleGap, BoundedByErrorEstimateOnWellTruncatedStates) {
  struct Case {
    FieldStateSpec spec;
    int n;
    std::vector<Observable> obs;
  };
  const std::vector<Case> cases = {
      {field::Coherent{{0.5, 0.5}}, 40, {Observable::X, Observable::Y, Observable::N, Observable::X2, Observable::VarY}},
      {field::SqueezedVacuum{0.25, 0.0}, 40, {Observable::X2, Observable::Y2, Observable::VarX}},
      {field::Cat{1.0, 0.0}, 40, {Observable::N, Observable::X2, Observable::Y2}},
      {field::Thermal{0.3}, 60, {Observable::N, Observable::X2}},
      {field::SplitPhoton{0.4}, 4, {Observable::A, Observable::B, Observable::X2TwoMode}},
  };
  for (const auto& c : cases) {
    auto l = lab(c.spec, c.n);
    for (Observable o : c.obs) {
      SCOPED_TRACE(describe(c.spec));
      expect_oracle_gap_bounded(l.measure(req(o, 0.3, 0.1)));
      auto ta = two_atom(o, 0.3);
      if (o == Observable::X2 || o == Observable::Y2) {
        expect_oracle_gap_bounded(l.measure(ta));
      }
    }
  }
}

TEST(Extraction, ShapeMismatchAndNames) {
  auto single = lab(field::Coherent{0.5}, 20);
  EXPECT_THROW(single.measure(req(Observable::A)), Error);
  auto r = req(Observable::X);
  r.mode = 1;
  EXPECT_THROW(single.measure(r), Error);
  for (Observable o : {Observable::X, Observable::N, Observable::VarY, Observable::B, Observable::DuanSum}) {
    EXPECT_EQ(parse_observable(to_string(o)), o);
  }
  EXPECT_TRUE(is_two_mode(Observable::A));
  EXPECT_FALSE(is_two_mode(Observable::X2));
}

TEST(Extraction, VarianceRequiresSquaredQuadrature) {
  MomentResult a, b;
  a.observable = Observable::N;
  EXPECT_THROW(variance(a, b), Error);
}

TEST(EstimatorConsistency, AllMethodsAgreeOnExtractionFormulas) {
  EstimatorConfig fd = EstimatorConfig::noiseless();
  fd.method = Method::CentralFd;
  fd.step = 1e-3;
  EstimatorConfig pf = EstimatorConfig::noiseless();
  pf.method = Method::Polyfit;
  pf.poly_degree = 5;
  pf.poly_window = 0.1;
  EstimatorConfig ki = EstimatorConfig::noiseless();
  ki.method = Method::KernelIntegral;
  ki.kernel_width = 0.05;
  ki.kernel_halvings = 3;
  // A degree-5 fit leaves the tau^6 term in the curvature (about 1e-5 here);
  // second-order formulas use the next even degree.
  EstimatorConfig pf_even = pf;
  pf_even.poly_degree = 6;

  auto l = lab(field::Coherent{{0.5, 0.3}}, 40);
  const Observable first[] = {Observable::X, Observable::Y};
  const Observable second[] = {Observable::N, Observable::X2, Observable::Y2};
  auto check = [&](std::span<const Observable> obs, std::initializer_list<EstimatorConfig> configs) {
    l.set_estimator(EstimatorConfig::noiseless());
    std::vector<double> reference;
    for (Observable o : obs) reference.push_back(l.measure(req(o, 0.4)).extracted);
    for (const auto& cfg : configs) {
      l.set_estimator(cfg);
      for (std::size_t i = 0; i < obs.size(); ++i) {
        EXPECT_NEAR(l.measure(req(obs[i], 0.4)).extracted, reference[i], 1e-6)
            << to_string(cfg.method) << " degree " << cfg.poly_degree << " " << to_string(obs[i]);
      }
    }
  };
  check(first, {fd, pf, ki});
  check(second, {fd, pf_even, ki});
}
