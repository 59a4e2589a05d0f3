// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <qprobe/evolution.hpp>
#include <qprobe/protocols.hpp>

#include "reference.hpp"
#include "runner.hpp"
#include "scenario.hpp"

namespace fs = std::filesystem;
using namespace qprobe;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects sub-check results for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      if (failures_++ < 4) fails_ << (fails_.tellp() > 0 ? "; " : "") << what;
    }
  }
  void note(const std::string& s) { notes_ << (notes_.tellp() > 0 ? ", " : "") << s; }
  Outcome done() const {
    std::string d = notes_.str();
    if (!pass_) d += (d.empty() ? "" : " | ") + std::string("failed: ") + fails_.str();
    return {pass_, d};
  }

 private:
  bool pass_ = true;
  int failures_ = 0;
  std::ostringstream fails_, notes_;
};

std::string fmt(double x, const char* spec = "%.3g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Laboratory noiseless_lab(const FieldStateSpec& spec, int n, double leakage_tol = kDefaultLeakageTol) {
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

Outcome analytic_matches_unitary() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const int n = 40;
  const auto grid = linspace(-2 * pi, 2 * pi, 200);
  double worst = 0.0;
  for (unsigned seed = 1; seed <= 10; ++seed) {
    const DensityOperator rho(Operator(HilbertSpace({n}), ref::random_density(n, 1000 + seed, 0.1)));
    const double phi = 0.37 * seed;
    const auto analytic = analytic_pe_plusphi(rho, phi, grid);
    const auto joint = compose(build_probe(probe::PlusPhi{phi}), rho);
    const auto numeric = population_series(joint, build_interaction(Interaction::JC1, joint.space()),
                                           build_projector(Projector::Excited, joint.space()), grid);
    for (std::size_t i = 0; i < grid.size(); ++i) worst = std::max(worst, std::abs(analytic.values[i] - numeric.values[i]));
  }
  const double elapsed = seconds_since(t0);
  c.expect(worst <= 1e-10, "max deviation " + fmt(worst));
  c.expect(elapsed < 30.0, "runtime " + fmt(elapsed) + " s");
  c.note("max |series - unitary| " + fmt(worst) + " over 10 states x 200 points, " + fmt(elapsed, "%.2f") + " s");
  return c.done();
}

Outcome first_moments() {
  Check c;
  double worst = 0.0;
  for (cplx alpha : {cplx(0.3, 0.0), cplx(0.5, 0.5), cplx(1.0, 0.0), cplx(0.0, 1.8)}) {
    auto lab = noiseless_lab(field::Coherent{alpha}, 40);
    const auto x = lab.measure(req(Observable::X));
    const auto y = lab.measure(req(Observable::Y));
    for (const auto* r : {&x, &y}) {
      worst = std::max(worst, *r->gap());
      c.expect(*r->gap() <= 1e-8, std::string(to_string(r->observable)) + " gap " + fmt(*r->gap()));
    }
    c.expect(std::abs(*x.oracle - alpha.real()) < 1e-9 && std::abs(*y.oracle - alpha.imag()) < 1e-9,
             "oracle disagrees with alpha");
  }
  c.note("max gap " + fmt(worst) + " (tol 1e-8)");
  return c.done();
}

Outcome thermal_photon_number() {
  Check c;
  for (double nbar : {0.06, 0.85, 1.5, 2.9}) {
    auto lab = noiseless_lab(field::Thermal{nbar}, 60, 1e-6);
    const auto r = lab.measure(req(Observable::N));
    const double err = std::abs(r.extracted - nbar);
    c.expect(err <= 1e-3, "nbar " + fmt(nbar) + " error " + fmt(err));
    c.note(fmt(nbar) + " -> " + fmt(r.extracted, "%.6f"));
  }
  return c.done();
}

Outcome squeezing() {
  Check c;
  for (double r : {0.25, 0.5, 1.0}) {
    auto lab = noiseless_lab(field::SqueezedVacuum{r, 0.0}, 60, 1e-7);
    const auto vx = lab.measure(req(Observable::VarX));
    const auto vy = lab.measure(req(Observable::VarY));
    c.expect(*vx.gap() <= 1e-5 && *vy.gap() <= 1e-5, "r=" + fmt(r) + " gaps " + fmt(*vx.gap()) + ", " + fmt(*vy.gap()));
    c.expect(vx.extracted * vy.extracted >= 1.0 / 16 - 1e-6, "uncertainty violated at r=" + fmt(r));
    const double ideal = std::max(std::abs(vx.extracted - std::exp(-2 * r) / 4), std::abs(vy.extracted - std::exp(2 * r) / 4));
    c.note("r=" + fmt(r) + " VarX " + fmt(vx.extracted, "%.6f") + " VarY " + fmt(vy.extracted, "%.6f") +
           " (|dev from ideal| " + fmt(ideal) + ")");
  }
  return c.done();
}

Outcome cross_protocol() {
  Check c;
  double worst = 0.0;
  for (const FieldStateSpec& spec : {FieldStateSpec{field::Cat{1.0, 0.0}}, FieldStateSpec{field::SqueezedVacuum{0.5, 0.0}}}) {
    auto lab = noiseless_lab(spec, 40);
    for (double phi : {0.0, pi / 8, pi / 4, 3 * pi / 8}) {
      auto ta = req(Observable::X2, phi);
      ta.protocol = SecondMomentProtocol::TwoAtom;
      const double d = std::abs(lab.measure(req(Observable::X2, phi)).extracted - lab.measure(ta).extracted);
      worst = std::max(worst, d);
      c.expect(d <= 1e-6, describe(spec) + " phi " + fmt(phi) + " diff " + fmt(d));
    }
  }
  c.note("max |two-atom - two-photon| " + fmt(worst));
  return c.done();
}

double correlator_slope(Interaction k, double phase, const DensityOperator& rho_f) {
  auto sig = [&](const ProbeStateSpec& p) {
    const auto joint = compose(build_probe(p), rho_f);
    PopulationModel m(std::make_shared<const Propagator>(build_interaction(k, joint.space())), joint,
                      build_projector(Projector::Excited, joint.space()));
    return Signal(Evaluable([m](double t) { return m(t); }));
  };
  return derivative_at_zero(Signal::difference(sig(probe::PlusPhi{phase}), sig(probe::MinusPhi{phase})), 1,
                            EstimatorConfig::noiseless())
      .value;
}

Outcome correlators() {
  Check c;
  auto split = noiseless_lab(field::SplitPhoton{0.0}, 4);
  const auto a = split.measure(req(Observable::A));
  c.expect(std::abs(a.extracted - 1.0) <= 1e-6, "<A> = " + fmt(a.extracted, "%.9f"));

  auto tmsv = noiseless_lab(field::TwoModeSqueezedVacuum{0.5}, 24);
  const auto b = tmsv.measure(req(Observable::B));
  c.expect(*b.gap() <= 1e-6, "<B> gap " + fmt(*b.gap()));

  const auto& rho = tmsv.field().rho;
  const double cb = calibrate_correlator_prefactor(correlator_slope(Interaction::ModeSqueezeB, b_probe_phase(0, 0), rho),
                                                   direct_moment(rho, {Observable::B}));
  c.expect(std::abs(cb - kCorrelatorPrefactorB) <= 1e-6, "recalibrated c_B " + fmt(cb));
  const double ca = calibrate_correlator_prefactor(
      correlator_slope(Interaction::ModeExchangeA, a_probe_phase(0, 0), split.field().rho), 1.0);
  c.expect(std::abs(ca - kCorrelatorPrefactorA) <= 1e-6, "recalibrated c_A " + fmt(ca));
  c.note("<A> " + fmt(a.extracted, "%.9f") + ", <B> " + fmt(b.extracted, "%.7f") + " vs oracle " + fmt(*b.oracle, "%.7f") +
         ", c_A " + fmt(ca, "%.6f") + ", c_B " + fmt(cb, "%.6f"));
  return c.done();
}

Outcome duan() {
  Check c;
  auto prod = noiseless_lab(product(field::Coherent{{0.5, 0.2}}, field::Coherent{{-0.3, 0.4}}), 16);
  const auto p = prod.duan(req(Observable::DuanSum));
  c.expect(std::abs(p.sum - 2.0) <= 1e-6 && !p.violates, "product sum " + fmt(p.sum, "%.9f"));
  auto tmsv = noiseless_lab(field::TwoModeSqueezedVacuum{0.5}, 24);
  const auto t = tmsv.duan(req(Observable::DuanSum));
  c.expect(std::abs(t.sum - 2 * std::exp(-1.0)) <= 1e-3 && t.violates, "TMSV sum " + fmt(t.sum, "%.6f"));
  c.note("product " + fmt(p.sum, "%.9f") + ", TMSV(0.5) " + fmt(t.sum, "%.6f") + (t.violates ? " (violates)" : ""));
  return c.done();
}

Outcome kernel_convergence() {
  Check c;
  const auto field = build_field(field::Coherent{{0.5, 0.5}}, 40);
  const double phi = y_probe_phase(0.0);
  const Signal s(Evaluable([&](double t) { return analytic_pe_plusphi(field.rho, phi, {t}).values[0]; }));
  const double reference = derivative_at_zero(s, 1, EstimatorConfig::noiseless()).value;
  std::vector<double> lx, ly;
  for (double sigma : {0.2, 0.1, 0.05, 0.025}) {
    EstimatorConfig k = EstimatorConfig::noiseless();
    k.method = Method::KernelIntegral;
    k.kernel_width = sigma;
    k.kernel_halvings = 0;
    const double err = std::abs(derivative_at_zero(s, 1, k).value - reference);
    lx.push_back(std::log(sigma));
    ly.push_back(std::log(err));
    c.note("sigma " + fmt(sigma) + " err " + fmt(err));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i] / lx.size(), my += ly[i] / ly.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
  const double slope = sxy / sxx;
  c.expect(std::abs(slope - 2.0) <= 0.3, "slope " + fmt(slope));
  c.note("slope " + fmt(slope, "%.3f"));
  return c.done();
}

Outcome shot_noise() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  for (double nbar : {0.5, 1.5, 3.0}) {
    const auto field = build_field(field::Thermal{nbar}, 60, 1e-6);
    int ok = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      LabOptions o;
      o.estimator = EstimatorConfig::sampled(10000);
      o.grid = linspace(-0.5, 0.5, 101);
      o.shots = ShotSpec{10000, seed};
      Laboratory lab(field, o);
      const double rel = std::abs(lab.measure(req(Observable::N)).extracted - nbar) / nbar;
      worst = std::max(worst, rel);
      ok += rel <= 0.10;
    }
    c.expect(ok >= 18, "nbar " + fmt(nbar) + ": " + std::to_string(ok) + "/20");
    c.note("nbar " + fmt(nbar) + " " + std::to_string(ok) + "/20 (worst " + fmt(100 * worst, "%.1f") + "%)");
  }
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 120.0, "runtime " + fmt(elapsed) + " s");
  c.note(fmt(elapsed, "%.1f") + " s");
  return c.done();
}

Outcome decoherence_window() {
  Check c;
  LabOptions o;
  o.grid = linspace(0.0, 0.5, 101);
  o.lindblad = LindbladSpec{0.05, 0.0, 0.0};
  o.estimator = EstimatorConfig::noiseless();
  o.estimator.method = Method::Polyfit;
  Laboratory lab(build_field(field::Thermal{1.0}, 30), o);
  double err[2];
  const double windows[] = {0.05, 0.5};
  for (int i = 0; i < 2; ++i) {
    auto e = o.estimator;
    e.poly_window = windows[i];
    lab.set_estimator(e);
    err[i] = std::abs(lab.measure(req(Observable::N)).extracted - 1.0);
  }
  c.expect(err[0] < err[1], "narrow " + fmt(err[0]) + " >= wide " + fmt(err[1]));
  c.note("|err| narrow(w=0.05) " + fmt(err[0]) + " < wide(w=0.5) " + fmt(err[1]));
  return c.done();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  Check c;
  const fs::path root = fs::temp_directory_path() / "qprobe-acceptance";
  fs::remove_all(root);
  int count = 0;
  for (const auto& entry : fs::directory_iterator(QPROBE_SOURCE_SCENARIOS)) {
    if (entry.path().extension() != ".yaml") continue;
    const auto s = scenario::load(entry.path());
    std::string bodies[2];
    for (int k = 0; k < 2; ++k) {
      scenario::RunOptions o;
      o.out = root / std::to_string(k);
      o.jobs = 1 + k;
      const auto rep = scenario::run(s, o);
      c.expect(rep.exit_code == scenario::kExitOk, s.name + " exit " + std::to_string(rep.exit_code));
      const auto doc = nlohmann::json::parse(slurp(rep.directory / "results.json"));
      bodies[k] = doc.at("body").dump();
    }
    c.expect(bodies[0] == bodies[1], s.name + " results differ");
    for (const auto& f : fs::directory_iterator(root / "0" / s.name / "series")) {
      c.expect(slurp(f.path()) == slurp(root / "1" / s.name / "series" / f.path().filename()),
               s.name + "/" + f.path().filename().string() + " differs");
    }
    ++count;
  }
  fs::remove_all(root);
  c.expect(count > 0, "no bundled scenarios found");
  c.note(std::to_string(count) + " bundled scenarios, results.json bodies and series CSVs identical");
  return c.done();
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> criteria = {
      {"analytic series equals unitary evolution", analytic_matches_unitary},
      {"first moments of coherent states", first_moments},
      {"photon number of thermal states", thermal_photon_number},
      {"squeezed-vacuum variances", squeezing},
      {"two-atom vs two-photon second moments", cross_protocol},
      {"two-mode correlators A and B", correlators},
      {"Duan separability sum", duan},
      {"kernel-integral O(sigma^2) convergence", kernel_convergence},
      {"shot-noise robustness of <n>", shot_noise},
      {"narrow window beats wide under decay", decoherence_window},
      {"deterministic scenario runs", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %2zu  %-42s %s  [%.2fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
