#include <benchmark/benchmark.h>

#include <memory>

#include <qprobe/evolution.hpp>
#include <qprobe/protocols.hpp>
#include <qprobe/sampling.hpp>

using namespace qprobe;

namespace {

void BM_EigJC1(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto h = build_interaction(Interaction::JC1, HilbertSpace::qubits_and_modes(1, 1, n));
  for (auto _ : state) benchmark::DoNotOptimize(eig_hermitian(h));
}
BENCHMARK(BM_EigJC1)->Arg(20)->Arg(40)->Arg(80)->Unit(benchmark::kMicrosecond);

void BM_EigModeSqueezeB(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto h = build_interaction(Interaction::ModeSqueezeB, HilbertSpace::qubits_and_modes(1, 2, n));
  for (auto _ : state) benchmark::DoNotOptimize(eig_hermitian(h));
}
BENCHMARK(BM_EigModeSqueezeB)->Arg(8)->Arg(16)->Arg(24)->Unit(benchmark::kMillisecond);

void BM_PopulationSeries(benchmark::State& state) {
  const int n = 40;
  const auto field = build_field(field::Thermal{1.0}, n);
  const auto rho0 = compose(build_probe(probe::PlusPhi{0.3}), field.rho);
  auto prop = std::make_shared<const Propagator>(build_interaction(Interaction::JC1, rho0.space()));
  const auto proj = build_projector(Projector::Excited, rho0.space());
  const auto grid = linspace(-0.5, 0.5, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(population_series(prop, rho0, proj, grid));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PopulationSeries)->Arg(101)->Arg(401)->Unit(benchmark::kMillisecond);

void BM_AnalyticSeries(benchmark::State& state) {
  const auto field = build_field(field::Coherent{{0.5, 0.5}}, 40);
  const auto grid = linspace(-6.0, 6.0, 200);
  for (auto _ : state) benchmark::DoNotOptimize(analytic_pe_plusphi(field.rho, 0.0, grid));
}
BENCHMARK(BM_AnalyticSeries)->Unit(benchmark::kMicrosecond);

void BM_MeasureSecondMoments(benchmark::State& state) {
  const auto field = build_field(field::SqueezedVacuum{0.5, 0.0}, 60);
  MeasurementRequest r;
  r.observable = Observable::VarX;
  for (auto _ : state) {
    LabOptions o;
    o.estimator = EstimatorConfig::noiseless();
    Laboratory lab(field, o);
    benchmark::DoNotOptimize(lab.measure(r));
  }
}
BENCHMARK(BM_MeasureSecondMoments)->Unit(benchmark::kMillisecond);

void BM_DuanTmsv(benchmark::State& state) {
  const auto field = build_field(field::TwoModeSqueezedVacuum{0.5}, static_cast<int>(state.range(0)));
  MeasurementRequest r;
  r.observable = Observable::DuanSum;
  for (auto _ : state) {
    LabOptions o;
    o.estimator = EstimatorConfig::noiseless();
    Laboratory lab(field, o);
    benchmark::DoNotOptimize(lab.duan(r));
  }
}
BENCHMARK(BM_DuanTmsv)->Arg(12)->Arg(24)->Unit(benchmark::kMillisecond);

void BM_SampledPolyfit(benchmark::State& state) {
  const auto field = build_field(field::Thermal{1.5}, 60);
  MeasurementRequest r;
  r.observable = Observable::N;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    LabOptions o;
    o.estimator = EstimatorConfig::sampled(10000);
    o.grid = linspace(-0.5, 0.5, 101);
    o.shots = ShotSpec{10000, ++seed};
    Laboratory lab(field, o);
    benchmark::DoNotOptimize(lab.measure(r));
  }
}
BENCHMARK(BM_SampledPolyfit)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
