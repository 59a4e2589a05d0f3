#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <qprobe/error.hpp>
#include <qprobe/oracle.hpp>
#include <qprobe/states.hpp>

#include "reference.hpp"

using namespace qprobe;
using std::numbers::pi;

namespace {

DensityOperator random_field(int n, unsigned seed) {
  return DensityOperator(Operator(HilbertSpace({n}), ref::random_density(n, seed, 0.15)));
}

DensityOperator random_two_mode(int n, unsigned seed) {
  return DensityOperator(Operator(HilbertSpace({n, n}), ref::random_density(n * n, seed, 0.1)));
}

ObservableSpec spec(Observable o, double phi1 = 0.0, double phi2 = 0.0) {
  ObservableSpec s;
  s.observable = o;
  s.phi1 = phi1;
  s.phi2 = phi2;
  return s;
}

constexpr Observable kSingle[] = {Observable::X,  Observable::Y,    Observable::N,   Observable::X2,
                                  Observable::Y2, Observable::VarX, Observable::VarY};
constexpr Observable kTwo[] = {Observable::A,    Observable::B,    Observable::X2TwoMode, Observable::Y2TwoMode,
                               Observable::VarU, Observable::VarV, Observable::DuanSum};

}  // namespace

TEST(Oracle, TraceAndSeriesAgreeOnRandomStates) {
  for (unsigned seed = 1; seed <= 10; ++seed) {
    const auto rho = random_field(30, seed);
    for (Observable o : kSingle) {
      for (double phi : {0.0, 0.37, -2.2}) {
        EXPECT_NEAR(direct_moment(rho, spec(o, phi)), series_moment(rho, spec(o, phi)), 1e-10)
            << to_string(o) << " seed " << seed;
      }
    }
  }
}

TEST(Oracle, TwoModeTraceAndSeriesAgree) {
  for (unsigned seed = 1; seed <= 4; ++seed) {
    const auto rho = random_two_mode(6, seed);
    for (Observable o : kTwo) {
      auto s = spec(o, 0.4, -1.1);
      s.a0 = 1.3;
      EXPECT_NEAR(direct_moment(rho, s), series_moment(rho, s), 1e-10) << to_string(o);
    }
    for (int mode : {0, 1}) {
      auto s = spec(Observable::X2, 0.8);
      s.mode = mode;
      EXPECT_NEAR(direct_moment(rho, s), series_moment(rho, s), 1e-10);
    }
  }
}

TEST(Oracle, MatchesIndependentReference) {
  const int n = 12;
  const ref::Mat m = ref::random_density(n, 77, 0.2);
  const DensityOperator rho(Operator(HilbertSpace({n}), m));
  for (double phi : {0.0, 1.0}) {
    EXPECT_NEAR(direct_moment(rho, spec(Observable::X, phi)), ref::expect(m, ref::quad_x(n, phi)), 1e-12);
    EXPECT_NEAR(direct_moment(rho, spec(Observable::Y, phi)), ref::expect(m, ref::quad_y(n, phi)), 1e-12);
  }
}

TEST(Oracle, CoherentExamples) {
  const auto f = build_field(field::Coherent{1.0}, 40);
  EXPECT_NEAR(direct_moment(f.rho, spec(Observable::X)), 1.0, 1e-10);
  EXPECT_NEAR(direct_moment(f.rho, spec(Observable::N)), 1.0, 1e-10);
  EXPECT_NEAR(direct_moment(f.rho, spec(Observable::X2)), 1.25, 1e-10);
  EXPECT_NEAR(direct_moment(f.rho, spec(Observable::Y)), 0.0, 1e-12);
}

TEST(Oracle, FockAndVacuum) {
  const auto f = build_field(field::Fock{2}, 10);
  EXPECT_NEAR(direct_moment(f.rho, spec(Observable::N)), 2.0, 1e-14);
  const auto v = build_field(field::Fock{0}, 10);
  for (double phi : {0.0, 0.5, 2.0, -1.0}) {
    EXPECT_NEAR(direct_moment(f.rho, spec(Observable::X, phi)), 0.0, 1e-14);
    EXPECT_NEAR(series_moment(v.rho, spec(Observable::X, phi)), 0.0, 1e-14);
    EXPECT_NEAR(series_moment(v.rho, spec(Observable::Y, phi)), 0.0, 1e-14);
  }
}

TEST(Oracle, ThermalSquaredQuadrature) {
  for (double nbar : {0.06, 0.85, 2.0}) {
    const auto f = build_field(field::Thermal{nbar}, 60);
    const double n = direct_moment(f.rho, spec(Observable::N));
    for (double phi : {0.0, 0.9}) {
      EXPECT_NEAR(direct_moment(f.rho, spec(Observable::X2, phi)), 0.25 + n / 2, 1e-12);
      EXPECT_NEAR(series_moment(f.rho, spec(Observable::X2, phi)), 0.25 + n / 2, 1e-12);
    }
  }
}

TEST(Oracle, CatSeriesMatchesTrace) {
  const auto f = build_field(field::Cat{1.0, 0.0}, 40);
  EXPECT_NEAR(series_moment(f.rho, spec(Observable::X2)), direct_moment(f.rho, spec(Observable::X2)), 1e-10);
}

TEST(Oracle, QuadratureIdentityAndPhaseShift) {
  for (unsigned seed = 11; seed <= 15; ++seed) {
    const auto rho = random_field(30, seed);
    const double n = direct_moment(rho, spec(Observable::N));
    for (double phi : {0.0, 0.6, 2.5}) {
      EXPECT_NEAR(direct_moment(rho, spec(Observable::X2, phi)) + direct_moment(rho, spec(Observable::Y2, phi)), 0.5 + n,
                  1e-10);
      EXPECT_NEAR(direct_moment(rho, spec(Observable::X, phi + pi)), -direct_moment(rho, spec(Observable::X, phi)), 1e-12);
    }
  }
}

TEST(Oracle, ShapeMismatch) {
  const auto single = build_field(field::Fock{0}, 5);
  const auto pair = build_field(product(field::Fock{0}, field::Fock{1}), 5);
  for (auto fn : {&direct_moment, &series_moment}) {
    try {
      fn(single.rho, spec(Observable::A));
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
    }
    auto s = spec(Observable::X);
    s.mode = 2;
    EXPECT_THROW(fn(pair.rho, s), Error);
  }
}
