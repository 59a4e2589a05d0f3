#include <gtest/gtest.h>

#include <numbers>
#include <sstream>

#include <qprobe/error.hpp>
#include <qprobe/states.hpp>

#include "reference.hpp"

using namespace qprobe;
using std::numbers::pi;

namespace {

double mean_n(const DensityOperator& rho) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(rho.dim()); ++k) s += k * rho(k, k).real();
  return s;
}

void expect_valid(const DensityOperator& rho) {
  const ref::Mat& m = rho.matrix();
  EXPECT_NEAR(m.trace().real(), 1.0, 1e-10);
  EXPECT_LT((m - m.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
  Eigen::SelfAdjointEigenSolver<ref::Mat> es(m);
  EXPECT_GT(es.eigenvalues().minCoeff(), -1e-10);
}

}  // namespace

TEST(Field, Vacuum) {
  const auto f = build_field(field::Fock{0}, 8);
  EXPECT_NEAR(f.rho(0, 0).real(), 1.0, 1e-15);
  EXPECT_NEAR(mean_n(f.rho), 0.0, 1e-15);
}

TEST(Field, FockOutsideTruncation) {
  EXPECT_THROW(build_field(field::Fock{8}, 8), Error);
}

TEST(Field, ThermalMeanAndDiagonal) {
  const auto f = build_field(field::Thermal{0.85}, 40);
  EXPECT_NEAR(mean_n(f.rho), 0.85, 1e-6);
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 40; ++j) {
      if (i != j) {
        EXPECT_EQ(f.rho(i, j), cplx(0.0, 0.0));
      }
    }
  }
  const ref::Mat want = ref::thermal(0.85, 40);
  EXPECT_LT((f.rho.matrix() - want).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Field, CoherentCoefficients) {
  const auto f = build_field(field::Coherent{1.0}, 40);
  // c_0 c_1^* = e^{-1/2} e^{-1/2} alpha
  EXPECT_NEAR(f.rho(0, 1).real(), std::exp(-1.0), 1e-12);
  EXPECT_NEAR(std::sqrt(f.rho(1, 1).real()), 0.6065306597, 1e-9);
  const ref::Vec c = ref::coherent({0.3, -0.8}, 40);
  const auto g = build_field(field::Coherent{{0.3, -0.8}}, 40);
  EXPECT_LT((g.rho.matrix() - ref::pure(c)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Field, CoherentMeanPhotonNumberProperty) {
  for (cplx alpha : {cplx(0.5, 0.0), cplx(1.0, 1.0), cplx(0.0, 2.0), cplx(-1.5, 0.7)}) {
    const double a = std::abs(alpha);
    const int n = static_cast<int>(std::ceil(a * a + 6 * a + 10));
    const auto f = build_field(field::Coherent{alpha}, n);
    EXPECT_NEAR(mean_n(f.rho), a * a, 10 * kDefaultLeakageTol + 1e-12) << alpha;
    expect_valid(f.rho);
  }
}

TEST(Field, TruncationLeakIsReported) {
  try {
    build_field(field::Coherent{3.0}, 10);
    FAIL() << "expected TruncationLeak";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TruncationLeak);
  }
  const auto loose = build_field(field::Coherent{3.0}, 10, 0.5);
  EXPECT_GT(loose.leakage, 1e-3);
  EXPECT_NEAR(loose.rho.matrix().trace().real(), 1.0, 1e-12);
}

TEST(Field, SqueezedVacuumAmplitudes) {
  // Even amplitudes (-e^{i theta} tanh r)^m sqrt((2m)!)/(2^m m!) / sqrt(cosh r).
  const double r = 0.5, theta = 0.4;
  const int n = 40;
  ref::Vec c = ref::Vec::Zero(n);
  for (int m = 0; 2 * m < n; ++m) {
    double ratio = 1.0;  // sqrt((2m)!)/(2^m m!)
    for (int k = 1; k <= m; ++k) ratio *= std::sqrt((2.0 * k - 1.0) * (2.0 * k)) / (2.0 * k);
    c(2 * m) = std::pow(-std::exp(ref::I * theta) * std::tanh(r), m) * ratio / std::sqrt(std::cosh(r));
  }
  const auto f = build_field(field::SqueezedVacuum{r, theta}, n);
  EXPECT_LT((f.rho.matrix() - ref::pure(c)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(mean_n(f.rho), std::sinh(r) * std::sinh(r), 1e-10);
}

TEST(Field, CatParityStructure) {
  const auto even = build_field(field::Cat{1.0, 0.0}, 30);
  const auto odd = build_field(field::Cat{1.0, pi}, 30);
  for (int k = 0; k < 30; ++k) {
    const auto& zero = k % 2 ? even : odd;
    EXPECT_NEAR(std::abs(zero.rho(k, k)), 0.0, 1e-15);
  }
  // Even cat: <n> = |alpha|^2 tanh |alpha|^2.
  EXPECT_NEAR(mean_n(even.rho), std::tanh(1.0), 1e-10);
  EXPECT_NEAR(mean_n(odd.rho), 1.0 / std::tanh(1.0), 1e-10);
}

TEST(Field, TwoModeSqueezedVacuum) {
  const double r = 0.5;
  const int n = 20;
  const auto f = build_field(field::TwoModeSqueezedVacuum{r}, n);
  EXPECT_EQ(f.modes, 2);
  expect_valid(f.rho);
  // Schmidt coefficients: amplitudes on |k,k> proportional to tanh^k r.
  for (int k = 0; k + 1 < 6; ++k) {
    const double ratio = std::abs(f.rho(k * n + k, 0)) / std::abs(f.rho((k + 1) * n + k + 1, 0));
    EXPECT_NEAR(ratio, 1.0 / std::tanh(r), 1e-10);
  }
  for (int keep : {0, 1}) {
    const int k[] = {keep};
    const auto reduced = partial_trace(f.rho, k);
    EXPECT_LT((reduced.matrix() - ref::thermal(std::sinh(r) * std::sinh(r), n)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Field, SplitPhotonAndProduct) {
  const auto s = build_field(field::SplitPhoton{0.0}, 3);
  EXPECT_NEAR(s.rho(1, 1).real(), 0.5, 1e-15);      // |0,1>
  EXPECT_NEAR(s.rho(3, 3).real(), 0.5, 1e-15);      // |1,0>
  EXPECT_NEAR(s.rho(1, 3).real(), 0.5, 1e-15);

  const auto p = build_field(product(field::Fock{1}, field::Thermal{0.3}), 6);
  EXPECT_EQ(p.modes, 2);
  const int first[] = {0};
  const auto r0 = partial_trace(p.rho, first);
  EXPECT_NEAR(r0(1, 1).real(), 1.0, 1e-14);
  EXPECT_THROW(build_field(product(field::TwoModeSqueezedVacuum{0.1}, field::Fock{0}), 6), Error);
}

TEST(Field, RawMatrixRoundTrip) {
  std::istringstream in(
      "# two-level mixture\n"
      "0 0 0.75 0\n"
      "1 1 0.25 0\n"
      "0 1 0.1 0.2\n"
      "1 0 0.1 -0.2\n");
  auto raw = parse_raw_matrix(in, 3, 1);
  const auto f = build_field(raw, 3);
  EXPECT_NEAR(f.rho(0, 1).imag(), 0.2, 1e-15);
  EXPECT_NEAR(f.rho(2, 2).real(), 0.0, 1e-15);

  std::istringstream bad("0 0 1.0\n");
  try {
    parse_raw_matrix(bad, 3, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
  std::istringstream out_of_range("5 0 1 0\n");
  EXPECT_THROW(parse_raw_matrix(out_of_range, 3, 1), Error);
  EXPECT_THROW(build_field(raw, 4), Error);  // dimension mismatch
}

TEST(Field, BadParameters) {
  EXPECT_THROW(build_field(field::Thermal{-0.1}, 10), Error);
  EXPECT_THROW(build_field(field::Thermal{0.1}, 1), Error);
  EXPECT_THROW(build_field(field::Coherent{{std::nan(""), 0.0}}, 10), Error);
}

TEST(Probe, PlusPhiZero) {
  const auto p = build_probe(probe::PlusPhi{0.0});
  EXPECT_LT((p.matrix() - ref::Mat::Constant(2, 2, 0.5)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Probe, MinusEqualsShiftedPlus) {
  for (double phi : {0.0, 0.3, -2.0}) {
    const auto m = build_probe(probe::MinusPhi{phi});
    const auto p = build_probe(probe::PlusPhi{phi + pi});
    EXPECT_LT((m.matrix() - p.matrix()).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Probe, PsiPlusAndBell) {
  const auto p = build_probe(probe::PsiPlus{});
  EXPECT_NEAR(p(1, 1).real(), 0.5, 1e-15);
  EXPECT_NEAR(p(2, 2).real(), 0.5, 1e-15);
  EXPECT_NEAR(p(1, 2).real(), 0.5, 1e-15);
  EXPECT_NEAR(p(0, 0).real(), 0.0, 1e-15);
  EXPECT_NEAR((p.matrix() * p.matrix() - p.matrix()).cwiseAbs().maxCoeff(), 0.0, 1e-15);

  const auto b = build_probe(probe::BellPhiMinus{0.7});
  EXPECT_NEAR(std::abs(b(0, 3) + std::exp(-ref::I * 0.7) / 2.0), 0.0, 1e-15);
  EXPECT_EQ(qubit_count(probe::BellPhiPlus{}), 2);
  EXPECT_EQ(qubit_count(probe::Excited{}), 1);
}

TEST(Compose, BasisProductAndTrace) {
  const auto j = compose(build_probe(probe::Excited{}), build_field(field::Fock{0}, 4).rho);
  EXPECT_NEAR(j(4, 4).real(), 1.0, 1e-15);  // |e,0>
  EXPECT_NEAR(j.matrix().trace().real(), 1.0, 1e-15);

  const ref::Mat f = ref::random_density(5, 9);
  const auto field = DensityOperator(Operator(HilbertSpace({5}), f));
  const auto joint = compose(build_probe(probe::BellPhiPlus{0.2}), field);
  EXPECT_EQ(joint.space().dims(), (std::vector<int>{2, 2, 5}));
  const int keep[] = {2};
  EXPECT_LT((partial_trace(joint, keep).matrix() - f).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(compose(field, field), Error);
}
