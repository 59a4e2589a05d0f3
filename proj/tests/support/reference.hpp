#pragma once

// Independent reference computations for tests. Nothing here calls into the
// library's physics: ladder operators, states and propagators are rebuilt from
// their textbook definitions so that a shared bug cannot hide.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace ref {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline const cplx I{0.0, 1.0};

inline Mat lower(int n) {
  Mat a = Mat::Zero(n, n);
  for (int k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
  return a;
}

inline Mat raise(int n) { return lower(n).adjoint(); }
inline Mat eye(int n) { return Mat::Identity(n, n); }

// Qubit basis {g, e}.
inline Mat sp() {
  Mat s = Mat::Zero(2, 2);
  s(1, 0) = 1.0;
  return s;
}
inline Mat sm() { return sp().adjoint(); }

inline Mat kron(const Mat& a, const Mat& b) { return Eigen::kroneckerProduct(a, b).eval(); }

inline Mat jc1(int n) { return kron(sp(), lower(n)) + kron(sm(), raise(n)); }
inline Mat jc2(int n) { return kron(sp(), lower(n) * lower(n)) + kron(sm(), raise(n) * raise(n)); }

inline Mat expm_i(const Mat& h, double tau) { return (Mat(-I * tau * h)).exp(); }

inline double population(const Mat& rho0, const Mat& h, const Mat& proj, double tau) {
  const Mat u = expm_i(h, tau);
  return (u * rho0 * u.adjoint() * proj).trace().real();
}

inline Mat pure(const Vec& v) { return v * v.adjoint() / v.squaredNorm(); }

inline Vec coherent(cplx alpha, int n) {
  Vec c(n);
  double fact = 1.0;
  for (int k = 0; k < n; ++k) {
    if (k > 0) fact *= k;
    c(k) = std::exp(-std::norm(alpha) / 2.0) * std::pow(alpha, k) / std::sqrt(fact);
  }
  return c;
}

inline Mat thermal(double nbar, int n) {
  Mat r = Mat::Zero(n, n);
  for (int k = 0; k < n; ++k) r(k, k) = std::pow(nbar, k) / std::pow(1.0 + nbar, k + 1);
  return r / r.trace();
}

// Random full-rank density matrix (Ginibre) on dimension n.
inline Mat random_density(int n, unsigned seed, double decay = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Mat m(n, n);
  for (int i = 0; i < n; ++i) {
    const double w = std::exp(-decay * i);
    for (int j = 0; j < n; ++j) m(i, j) = w * cplx(g(rng), g(rng));
  }
  Mat rho = m * m.adjoint();
  return rho / rho.trace().real();
}

inline double expect(const Mat& rho, const Mat& o) { return (rho * o).trace().real(); }

// Quadratures in the single-mode convention X = (a e^{-i phi} + a^dag e^{i phi})/2.
inline Mat quad_x(int n, double phi) {
  return (lower(n) * std::exp(-I * phi) + raise(n) * std::exp(I * phi)) / 2.0;
}
inline Mat quad_y(int n, double phi) {
  return (lower(n) * std::exp(-I * phi) - raise(n) * std::exp(I * phi)) / (2.0 * I);
}

}  // namespace ref
