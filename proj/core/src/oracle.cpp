#include "qprobe/oracle.hpp"

#include <cmath>
#include <vector>

#include <Eigen/Sparse>

#include "qprobe/error.hpp"

namespace qprobe {

namespace {

int mode_count(const DensityOperator& rho, const ObservableSpec& spec) {
  const int modes = rho.space().subsystem_count();
  if (is_two_mode(spec.observable)) {
    if (modes != 2) {
      throw Error(ErrorCode::ShapeMismatch,
                  std::string(to_string(spec.observable)) + " needs a two-mode field, got " + std::to_string(modes));
    }
  } else if (spec.mode < 0 || spec.mode >= modes) {
    throw Error(ErrorCode::ShapeMismatch, "mode index " + std::to_string(spec.mode) + " out of range for a " +
                                              std::to_string(modes) + "-mode field");
  }
  return modes;
}

// ---------------------------------------------------------------- trace route

// Ladder operators are sparse; the trace route multiplies them as such.
using Sparse = Eigen::SparseMatrix<cplx>;

Sparse sparse_identity(Eigen::Index n) {
  Sparse m(n, n);
  m.setIdentity();
  return m;
}

Sparse sparse_kron(const Sparse& a, const Sparse& b) {
  std::vector<Eigen::Triplet<cplx>> t;
  t.reserve(static_cast<std::size_t>(a.nonZeros() * b.nonZeros()));
  for (int ka = 0; ka < a.outerSize(); ++ka) {
    for (Sparse::InnerIterator ia(a, ka); ia; ++ia) {
      for (int kb = 0; kb < b.outerSize(); ++kb) {
        for (Sparse::InnerIterator ib(b, kb); ib; ++ib) {
          t.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(), ia.value() * ib.value());
        }
      }
    }
  }
  Sparse out(a.rows() * b.rows(), a.cols() * b.cols());
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

// Truncated annihilation operator of one mode embedded in the field space.
Sparse ladder(const HilbertSpace& space, int mode) {
  Sparse out = sparse_identity(1);
  for (int k = 0; k < space.subsystem_count(); ++k) {
    const Sparse local = k == mode ? Sparse(ops::annihilation(space.dim(k)).matrix().sparseView())
                                   : sparse_identity(space.dim(k));
    out = sparse_kron(out, local);
  }
  return out;
}

struct Quadrature {
  Sparse x, y, xx, yy;  // xx, yy normal ordered
};

// u = a e^{i angle}; X = (u + u^dag)/2, Y = (u - u^dag)/2i.
Quadrature quadrature(const Sparse& a, double angle) {
  const Sparse u = a * std::exp(kI * angle);
  const Sparse ud = u.adjoint();
  const Sparse one = sparse_identity(a.rows());
  const Sparse uu = u * u;
  const Sparse udud = ud * ud;
  const Sparse n2 = (ud * u) * cplx{2.0};
  return {(u + ud) * cplx{0.5}, (u - ud) * cplx{0.0, -0.5}, (uu + udud + n2 + one) * cplx{0.25},
          (n2 + one - uu - udud) * cplx{0.25}};
}

double trace_real(const DensityOperator& rho, const Sparse& o) {
  const Matrix& m = rho.matrix();
  cplx acc{0.0, 0.0};
  for (int k = 0; k < o.outerSize(); ++k) {
    for (Sparse::InnerIterator it(o, k); it; ++it) acc += m(it.col(), it.row()) * it.value();
  }
  return acc.real();
}

double duan_variance_trace(const DensityOperator& rho, const Sparse& q1, const Sparse& q2, const Sparse& qq1,
                           const Sparse& qq2, double a0, int sign) {
  const double s = sign;
  const double a2 = a0 * a0;
  const Sparse first = (q1 * cplx{a0} - q2 * cplx{s / a0}) * cplx{std::sqrt(2.0)};
  const Sparse cross = q1 * q2;
  const Sparse second = (qq1 * cplx{a2} + qq2 * cplx{1.0 / a2} - cross * cplx{2.0 * s}) * cplx{2.0};
  const double m1 = trace_real(rho, first);
  return trace_real(rho, second) - m1 * m1;
}

// ---------------------------------------------------------------- series route

// sum_m w(m) rho_{m, m + delta}, i.e. Tr(rho O) for O|m> = w(m)|m + delta>.
template <typename W>
cplx element_sum(const DensityOperator& rho, int d1, int d2, W weight) {
  const auto& dims = rho.space().dims();
  if (dims.size() == 1) {
    const int n = dims[0];
    cplx acc{0.0, 0.0};
    for (int m = 0; m < n; ++m) {
      const int t = m + d1;
      if (t < 0 || t >= n) continue;
      acc += weight(m, 0) * rho(m, t);
    }
    return acc;
  }
  const int n1 = dims[0];
  const int n2 = dims[1];
  cplx acc{0.0, 0.0};
  for (int m1 = 0; m1 < n1; ++m1) {
    for (int m2 = 0; m2 < n2; ++m2) {
      const int t1 = m1 + d1;
      const int t2 = m2 + d2;
      if (t1 < 0 || t1 >= n1 || t2 < 0 || t2 >= n2) continue;
      acc += weight(m1, m2) * rho(m1 * n2 + m2, t1 * n2 + t2);
    }
  }
  return acc;
}

struct ModeSums {
  cplx a;     // <a>
  cplx aa;    // <a^2>
  double n;   // <a^dag a>
};

ModeSums mode_sums(const DensityOperator& rho, int mode) {
  // Shifts and occupation numbers of the chosen mode.
  const auto pick = [mode](int m1, int m2) { return mode == 0 ? m1 : m2; };
  const int d1 = mode == 0 ? -1 : 0;
  const int d2 = mode == 0 ? 0 : -1;
  ModeSums out;
  out.a = element_sum(rho, d1, d2, [&](int m1, int m2) { return std::sqrt(double(pick(m1, m2))); });
  out.aa = element_sum(rho, 2 * d1, 2 * d2, [&](int m1, int m2) {
    const double m = pick(m1, m2);
    return std::sqrt(m * (m - 1.0));
  });
  out.n = element_sum(rho, 0, 0, [&](int m1, int m2) { return double(pick(m1, m2)); }).real();
  return out;
}

struct QuadratureValues {
  double x, y, xx, yy;
};

// Same u = a e^{i angle} convention as the trace route.
QuadratureValues quadrature_values(const ModeSums& s, double angle) {
  const cplx u = std::exp(kI * angle) * s.a;
  const cplx uu = std::exp(2.0 * kI * angle) * s.aa;
  return {u.real(), u.imag(), 0.5 * uu.real() + 0.5 * s.n + 0.25, -0.5 * uu.real() + 0.5 * s.n + 0.25};
}

struct Correlators {
  double a, b;
};

Correlators correlators(const DensityOperator& rho, double phi1, double phi2) {
  const cplx a1d_a2 = element_sum(rho, 1, -1, [](int m1, int m2) { return std::sqrt((m1 + 1.0) * m2); });
  const cplx a1_a2 = element_sum(rho, -1, -1, [](int m1, int m2) { return std::sqrt(double(m1) * m2); });
  return {2.0 * (std::exp(-kI * (phi1 - phi2)) * a1d_a2).real(), 2.0 * (std::exp(kI * (phi1 + phi2)) * a1_a2).real()};
}

double duan_variance_series(const QuadratureValues& q1, const QuadratureValues& q2, double cross, bool use_x,
                            double a0, int sign) {
  const double a2 = a0 * a0;
  const double s = sign;
  const double m1 = use_x ? q1.x : q1.y;
  const double m2 = use_x ? q2.x : q2.y;
  const double s1 = use_x ? q1.xx : q1.yy;
  const double s2 = use_x ? q2.xx : q2.yy;
  const double mean = std::sqrt(2.0) * (a0 * m1 - s * m2 / a0);
  return 2.0 * (a2 * s1 + s2 / a2 - 2.0 * s * cross) - mean * mean;
}

}  // namespace

double direct_moment(const DensityOperator& rho, const ObservableSpec& spec) {
  mode_count(rho, spec);
  const auto& space = rho.space();

  if (!is_two_mode(spec.observable)) {
    const Sparse a = ladder(space, spec.mode);
    const Quadrature q = quadrature(a, -spec.phi1);
    switch (spec.observable) {
      case Observable::X: return trace_real(rho, q.x);
      case Observable::Y: return trace_real(rho, q.y);
      case Observable::N: return trace_real(rho, Sparse(a.adjoint() * a));
      case Observable::X2: return trace_real(rho, q.xx);
      case Observable::Y2: return trace_real(rho, q.yy);
      case Observable::VarX: {
        const double m = trace_real(rho, q.x);
        return trace_real(rho, q.xx) - m * m;
      }
      case Observable::VarY: {
        const double m = trace_real(rho, q.y);
        return trace_real(rho, q.yy) - m * m;
      }
      default: break;
    }
  }

  const Sparse a1 = ladder(space, 0);
  const Sparse a2 = ladder(space, 1);
  const double phi1 = spec.phi1;
  const double phi2 = spec.phi2;
  const Quadrature q1 = quadrature(a1, phi1);
  const Quadrature q2 = quadrature(a2, phi2);
  switch (spec.observable) {
    case Observable::A: {
      const Sparse op = Sparse(a1.adjoint() * a2) * std::exp(-kI * (phi1 - phi2));
      return trace_real(rho, Sparse(op + Sparse(op.adjoint())));
    }
    case Observable::B: {
      const Sparse op = Sparse(a1.adjoint() * Sparse(a2.adjoint())) * std::exp(-kI * (phi1 + phi2));
      return trace_real(rho, Sparse(op + Sparse(op.adjoint())));
    }
    case Observable::X2TwoMode: return trace_real(rho, Sparse(q1.xx + q2.xx + Sparse(q1.x * q2.x) * cplx{2.0}));
    case Observable::Y2TwoMode: return trace_real(rho, Sparse(q1.yy + q2.yy + Sparse(q1.y * q2.y) * cplx{2.0}));
    case Observable::VarU: return duan_variance_trace(rho, q1.x, q2.x, q1.xx, q2.xx, spec.a0, spec.sign1);
    case Observable::VarV: return duan_variance_trace(rho, q1.y, q2.y, q1.yy, q2.yy, spec.a0, spec.sign2);
    case Observable::DuanSum:
      return duan_variance_trace(rho, q1.x, q2.x, q1.xx, q2.xx, spec.a0, spec.sign1) +
             duan_variance_trace(rho, q1.y, q2.y, q1.yy, q2.yy, spec.a0, spec.sign2);
    default: break;
  }
  throw Error(ErrorCode::BadParameter, "unsupported observable");
}

double series_moment(const DensityOperator& rho, const ObservableSpec& spec) {
  mode_count(rho, spec);

  if (!is_two_mode(spec.observable)) {
    const ModeSums s = mode_sums(rho, spec.mode);
    const QuadratureValues q = quadrature_values(s, -spec.phi1);
    switch (spec.observable) {
      case Observable::X: return q.x;
      case Observable::Y: return q.y;
      case Observable::N: return s.n;
      case Observable::X2: return q.xx;
      case Observable::Y2: return q.yy;
      case Observable::VarX: return q.xx - q.x * q.x;
      case Observable::VarY: return q.yy - q.y * q.y;
      default: break;
    }
  }

  const QuadratureValues q1 = quadrature_values(mode_sums(rho, 0), spec.phi1);
  const QuadratureValues q2 = quadrature_values(mode_sums(rho, 1), spec.phi2);
  const Correlators c = correlators(rho, spec.phi1, spec.phi2);
  const double xx12 = 0.25 * (c.a + c.b);
  const double yy12 = 0.25 * (c.a - c.b);
  switch (spec.observable) {
    case Observable::A: return c.a;
    case Observable::B: return c.b;
    case Observable::X2TwoMode: return q1.xx + q2.xx + 2.0 * xx12;
    case Observable::Y2TwoMode: return q1.yy + q2.yy + 2.0 * yy12;
    case Observable::VarU: return duan_variance_series(q1, q2, xx12, true, spec.a0, spec.sign1);
    case Observable::VarV: return duan_variance_series(q1, q2, yy12, false, spec.a0, spec.sign2);
    case Observable::DuanSum:
      return duan_variance_series(q1, q2, xx12, true, spec.a0, spec.sign1) +
             duan_variance_series(q1, q2, yy12, false, spec.a0, spec.sign2);
    default: break;
  }
  throw Error(ErrorCode::BadParameter, "unsupported observable");
}

}  // namespace qprobe
