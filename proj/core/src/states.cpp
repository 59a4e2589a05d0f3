#include "qprobe/states.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <sstream>

#include "qprobe/error.hpp"

namespace qprobe {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorCode::BadParameter, std::string(what) + " must be finite");
}

void require_finite(cplx v, const char* what) {
  require_finite(v.real(), what);
  require_finite(v.imag(), what);
}

// log(n!) via lgamma keeps amplitudes finite for large n.
double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

Vector coherent_amplitudes(cplx alpha, int truncation) {
  Vector c(truncation);
  const double mag = std::abs(alpha);
  const double arg = std::arg(alpha);
  for (int n = 0; n < truncation; ++n) {
    double log_mag = -0.5 * mag * mag - 0.5 * log_factorial(n);
    if (n > 0) log_mag += (mag > 0.0 ? n * std::log(mag) : -INFINITY);
    c(n) = (n == 0) ? cplx(std::exp(-0.5 * mag * mag), 0.0) : std::polar(std::exp(log_mag), n * arg);
  }
  return c;
}

struct PureAmplitudes {
  Vector amps;
  double leakage;
};

FieldState finish_pure(const PureAmplitudes& p, int modes, int truncation, double leakage_tol,
                       const std::string& what) {
  if (p.leakage > leakage_tol) {
    throw Error(ErrorCode::TruncationLeak, what + " loses weight " + std::to_string(p.leakage) +
                                               " at truncation " + std::to_string(truncation));
  }
  HilbertSpace space(std::vector<int>(static_cast<std::size_t>(modes), truncation));
  return FieldState{DensityOperator::pure(space, p.amps), modes, truncation, std::max(p.leakage, 0.0)};
}

FieldState build_single(const FieldStateSpec& spec, int truncation, double leakage_tol);

FieldState build_impl(const FieldStateSpec& spec, int truncation, double leakage_tol) {
  const HilbertSpace one_mode({truncation});
  return std::visit(
      overloaded{
          [&](const field::Fock& s) -> FieldState {
            if (s.n < 0 || s.n >= truncation) {
              throw Error(ErrorCode::BadParameter, "Fock(" + std::to_string(s.n) + ") outside truncation");
            }
            Vector v = Vector::Zero(truncation);
            v(s.n) = 1.0;
            return FieldState{DensityOperator::pure(one_mode, v), 1, truncation, 0.0};
          },
          [&](const field::Coherent& s) -> FieldState {
            require_finite(s.alpha, "coherent amplitude");
            Vector c = coherent_amplitudes(s.alpha, truncation);
            return finish_pure({c, 1.0 - c.squaredNorm()}, 1, truncation, leakage_tol, "Coherent state");
          },
          [&](const field::Thermal& s) -> FieldState {
            require_finite(s.nbar, "thermal mean");
            if (s.nbar < 0.0) throw Error(ErrorCode::BadParameter, "thermal mean photon number must be >= 0");
            Matrix rho = Matrix::Zero(truncation, truncation);
            double total = 0.0;
            const double ratio = s.nbar / (1.0 + s.nbar);
            for (int n = 0; n < truncation; ++n) {
              const double p = std::pow(ratio, n) / (1.0 + s.nbar);
              rho(n, n) = p;
              total += p;
            }
            rho /= total;
            // Mixed state: leakage is recorded but never fatal.
            return FieldState{DensityOperator(Operator(one_mode, rho)), 1, truncation, 1.0 - total};
          },
          [&](const field::SqueezedVacuum& s) -> FieldState {
            require_finite(s.r, "squeeze parameter");
            require_finite(s.theta, "squeeze angle");
            Vector c = Vector::Zero(truncation);
            const double t = std::tanh(s.r);
            const double inv_sqrt_cosh = 1.0 / std::sqrt(std::cosh(s.r));
            for (int m = 0; 2 * m < truncation; ++m) {
              // sqrt((2m)!)/(2^m m!) (-e^{i theta} tanh r)^m / sqrt(cosh r)
              const double log_mag = 0.5 * log_factorial(2 * m) - m * std::log(2.0) - log_factorial(m) +
                                     (m > 0 ? m * std::log(std::abs(t)) : 0.0);
              const double sign = (t < 0.0 && (m % 2 == 1)) ? -1.0 : 1.0;
              const cplx phase = std::polar(1.0, m * (s.theta + std::numbers::pi));
              c(2 * m) = (m == 0 || t != 0.0) ? inv_sqrt_cosh * sign * std::exp(log_mag) * phase : cplx(0.0);
            }
            return finish_pure({c, 1.0 - c.squaredNorm()}, 1, truncation, leakage_tol, "Squeezed vacuum");
          },
          [&](const field::Cat& s) -> FieldState {
            require_finite(s.alpha, "cat amplitude");
            require_finite(s.parity_phase, "cat parity phase");
            const Vector plus = coherent_amplitudes(s.alpha, truncation);
            const Vector minus = coherent_amplitudes(-s.alpha, truncation);
            const cplx w = std::polar(1.0, s.parity_phase);
            // Exact norm^2 of the untruncated superposition.
            const double mag2 = std::norm(s.alpha);
            const double norm2 = 2.0 + 2.0 * std::exp(-2.0 * mag2) * std::cos(s.parity_phase);
            if (norm2 <= 1e-14) throw Error(ErrorCode::BadParameter, "cat state has vanishing norm");
            Vector c = (plus + w * minus) / std::sqrt(norm2);
            return finish_pure({c, 1.0 - c.squaredNorm()}, 1, truncation, leakage_tol, "Cat state");
          },
          [&](const field::TwoModeSqueezedVacuum& s) -> FieldState {
            require_finite(s.r, "two-mode squeeze parameter");
            const double t = std::tanh(s.r);
            Vector c = Vector::Zero(static_cast<Eigen::Index>(truncation) * truncation);
            for (int n = 0; n < truncation; ++n) {
              c(static_cast<Eigen::Index>(n) * truncation + n) = std::pow(-t, n) / std::cosh(s.r);
            }
            return finish_pure({c, 1.0 - c.squaredNorm()}, 2, truncation, leakage_tol,
                               "Two-mode squeezed vacuum");
          },
          [&](const field::SplitPhoton& s) -> FieldState {
            require_finite(s.phase, "split-photon phase");
            Vector c = Vector::Zero(static_cast<Eigen::Index>(truncation) * truncation);
            c(static_cast<Eigen::Index>(1) * truncation + 0) = 1.0 / std::sqrt(2.0);
            c(static_cast<Eigen::Index>(0) * truncation + 1) = std::polar(1.0 / std::sqrt(2.0), s.phase);
            return finish_pure({c, 0.0}, 2, truncation, leakage_tol, "Split photon");
          },
          [&](const field::RawMatrix& s) -> FieldState {
            if (s.modes < 1 || s.modes > 2) throw Error(ErrorCode::BadParameter, "raw matrix must have 1 or 2 modes");
            const auto expected = static_cast<Eigen::Index>(std::pow(truncation, s.modes));
            if (s.rho.rows() != expected || s.rho.cols() != expected) {
              throw Error(ErrorCode::ShapeMismatch, "raw matrix dimension " + std::to_string(s.rho.rows()) +
                                                        " does not match truncation^modes = " +
                                                        std::to_string(expected));
            }
            const double tr = s.rho.trace().real();
            if (!(tr > 0.0)) throw Error(ErrorCode::InvalidState, "raw matrix has non-positive trace");
            HilbertSpace space(std::vector<int>(static_cast<std::size_t>(s.modes), truncation));
            Matrix rho = s.rho / tr;
            return FieldState{DensityOperator(Operator(space, rho)), s.modes, truncation, 0.0};
          },
          [&](const std::shared_ptr<const field::Product>& p) -> FieldState {
            if (!p) throw Error(ErrorCode::BadParameter, "null product spec");
            const FieldState a = build_single(p->first, truncation, leakage_tol);
            const FieldState b = build_single(p->second, truncation, leakage_tol);
            Operator joint = kron(a.rho.op(), b.rho.op());
            const double leak = 1.0 - (1.0 - a.leakage) * (1.0 - b.leakage);
            return FieldState{DensityOperator(std::move(joint)), 2, truncation, leak};
          },
      },
      spec);
}

FieldState build_single(const FieldStateSpec& spec, int truncation, double leakage_tol) {
  if (mode_count(spec) != 1) throw Error(ErrorCode::BadParameter, "product factors must be single-mode states");
  return build_impl(spec, truncation, leakage_tol);
}

}  // namespace

FieldStateSpec product(FieldStateSpec first, FieldStateSpec second) {
  return std::make_shared<const field::Product>(field::Product{std::move(first), std::move(second)});
}

int mode_count(const FieldStateSpec& spec) {
  return std::visit(overloaded{
                        [](const field::TwoModeSqueezedVacuum&) { return 2; },
                        [](const field::SplitPhoton&) { return 2; },
                        [](const field::RawMatrix& r) { return r.modes; },
                        [](const std::shared_ptr<const field::Product>&) { return 2; },
                        [](const auto&) { return 1; },
                    },
                    spec);
}

std::string describe(const FieldStateSpec& spec) {
  std::ostringstream os;
  auto cstr = [](cplx z) {
    std::ostringstream o;
    o << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i";
    return o.str();
  };
  std::visit(overloaded{
                 [&](const field::Fock& s) { os << "Fock(" << s.n << ")"; },
                 [&](const field::Coherent& s) { os << "Coherent(" << cstr(s.alpha) << ")"; },
                 [&](const field::Thermal& s) { os << "Thermal(" << s.nbar << ")"; },
                 [&](const field::SqueezedVacuum& s) { os << "SqueezedVacuum(r=" << s.r << ",theta=" << s.theta << ")"; },
                 [&](const field::Cat& s) { os << "Cat(" << cstr(s.alpha) << ",phase=" << s.parity_phase << ")"; },
                 [&](const field::TwoModeSqueezedVacuum& s) { os << "TMSV(r=" << s.r << ")"; },
                 [&](const field::SplitPhoton& s) { os << "SplitPhoton(phase=" << s.phase << ")"; },
                 [&](const field::RawMatrix& s) { os << "RawMatrix(" << s.rho.rows() << ")"; },
                 [&](const std::shared_ptr<const field::Product>& p) {
                   os << describe(p->first) << " x " << describe(p->second);
                 },
             },
             spec);
  return os.str();
}

FieldState build_field(const FieldStateSpec& spec, int truncation, double leakage_tol) {
  if (truncation < 2) throw Error(ErrorCode::BadParameter, "truncation must be >= 2");
  if (!(leakage_tol >= 0.0)) throw Error(ErrorCode::BadParameter, "leakage tolerance must be >= 0");
  return build_impl(spec, truncation, leakage_tol);
}

field::RawMatrix parse_raw_matrix(std::istream& in, int dimension, int modes) {
  if (dimension < 2) throw Error(ErrorCode::BadParameter, "raw matrix dimension must be >= 2");
  Matrix rho = Matrix::Zero(dimension, dimension);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (char& ch : line) {
      if (ch == ',') ch = ' ';
    }
    std::istringstream ls(line);
    long row = 0;
    long col = 0;
    double re = 0.0;
    double im = 0.0;
    if (!(ls >> row)) continue;  // blank
    if (!(ls >> col >> re >> im)) {
      throw Error(ErrorCode::ParseError, "raw matrix line " + std::to_string(line_no) + ": expected 'row col re im'");
    }
    std::string rest;
    if (ls >> rest) {
      throw Error(ErrorCode::ParseError, "raw matrix line " + std::to_string(line_no) + ": trailing '" + rest + "'");
    }
    if (row < 0 || col < 0 || row >= dimension || col >= dimension) {
      throw Error(ErrorCode::ParseError, "raw matrix line " + std::to_string(line_no) + ": index out of range");
    }
    rho(row, col) = cplx(re, im);
  }
  return field::RawMatrix{std::move(rho), modes};
}

// ------------------------------------------------------------------- probes

int qubit_count(const ProbeStateSpec& spec) {
  return std::visit(overloaded{
                        [](const probe::BellPhiPlus&) { return 2; },
                        [](const probe::BellPhiMinus&) { return 2; },
                        [](const probe::PsiPlus&) { return 2; },
                        [](const auto&) { return 1; },
                    },
                    spec);
}

std::string describe(const ProbeStateSpec& spec) {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const probe::Ground&) { os << "g"; },
                 [&](const probe::Excited&) { os << "e"; },
                 [&](const probe::PlusPhi& p) { os << "+phi(" << p.phi << ")"; },
                 [&](const probe::MinusPhi& p) { os << "-phi(" << p.phi << ")"; },
                 [&](const probe::BellPhiPlus& p) { os << "phi+(" << p.theta << ")"; },
                 [&](const probe::BellPhiMinus& p) { os << "phi-(" << p.theta << ")"; },
                 [&](const probe::PsiPlus&) { os << "psi+"; },
             },
             spec);
  return os.str();
}

Vector probe_vector(const ProbeStateSpec& spec) {
  const double s = 1.0 / std::sqrt(2.0);
  return std::visit(overloaded{
                        [](const probe::Ground&) { Vector v(2); v << 1.0, 0.0; return v; },
                        [](const probe::Excited&) { Vector v(2); v << 0.0, 1.0; return v; },
                        [s](const probe::PlusPhi& p) {
                          Vector v(2);
                          v << s, s * std::polar(1.0, p.phi);
                          return v;
                        },
                        [s](const probe::MinusPhi& p) {
                          Vector v(2);
                          v << s, -s * std::polar(1.0, p.phi);
                          return v;
                        },
                        [s](const probe::BellPhiPlus& p) {
                          Vector v = Vector::Zero(4);
                          v(0) = s;
                          v(3) = s * std::polar(1.0, p.theta);
                          return v;
                        },
                        [s](const probe::BellPhiMinus& p) {
                          Vector v = Vector::Zero(4);
                          v(0) = s;
                          v(3) = -s * std::polar(1.0, p.theta);
                          return v;
                        },
                        [s](const probe::PsiPlus&) {
                          Vector v = Vector::Zero(4);
                          v(1) = s;
                          v(2) = s;
                          return v;
                        },
                    },
                    spec);
}

DensityOperator build_probe(const ProbeStateSpec& spec) {
  const int q = qubit_count(spec);
  return DensityOperator::pure(HilbertSpace(std::vector<int>(static_cast<std::size_t>(q), 2)), probe_vector(spec));
}

DensityOperator compose(const DensityOperator& probe_state, const DensityOperator& field_state) {
  const DensityOperator fields[] = {field_state};
  return compose(probe_state, fields);
}

DensityOperator compose(const DensityOperator& probe_state, std::span<const DensityOperator> fields) {
  for (int d : probe_state.space().dims()) {
    if (d != 2) throw Error(ErrorCode::ShapeMismatch, "probe subsystems must be qubits");
  }
  if (fields.empty()) throw Error(ErrorCode::ShapeMismatch, "compose needs at least one field state");
  Operator joint = probe_state.op();
  for (const auto& f : fields) joint = kron(joint, f.op());
  Matrix m = joint.matrix();
  m = 0.5 * (m + m.adjoint());
  // A product of valid states is valid; skip the eigenvalue check.
  return DensityOperator::unchecked(Operator(joint.space(), std::move(m)), probe_state.tolerances());
}

}  // namespace qprobe
