#include "qprobe/opsalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qprobe/error.hpp"

namespace qprobe {

namespace {

std::string dims_string(const HilbertSpace& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.dims().size(); ++i) os << (i ? "," : "") << s.dims()[i];
  os << ']';
  return os.str();
}

void require_same_space(const Operator& a, const Operator& b, const char* what) {
  if (!(a.space() == b.space())) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": spaces " + dims_string(a.space()) +
                                              " and " + dims_string(b.space()) + " differ");
  }
}

}  // namespace

// ---------------------------------------------------------------- HilbertSpace

HilbertSpace::HilbertSpace(std::vector<int> subsystem_dims) : dims_(std::move(subsystem_dims)) {
  if (dims_.empty()) throw Error(ErrorCode::BadSpace, "Hilbert space needs at least one subsystem");
  total_ = 1;
  for (int d : dims_) {
    if (d < 2) throw Error(ErrorCode::BadSpace, "subsystem dimension must be >= 2, got " + std::to_string(d));
    total_ *= static_cast<std::size_t>(d);
  }
}

HilbertSpace HilbertSpace::qubits_and_modes(int qubits, int modes, int truncation) {
  std::vector<int> dims(static_cast<std::size_t>(qubits), 2);
  dims.insert(dims.end(), static_cast<std::size_t>(modes), truncation);
  return HilbertSpace(std::move(dims));
}

int HilbertSpace::dim(int subsystem) const {
  if (subsystem < 0 || subsystem >= subsystem_count()) {
    throw Error(ErrorCode::BadSubsystem, "subsystem index " + std::to_string(subsystem) + " out of range");
  }
  return dims_[static_cast<std::size_t>(subsystem)];
}

HilbertSpace HilbertSpace::tensor(const HilbertSpace& other) const {
  std::vector<int> d = dims_;
  d.insert(d.end(), other.dims_.begin(), other.dims_.end());
  return HilbertSpace(std::move(d));
}

// -------------------------------------------------------------------- Operator

Operator::Operator(HilbertSpace space, Matrix entries) : space_(std::move(space)), m_(std::move(entries)) {
  const auto n = static_cast<Eigen::Index>(space_.total_dim());
  if (m_.rows() != n || m_.cols() != n) {
    throw Error(ErrorCode::ShapeMismatch, "operator matrix is " + std::to_string(m_.rows()) + "x" +
                                              std::to_string(m_.cols()) + ", space dimension is " +
                                              std::to_string(n));
  }
}

Operator Operator::identity(const HilbertSpace& space) {
  const auto n = static_cast<Eigen::Index>(space.total_dim());
  return Operator(space, Matrix::Identity(n, n));
}

Operator Operator::zero(const HilbertSpace& space) {
  const auto n = static_cast<Eigen::Index>(space.total_dim());
  return Operator(space, Matrix::Zero(n, n));
}

Operator Operator::adjoint() const { return Operator(space_, m_.adjoint()); }

bool Operator::is_hermitian(double tol) const {
  if (m_.size() == 0) return true;
  return (m_ - m_.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

double Operator::max_abs() const { return m_.size() ? m_.cwiseAbs().maxCoeff() : 0.0; }

Operator& Operator::operator+=(const Operator& rhs) {
  require_same_space(*this, rhs, "operator+");
  m_ += rhs.m_;
  return *this;
}

Operator& Operator::operator-=(const Operator& rhs) {
  require_same_space(*this, rhs, "operator-");
  m_ -= rhs.m_;
  return *this;
}

Operator& Operator::operator*=(cplx s) {
  m_ *= s;
  return *this;
}

Operator operator*(const Operator& a, const Operator& b) {
  require_same_space(a, b, "operator*");
  return Operator(a.space_, a.m_ * b.m_);
}

Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }

// ------------------------------------------------------------- DensityOperator

DensityOperator::DensityOperator(Operator op, StateTolerances tol) : op_(std::move(op)), tol_(tol) {
  const Matrix& m = op_.matrix();
  const double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (herm > tol_.hermiticity) {
    throw Error(ErrorCode::InvalidState, "density matrix not Hermitian (deviation " + std::to_string(herm) + ")");
  }
  const double tr = m.trace().real();
  if (std::abs(tr - 1.0) > tol_.trace) {
    throw Error(ErrorCode::InvalidState, "density matrix trace is " + std::to_string(tr));
  }
  const Matrix hermitian_part = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part, Eigen::EigenvaluesOnly);
  const double min_ev = es.eigenvalues().minCoeff();
  if (min_ev < -tol_.positivity) {
    throw Error(ErrorCode::InvalidState, "density matrix has negative eigenvalue " + std::to_string(min_ev));
  }
}

DensityOperator DensityOperator::unchecked(Operator op, StateTolerances tol) {
  DensityOperator out;
  out.op_ = std::move(op);
  out.tol_ = tol;
  return out;
}

DensityOperator DensityOperator::pure(const HilbertSpace& space, const Vector& psi) {
  if (static_cast<std::size_t>(psi.size()) != space.total_dim()) {
    throw Error(ErrorCode::ShapeMismatch, "state vector length does not match space");
  }
  const double norm = psi.norm();
  if (norm == 0.0) throw Error(ErrorCode::InvalidState, "zero state vector");
  const Vector v = psi / norm;
  return unchecked(Operator(space, v * v.adjoint()));
}

// ------------------------------------------------------------------ kron/embed

Operator kron(const Operator& a, const Operator& b) {
  const Matrix& x = a.matrix();
  const Matrix& y = b.matrix();
  const Eigen::Index br = y.rows();
  const Eigen::Index bc = y.cols();
  Matrix out(x.rows() * br, x.cols() * bc);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      out.block(i * br, j * bc, br, bc) = x(i, j) * y;
    }
  }
  return Operator(a.space().tensor(b.space()), std::move(out));
}

Operator kron(std::span<const Operator> factors) {
  if (factors.empty()) throw Error(ErrorCode::BadSpace, "kron of zero factors");
  Operator out = factors.front();
  for (std::size_t i = 1; i < factors.size(); ++i) out = kron(out, factors[i]);
  return out;
}

Operator embed(const Operator& local, const HilbertSpace& space, int index) {
  const int d = space.dim(index);
  if (local.space().subsystem_count() != 1 || local.space().dim(0) != d) {
    throw Error(ErrorCode::ShapeMismatch, "local operator does not match subsystem " + std::to_string(index));
  }
  std::vector<Operator> factors;
  factors.reserve(static_cast<std::size_t>(space.subsystem_count()));
  for (int k = 0; k < space.subsystem_count(); ++k) {
    if (k == index) {
      factors.push_back(local);
    } else {
      factors.push_back(Operator::identity(HilbertSpace({space.dim(k)})));
    }
  }
  return kron(factors);
}

// ---------------------------------------------------------- spectral machinery

namespace {

// Connected components of the nonzero pattern, each sorted; components are
// ordered by their smallest state index.
std::vector<std::vector<Eigen::Index>> invariant_blocks(const Matrix& m) {
  const Eigen::Index n = m.rows();
  std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = i;
  auto find = [&](Eigen::Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      if (m(i, j) != cplx{0.0, 0.0}) {
        const auto a = find(i);
        const auto b = find(j);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
      }
    }
  }
  std::vector<std::vector<Eigen::Index>> blocks;
  std::vector<Eigen::Index> slot(static_cast<std::size_t>(n), -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto root = static_cast<std::size_t>(find(i));
    if (slot[root] < 0) {
      slot[root] = static_cast<Eigen::Index>(blocks.size());
      blocks.emplace_back();
    }
    blocks[static_cast<std::size_t>(slot[root])].push_back(i);
  }
  return blocks;
}

}  // namespace

Spectrum eig_hermitian(const Operator& h, double hermiticity_tol) {
  const double scale = std::max(1.0, h.max_abs());
  if (!h.is_hermitian(hermiticity_tol * scale)) {
    throw Error(ErrorCode::NotHermitian, "eigendecomposition requires a Hermitian operator");
  }
  const Matrix sym = 0.5 * (h.matrix() + h.matrix().adjoint());
  const Eigen::Index n = sym.rows();

  // Interaction Hamiltonians conserve an excitation number, so the matrix
  // splits into small invariant blocks that are diagonalized separately.
  Spectrum out;
  struct Level {
    double value;
    std::size_t block;
    Eigen::Index local;
  };
  std::vector<Level> levels;
  levels.reserve(static_cast<std::size_t>(n));
  for (auto& states : invariant_blocks(sym)) {
    const auto k = static_cast<Eigen::Index>(states.size());
    Matrix sub(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = 0; b < k; ++b) sub(a, b) = sym(states[static_cast<std::size_t>(a)], states[static_cast<std::size_t>(b)]);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(sub);
    if (es.info() != Eigen::Success) {
      throw Error(ErrorCode::NotHermitian, "Hermitian eigensolver did not converge");
    }
    for (Eigen::Index a = 0; a < k; ++a) levels.push_back({es.eigenvalues()(a), out.blocks.size(), a});
    out.blocks.push_back(SpectralBlock{std::move(states), std::vector<Eigen::Index>(static_cast<std::size_t>(k)),
                                       es.eigenvectors()});
  }
  std::stable_sort(levels.begin(), levels.end(), [](const Level& a, const Level& b) { return a.value < b.value; });

  out.eigenvalues.resize(n);
  out.eigenvectors = Matrix::Zero(n, n);
  for (Eigen::Index g = 0; g < n; ++g) {
    const Level& lv = levels[static_cast<std::size_t>(g)];
    auto& blk = out.blocks[lv.block];
    blk.levels[static_cast<std::size_t>(lv.local)] = g;
    out.eigenvalues(g) = lv.value;
    for (std::size_t a = 0; a < blk.states.size(); ++a) {
      out.eigenvectors(blk.states[a], g) = blk.vectors(static_cast<Eigen::Index>(a), lv.local);
    }
  }
  return out;
}

Propagator::Propagator(const Operator& h) : space_(h.space()), spec_(eig_hermitian(h)) {}

Matrix Propagator::unitary(double tau) const {
  const Eigen::Index n = spec_.eigenvalues.size();
  Vector phases(n);
  for (Eigen::Index k = 0; k < n; ++k) phases(k) = std::exp(-kI * (spec_.eigenvalues(k) * tau));
  return spec_.eigenvectors * phases.asDiagonal() * spec_.eigenvectors.adjoint();
}

DensityOperator Propagator::evolve(const DensityOperator& rho0, double tau) const {
  if (!(rho0.space() == space_)) throw Error(ErrorCode::ShapeMismatch, "state and Hamiltonian spaces differ");
  const Matrix u = unitary(tau);
  Matrix rho = u * rho0.matrix() * u.adjoint();
  rho = 0.5 * (rho + rho.adjoint());
  return DensityOperator(Operator(space_, std::move(rho)), rho0.tolerances());
}

DensityOperator evolve(const DensityOperator& rho0, const Operator& h, double tau) {
  return Propagator(h).evolve(rho0, tau);
}

cplx expectation(const DensityOperator& rho, const Operator& o) {
  if (!(rho.space() == o.space())) throw Error(ErrorCode::ShapeMismatch, "expectation: spaces differ");
  // Tr(rho o) without forming the product.
  return (rho.matrix().transpose().cwiseProduct(o.matrix())).sum();
}

DensityOperator partial_trace(const DensityOperator& rho, std::span<const int> keep_in) {
  const HilbertSpace& space = rho.space();
  const int n_sub = space.subsystem_count();
  if (keep_in.empty()) throw Error(ErrorCode::BadSubsystem, "partial_trace: keep set is empty");
  std::vector<int> keep(keep_in.begin(), keep_in.end());
  std::sort(keep.begin(), keep.end());
  if (std::adjacent_find(keep.begin(), keep.end()) != keep.end()) {
    throw Error(ErrorCode::BadSubsystem, "partial_trace: duplicate subsystem index");
  }
  for (int k : keep) {
    if (k < 0 || k >= n_sub) throw Error(ErrorCode::BadSubsystem, "partial_trace: index " + std::to_string(k));
  }
  if (static_cast<int>(keep.size()) == n_sub) return rho;

  std::vector<int> traced;
  for (int k = 0; k < n_sub; ++k) {
    if (!std::binary_search(keep.begin(), keep.end(), k)) traced.push_back(k);
  }
  std::vector<int> kept_dims;
  for (int k : keep) kept_dims.push_back(space.dim(k));
  HilbertSpace reduced_space(kept_dims);

  // Row-major strides of the full space.
  std::vector<std::size_t> stride(static_cast<std::size_t>(n_sub), 1);
  for (int k = n_sub - 2; k >= 0; --k) {
    stride[static_cast<std::size_t>(k)] =
        stride[static_cast<std::size_t>(k + 1)] * static_cast<std::size_t>(space.dim(k + 1));
  }
  auto offsets = [&](const std::vector<int>& subs) {
    std::vector<std::size_t> out{0};
    for (int s : subs) {
      std::vector<std::size_t> next;
      next.reserve(out.size() * static_cast<std::size_t>(space.dim(s)));
      for (std::size_t base : out) {
        for (int v = 0; v < space.dim(s); ++v) next.push_back(base + static_cast<std::size_t>(v) * stride[static_cast<std::size_t>(s)]);
      }
      out = std::move(next);
    }
    return out;
  };
  const std::vector<std::size_t> kept_off = offsets(keep);
  const std::vector<std::size_t> traced_off = offsets(traced);

  const auto rd = static_cast<Eigen::Index>(kept_off.size());
  Matrix out = Matrix::Zero(rd, rd);
  const Matrix& m = rho.matrix();
  for (Eigen::Index i = 0; i < rd; ++i) {
    for (Eigen::Index j = 0; j < rd; ++j) {
      cplx acc{0.0, 0.0};
      for (std::size_t t : traced_off) {
        acc += m(static_cast<Eigen::Index>(kept_off[static_cast<std::size_t>(i)] + t),
                 static_cast<Eigen::Index>(kept_off[static_cast<std::size_t>(j)] + t));
      }
      out(i, j) = acc;
    }
  }
  return DensityOperator(Operator(reduced_space, std::move(out)), rho.tolerances());
}

// ------------------------------------------------------------ local operators

namespace ops {

namespace {
const HilbertSpace& qubit_space() {
  static const HilbertSpace s({2});
  return s;
}
}  // namespace

Operator qubit_identity() { return Operator::identity(qubit_space()); }

Operator sigma_minus() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = 1.0;
  return Operator(qubit_space(), m);
}

Operator sigma_plus() {
  Matrix m = Matrix::Zero(2, 2);
  m(1, 0) = 1.0;
  return Operator(qubit_space(), m);
}

Operator sigma_z() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = -1.0;
  m(1, 1) = 1.0;
  return Operator(qubit_space(), m);
}

Operator sigma_x() { return sigma_plus() + sigma_minus(); }

Operator excited_projector() {
  Matrix m = Matrix::Zero(2, 2);
  m(1, 1) = 1.0;
  return Operator(qubit_space(), m);
}

Operator ground_projector() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1.0;
  return Operator(qubit_space(), m);
}

Operator mode_identity(int truncation) { return Operator::identity(HilbertSpace({truncation})); }

Operator annihilation(int truncation) {
  Matrix m = Matrix::Zero(truncation, truncation);
  for (int n = 1; n < truncation; ++n) m(n - 1, n) = std::sqrt(static_cast<double>(n));
  return Operator(HilbertSpace({truncation}), m);
}

Operator creation(int truncation) { return annihilation(truncation).adjoint(); }

Operator number(int truncation) {
  Matrix m = Matrix::Zero(truncation, truncation);
  for (int n = 0; n < truncation; ++n) m(n, n) = n;
  return Operator(HilbertSpace({truncation}), m);
}

}  // namespace ops

}  // namespace qprobe
