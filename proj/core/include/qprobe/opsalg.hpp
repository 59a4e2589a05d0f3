#pragma once

// Dense complex operator algebra on finite tensor-product Hilbert spaces.
//
// Subsystem order is fixed: probe qubit(s) first, then bosonic modes. Every
// factory and kron() call in the library follows that order, so a joint
// basis index is the row-major flattening of (probe..., mode...).

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qprobe {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr cplx kI{0.0, 1.0};

class HilbertSpace {
 public:
  HilbertSpace() = default;
  explicit HilbertSpace(std::vector<int> subsystem_dims);

  static HilbertSpace qubits_and_modes(int qubits, int modes, int truncation);

  const std::vector<int>& dims() const noexcept { return dims_; }
  int subsystem_count() const noexcept { return static_cast<int>(dims_.size()); }
  int dim(int subsystem) const;
  std::size_t total_dim() const noexcept { return total_; }

  HilbertSpace tensor(const HilbertSpace& other) const;

  friend bool operator==(const HilbertSpace&, const HilbertSpace&) = default;

 private:
  std::vector<int> dims_;
  std::size_t total_ = 1;
};

class Operator {
 public:
  Operator() = default;
  Operator(HilbertSpace space, Matrix entries);

  static Operator identity(const HilbertSpace& space);
  static Operator zero(const HilbertSpace& space);

  const HilbertSpace& space() const noexcept { return space_; }
  const Matrix& matrix() const noexcept { return m_; }
  std::size_t dim() const noexcept { return space_.total_dim(); }

  Operator adjoint() const;
  bool is_hermitian(double tol) const;
  double max_abs() const;

  Operator& operator+=(const Operator& rhs);
  Operator& operator-=(const Operator& rhs);
  Operator& operator*=(cplx s);

  friend Operator operator+(Operator a, const Operator& b) { return a += b; }
  friend Operator operator-(Operator a, const Operator& b) { return a -= b; }
  friend Operator operator*(Operator a, cplx s) { return a *= s; }
  friend Operator operator*(cplx s, Operator a) { return a *= s; }
  friend Operator operator*(const Operator& a, const Operator& b);

 private:
  HilbertSpace space_;
  Matrix m_;
};

Operator commutator(const Operator& a, const Operator& b);

struct StateTolerances {
  double hermiticity = 1e-10;
  double trace = 1e-10;
  double positivity = 1e-8;
};

// Hermitian, unit-trace, positive semidefinite operator. Construction validates
// all three properties and throws InvalidState otherwise.
class DensityOperator {
 public:
  DensityOperator() = default;
  explicit DensityOperator(Operator op, StateTolerances tol = {});

  // Pure state |psi><psi|; psi is normalized here.
  static DensityOperator pure(const HilbertSpace& space, const Vector& psi);
  // Skips validation. For states valid by construction (tensor products and
  // partial traces of valid states).
  static DensityOperator unchecked(Operator op, StateTolerances tol = {});

  const Operator& op() const noexcept { return op_; }
  const Matrix& matrix() const noexcept { return op_.matrix(); }
  const HilbertSpace& space() const noexcept { return op_.space(); }
  std::size_t dim() const noexcept { return op_.dim(); }
  const StateTolerances& tolerances() const noexcept { return tol_; }

  cplx operator()(Eigen::Index row, Eigen::Index col) const { return op_.matrix()(row, col); }

 private:
  Operator op_;
  StateTolerances tol_;
};

Operator kron(const Operator& a, const Operator& b);
Operator kron(std::span<const Operator> factors);

// Embed a single-subsystem operator at position `index` of `space`.
Operator embed(const Operator& local, const HilbertSpace& space, int index);

// One invariant subspace of a Hermitian operator: basis states `states`
// (connected through nonzero matrix elements) and the eigenpairs living there.
struct SpectralBlock {
  std::vector<Eigen::Index> states;
  std::vector<Eigen::Index> levels;  // positions in the global ascending eigenvalue list
  Matrix vectors;                    // states.size() x states.size()
};

struct Spectrum {
  RealVector eigenvalues;  // ascending
  Matrix eigenvectors;     // columns, unitary
  std::vector<SpectralBlock> blocks;
};

Spectrum eig_hermitian(const Operator& h, double hermiticity_tol = 1e-10);

// exp(-i tau h) from one eigendecomposition, reusable across many tau values.
class Propagator {
 public:
  explicit Propagator(const Operator& h);

  const Spectrum& spectrum() const noexcept { return spec_; }
  const HilbertSpace& space() const noexcept { return space_; }

  Matrix unitary(double tau) const;
  DensityOperator evolve(const DensityOperator& rho0, double tau) const;

 private:
  HilbertSpace space_;
  Spectrum spec_;
};

DensityOperator evolve(const DensityOperator& rho0, const Operator& h, double tau);

cplx expectation(const DensityOperator& rho, const Operator& o);

DensityOperator partial_trace(const DensityOperator& rho, std::span<const int> keep);

namespace ops {

Operator qubit_identity();
Operator sigma_minus();  // |g><e|
Operator sigma_plus();   // |e><g|
Operator sigma_z();      // |e><e| - |g><g|
Operator sigma_x();
Operator excited_projector();
Operator ground_projector();

Operator mode_identity(int truncation);
// Hard-truncated ladder operators: a^dagger |N-1> = 0.
Operator annihilation(int truncation);
Operator creation(int truncation);
Operator number(int truncation);

}  // namespace ops

}  // namespace qprobe
