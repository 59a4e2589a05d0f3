#pragma once

// Initial field and probe states.
//
// Field states are built directly in the truncated number basis. Pure states
// that do not fit in the truncation raise TruncationLeak; everything is
// renormalized after truncation and the discarded weight is reported.

#include <iosfwd>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "qprobe/opsalg.hpp"

namespace qprobe {

inline constexpr int kDefaultTruncation = 40;
inline constexpr double kDefaultLeakageTol = 1e-8;

namespace field {

struct Fock {
  int n = 0;
};
struct Coherent {
  cplx alpha{0.0, 0.0};
};
struct Thermal {
  double nbar = 0.0;
};
// S(xi)|0> with xi = r e^{i theta}, S = exp((xi* a^2 - xi a^dag^2)/2).
struct SqueezedVacuum {
  double r = 0.0;
  double theta = 0.0;
};
// (|alpha> + e^{i parity_phase} |-alpha>) / norm; parity_phase = 0 is the even cat.
struct Cat {
  cplx alpha{0.0, 0.0};
  double parity_phase = 0.0;
};
// sum_n (-tanh r)^n / cosh r |n, n>.
struct TwoModeSqueezedVacuum {
  double r = 0.0;
};
// (|1,0> + e^{i phase} |0,1>) / sqrt(2).
struct SplitPhoton {
  double phase = 0.0;
};
// Explicit number-basis density matrix; dimension must be truncation^modes.
struct RawMatrix {
  Matrix rho;
  int modes = 1;
};
struct Product;

}  // namespace field

using FieldStateSpec =
    std::variant<field::Fock, field::Coherent, field::Thermal, field::SqueezedVacuum, field::Cat,
                 field::TwoModeSqueezedVacuum, field::SplitPhoton, field::RawMatrix,
                 std::shared_ptr<const field::Product>>;

namespace field {
// Independent single-mode states on two modes.
struct Product {
  FieldStateSpec first;
  FieldStateSpec second;
};
}  // namespace field

FieldStateSpec product(FieldStateSpec first, FieldStateSpec second);

int mode_count(const FieldStateSpec& spec);
std::string describe(const FieldStateSpec& spec);

struct FieldState {
  DensityOperator rho;
  int modes = 1;
  int truncation = kDefaultTruncation;
  double leakage = 0.0;  // weight discarded by truncation, before renormalization
};

FieldState build_field(const FieldStateSpec& spec, int truncation = kDefaultTruncation,
                       double leakage_tol = kDefaultLeakageTol);

// Reads "row col re im" lines ('#' starts a comment) into a RawMatrix of the
// given dimension. Missing entries are zero.
field::RawMatrix parse_raw_matrix(std::istream& in, int dimension, int modes);

// Probe states. Basis order for one qubit is {|g>, |e>}; for two qubits
// {|gg>, |ge>, |eg>, |ee>}.
namespace probe {
struct Ground {};
struct Excited {};
// (|g> + e^{i phi}|e>)/sqrt(2)
struct PlusPhi {
  double phi = 0.0;
};
// (|g> - e^{i phi}|e>)/sqrt(2)
struct MinusPhi {
  double phi = 0.0;
};
// (|gg> + e^{i theta}|ee>)/sqrt(2)
struct BellPhiPlus {
  double theta = 0.0;
};
// (|gg> - e^{i theta}|ee>)/sqrt(2)
struct BellPhiMinus {
  double theta = 0.0;
};
// (|ge> + |eg>)/sqrt(2)
struct PsiPlus {};
}  // namespace probe

using ProbeStateSpec = std::variant<probe::Ground, probe::Excited, probe::PlusPhi, probe::MinusPhi,
                                    probe::BellPhiPlus, probe::BellPhiMinus, probe::PsiPlus>;

int qubit_count(const ProbeStateSpec& spec);
std::string describe(const ProbeStateSpec& spec);

Vector probe_vector(const ProbeStateSpec& spec);
DensityOperator build_probe(const ProbeStateSpec& spec);

DensityOperator compose(const DensityOperator& probe, const DensityOperator& field);
DensityOperator compose(const DensityOperator& probe, std::span<const DensityOperator> fields);

}  // namespace qprobe
