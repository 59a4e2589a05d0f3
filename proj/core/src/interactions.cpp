#include "qprobe/interactions.hpp"

#include <cmath>

#include "qprobe/error.hpp"

namespace qprobe {

std::string_view to_string(Interaction kind) {
  switch (kind) {
    case Interaction::JC1: return "JC1";
    case Interaction::JC2: return "JC2";
    case Interaction::TwoAtomJC: return "TwoAtomJC";
    case Interaction::ModeExchangeA: return "ModeExchangeA";
    case Interaction::ModeSqueezeB: return "ModeSqueezeB";
  }
  return "?";
}

Interaction parse_interaction(std::string_view name) {
  for (auto k : {Interaction::JC1, Interaction::JC2, Interaction::TwoAtomJC, Interaction::ModeExchangeA,
                 Interaction::ModeSqueezeB}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::BadParameter, "unknown interaction '" + std::string(name) + "'");
}

int required_qubits(Interaction kind) { return kind == Interaction::TwoAtomJC ? 2 : 1; }

int required_modes(Interaction kind) {
  return (kind == Interaction::ModeExchangeA || kind == Interaction::ModeSqueezeB) ? 2 : 1;
}

int default_truncation(Interaction kind) {
  // Two-mode spaces are dense squares of the per-mode truncation, so the
  // pair-creating coupling gets a modest bump rather than 60.
  switch (kind) {
    case Interaction::ModeSqueezeB: return 24;
    case Interaction::ModeExchangeA: return 16;
    default: return 40;
  }
}

namespace {

void check_space(Interaction kind, const HilbertSpace& space) {
  const int q = required_qubits(kind);
  const int m = required_modes(kind);
  bool ok = space.subsystem_count() == q + m;
  for (int k = 0; ok && k < q; ++k) ok = space.dim(k) == 2;
  if (!ok) {
    throw Error(ErrorCode::BadSpace, std::string(to_string(kind)) + " needs " + std::to_string(q) +
                                         " qubit(s) followed by " + std::to_string(m) + " mode(s)");
  }
}

Operator hermitian_pair(const Operator& raising_part) { return raising_part + raising_part.adjoint(); }

}  // namespace

Operator build_interaction(Interaction kind, const HilbertSpace& space) {
  check_space(kind, space);
  // Raising parts are plain tensor products of local factors.
  auto id = [](int d) { return Operator::identity(HilbertSpace({d})); };
  auto product = [](std::initializer_list<Operator> f) { return kron(std::span<const Operator>(f.begin(), f.size())); };

  switch (kind) {
    case Interaction::JC1:
      return hermitian_pair(product({ops::sigma_plus(), ops::annihilation(space.dim(1))}));
    case Interaction::JC2: {
      const Operator a = ops::annihilation(space.dim(1));
      return hermitian_pair(product({ops::sigma_plus(), a * a}));
    }
    case Interaction::TwoAtomJC: {
      const Operator a = ops::annihilation(space.dim(2));
      return hermitian_pair(product({ops::sigma_plus(), id(2), a}) + product({id(2), ops::sigma_plus(), a}));
    }
    case Interaction::ModeExchangeA:
      return hermitian_pair(
          product({ops::sigma_plus(), ops::annihilation(space.dim(1)), ops::creation(space.dim(2))}));
    case Interaction::ModeSqueezeB:
      return hermitian_pair(product({ops::sigma_plus(), ops::creation(space.dim(1)), ops::creation(space.dim(2))}));
  }
  throw Error(ErrorCode::BadParameter, "unhandled interaction");
}

std::string_view to_string(Projector p) {
  switch (p) {
    case Projector::Excited: return "e";
    case Projector::Ground: return "g";
    case Projector::PsiPlus: return "psi+";
  }
  return "?";
}

Projector parse_projector(std::string_view name) {
  for (auto p : {Projector::Excited, Projector::Ground, Projector::PsiPlus}) {
    if (to_string(p) == name) return p;
  }
  throw Error(ErrorCode::BadParameter, "unknown projector '" + std::string(name) + "'");
}

Operator build_projector(Projector p, const HilbertSpace& space) {
  const int needed = p == Projector::PsiPlus ? 2 : 1;
  if (space.subsystem_count() < needed + 1) throw Error(ErrorCode::BadSpace, "projector needs probe and field");

  Operator local;
  if (p == Projector::PsiPlus) {
    Matrix m = Matrix::Zero(4, 4);
    m(1, 1) = m(1, 2) = m(2, 1) = m(2, 2) = 0.5;
    local = Operator(HilbertSpace({2, 2}), m);
  } else {
    local = p == Projector::Excited ? ops::excited_projector() : ops::ground_projector();
  }
  std::vector<int> rest(space.dims().begin() + needed, space.dims().end());
  return kron(local, Operator::identity(HilbertSpace(rest)));
}

Operator top_level_projector(const HilbertSpace& space, int probe_qubits) {
  const auto n = static_cast<Eigen::Index>(space.total_dim());
  Matrix m = Matrix::Zero(n, n);
  const int subs = space.subsystem_count();
  for (Eigen::Index idx = 0; idx < n; ++idx) {
    auto rem = static_cast<std::size_t>(idx);
    bool top = false;
    for (int k = subs - 1; k >= 0; --k) {
      const auto d = static_cast<std::size_t>(space.dim(k));
      const std::size_t digit = rem % d;
      rem /= d;
      if (k >= probe_qubits && digit == d - 1) top = true;
    }
    if (top) m(idx, idx) = 1.0;
  }
  return Operator(space, m);
}

}  // namespace qprobe
