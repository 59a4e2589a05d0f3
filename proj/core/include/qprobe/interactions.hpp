#pragma once

// The five probe-field couplings, in units of hbar*g (g = 1):
//
//   JC1            sigma+ a       + sigma- a^dag
//   JC2            sigma+ a^2     + sigma- a^dag^2
//   TwoAtomJC      (s1+ + s2+) a  + (s1- + s2-) a^dag
//   ModeExchangeA  sigma+ a1 a2^dag + sigma- a1^dag a2
//   ModeSqueezeB   sigma+ a1^dag a2^dag + sigma- a1 a2

#include <string>
#include <string_view>

#include "qprobe/opsalg.hpp"

namespace qprobe {

enum class Interaction { JC1, JC2, TwoAtomJC, ModeExchangeA, ModeSqueezeB };

std::string_view to_string(Interaction kind);
Interaction parse_interaction(std::string_view name);

int required_qubits(Interaction kind);
int required_modes(Interaction kind);

// Recommended per-mode truncation; photon-creating couplings need more room.
int default_truncation(Interaction kind);

Operator build_interaction(Interaction kind, const HilbertSpace& space);

// Probe measurement projectors, extended by the identity on every mode.
enum class Projector { Excited, Ground, PsiPlus };

std::string_view to_string(Projector p);
Projector parse_projector(std::string_view name);
Operator build_projector(Projector p, const HilbertSpace& space);

// Projector onto states where any mode sits in its top Fock level. Its
// population is the truncation-leakage alarm signal.
Operator top_level_projector(const HilbertSpace& space, int probe_qubits);

}  // namespace qprobe
