#pragma once

// Ground-truth field moments from a known density matrix.
//
// Each observable is evaluated twice: as a trace against an operator built
// from truncated ladder operators (direct_moment) and as an explicit sum over
// number-basis matrix elements (series_moment). Squared quadratures are
// normal ordered in both routes so that the hard truncation of a a^dag at the
// top level does not enter.

#include "qprobe/extraction.hpp"
#include "qprobe/opsalg.hpp"

namespace qprobe {

struct ObservableSpec {
  Observable observable = Observable::X;
  double phi1 = 0.0;  // single-mode phase, or phi_1 for two-mode observables
  double phi2 = 0.0;
  int mode = 0;       // which mode single-mode observables refer to
  double a0 = 1.0;    // Duan operators
  int sign1 = -1;
  int sign2 = 1;
};

double direct_moment(const DensityOperator& rho_f, const ObservableSpec& spec);
double series_moment(const DensityOperator& rho_f, const ObservableSpec& spec);

}  // namespace qprobe
