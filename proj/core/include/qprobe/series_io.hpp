#pragma once

// Population series as CSV: '#'-prefixed metadata lines, then a "tau,value"
// header and one row per sample. The layout loads directly in gnuplot
// (set datafile separator ',') and in most dataframe readers with comment='#'.

#include <iosfwd>
#include <string>

#include "qprobe/evolution.hpp"

namespace qprobe {

void write_series_csv(std::ostream& out, const PopulationSeries& s);
PopulationSeries read_series_csv(std::istream& in);

// Shortest round-trip decimal form of a double.
std::string format_double(double x);

}  // namespace qprobe
