#include "qprobe/series_io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "qprobe/error.hpp"

namespace qprobe {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_series_csv(std::ostream& out, const PopulationSeries& s) {
  const auto& m = s.meta;
  out << "# run: " << m.description << '\n';
  out << "# projector: " << s.projector_label << '\n';
  out << "# provenance: " << to_string(s.provenance) << '\n';
  out << "# truncation: " << m.truncation << '\n';
  out << "# state_leakage: " << format_double(m.state_leakage) << '\n';
  out << "# max_top_population: " << format_double(m.max_top_population) << '\n';
  out << "# leakage_alarm: " << (m.leakage_alarm ? "true" : "false") << '\n';
  out << "# difference: " << (m.difference ? "true" : "false") << '\n';
  if (m.shots) out << "# shots: " << *m.shots << '\n';
  if (m.seed) out << "# seed: " << *m.seed << '\n';
  out << "tau,value\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << format_double(s.tau[i]) << ',' << format_double(s.values[i]) << '\n';
  }
}

PopulationSeries read_series_csv(std::istream& in) {
  PopulationSeries s;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      const std::string key = line.substr(2, colon - 2);
      const std::string val = line.substr(colon + 2);
      if (key == "run") s.meta.description = val;
      else if (key == "projector") s.projector_label = val;
      else if (key == "provenance") {
        for (auto p : {Provenance::Unitary, Provenance::Analytic, Provenance::Lindblad, Provenance::Sampled}) {
          if (to_string(p) == val) s.provenance = p;
        }
      } else if (key == "truncation") s.meta.truncation = std::stoi(val);
      else if (key == "state_leakage") s.meta.state_leakage = std::stod(val);
      else if (key == "max_top_population") s.meta.max_top_population = std::stod(val);
      else if (key == "leakage_alarm") s.meta.leakage_alarm = val == "true";
      else if (key == "difference") s.meta.difference = val == "true";
      else if (key == "shots") s.meta.shots = std::stoi(val);
      else if (key == "seed") s.meta.seed = std::stoull(val);
      continue;
    }
    if (!header) {
      if (line != "tau,value") throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected 'tau,value'");
      header = true;
      continue;
    }
    std::istringstream row(line);
    double t = 0.0;
    double v = 0.0;
    char comma = 0;
    if (!(row >> t >> comma >> v) || comma != ',') {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": malformed row");
    }
    s.tau.push_back(t);
    s.values.push_back(v);
  }
  validate(s);
  return s;
}

}  // namespace qprobe
