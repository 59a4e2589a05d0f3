#include "scenario.hpp"

#include <algorithm>
#include <fstream>
#include <cstdlib>
#include <initializer_list>
#include <numbers>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include <qprobe/error.hpp>

namespace qprobe::scenario {

namespace {

class Parser {
 public:
  explicit Parser(std::filesystem::path source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
    std::ostringstream os;
    os << source_.string();
    if (at.IsDefined() && at.Mark().line >= 0) os << ':' << at.Mark().line + 1;
    os << ": " << msg;
    throw ValidationError(os.str());
  }

  void require_map(const YAML::Node& n, const std::string& what) const {
    if (!n.IsMap()) fail(n, what + " must be a mapping");
  }

  void allow_keys(const YAML::Node& n, std::initializer_list<const char*> keys, const std::string& what) const {
    require_map(n, what);
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& kv : n) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) {
        std::string list;
        for (const auto& k : allowed) list += (list.empty() ? "" : ", ") + k;
        fail(kv.first, "unknown key '" + key + "' in " + what + " (allowed: " + list + ")");
      }
    }
  }

  template <typename T>
  T get(const YAML::Node& n, const std::string& what) const {
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, "bad value for " + what);
    }
  }

  template <typename T>
  T get_or(const YAML::Node& parent, const char* key, T fallback) const {
    const YAML::Node n = parent[key];
    return n ? get<T>(n, key) : fallback;
  }

  template <typename T>
  T need(const YAML::Node& parent, const char* key, const std::string& what) const {
    const YAML::Node n = parent[key];
    if (!n) fail(parent, what + " needs '" + key + "'");
    return get<T>(n, key);
  }

  cplx complex_value(const YAML::Node& n, const std::string& what) const {
    if (n.IsSequence()) {
      if (n.size() != 2) fail(n, what + " must be a number or [re, im]");
      return {get<double>(n[0], what), get<double>(n[1], what)};
    }
    return {get<double>(n, what), 0.0};
  }

  FieldStateSpec field(const YAML::Node& n, int truncation) const {
    require_map(n, "field");
    const auto type = need<std::string>(n, "type", "field");
    if (type == "fock") {
      allow_keys(n, {"type", "n"}, "fock field");
      const int k = need<int>(n, "n", "fock field");
      if (k < 0) fail(n["n"], "photon number must be >= 0");
      return field::Fock{k};
    }
    if (type == "coherent") {
      allow_keys(n, {"type", "alpha"}, "coherent field");
      if (!n["alpha"]) fail(n, "coherent field needs 'alpha'");
      return field::Coherent{complex_value(n["alpha"], "alpha")};
    }
    if (type == "thermal") {
      allow_keys(n, {"type", "nbar"}, "thermal field");
      const double nbar = need<double>(n, "nbar", "thermal field");
      if (nbar < 0.0) fail(n["nbar"], "nbar must be >= 0");
      return field::Thermal{nbar};
    }
    if (type == "squeezed") {
      allow_keys(n, {"type", "r", "theta"}, "squeezed field");
      return field::SqueezedVacuum{need<double>(n, "r", "squeezed field"), get_or<double>(n, "theta", 0.0)};
    }
    if (type == "cat") {
      allow_keys(n, {"type", "alpha", "parity"}, "cat field");
      if (!n["alpha"]) fail(n, "cat field needs 'alpha'");
      double phase = 0.0;
      if (const auto p = n["parity"]) {
        const auto s = get<std::string>(p, "parity");
        if (s == "even") phase = 0.0;
        else if (s == "odd") phase = std::numbers::pi;
        else phase = get<double>(p, "parity");
      }
      return field::Cat{complex_value(n["alpha"], "alpha"), phase};
    }
    if (type == "tmsv") {
      allow_keys(n, {"type", "r"}, "two-mode squeezed field");
      return field::TwoModeSqueezedVacuum{need<double>(n, "r", "tmsv field")};
    }
    if (type == "split_photon") {
      allow_keys(n, {"type", "phase"}, "split-photon field");
      return field::SplitPhoton{get_or<double>(n, "phase", 0.0)};
    }
    if (type == "product") {
      allow_keys(n, {"type", "first", "second"}, "product field");
      if (!n["first"] || !n["second"]) fail(n, "product field needs 'first' and 'second'");
      auto a = field(n["first"], truncation);
      auto b = field(n["second"], truncation);
      if (mode_count(a) != 1 || mode_count(b) != 1) fail(n, "product factors must be single-mode states");
      return product(std::move(a), std::move(b));
    }
    if (type == "raw") {
      allow_keys(n, {"type", "file", "modes"}, "raw field");
      const int modes = get_or<int>(n, "modes", 1);
      if (modes != 1 && modes != 2) fail(n, "raw field modes must be 1 or 2");
      if (truncation <= 0) fail(n, "raw field needs an explicit top-level 'truncation'");
      auto path = std::filesystem::path(need<std::string>(n, "file", "raw field"));
      if (path.is_relative()) path = source_.parent_path() / path;
      std::ifstream in(path);
      if (!in) fail(n["file"], "cannot open " + path.string());
      int dim = 1;
      for (int m = 0; m < modes; ++m) dim *= truncation;
      try {
        return parse_raw_matrix(in, dim, modes);
      } catch (const Error& e) {
        fail(n["file"], path.string() + ": " + e.what());
      }
    }
    fail(n["type"], "unknown field type '" + type + "'");
  }

  ProbeStateSpec probe(const YAML::Node& n) const {
    require_map(n, "probe");
    const auto type = need<std::string>(n, "type", "probe");
    if (type == "ground" || type == "excited" || type == "psi_plus") {
      allow_keys(n, {"type"}, type + " probe");
      if (type == "ground") return probe::Ground{};
      if (type == "excited") return probe::Excited{};
      return probe::PsiPlus{};
    }
    if (type == "plus" || type == "minus") {
      allow_keys(n, {"type", "phi"}, type + " probe");
      const double phi = get_or<double>(n, "phi", 0.0);
      if (type == "plus") return probe::PlusPhi{phi};
      return probe::MinusPhi{phi};
    }
    if (type == "bell_plus" || type == "bell_minus") {
      allow_keys(n, {"type", "theta"}, type + " probe");
      const double theta = get_or<double>(n, "theta", 0.0);
      if (type == "bell_plus") return probe::BellPhiPlus{theta};
      return probe::BellPhiMinus{theta};
    }
    fail(n["type"], "unknown probe type '" + type + "'");
  }

  MeasurementRequest observable(const YAML::Node& n) const {
    if (n.IsScalar()) {
      MeasurementRequest r;
      r.observable = parse_enum<Observable>(n, [](std::string_view s) { return parse_observable(s); });
      return r;
    }
    allow_keys(n, {"name", "phi", "phi1", "phi2", "mode", "protocol", "homodyne", "a0", "signs"}, "observable");
    if (!n["name"]) fail(n, "observable needs 'name'");
    MeasurementRequest r;
    r.observable = parse_enum<Observable>(n["name"], [](std::string_view s) { return parse_observable(s); });
    const bool two_mode = is_two_mode(r.observable);
    if (two_mode && n["phi"]) fail(n["phi"], "two-mode observables take phi1 and phi2");
    if (!two_mode && (n["phi1"] || n["phi2"])) fail(n, "single-mode observables take phi");
    if (two_mode && n["mode"]) fail(n["mode"], "two-mode observables take no mode index");
    r.phi1 = two_mode ? get_or<double>(n, "phi1", 0.0) : get_or<double>(n, "phi", 0.0);
    r.phi2 = get_or<double>(n, "phi2", 0.0);
    r.mode = get_or<int>(n, "mode", 0);
    r.homodyne = get_or<bool>(n, "homodyne", false);
    if (const auto p = n["protocol"]) {
      r.protocol = parse_enum<SecondMomentProtocol>(p, [](std::string_view s) { return parse_second_moment_protocol(s); });
    }
    const bool duan = r.observable == Observable::VarU || r.observable == Observable::VarV ||
                      r.observable == Observable::DuanSum;
    if (!duan && (n["a0"] || n["signs"])) fail(n, "a0 and signs only apply to VarU, VarV and DuanSum");
    r.a0 = get_or<double>(n, "a0", 1.0);
    if (!(r.a0 > 0.0)) fail(n["a0"], "a0 must be positive");
    if (const auto s = n["signs"]) {
      if (!s.IsSequence() || s.size() != 2) fail(s, "signs must be a pair like [-1, 1]");
      r.sign1 = get<int>(s[0], "signs");
      r.sign2 = get<int>(s[1], "signs");
      if (std::abs(r.sign1) != 1 || std::abs(r.sign2) != 1) fail(s, "signs must be +1 or -1");
    }
    return r;
  }

  void estimator_fields(const YAML::Node& e, EstimatorConfig& c) const {
    c.step = get_or<double>(e, "step", c.step);
    c.stencil = get_or<int>(e, "stencil", c.stencil);
    if (c.stencil != 2 && c.stencil != 4) fail(e["stencil"], "stencil must be 2 or 4");
    c.richardson_levels = get_or<int>(e, "levels", c.richardson_levels);
    c.poly_degree = get_or<int>(e, "degree", c.poly_degree);
    c.poly_window = get_or<double>(e, "window", c.poly_window);
    c.poly_points = get_or<int>(e, "points", c.poly_points);
    c.poly_weighted = get_or<bool>(e, "weighted", c.poly_weighted);
    c.kernel_width = get_or<double>(e, "width", c.kernel_width);
    c.kernel_halvings = get_or<int>(e, "halvings", c.kernel_halvings);
    c.kernel_extent = get_or<double>(e, "extent", c.kernel_extent);
    if (!(c.step > 0) || !(c.poly_window > 0) || !(c.kernel_width > 0) || !(c.kernel_extent > 0)) {
      fail(e, "step, window, width and extent must be positive");
    }
    if (c.poly_degree < 2) fail(e["degree"], "polynomial degree must be >= 2");
    if (c.richardson_levels < 1 || c.kernel_halvings < 0 || c.poly_points < 3) fail(e, "bad estimator size");
  }

  template <typename E, typename F>
  E parse_enum(const YAML::Node& n, F parse) const {
    const auto s = get<std::string>(n, "name");
    try {
      return parse(s);
    } catch (const Error& e) {
      fail(n, e.what());
    }
  }

 private:
  std::filesystem::path source_;
};

}  // namespace

EstimatorConfig exact_data_estimator() {
  EstimatorConfig c = EstimatorConfig::noiseless();
  c.step = 0.01;
  c.poly_degree = 8;
  c.poly_window = 0.2;
  c.kernel_halvings = 2;
  return c;
}

Scenario parse(const std::string& text, const std::filesystem::path& source) {
  const Parser p(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ValidationError(source.string() + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw ValidationError(source.string() + ": scenario must be a YAML mapping");
  p.allow_keys(root,
               {"schema", "name", "description", "field", "truncation", "leakage_tol", "grid", "estimator", "noise",
                "seed", "observables", "runs", "output", "escalate_leakage", "compare"},
               "scenario");

  Scenario s;
  s.source = source;
  if (!root["schema"]) p.fail(root, "missing 'schema' (expected " + std::to_string(kSchemaVersion) + ")");
  if (p.get<int>(root["schema"], "schema") != kSchemaVersion) {
    p.fail(root["schema"], "unsupported schema version (expected " + std::to_string(kSchemaVersion) + ")");
  }
  s.name = root["name"] ? p.get<std::string>(root["name"], "name") : source.stem().string();
  if (s.name.empty() || s.name.find_first_of("/\\") != std::string::npos) p.fail(root["name"], "bad scenario name");
  s.description = p.get_or<std::string>(root, "description", "");
  s.truncation = p.get_or<int>(root, "truncation", 0);
  if (root["truncation"] && s.truncation < 2) p.fail(root["truncation"], "truncation must be >= 2");
  s.leakage_tol = p.get_or<double>(root, "leakage_tol", kDefaultLeakageTol);
  s.escalate_leakage = p.get_or<bool>(root, "escalate_leakage", true);
  s.seed = p.get_or<std::uint64_t>(root, "seed", s.seed);

  if (!root["field"]) p.fail(root, "missing 'field'");
  s.field = p.field(root["field"], s.truncation);

  if (const auto g = root["grid"]) {
    p.allow_keys(g, {"min", "max", "points"}, "grid");
    s.grid.min = p.get_or<double>(g, "min", s.grid.min);
    s.grid.max = p.get_or<double>(g, "max", s.grid.max);
    s.grid.points = p.get_or<int>(g, "points", s.grid.points);
    if (s.grid.points < 3 || !(s.grid.max > s.grid.min)) p.fail(g, "grid needs max > min and at least 3 points");
  }

  if (const auto n = root["noise"]) {
    p.allow_keys(n, {"shots", "lindblad"}, "noise");
    if (const auto sh = n["shots"]) {
      s.shots = p.get<int>(sh, "shots");
      if (*s.shots < 1) p.fail(sh, "shots must be >= 1");
    }
    if (const auto l = n["lindblad"]) {
      p.allow_keys(l, {"field_decay", "probe_decay", "probe_dephasing", "step", "max_halvings"}, "lindblad");
      LindbladSpec spec;
      spec.field_decay = p.get_or<double>(l, "field_decay", 0.0);
      spec.probe_decay = p.get_or<double>(l, "probe_decay", 0.0);
      spec.probe_dephasing = p.get_or<double>(l, "probe_dephasing", 0.0);
      if (spec.field_decay < 0 || spec.probe_decay < 0 || spec.probe_dephasing < 0) p.fail(l, "rates must be >= 0");
      s.lindblad = spec;
      s.lindblad_options.step = p.get_or<double>(l, "step", s.lindblad_options.step);
      s.lindblad_options.max_halvings = p.get_or<int>(l, "max_halvings", s.lindblad_options.max_halvings);
    }
  }

  // Noisy data defaults to the weighted polynomial fit.
  if (s.shots || s.lindblad) {
    s.estimator = EstimatorConfig::sampled(s.shots.value_or(0));
    s.estimator.poly_weighted = s.shots.has_value();
  }
  if (const auto e = root["estimator"]) {
    p.allow_keys(e,
                 {"method", "step", "stencil", "levels", "degree", "window", "points", "weighted", "width", "halvings",
                  "extent"},
                 "estimator");
    if (const auto m = e["method"]) {
      s.estimator.method = p.parse_enum<Method>(m, [](std::string_view v) { return parse_method(v); });
      s.method_given = true;
    }
    p.estimator_fields(e, s.estimator);
  }
  s.estimator.shots = s.shots.value_or(0);

  if (const auto obs = root["observables"]) {
    if (!obs.IsSequence()) p.fail(obs, "observables must be a list");
    for (const auto& o : obs) s.observables.push_back(p.observable(o));
  }
  if (const auto runs = root["runs"]) {
    if (!runs.IsSequence()) p.fail(runs, "runs must be a list");
    for (const auto& r : runs) {
      p.allow_keys(r, {"interaction", "probe", "projector", "mode"}, "run");
      ExplicitRun er;
      er.line = r.Mark().line + 1;
      if (!r["interaction"] || !r["probe"] || !r["projector"]) p.fail(r, "run needs interaction, probe and projector");
      er.spec.interaction = p.parse_enum<Interaction>(r["interaction"], [](std::string_view v) { return parse_interaction(v); });
      er.spec.probe = p.probe(r["probe"]);
      er.spec.projector = p.parse_enum<Projector>(r["projector"], [](std::string_view v) { return parse_projector(v); });
      er.spec.mode = p.get_or<int>(r, "mode", 0);
      er.mode_given = static_cast<bool>(r["mode"]);
      s.runs.push_back(std::move(er));
    }
  }
  if (s.observables.empty() && s.runs.empty()) p.fail(root, "scenario requests no observables and no runs");

  if (const auto o = root["output"]) {
    p.allow_keys(o, {"dir", "series"}, "output");
    if (const auto d = o["dir"]) s.output_dir = p.get<std::string>(d, "output.dir");
    s.write_series = p.get_or<bool>(o, "series", true);
  }
  if (const auto c = root["compare"]) {
    p.allow_keys(c, {"seeds", "shots", "kernel_widths", "noiseless"}, "compare");
    s.compare.seeds = p.get_or<int>(c, "seeds", s.compare.seeds);
    s.compare.shots = p.get_or<int>(c, "shots", s.compare.shots);
    if (const auto w = c["kernel_widths"]) s.compare.kernel_widths = p.get<std::vector<double>>(w, "kernel_widths");
    if (const auto n = c["noiseless"]) {
      p.allow_keys(n, {"step", "stencil", "levels", "degree", "window", "points", "width", "halvings", "extent"},
                   "compare.noiseless");
      p.estimator_fields(n, s.compare.noiseless);
    }
    if (s.compare.seeds < 2 || s.compare.shots < 1) p.fail(c, "compare needs seeds >= 2 and shots >= 1");
  }
  return s;
}

Scenario load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot open scenario file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

int effective_truncation(const Scenario& s, std::optional<int> override_truncation) {
  if (override_truncation) return *override_truncation;
  if (s.truncation > 0) return s.truncation;
  int n = 0;
  for (const auto& r : s.observables) {
    switch (r.observable) {
      case Observable::A: n = std::max(n, default_truncation(Interaction::ModeExchangeA)); break;
      case Observable::B:
      case Observable::X2TwoMode:
      case Observable::Y2TwoMode:
      case Observable::VarU:
      case Observable::VarV:
      case Observable::DuanSum: n = std::max(n, default_truncation(Interaction::ModeSqueezeB)); break;
      default: n = std::max(n, default_truncation(Interaction::JC1)); break;
    }
  }
  for (const auto& r : s.runs) n = std::max(n, default_truncation(r.spec.interaction));
  return n > 0 ? n : kDefaultTruncation;
}

void validate(const Scenario& s) {
  const int modes = mode_count(s.field);
  const std::string where = s.source.string();
  for (const auto& r : s.observables) {
    if (is_two_mode(r.observable) && modes != 2) {
      throw ValidationError(where + ": observable " + std::string(to_string(r.observable)) + " needs a two-mode field");
    }
    if (!is_two_mode(r.observable) && (r.mode < 0 || r.mode >= modes)) {
      throw ValidationError(where + ": observable " + std::string(to_string(r.observable)) + " refers to mode " +
                            std::to_string(r.mode) + " of a " + std::to_string(modes) + "-mode field");
    }
  }
  for (const auto& r : s.runs) {
    const auto& spec = r.spec;
    const std::string at = where + ":" + std::to_string(r.line) + ": ";
    if (required_modes(spec.interaction) != 1 && modes != required_modes(spec.interaction)) {
      throw ValidationError(at + std::string(to_string(spec.interaction)) + " needs a two-mode field");
    }
    if (required_modes(spec.interaction) == 1 && (spec.mode < 0 || spec.mode >= modes)) {
      throw ValidationError(at + std::string(to_string(spec.interaction)) + " run refers to mode " +
                            std::to_string(spec.mode) + " of a " + std::to_string(modes) + "-mode field");
    }
    if (required_modes(spec.interaction) == 1 && modes != 1 && !r.mode_given) {
      throw ValidationError(at + std::string(to_string(spec.interaction)) + " couples to a single mode; name it with "
                            "`mode` on a " + std::to_string(modes) + "-mode field");
    }
    if (qubit_count(spec.probe) != required_qubits(spec.interaction)) {
      throw ValidationError(at + "probe " + describe(spec.probe) + " does not fit " +
                            std::string(to_string(spec.interaction)));
    }
    if ((spec.projector == Projector::PsiPlus) != (required_qubits(spec.interaction) == 2)) {
      throw ValidationError(at + "projector " + std::string(to_string(spec.projector)) + " does not fit " +
                            std::string(to_string(spec.interaction)));
    }
  }
  if (s.lindblad && s.grid.min < 0.0) {
    throw ValidationError(where + ": Lindblad evolution runs forward only; grid.min must be >= 0");
  }
  if ((s.shots || s.lindblad) && (s.estimator.method == Method::Richardson)) {
    throw ValidationError(where + ": richardson needs exact populations; use polyfit, central_fd or kernel_integral");
  }
}

}  // namespace qprobe::scenario
