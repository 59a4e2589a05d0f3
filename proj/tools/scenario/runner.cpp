#include "runner.hpp"

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include <qprobe/error.hpp>
#include <qprobe/series_io.hpp>

#ifndef QPROBE_VERSION
#define QPROBE_VERSION "0.0.0"
#endif

namespace qprobe::scenario {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double x, const char* fmt = "%.10g") {
  if (!std::isfinite(x)) return "n/a";
  char buf[48];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json header() { return {{"timestamp", utc_timestamp()}, {"version", version()}}; }

json nullable(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

json estimate_json(const DerivativeEstimate& d) {
  return {{"order", d.order},
          {"method", to_string(d.method)},
          {"value", d.value},
          {"step_or_width", d.step_or_width},
          {"error_estimate", d.error_estimate},
          {"fit_residual", d.fit_residual},
          {"points_used", d.points_used}};
}

json request_json(const MeasurementRequest& r) {
  json j;
  if (is_two_mode(r.observable)) {
    j["phi1"] = r.phi1;
    j["phi2"] = r.phi2;
  } else {
    j["phi"] = r.phi1;
    j["mode"] = r.mode;
  }
  switch (r.observable) {
    case Observable::X2:
    case Observable::Y2:
    case Observable::VarX:
    case Observable::VarY: j["protocol"] = to_string(r.protocol); break;
    case Observable::VarU:
    case Observable::VarV:
    case Observable::DuanSum:
      j["a0"] = r.a0;
      j["signs"] = {r.sign1, r.sign2};
      break;
    default: break;
  }
  if (r.observable == Observable::X || r.observable == Observable::Y || r.observable == Observable::VarX ||
      r.observable == Observable::VarY) {
    j["homodyne"] = r.homodyne;
  }
  return j;
}

json result_json(const MeasurementRequest& r, const MomentResult& m) {
  json inputs = json::array();
  for (const auto& d : m.inputs) inputs.push_back(estimate_json(d));
  return {{"observable", to_string(m.observable)},
          {"request", request_json(r)},
          {"extracted", m.extracted},
          {"oracle", nullable(m.oracle)},
          {"gap", nullable(m.gap())},
          {"error_estimate", m.error_estimate},
          {"probe_phases", m.phases},
          {"inputs", inputs},
          {"note", m.note}};
}

std::string series_file(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run-%03zu.csv", index);
  return buf;
}

json manifest_json(const std::vector<RunRecord>& runs, bool with_files) {
  json out = json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    json j = {{"id", r.spec.id()},
              {"interaction", to_string(r.spec.interaction)},
              {"probe", describe(r.spec.probe)},
              {"projector", to_string(r.spec.projector)},
              {"purposes", r.purposes},
              {"stream", r.stream}};
    if (required_modes(r.spec.interaction) == 1) j["mode"] = r.spec.mode;
    if (r.series) {
      j["max_top_population"] = r.series->meta.max_top_population;
      j["leakage_alarm"] = r.series->meta.leakage_alarm;
      if (with_files) j["series"] = "series/" + series_file(i);
    }
    out.push_back(std::move(j));
  }
  return out;
}

json grid_json(const GridSpec& g) { return {{"min", g.min}, {"max", g.max}, {"points", g.points}}; }

json estimator_json(const EstimatorConfig& c) {
  json j = {{"method", to_string(c.method)}};
  switch (c.method) {
    case Method::CentralFd: j["step"] = c.step; j["stencil"] = c.stencil; break;
    case Method::Richardson: j["step"] = c.step; j["levels"] = c.richardson_levels; break;
    case Method::Polyfit:
      j["degree"] = c.poly_degree;
      j["window"] = c.poly_window;
      j["points"] = c.poly_points;
      j["weighted"] = c.poly_weighted;
      break;
    case Method::KernelIntegral:
      j["width"] = c.kernel_width;
      j["halvings"] = c.kernel_halvings;
      j["extent"] = c.kernel_extent;
      break;
  }
  return j;
}

json noise_json(const Scenario& s) {
  json j = json::object();
  if (s.shots) j["shots"] = *s.shots;
  if (s.lindblad) {
    j["lindblad"] = {{"field_decay", s.lindblad->field_decay},
                     {"probe_decay", s.lindblad->probe_decay},
                     {"probe_dephasing", s.lindblad->probe_dephasing},
                     {"step", s.lindblad_options.step}};
  }
  return j;
}

std::uint64_t seed_of(const Scenario& s, const RunOptions& o) { return o.seed.value_or(s.seed); }

LabOptions lab_options(const Scenario& s, const RunOptions& o) {
  LabOptions lo;
  lo.estimator = s.estimator;
  lo.grid = linspace(s.grid.min, s.grid.max, s.grid.points);
  if (s.shots) lo.shots = ShotSpec{*s.shots, seed_of(s, o)};
  lo.lindblad = s.lindblad;
  lo.lindblad_options = s.lindblad_options;
  lo.jobs = std::max(1, o.jobs);
  return lo;
}

std::string display_name(const MeasurementRequest& r) {
  std::string n(to_string(r.observable));
  if (is_two_mode(r.observable)) return n + "(" + num(r.phi1, "%g") + "," + num(r.phi2, "%g") + ")";
  if (r.observable == Observable::N) return n + "[m" + std::to_string(r.mode) + "]";
  return n + "(" + num(r.phi1, "%g") + ")[m" + std::to_string(r.mode) + "]";
}

// Stages into a sibling directory, then swaps it into place.
void publish(const fs::path& target, const std::function<void(const fs::path&)>& fill) {
  const fs::path parent = target.parent_path();
  fs::create_directories(parent);
  const std::string tag = std::to_string(::getpid()) + "-" +
                          std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()) % 100000);
  const fs::path staging = parent / ("." + target.filename().string() + ".staging-" + tag);
  const fs::path retired = parent / ("." + target.filename().string() + ".old-" + tag);
  fs::remove_all(staging);
  fs::create_directories(staging);
  try {
    fill(staging);
  } catch (...) {
    fs::remove_all(staging);
    throw;
  }
  fs::remove_all(retired);
  if (fs::exists(target)) fs::rename(target, retired);
  fs::rename(staging, target);
  fs::remove_all(retired);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return std::nan("");
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Least-squares slope of log(err) against log(width).
double loglog_slope(const std::vector<double>& widths, const std::vector<double>& errors) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (errors[i] > 0.0 && std::isfinite(errors[i])) pts.emplace_back(std::log(widths[i]), std::log(errors[i]));
  }
  if (pts.size() < 2) return std::nan("");
  double mx = 0, my = 0;
  for (auto [x, y] : pts) mx += x, my += y;
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxy = 0, sxx = 0;
  for (auto [x, y] : pts) sxy += (x - mx) * (y - my), sxx += (x - mx) * (x - mx);
  return sxy / sxx;
}

constexpr Method kMethods[] = {Method::CentralFd, Method::Richardson, Method::Polyfit, Method::KernelIntegral};

}  // namespace

std::string version() { return QPROBE_VERSION; }

fs::path output_root(const Scenario& s, const RunOptions& o) {
  if (o.out) return *o.out;
  if (s.output_dir) {
    if (s.output_dir->is_absolute()) return *s.output_dir;
    return s.source.parent_path() / *s.output_dir;
  }
  return fs::path("results");
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return kExitValidation;
  if (const auto* q = dynamic_cast<const Error*>(&e)) return q->is_numerical() ? kExitNumerical : kExitValidation;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return kExitIo;
  return kExitIo;
}

json plan(const Scenario& s, const RunOptions& o) {
  validate(s);
  const int n = effective_truncation(s, o.truncation);
  Laboratory lab = Laboratory::planner(mode_count(s.field), n);
  for (const auto& r : s.observables) {
    if (r.observable == Observable::DuanSum) lab.duan(r);
    else lab.measure(r);
  }
  for (const auto& r : s.runs) lab.signal(r.spec, "explicit run (line " + std::to_string(r.line) + ")");
  return {{"scenario", s.name}, {"truncation", n}, {"runs", manifest_json(lab.runs(), false)}};
}

Report run(const Scenario& s, const RunOptions& o) {
  validate(s);
  const int n = effective_truncation(s, o.truncation);
  Laboratory lab(build_field(s.field, n, s.leakage_tol), lab_options(s, o));

  json results = json::array();
  json duan = json::array();
  std::ostringstream table;
  table << "scenario " << s.name << "  field " << describe(s.field) << "  N=" << n << "\n";
  table << pad("observable", 24) << pad("extracted", 18) << pad("oracle", 18) << pad("gap", 12) << pad("err.est", 12)
        << "method\n";

  for (const auto& r : s.observables) {
    MomentResult m;
    if (r.observable == Observable::DuanSum) {
      DuanResult d = lab.duan(r);
      m = d.total;
      duan.push_back({{"request", request_json(r)},
                      {"sum", d.sum},
                      {"bound", d.bound},
                      {"violates", d.violates},
                      {"var_u", result_json(r, d.var_u)},
                      {"var_v", result_json(r, d.var_v)}});
    } else {
      m = lab.measure(r);
    }
    results.push_back(result_json(r, m));
    const std::string method = m.inputs.empty() ? "-" : std::string(to_string(m.inputs.front().method));
    table << pad(display_name(r), 24) << pad(num(m.extracted), 18)
          << pad(m.oracle ? num(*m.oracle) : "-", 18) << pad(m.gap() ? num(*m.gap(), "%.2e") : "-", 12)
          << pad(num(m.error_estimate, "%.2e"), 12) << method;
    if (!m.note.empty()) table << "  " << m.note;
    table << "\n";
  }
  for (const auto& r : s.runs) lab.signal(r.spec, "explicit run (line " + std::to_string(r.line) + ")");

  const auto& runs = lab.runs();
  std::vector<std::string> alarms;
  for (const auto& r : runs) {
    if (r.series && r.series->meta.leakage_alarm) alarms.push_back(r.spec.id());
  }
  table << runs.size() << " preparations (companion runs included)";
  if (!alarms.empty()) table << "; truncation leakage alarm on " << alarms.size();
  table << "\n";

  json body = {{"schema", kSchemaVersion},
               {"scenario", {{"name", s.name}, {"description", s.description}, {"file", s.source.filename().string()}}},
               {"field", {{"state", describe(s.field)}, {"modes", lab.field().modes}, {"leakage", lab.field().leakage}}},
               {"truncation", n},
               {"seed", seed_of(s, o)},
               {"grid", grid_json(s.grid)},
               {"estimator", estimator_json(s.estimator)},
               {"noise", noise_json(s)},
               {"manifest", manifest_json(runs, s.write_series)},
               {"results", results},
               {"duan", duan},
               {"leakage_alarms", alarms}};

  Report rep;
  rep.document = {{"header", header()}, {"body", body}};
  rep.table = table.str();
  if (!alarms.empty() && s.escalate_leakage) {
    rep.exit_code = kExitNumerical;
    rep.message = "truncation leakage alarm in " + std::to_string(alarms.size()) + " run(s); raise truncation";
  }
  if (o.write) {
    rep.directory = output_root(s, o) / s.name;
    publish(rep.directory, [&](const fs::path& dir) {
      write_text(dir / "results.json", rep.document.dump(2) + "\n");
      if (!s.write_series) return;
      fs::create_directories(dir / "series");
      for (std::size_t i = 0; i < runs.size(); ++i) {
        if (!runs[i].series) continue;
        std::ostringstream csv;
        write_series_csv(csv, *runs[i].series);
        write_text(dir / "series" / series_file(i), csv.str());
      }
    });
  }
  return rep;
}

Report compare(const Scenario& s, const RunOptions& o) {
  validate(s);
  const int n = effective_truncation(s, o.truncation);
  const FieldState field = build_field(s.field, n, s.leakage_tol);
  const std::uint64_t seed = seed_of(s, o);

  LabOptions exact = lab_options(s, o);
  exact.shots.reset();
  exact.estimator = s.compare.noiseless;
  Laboratory lab0(field, exact);

  struct Row {
    std::size_t request = 0;
    Method method = Method::Richardson;
    double gap = std::nan("");
    std::string gap_error;
    std::vector<double> deviations;
    std::string shot_error;
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < s.observables.size(); ++i) {
    for (Method m : kMethods) {
      Row row;
      row.request = i;
      row.method = m;
      EstimatorConfig cfg = s.compare.noiseless;
      cfg.method = m;
      lab0.set_estimator(cfg);
      try {
        row.gap = *lab0.measure(s.observables[i]).gap();
      } catch (const Error& e) {
        row.gap_error = e.what();
      }
      rows.push_back(std::move(row));
    }
  }

  for (int k = 0; k < s.compare.seeds; ++k) {
    LabOptions noisy = lab_options(s, o);
    noisy.shots = ShotSpec{s.compare.shots, seed + static_cast<std::uint64_t>(k)};
    Laboratory lab(field, noisy);
    for (auto& row : rows) {
      if (row.method == Method::Richardson || !row.shot_error.empty()) continue;
      EstimatorConfig cfg = s.estimator;
      cfg.method = row.method;
      cfg.shots = s.compare.shots;
      lab.set_estimator(cfg);
      try {
        const MomentResult m = lab.measure(s.observables[row.request]);
        row.deviations.push_back(m.extracted - *m.oracle);
      } catch (const Error& e) {
        row.shot_error = e.what();
      }
    }
  }

  // Kernel width sweep against the exact-data reference.
  json sweeps = json::array();
  std::ostringstream sweep_table;
  for (std::size_t i = 0; i < s.observables.size(); ++i) {
    const auto& r = s.observables[i];
    EstimatorConfig ref_cfg = s.compare.noiseless;
    ref_cfg.method = s.lindblad ? Method::Polyfit : Method::Richardson;
    lab0.set_estimator(ref_cfg);
    const MomentResult ref = lab0.measure(r);
    std::vector<double> widths, errors;
    std::string failure;
    for (double w : s.compare.kernel_widths) {
      EstimatorConfig cfg = s.compare.noiseless;
      cfg.method = Method::KernelIntegral;
      cfg.kernel_width = w;
      cfg.kernel_halvings = 0;
      lab0.set_estimator(cfg);
      try {
        errors.push_back(std::abs(lab0.measure(r).extracted - ref.extracted));
        widths.push_back(w);
      } catch (const Error& e) {
        failure = e.what();
        break;
      }
    }
    const double slope = loglog_slope(widths, errors);
    json j = {{"observable", to_string(r.observable)},
              {"request", request_json(r)},
              {"reference", to_string(ref_cfg.method)},
              {"widths", widths},
              {"errors", errors},
              {"slope", std::isfinite(slope) ? json(slope) : json(nullptr)}};
    if (!failure.empty()) j["error"] = failure;
    sweeps.push_back(std::move(j));
    sweep_table << "kernel sweep " << display_name(r) << ": slope " << num(slope, "%.3f") << " over";
    for (std::size_t k = 0; k < widths.size(); ++k) sweep_table << " " << num(widths[k], "%g") << ":" << num(errors[k], "%.2e");
    if (!failure.empty()) sweep_table << "  (" << failure << ")";
    sweep_table << "\n";
  }

  json jrows = json::array();
  std::ostringstream table;
  table << "compare " << s.name << "  field " << describe(s.field) << "  N=" << n << "  shots=" << s.compare.shots
        << "  seeds=" << s.compare.seeds << "\n";
  table << pad("observable", 24) << pad("method", 17) << pad("noiseless gap", 15) << pad("shot bias", 13)
        << "shot std\n";
  for (const auto& row : rows) {
    const auto& r = s.observables[row.request];
    const bool shots_na = row.method == Method::Richardson;
    const double bias = mean(row.deviations);
    const double sd = sample_std(row.deviations);
    json j = {{"observable", to_string(r.observable)},
              {"request", request_json(r)},
              {"method", to_string(row.method)},
              {"noiseless_gap", std::isfinite(row.gap) ? json(row.gap) : json(nullptr)},
              {"shot_bias", std::isfinite(bias) ? json(bias) : json(nullptr)},
              {"shot_std", std::isfinite(sd) ? json(sd) : json(nullptr)},
              {"shot_samples", row.deviations.size()}};
    if (!row.gap_error.empty()) j["noiseless_error"] = row.gap_error;
    if (!row.shot_error.empty()) j["shot_error"] = row.shot_error;
    if (shots_na) j["shot_note"] = "needs an evaluable signal; not applicable to sampled data";
    jrows.push_back(std::move(j));
    table << pad(display_name(r), 24) << pad(std::string(to_string(row.method)), 17)
          << pad(row.gap_error.empty() ? num(row.gap, "%.2e") : "error", 15)
          << pad(shots_na ? "n/a" : (row.shot_error.empty() ? num(bias, "%.2e") : "error"), 13)
          << (shots_na ? "n/a" : (row.shot_error.empty() ? num(sd, "%.2e") : "error")) << "\n";
  }
  table << sweep_table.str();

  json body = {{"schema", kSchemaVersion},
               {"scenario", {{"name", s.name}, {"file", s.source.filename().string()}}},
               {"field", describe(s.field)},
               {"truncation", n},
               {"seed", seed},
               {"grid", grid_json(s.grid)},
               {"shots", s.compare.shots},
               {"seeds", s.compare.seeds},
               {"noiseless_estimator", estimator_json(s.compare.noiseless)},
               {"noisy_estimator", estimator_json(s.estimator)},
               {"rows", jrows},
               {"kernel_sweeps", sweeps}};
  Report rep;
  rep.document = {{"header", header()}, {"body", body}};
  rep.table = table.str();
  if (o.write) {
    rep.directory = output_root(s, o) / (s.name + "-compare");
    publish(rep.directory, [&](const fs::path& dir) { write_text(dir / "compare.json", rep.document.dump(2) + "\n"); });
  }
  return rep;
}

}  // namespace qprobe::scenario
