#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "runner.hpp"
#include "scenario.hpp"

namespace fs = std::filesystem;
using namespace qprobe::scenario;

namespace {

std::vector<fs::path> scenario_dirs() {
  std::vector<fs::path> dirs;
  if (const char* env = std::getenv("QPROBE_SCENARIO_PATH")) {
    std::stringstream ss(env);
    for (std::string part; std::getline(ss, part, ':');) {
      if (!part.empty()) dirs.emplace_back(part);
    }
  }
#ifdef QPROBE_SOURCE_SCENARIOS
  dirs.emplace_back(QPROBE_SOURCE_SCENARIOS);
#endif
#ifdef QPROBE_INSTALLED_SCENARIOS
  dirs.emplace_back(QPROBE_INSTALLED_SCENARIOS);
#endif
  return dirs;
}

// A path to an existing file, or the name of a bundled scenario.
fs::path resolve(const std::string& arg) {
  if (fs::is_regular_file(arg)) return arg;
  for (const auto& dir : scenario_dirs()) {
    for (const char* ext : {".yaml", ".yml"}) {
      const fs::path p = dir / (arg + ext);
      if (fs::is_regular_file(p)) return p;
    }
  }
  throw ValidationError(arg + ": no such scenario file or bundled scenario (see list-bundled)");
}

struct Outcome {
  int code = kExitOk;
  std::string out;
  std::string err;
};

template <typename F>
Outcome guarded(const std::string& arg, F&& body) {
  Outcome o;
  try {
    body(o);
  } catch (const std::exception& e) {
    o.code = exit_code_for(e);
    o.err += "qprobe: " + arg + ": " + e.what() + "\n";
  }
  return o;
}

// Runs `work` over every scenario argument, `outer` at a time, printing in order.
int for_each_scenario(const std::vector<std::string>& args, int jobs,
                      const std::function<void(const std::string&, int, Outcome&)>& work) {
  const int outer = std::clamp(jobs, 1, static_cast<int>(args.size()));
  const int inner = std::max(1, jobs / outer);
  std::vector<Outcome> outcomes(args.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < args.size();) {
      outcomes[i] = guarded(args[i], [&](Outcome& o) { work(args[i], inner, o); });
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < outer; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int code = kExitOk;
  for (const auto& o : outcomes) {
    std::cout << o.out;
    std::cerr << o.err;
    code = std::max(code, o.code);
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qprobe: field moments from simulated two-level probe measurements"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  std::vector<std::string> scenarios;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::optional<int> truncation;
  std::optional<std::string> out;
  bool no_write = false;

  auto common = [&](CLI::App* sub, bool many) {
    if (many) sub->add_option("scenario", scenarios, "scenario file(s) or bundled name(s)")->required();
    else sub->add_option("scenario", scenarios, "scenario file or bundled name")->required()->expected(1);
    sub->add_option("--jobs,-j", jobs, "worker threads (over scenarios and tau grid points)")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "RNG seed, overrides the scenario file");
    sub->add_option("--truncation", truncation, "Fock truncation per mode")->check(CLI::Range(2, 400));
    sub->add_option("--out", out, "output directory (default: scenario output.dir, else ./results)");
    sub->add_flag("--no-write", no_write, "print the summary only");
  };

  auto* run_cmd = app.add_subcommand("run", "run scenarios and write results.json plus series CSVs");
  common(run_cmd, true);
  auto* compare_cmd = app.add_subcommand("compare", "compare the four derivative estimators on one scenario");
  common(compare_cmd, false);
  auto* validate_cmd = app.add_subcommand("validate", "check scenarios and list the runs they imply");
  validate_cmd->add_option("scenario", scenarios, "scenario file(s) or bundled name(s)")->required();
  validate_cmd->add_option("--truncation", truncation, "Fock truncation per mode")->check(CLI::Range(2, 400));
  app.add_subcommand("list-bundled", "list bundled scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  auto options = [&](int inner) {
    RunOptions o;
    o.seed = seed;
    o.truncation = truncation;
    if (out) o.out = fs::path(*out);
    o.jobs = inner;
    o.write = !no_write;
    return o;
  };

  if (app.got_subcommand("list-bundled")) {
    std::vector<fs::path> found;
    for (const auto& dir : scenario_dirs()) {
      if (!fs::is_directory(dir)) continue;
      for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".yaml" || e.path().extension() == ".yml") found.push_back(e.path());
      }
    }
    std::sort(found.begin(), found.end(), [](const fs::path& a, const fs::path& b) { return a.stem() < b.stem(); });
    std::set<std::string> seen;
    for (const auto& p : found) {
      if (!seen.insert(p.stem().string()).second) continue;
      try {
        const Scenario s = load(p);
        std::cout << s.name << "\t" << s.description << "\n";
      } catch (const std::exception& e) {
        std::cout << p.stem().string() << "\t(invalid: " << e.what() << ")\n";
      }
    }
    return kExitOk;
  }

  if (app.got_subcommand("validate")) {
    return for_each_scenario(scenarios, 1, [&](const std::string& arg, int, Outcome& o) {
      const Scenario s = load(resolve(arg));
      const auto p = plan(s, options(1));
      std::ostringstream os;
      os << s.name << ": ok, N=" << p["truncation"].get<int>() << ", " << p["runs"].size() << " preparations\n";
      for (const auto& r : p["runs"]) {
        os << "  " << r["id"].get<std::string>() << "  <-";
        for (const auto& why : r["purposes"]) os << " [" << why.get<std::string>() << "]";
        os << "\n";
      }
      o.out = os.str();
    });
  }

  if (app.got_subcommand("compare")) {
    return for_each_scenario(scenarios, jobs, [&](const std::string& arg, int inner, Outcome& o) {
      const Report r = compare(load(resolve(arg)), options(inner));
      o.out = r.table + (r.directory.empty() ? "" : "wrote " + (r.directory / "compare.json").string() + "\n");
      o.code = r.exit_code;
    });
  }

  return for_each_scenario(scenarios, jobs, [&](const std::string& arg, int inner, Outcome& o) {
    const Report r = run(load(resolve(arg)), options(inner));
    o.out = r.table + (r.directory.empty() ? "" : "wrote " + r.directory.string() + "\n");
    if (!r.message.empty()) o.err = "qprobe: " + arg + ": " + r.message + "\n";
    o.code = r.exit_code;
  });
}
