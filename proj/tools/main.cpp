#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.hpp"
#include "dospde/errors.hpp"
#include "dospde/grid_solver.hpp"
#include "dospde/lattice.hpp"
#include "dospde/picard.hpp"
#include "dospde/validation.hpp"
#include "dospde/version.hpp"
#include "output.hpp"

namespace {

using namespace dospde;
using namespace dospde::cli;
using nlohmann::json;

class WallClock {
 public:
  WallClock() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void write_manifest(const std::string& out, const std::string& command, const json& flags,
                    const RawConfig& raw, double wall_ms) {
  json j;
  j["version"] = kVersion;
  j["command"] = command;
  j["flags"] = flags;
  j["config"] = raw_to_json(raw);
  j["wall_time_ms"] = wall_ms;
  atomic_write(out, "manifest.json", j.dump(2) + "\n");
}

void log_warnings(const GridDiagnostics& diag) {
  for (const auto& w : diag.warnings) std::cerr << "W:" << w << "\n";
}

std::vector<double> parse_level_list(const std::string& csv) {
  std::vector<double> levels;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto b = tok.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    try {
      levels.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ConfigError("bad penalty level '" + tok + "'");
    }
  }
  if (levels.empty()) throw ConfigError("empty level list");
  return levels;
}

SolveMode parse_mode(const std::string& mode, double penalty, const std::string& submode) {
  if (mode == "free") return SolveMode::free();
  if (mode == "projected") return SolveMode::projected();
  if (mode == "penalized") {
    PenaltyKind kind;
    if (submode == "upper")
      kind = PenaltyKind::UpperOnly;
    else if (submode == "double")
      kind = PenaltyKind::Both;
    else
      throw ConfigError("submode must be 'upper' or 'double'");
    return SolveMode::penalized(penalty, kind);
  }
  throw ConfigError("mode must be free, projected or penalized");
}

// ---------------------------------------------------------------------------
// Commands. Each resolves its inputs, runs, writes outputs + manifest.

int run_solve(const RunConfig& rc, const std::string& mode, double penalty,
              const std::string& submode, std::uint64_t seed, const std::string& out) {
  WallClock clock;
  const SolveMode m = parse_mode(mode, penalty, submode);
  if (m.kind == SolveMode::Kind::Free)
    std::cerr << "W:free mode ignores the obstacles\n";

  const NoisePath noise = make_noise(seed, rc.disc.nt, rc.spec.d1, rc.disc.dt(rc.spec.T));
  const GridSolution sol = solve(rc.spec, rc.disc, noise, nullptr, m);
  log_warnings(sol.diagnostics);

  write_solution_files(out, sol, rc.disc, rc.spec.T);
  json flags{{"mode", mode}, {"penalty", penalty}, {"submode", submode}, {"seed", seed}};
  write_manifest(out, "solve", flags, rc.raw, clock.ms());
  return 0;
}

int run_sweep(const RunConfig& rc, const std::string& levels_csv, std::uint64_t seed,
              const std::string& out) {
  WallClock clock;
  const std::vector<double> levels = parse_level_list(levels_csv);
  const NoisePath noise = make_noise(seed, rc.disc.nt, rc.spec.d1, rc.disc.dt(rc.spec.T));
  const SweepReport report = check_penalization_sweep(rc.spec, rc.disc, noise, levels);
  if (!report.pass) std::cerr << "W:penalization sweep assertions failed (see sweep.csv)\n";

  write_sweep_csv(out, report);
  json flags{{"levels", levels_csv}, {"seed", seed}};
  write_manifest(out, "sweep", flags, rc.raw, clock.ms());
  return 0;
}

int run_picard(const RunConfig& rc, double tol, int max_iter, std::uint64_t seed,
               const std::string& out) {
  WallClock clock;
  const NoisePath noise = make_noise(seed, rc.disc.nt, rc.spec.d1, rc.disc.dt(rc.spec.T));
  const PicardResult result = picard_solve(rc.spec, rc.disc, noise, tol, max_iter);
  log_warnings(result.solution.diagnostics);

  write_trace_csv(out, result.trace);
  write_solution_files(out, result.solution, rc.disc, rc.spec.T);
  json flags{{"tol", tol}, {"max_iter", max_iter}, {"seed", seed}};
  write_manifest(out, "picard", flags, rc.raw, clock.ms());

  if (!result.converged) {
    std::cerr << "E:noconvergence:" << result.iterations
              << " iterations, last increment norm_sq " << fmt(result.last_norm_sq) << "\n";
    return 3;
  }
  return 0;
}

std::vector<SuiteEntry> load_suite_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("not found: '" + path + "'");
  std::vector<SuiteEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::stringstream ss(line);
    SuiteEntry e;
    if (!(ss >> e.check)) continue;  // blank line
    if (!(ss >> e.instance))
      throw ConfigError("suite line " + std::to_string(lineno) + ": expected 'check instance [param]'");
    ss >> e.param;
    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw ConfigError("suite file lists no checks");
  return entries;
}

int run_validate(const std::vector<SuiteEntry>& entries, const std::string& suite_name,
                 const std::string& out) {
  WallClock clock;
  const SuiteSummary summary = run_suite(entries);
  write_summary(out, summary);

  json jentries = json::array();
  for (const auto& e : entries)
    jentries.push_back({{"check", e.check}, {"instance", e.instance}, {"param", e.param}});
  json flags{{"suite", suite_name}, {"entries", jentries}};
  write_manifest(out, "validate", flags, RawConfig{}, clock.ms());

  for (const auto& r : summary.results) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.check << " " << r.instance;
    if (!r.metric_name.empty()) std::cout << " " << r.metric_name << "=" << fmt(r.metric);
    if (!r.detail.empty()) std::cout << " " << r.detail;
    std::cout << "\n";
  }
  return summary.all_pass() ? 0 : 1;
}

int run_replay(const std::string& manifest_path, const std::string& out) {
  std::ifstream in(manifest_path);
  if (!in) throw ConfigError("not found: '" + manifest_path + "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("bad manifest: " + std::string(e.what()));
  }

  const std::string command = j.value("command", "");
  const json flags = j.value("flags", json::object());
  if (command == "validate") {
    std::vector<SuiteEntry> entries;
    for (const auto& e : flags.at("entries"))
      entries.push_back({e.at("check"), e.at("instance"), e.value("param", "")});
    return run_validate(entries, flags.value("suite", "default"), out);
  }

  const RunConfig rc = build_run_config(raw_from_json(j.at("config")));
  if (command == "solve")
    return run_solve(rc, flags.at("mode"), flags.at("penalty"), flags.at("submode"),
                     flags.at("seed").get<std::uint64_t>(), out);
  if (command == "sweep")
    return run_sweep(rc, flags.at("levels"), flags.at("seed").get<std::uint64_t>(), out);
  if (command == "picard")
    return run_picard(rc, flags.at("tol"), flags.at("max_iter"),
                      flags.at("seed").get<std::uint64_t>(), out);
  throw ConfigError("manifest names unknown command '" + command + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dospde: a numerical laboratory for stochastic PDEs with two reflecting obstacles"};
  app.require_subcommand(1);

  std::string config_path, out_dir, mode = "projected", submode = "upper";
  std::string levels = "1,2,4,8,16,32,64,128,256", suite = "default", manifest_path;
  double penalty = 100.0, tol = -1.0;
  int max_iter = -1;
  std::int64_t seed_flag = -1;

  CLI::App* c_solve = app.add_subcommand("solve", "run one backward solve and dump the fields");
  c_solve->add_option("--config", config_path, "problem config file")->required();
  c_solve->add_option("--mode", mode, "free | projected | penalized");
  c_solve->add_option("--penalty", penalty, "penalty level for --mode penalized");
  c_solve->add_option("--submode", submode, "penalty variant: upper | double");
  c_solve->add_option("--seed", seed_flag, "override [noise] seed");
  c_solve->add_option("--out", out_dir, "output directory")->required();

  CLI::App* c_sweep = app.add_subcommand("sweep", "penalization ladder against the projected solve");
  c_sweep->add_option("--config", config_path, "problem config file")->required();
  c_sweep->add_option("--levels", levels, "comma-separated penalty levels");
  c_sweep->add_option("--seed", seed_flag, "override [noise] seed");
  c_sweep->add_option("--out", out_dir, "output directory")->required();

  CLI::App* c_picard = app.add_subcommand("picard", "fixed-point iteration for nonlinear coefficients");
  c_picard->add_option("--config", config_path, "problem config file")->required();
  c_picard->add_option("--tol", tol, "stop when the increment norm drops below tol");
  c_picard->add_option("--max-iter", max_iter, "iteration cap");
  c_picard->add_option("--seed", seed_flag, "override [noise] seed");
  c_picard->add_option("--out", out_dir, "output directory")->required();

  CLI::App* c_validate = app.add_subcommand("validate", "run a named check suite");
  c_validate->add_option("--suite", suite, "'default' or a suite file");
  c_validate->add_option("--out", out_dir, "output directory")->required();

  CLI::App* c_replay = app.add_subcommand("replay", "re-run a recorded manifest bit-for-bit");
  c_replay->add_option("manifest", manifest_path, "manifest.json from a previous run")->required();
  c_replay->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "E:usage:" << e.what() << "\n";
    return 2;
  }

  try {
    if (c_replay->parsed()) return run_replay(manifest_path, out_dir);
    if (c_validate->parsed()) {
      std::vector<dospde::SuiteEntry> entries =
          (suite == "default") ? dospde::default_suite() : load_suite_file(suite);
      return run_validate(entries, suite, out_dir);
    }

    const RunConfig rc = build_run_config(load_raw_config(config_path));
    const std::uint64_t seed =
        seed_flag >= 0 ? static_cast<std::uint64_t>(seed_flag) : rc.seed;
    if (c_solve->parsed()) return run_solve(rc, mode, penalty, submode, seed, out_dir);
    if (c_sweep->parsed()) return run_sweep(rc, levels, seed, out_dir);
    if (c_picard->parsed()) {
      const double use_tol = tol > 0 ? tol : rc.picard_tol;
      const int use_iter = max_iter > 0 ? max_iter : rc.picard_max_iter;
      return run_picard(rc, use_tol, use_iter, seed, out_dir);
    }
  } catch (const dospde::NoConvergence& e) {
    std::cerr << "E:" << e.kind() << ":" << e.what() << "\n";
    return 3;
  } catch (const dospde::Error& e) {
    std::cerr << "E:" << e.kind() << ":" << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "E:internal:" << e.what() << "\n";
    return 2;
  }
  return 0;
}
