#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
  static int counter = 0;
  const fs::path dir = fs::temp_directory_path() / ("dospde_cli_" + tag + "_" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunResult run_cli(const std::string& args, const fs::path& scratch) {
  const fs::path out_file = scratch / "stdout.txt";
  const fs::path err_file = scratch / "stderr.txt";
  const std::string cmd = std::string(DOSPDE_CLI_PATH) + " " + args + " >" + out_file.string() +
                          " 2>" + err_file.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WEXITSTATUS(status);
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

std::string config(const char* name) {
  return (fs::path(DOSPDE_CONFIG_DIR) / name).string();
}

/// Sums one numeric column of a CSV (0-based), skipping the header.
double csv_column_sum(const fs::path& file, int col) {
  std::ifstream in(file);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);  // header
  double total = 0.0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    for (int c = 0; c <= col; ++c) std::getline(ss, cell, ',');
    total += std::stod(cell);
  }
  return total;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("solve writes the documented files and the oracle mass") {
  const fs::path scratch = fresh_dir("solve");
  const fs::path out = scratch / "run";
  const RunResult r =
      run_cli("solve --config " + config("reflected_ode.ini") + " --out " + out.string(), scratch);
  CHECK(r.exit_code == 0);
  for (const char* name : {"manifest.json", "u.csv", "nu_plus.csv", "nu_minus.csv", "diagnostics.csv"})
    CHECK(fs::exists(out / name));

  const double mass_minus = csv_column_sum(out / "nu_minus.csv", 4);
  CHECK(mass_minus == doctest::Approx(0.7 * 12.0).epsilon(0.02));
  const double mass_plus = csv_column_sum(out / "nu_plus.csv", 4);
  CHECK(mass_plus <= 1e-8);
}

TEST_CASE("solve in free mode warns that obstacles are ignored") {
  const fs::path scratch = fresh_dir("free");
  const fs::path out = scratch / "run";
  const RunResult r = run_cli(
      "solve --config " + config("reflected_ode.ini") + " --mode free --out " + out.string(),
      scratch);
  CHECK(r.exit_code == 0);
  CHECK(r.err.find("W:free mode ignores the obstacles") != std::string::npos);
}

TEST_CASE("missing config exits 2 with a machine-parsable error") {
  const fs::path scratch = fresh_dir("missing");
  const RunResult r =
      run_cli("solve --config /no/such/file.ini --out " + (scratch / "x").string(), scratch);
  CHECK(r.exit_code == 2);
  CHECK(r.err.rfind("E:config:not found", 0) == 0);
}

TEST_CASE("sweep produces monotone columns; empty level list exits 2") {
  const fs::path scratch = fresh_dir("sweep");
  const fs::path out = scratch / "run";
  const RunResult r = run_cli("sweep --config " + config("reflected_ode.ini") +
                                  " --levels 1,4,16,64,256 --out " + out.string(),
                              scratch);
  CHECK(r.exit_code == 0);
  std::ifstream in(out / "sweep.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "n,max_upper_excess,sup_diff_to_projected,mass_kp,mass_km");
  double prev_excess = 1e300, prev_diff = 1e300;
  int rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string n, excess, diff;
    std::getline(ss, n, ',');
    std::getline(ss, excess, ',');
    std::getline(ss, diff, ',');
    CHECK(std::stod(excess) <= prev_excess);
    CHECK(std::stod(diff) <= prev_diff);
    prev_excess = std::stod(excess);
    prev_diff = std::stod(diff);
    ++rows;
  }
  CHECK(rows == 5);

  const RunResult bad = run_cli("sweep --config " + config("reflected_ode.ini") +
                                    " --levels \" \" --out " + (scratch / "bad").string(),
                                scratch);
  CHECK(bad.exit_code == 2);
}

TEST_CASE("picard converges on the exponential instance") {
  const fs::path scratch = fresh_dir("picard");
  const fs::path out = scratch / "run";
  const RunResult r =
      run_cli("picard --config " + config("exp_decay.ini") + " --out " + out.string(), scratch);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(out / "trace.csv"));
  CHECK(fs::exists(out / "u.csv"));
}

TEST_CASE("picard exit 3 on non-convergence, trace still written") {
  const fs::path scratch = fresh_dir("picard3");
  const fs::path out = scratch / "run";
  const RunResult r = run_cli("picard --config " + config("exp_decay.ini") +
                                  " --tol 1e-13 --max-iter 2 --out " + out.string(),
                              scratch);
  CHECK(r.exit_code == 3);
  CHECK(r.err.find("E:noconvergence:") != std::string::npos);
  CHECK(fs::exists(out / "trace.csv"));
}

TEST_CASE("picard refuses a non-contractive declaration") {
  const fs::path scratch = fresh_dir("contraction");
  const fs::path cfg = scratch / "broken.ini";
  {
    std::ofstream c(cfg);
    c << "[problem]\nT = 1\npsi = \"1\"\nf = \"-y\"\nL = \"-10\"\nU = \"10\"\n"
      << "lip_C = 1\nlip_alpha = 0.4\nlip_beta = 0.6\n"
      << "[discretization]\nR = 4\nNx = 30\nNt = 20\n";
  }
  const RunResult r =
      run_cli("picard --config " + cfg.string() + " --out " + (scratch / "x").string(), scratch);
  CHECK(r.exit_code == 2);
  CHECK(r.err.rfind("E:contraction:", 0) == 0);
}

TEST_CASE("validate runs a suite file; unknown check exits 2; failures exit 1") {
  const fs::path scratch = fresh_dir("validate");

  const fs::path good = scratch / "good.suite";
  {
    std::ofstream s(good);
    s << "hypotheses reflected_ode\nseparability separability_demo\nlipschitz lipschitz_clamp\n";
  }
  const fs::path out1 = scratch / "ok";
  const RunResult ok =
      run_cli("validate --suite " + good.string() + " --out " + out1.string(), scratch);
  CHECK(ok.exit_code == 0);
  CHECK(fs::exists(out1 / "summary.csv"));
  CHECK(fs::exists(out1 / "summary.json"));

  const fs::path broken = scratch / "broken.suite";
  {
    std::ofstream s(broken);
    s << "picard broken_contraction\n";
  }
  const RunResult fail =
      run_cli("validate --suite " + broken.string() + " --out " + (scratch / "f").string(), scratch);
  CHECK(fail.exit_code == 1);
  CHECK(fail.out.find("FAIL picard broken_contraction") != std::string::npos);

  const fs::path unknown = scratch / "unknown.suite";
  {
    std::ofstream s(unknown);
    s << "frobnicate reflected_ode\n";
  }
  const RunResult bad =
      run_cli("validate --suite " + unknown.string() + " --out " + (scratch / "u").string(), scratch);
  CHECK(bad.exit_code == 2);
}

TEST_CASE("replay reproduces byte-identical CSVs") {
  const fs::path scratch = fresh_dir("replay");
  const fs::path out1 = scratch / "first";
  const fs::path out2 = scratch / "second";
  const RunResult first = run_cli(
      "solve --config " + config("noisy_reflected.ini") + " --out " + out1.string(), scratch);
  REQUIRE(first.exit_code == 0);
  const RunResult second =
      run_cli("replay " + (out1 / "manifest.json").string() + " --out " + out2.string(), scratch);
  REQUIRE(second.exit_code == 0);
  for (const char* name : {"u.csv", "nu_plus.csv", "nu_minus.csv", "diagnostics.csv"})
    CHECK(slurp(out1 / name) == slurp(out2 / name));
}

TEST_CASE("seed flag changes the run, and is recorded for replay") {
  const fs::path scratch = fresh_dir("seed");
  const fs::path out1 = scratch / "a";
  const fs::path out2 = scratch / "b";
  REQUIRE(run_cli("solve --config " + config("noisy_reflected.ini") + " --seed 1 --out " +
                      out1.string(),
                  scratch)
              .exit_code == 0);
  REQUIRE(run_cli("solve --config " + config("noisy_reflected.ini") + " --seed 2 --out " +
                      out2.string(),
                  scratch)
              .exit_code == 0);
  CHECK(slurp(out1 / "u.csv") != slurp(out2 / "u.csv"));

  const fs::path out3 = scratch / "c";
  REQUIRE(run_cli("replay " + (out1 / "manifest.json").string() + " --out " + out3.string(), scratch)
              .exit_code == 0);
  CHECK(slurp(out1 / "u.csv") == slurp(out3 / "u.csv"));
}

}  // TEST_SUITE
