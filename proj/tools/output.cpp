#include "output.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dospde/errors.hpp"

namespace dospde::cli {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void atomic_write(const std::string& dir, const std::string& name, const std::string& content) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path target = fs::path(dir) / name;
  const fs::path tmp = fs::path(dir) / (".tmp." + name);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    out << content;
  }
  fs::rename(tmp, target);
}

void write_solution_files(const std::string& dir, const GridSolution& sol,
                          const Discretization& disc, double T) {
  const double dt = disc.dt(T);
  const double dx = disc.dx();

  std::string u_csv = "k,j,t,x,u,grad\n";
  for (int k = 0; k <= disc.nt; ++k) {
    const std::string t = fmt(k * dt);
    for (int j = 0; j < disc.nx; ++j) {
      u_csv += std::to_string(k);
      u_csv += ',';
      u_csv += std::to_string(j);
      u_csv += ',';
      u_csv += t;
      u_csv += ',';
      u_csv += fmt(-disc.R + (j + 1) * dx);
      u_csv += ',';
      u_csv += fmt(sol.u.value(k, j));
      u_csv += ',';
      u_csv += fmt(sol.u.grad(k, j));
      u_csv += '\n';
    }
  }
  atomic_write(dir, "u.csv", u_csv);

  auto measure_csv = [&](const DiscreteMeasure& m) {
    std::string csv = "k,j,t,x,mass\n";
    for (int k = 0; k < disc.nt; ++k) {
      const std::string t = fmt(k * dt);
      for (int j = 0; j < disc.nx; ++j) {
        csv += std::to_string(k);
        csv += ',';
        csv += std::to_string(j);
        csv += ',';
        csv += t;
        csv += ',';
        csv += fmt(-disc.R + (j + 1) * dx);
        csv += ',';
        csv += fmt(m.at(k, j));
        csv += '\n';
      }
    }
    return csv;
  };
  atomic_write(dir, "nu_plus.csv", measure_csv(sol.nu_plus));
  atomic_write(dir, "nu_minus.csv", measure_csv(sol.nu_minus));

  std::string diag = "k,t,l2_u_sq,l2_grad_sq\n";
  for (int k = 0; k <= disc.nt; ++k) {
    diag += std::to_string(k);
    diag += ',';
    diag += fmt(k * dt);
    diag += ',';
    diag += fmt(sol.diagnostics.l2_u_sq[k]);
    diag += ',';
    diag += fmt(sol.diagnostics.l2_grad_sq[k]);
    diag += '\n';
  }
  atomic_write(dir, "diagnostics.csv", diag);
}

void write_sweep_csv(const std::string& dir, const SweepReport& report) {
  std::string csv = "n,max_upper_excess,sup_diff_to_projected,mass_kp,mass_km\n";
  for (const auto& row : report.rows) {
    csv += fmt(row.n);
    csv += ',';
    csv += fmt(row.max_upper_excess);
    csv += ',';
    csv += fmt(row.sup_diff_to_projected);
    csv += ',';
    csv += fmt(row.mass_kp);
    csv += ',';
    csv += fmt(row.mass_km);
    csv += '\n';
  }
  atomic_write(dir, "sweep.csv", csv);
}

void write_trace_csv(const std::string& dir, const PicardTrace& trace) {
  std::string csv = "iter,norm_sq,ratio\n";
  for (const auto& it : trace) {
    csv += std::to_string(it.iter);
    csv += ',';
    csv += fmt(it.norm_sq);
    csv += ',';
    csv += fmt(it.ratio);
    csv += '\n';
  }
  atomic_write(dir, "trace.csv", csv);
}

void write_summary(const std::string& dir, const SuiteSummary& summary) {
  std::string csv = "check,instance,pass,metric_name,metric,detail\n";
  nlohmann::json results = nlohmann::json::array();
  for (const auto& r : summary.results) {
    csv += r.check;
    csv += ',';
    csv += r.instance;
    csv += ',';
    csv += r.pass ? "1" : "0";
    csv += ',';
    csv += r.metric_name;
    csv += ',';
    csv += fmt(r.metric);
    csv += ',';
    csv += r.detail;
    csv += '\n';
    results.push_back({{"check", r.check},
                       {"instance", r.instance},
                       {"pass", r.pass},
                       {"metric_name", r.metric_name},
                       {"metric", r.metric},
                       {"detail", r.detail}});
  }
  atomic_write(dir, "summary.csv", csv);
  nlohmann::json j;
  j["all_pass"] = summary.all_pass();
  j["results"] = results;
  atomic_write(dir, "summary.json", j.dump(2) + "\n");
}

}  // namespace dospde::cli
