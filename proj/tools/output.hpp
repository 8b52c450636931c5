#pragma once

#include <string>

#include <json.hpp>

#include "dospde/grid_solver.hpp"
#include "dospde/model.hpp"
#include "dospde/picard.hpp"
#include "dospde/validation.hpp"

namespace dospde::cli {

/// "%.17g" — round-trippable, locale-independent.
std::string fmt(double v);

/// Writes content to dir/name via a temp file + rename (atomic on POSIX).
void atomic_write(const std::string& dir, const std::string& name, const std::string& content);

void write_solution_files(const std::string& dir, const GridSolution& sol,
                          const Discretization& disc, double T);
void write_sweep_csv(const std::string& dir, const SweepReport& report);
void write_trace_csv(const std::string& dir, const PicardTrace& trace);
void write_summary(const std::string& dir, const SuiteSummary& summary);

}  // namespace dospde::cli
