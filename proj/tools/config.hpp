#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <json.hpp>

#include "dospde/model.hpp"

namespace dospde::cli {

/// Section -> key -> value, exactly as written in the config file (expression
/// values unquoted). std::map keeps serialization order deterministic.
using RawConfig = std::map<std::string, std::map<std::string, std::string>>;

/// Parses the flat sectioned key-value format:
///   [problem] / [discretization] / [noise] / [picard]
///   key = value          ('#' starts a comment; expressions are quoted)
/// Throws ConfigError with a line number on malformed input and "not found"
/// when the file does not exist.
RawConfig load_raw_config(const std::string& path);

struct RunConfig {
  ProblemSpec spec;
  Discretization disc;
  std::uint64_t seed = 0;
  double picard_tol = 1e-6;
  int picard_max_iter = 100;
  RawConfig raw;  // resolved: every default filled in
};

/// Builds and validates the run configuration, filling defaults into `raw` so
/// a manifest captures the full resolved input.
RunConfig build_run_config(const RawConfig& raw);

nlohmann::json raw_to_json(const RawConfig& raw);
RawConfig raw_from_json(const nlohmann::json& j);

}  // namespace dospde::cli
