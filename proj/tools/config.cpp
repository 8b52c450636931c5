#include "config.hpp"

#include <fstream>
#include <sstream>

#include "dospde/errors.hpp"

namespace dospde::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

double to_double(const std::string& section, const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("[" + section + "] " + key + ": bad number '" + v + "'");
  }
}

long to_long(const std::string& section, const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("[" + section + "] " + key + ": bad integer '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& section, const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long d = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("[" + section + "] " + key + ": bad seed '" + v + "'");
  }
}

Expr parse_expr(const std::string& section, const std::string& key, const std::string& v) {
  try {
    return Expr::parse(v);
  } catch (const Error& e) {
    throw ConfigError("[" + section + "] " + key + " = \"" + v + "\": " + e.what());
  }
}

}  // namespace

RawConfig load_raw_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("not found: '" + path + "'");

  RawConfig raw;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      raw[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = unquote(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    raw[section][key] = value;
  }
  return raw;
}

RunConfig build_run_config(const RawConfig& input) {
  RunConfig rc;
  rc.raw = input;

  auto& prob = rc.raw["problem"];
  auto& disc = rc.raw["discretization"];
  auto& noise = rc.raw["noise"];
  auto& pic = rc.raw["picard"];

  auto defaulted = [](std::map<std::string, std::string>& sec, const std::string& key,
                      const std::string& value) -> std::string& {
    auto it = sec.find(key);
    if (it == sec.end()) it = sec.emplace(key, value).first;
    return it->second;
  };

  // [problem]
  rc.spec.T = to_double("problem", "T", defaulted(prob, "T", "1"));
  rc.spec.dim = static_cast<int>(to_long("problem", "dim", defaulted(prob, "dim", "1")));
  rc.spec.psi = parse_expr("problem", "psi", defaulted(prob, "psi", "0"));
  rc.spec.f = parse_expr("problem", "f", defaulted(prob, "f", "0"));
  rc.spec.g = parse_expr("problem", "g", defaulted(prob, "g", "0"));
  rc.spec.lower = parse_expr("problem", "L", defaulted(prob, "L", "-1e9"));
  rc.spec.upper = parse_expr("problem", "U", defaulted(prob, "U", "1e9"));
  rc.spec.lip.C = to_double("problem", "lip_C", defaulted(prob, "lip_C", "0"));
  rc.spec.lip.alpha = to_double("problem", "lip_alpha", defaulted(prob, "lip_alpha", "0"));
  rc.spec.lip.beta = to_double("problem", "lip_beta", defaulted(prob, "lip_beta", "0"));

  defaulted(prob, "h1", "0");
  for (int i = 1;; ++i) {
    const auto it = prob.find("h" + std::to_string(i));
    if (it == prob.end()) break;
    rc.spec.h.push_back(parse_expr("problem", it->first, it->second));
  }
  rc.spec.d1 = static_cast<int>(rc.spec.h.size());

  const bool has_witness = prob.count("witness_psi") || prob.count("witness_f") ||
                           prob.count("witness_g") || prob.count("witness_h1");
  if (has_witness) {
    SeparabilityWitness w;
    w.f = parse_expr("problem", "witness_f", defaulted(prob, "witness_f", "0"));
    w.g = parse_expr("problem", "witness_g", defaulted(prob, "witness_g", "0"));
    w.psi = parse_expr("problem", "witness_psi", defaulted(prob, "witness_psi", "0"));
    for (int i = 1; i <= rc.spec.d1; ++i)
      w.h.push_back(
          parse_expr("problem", "witness_h" + std::to_string(i),
                     defaulted(prob, "witness_h" + std::to_string(i), "0")));
    rc.spec.witness = std::move(w);
  }

  // [discretization]
  rc.disc.R = to_double("discretization", "R", defaulted(disc, "R", "6"));
  rc.disc.nx = static_cast<int>(to_long("discretization", "Nx", defaulted(disc, "Nx", "200")));
  rc.disc.nt = static_cast<int>(to_long("discretization", "Nt", defaulted(disc, "Nt", "400")));
  rc.disc.theta = to_double("discretization", "theta", defaulted(disc, "theta", "1"));

  // [noise]
  rc.seed = to_u64("noise", "seed", defaulted(noise, "seed", "0"));

  // [picard]
  rc.picard_tol = to_double("picard", "tol", defaulted(pic, "tol", "1e-6"));
  rc.picard_max_iter =
      static_cast<int>(to_long("picard", "max_iter", defaulted(pic, "max_iter", "100")));

  rc.spec.validate();
  rc.disc.validate();
  return rc;
}

nlohmann::json raw_to_json(const RawConfig& raw) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [section, kv] : raw) {
    nlohmann::json s = nlohmann::json::object();
    for (const auto& [k, v] : kv) s[k] = v;
    j[section] = std::move(s);
  }
  return j;
}

RawConfig raw_from_json(const nlohmann::json& j) {
  RawConfig raw;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_object()) throw ConfigError("manifest config: bad section");
    for (auto kv = it.value().begin(); kv != it.value().end(); ++kv) {
      if (!kv.value().is_string()) throw ConfigError("manifest config: values must be strings");
      raw[it.key()][kv.key()] = kv.value().get<std::string>();
    }
  }
  return raw;
}

}  // namespace dospde::cli
