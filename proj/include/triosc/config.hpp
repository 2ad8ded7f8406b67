#pragma once

// Run configuration: a flat key=value text file plus command-line overrides.
// Unknown keys and out-of-range values are rejected with distinct errors so
// the driver can map them to exit codes.

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "triosc/model.hpp"

namespace triosc {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  ModelParams model;
  int n_max = -1;           // spectrum truncation; -1 = automatic
  int nmax_small = 70;      // Lindblad truncation
  uint64_t seed = 1;
  std::string out_dir = "triosc_out";
  std::string figure_id;
  std::string sweep_op;
  std::vector<double> g_points;
  std::vector<double> f_points;
  std::vector<double> kappa_points;
  std::vector<double> nbar_points;
  long n_trajectories = 1000;
  double dt = 5e-3;
  int grid_points = 32;     // depth-grid resolution for integral quantities

  void validate() const {
    try {
      model.validate();
    } catch (const ModelError& e) {
      throw ConfigError(e.what());
    }
    if (n_max != -1 && n_max < 30)
      throw ConfigError("config: n_max must be >= 30 (or -1 for automatic)");
    if (nmax_small < 6 || nmax_small > 80)
      throw ConfigError("config: nmax_small must be in [6, 80]");
    if (dt <= 0) throw ConfigError("config: dt must be > 0");
    if (n_trajectories < 1) throw ConfigError("config: n_traj must be >= 1");
    if (grid_points < 8) throw ConfigError("config: grid_points must be >= 8");
    for (double g : nbar_points)
      if (g < 0) throw ConfigError("config: nbar_points must be >= 0");
    for (double g : f_points)
      if (g < 0) throw ConfigError("config: f_points must be >= 0");
    for (double g : kappa_points)
      if (g < 0) throw ConfigError("config: kappa_points must be >= 0");
  }
};

namespace detail {
inline double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError("config: value of '" + key + "' is not a number: " + v);
  return x;
}

// Either a comma list "0.1,0.2,0.4" or a range "lo:hi:count".
inline std::vector<double> parse_grid(const std::string& key,
                                      const std::string& v) {
  std::vector<double> out;
  if (v.find(':') != std::string::npos) {
    std::istringstream ss(v);
    std::string lo, hi, cnt;
    if (!std::getline(ss, lo, ':') || !std::getline(ss, hi, ':') ||
        !std::getline(ss, cnt))
      throw ConfigError("config: grid '" + key + "' must be lo:hi:count");
    const double a = parse_double(key, lo), b = parse_double(key, hi);
    const int n = static_cast<int>(parse_double(key, cnt));
    if (n < 1) throw ConfigError("config: grid '" + key + "' needs count >= 1");
    for (int i = 0; i < n; ++i)
      out.push_back(n == 1 ? a : a + (b - a) * i / (n - 1.0));
    return out;
  }
  std::istringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(parse_double(key, tok));
  if (out.empty()) throw ConfigError("config: empty grid for '" + key + "'");
  return out;
}
}  // namespace detail

inline void apply_config_entry(RunConfig& cfg, const std::string& key,
                               const std::string& value) {
  using detail::parse_double;
  using detail::parse_grid;
  if (key == "f")
    cfg.model.f = parse_double(key, value);
  else if (key == "lambda")
    cfg.model.lambda = parse_double(key, value);
  else if (key == "kappa")
    cfg.model.kappa = parse_double(key, value);
  else if (key == "nbar")
    cfg.model.nbar = parse_double(key, value);
  else if (key == "sign_delta")
    cfg.model.sign_delta = static_cast<int>(parse_double(key, value));
  else if (key == "n_max")
    cfg.n_max = static_cast<int>(parse_double(key, value));
  else if (key == "nmax_small")
    cfg.nmax_small = static_cast<int>(parse_double(key, value));
  else if (key == "seed")
    cfg.seed = static_cast<uint64_t>(parse_double(key, value));
  else if (key == "out")
    cfg.out_dir = value;
  else if (key == "figure")
    cfg.figure_id = value;
  else if (key == "sweep_op")
    cfg.sweep_op = value;
  else if (key == "g_points")
    cfg.g_points = parse_grid(key, value);
  else if (key == "f_points")
    cfg.f_points = parse_grid(key, value);
  else if (key == "kappa_points")
    cfg.kappa_points = parse_grid(key, value);
  else if (key == "nbar_points")
    cfg.nbar_points = parse_grid(key, value);
  else if (key == "n_traj")
    cfg.n_trajectories = static_cast<long>(parse_double(key, value));
  else if (key == "dt")
    cfg.dt = parse_double(key, value);
  else if (key == "grid_points")
    cfg.grid_points = static_cast<int>(parse_double(key, value));
  else
    throw ConfigError("config: unknown key '" + key + "'");
}

inline RunConfig parse_config_file(const std::string& path,
                                   RunConfig base = RunConfig()) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    // trim
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) +
                        " is not key=value: " + line);
    auto trim = [](std::string s) {
      const auto x = s.find_first_not_of(" \t");
      const auto y = s.find_last_not_of(" \t");
      return x == std::string::npos ? std::string() : s.substr(x, y - x + 1);
    };
    apply_config_entry(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

}  // namespace triosc
