#pragma once

// Cartesian parameter sweeps over (f, kappa, nbar) grids invoking a named
// operation per point. Failures are recorded per row without aborting the
// sweep; points run on an independent task pool sized by TRIOSC_THREADS.

#include <cstdlib>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "triosc/bifurcation.hpp"
#include "triosc/config.hpp"
#include "triosc/dataset.hpp"
#include "triosc/kinetics.hpp"

namespace triosc {

struct SweepError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline int thread_count() {
  if (const char* env = std::getenv("TRIOSC_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

template <typename Fn>
inline void parallel_for(int n, const Fn& fn) {
  const int threads = std::min(thread_count(), n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&, t]() {
      for (int i = t; i < n; i += threads) fn(i);
    });
  for (auto& th : pool) th.join();
}

using SweepOutputs = std::vector<std::pair<std::string, double>>;
using SweepOp = std::function<SweepOutputs(const RunConfig&)>;

inline const std::map<std::string, SweepOp>& sweep_operations() {
  static const std::map<std::string, SweepOp> ops = {
      {"activation_energy",
       [](const RunConfig& cfg) -> SweepOutputs {
         const auto ae = activation_energy(cfg.model, cfg.grid_points);
         return {{"R_A", ae.R_A},
                 {"condition_ok", ae.condition_ok ? 1.0 : 0.0}};
       }},
      {"harmonic_distribution",
       [](const RunConfig& cfg) -> SweepOutputs {
         const auto hd = harmonic_distribution(cfg.model);
         return {{"n_eff", hd.n_eff},
                 {"inv_temperature",
                  hd.infinite ? std::numeric_limits<double>::infinity()
                              : hd.inv_temperature}};
       }},
      {"detect_nonlocality",
       [](const RunConfig& cfg) -> SweepOutputs {
         const auto rep = detect_nonlocality(cfg.model);
         return {{"found", rep.found ? 1.0 : 0.0},
                 {"delta_g_NL", rep.found
                                    ? rep.delta_g_NL
                                    : std::numeric_limits<double>::quiet_NaN()}};
       }},
      {"bifurcation_point",
       [](const RunConfig& cfg) -> SweepOutputs {
         return {{"kappa_B", kappa_bifurcation(cfg.model)},
                 {"f_B", f_bifurcation(cfg.model, cfg.model.kappa)}};
       }},
      {"simulate_slow_mode",
       [](const RunConfig& cfg) -> SweepOutputs {
         const auto bd = slow_mode_reduction(cfg.model);
         SlowModeOptions opt;
         opt.dt = cfg.dt;
         opt.n_trajectories = cfg.n_trajectories;
         opt.seed = cfg.seed;
         const auto st = simulate_slow_mode(bd, cfg.model, cfg.model.kappa, opt);
         return {{"mfpt", st.mfpt},
                 {"stderr_mfpt", st.stderr_mfpt},
                 {"kramers_exponent",
                  kramers_exponent(bd, cfg.model, cfg.model.kappa)}};
       }},
  };
  return ops;
}

inline Dataset sweep(const RunConfig& cfg) {
  const auto& ops = sweep_operations();
  const auto it = ops.find(cfg.sweep_op);
  if (it == ops.end()) {
    std::string known;
    for (const auto& [k, v] : ops) known += k + " ";
    throw SweepError("sweep: unknown operation '" + cfg.sweep_op +
                     "' (known: " + known + ")");
  }
  const SweepOp& op = it->second;

  const std::vector<double> fs =
      cfg.f_points.empty() ? std::vector<double>{cfg.model.f} : cfg.f_points;
  const std::vector<double> kappas = cfg.kappa_points.empty()
                                         ? std::vector<double>{cfg.model.kappa}
                                         : cfg.kappa_points;
  const std::vector<double> nbars = cfg.nbar_points.empty()
                                        ? std::vector<double>{cfg.model.nbar}
                                        : cfg.nbar_points;

  struct Point {
    RunConfig cfg;
    SweepOutputs outputs;
    bool failed = false;
    std::string error;
  };
  std::vector<Point> points;
  for (double f : fs)
    for (double kappa : kappas)
      for (double nbar : nbars) {
        Point p;
        p.cfg = cfg;
        p.cfg.model.f = f;
        p.cfg.model.kappa = kappa;
        p.cfg.model.nbar = nbar;
        points.push_back(std::move(p));
      }

  parallel_for(static_cast<int>(points.size()), [&](int i) {
    auto& p = points[static_cast<size_t>(i)];
    try {
      p.outputs = op(p.cfg);
    } catch (const std::exception& e) {
      p.failed = true;
      p.error = e.what();
    }
  });

  // Union of output columns (first occurrence order).
  std::vector<std::string> extra;
  for (const auto& p : points)
    for (const auto& [k, v] : p.outputs)
      if (std::find(extra.begin(), extra.end(), k) == extra.end())
        extra.push_back(k);

  Dataset ds;
  ds.columns = {"f", "kappa", "nbar", "status"};
  ds.columns.insert(ds.columns.end(), extra.begin(), extra.end());
  long failures = 0;
  for (const auto& p : points) {
    std::vector<double> row = {p.cfg.model.f, p.cfg.model.kappa,
                               p.cfg.model.nbar, p.failed ? 1.0 : 0.0};
    for (const auto& name : extra) {
      double v = std::numeric_limits<double>::quiet_NaN();
      for (const auto& [k, val] : p.outputs)
        if (k == name) v = val;
      row.push_back(v);
    }
    ds.add_row(row);
    if (p.failed) {
      ++failures;
      ds.provenance.push_back("failed point f=" + format_number(p.cfg.model.f) +
                              " kappa=" + format_number(p.cfg.model.kappa) +
                              " nbar=" + format_number(p.cfg.model.nbar) +
                              ": " + p.error);
    }
  }
  ds.provenance.push_back("sweep_op=" + cfg.sweep_op);
  ds.provenance.push_back("seed=" + std::to_string(cfg.seed));
  ds.provenance.push_back("failures=" + std::to_string(failures) + "/" +
                          std::to_string(points.size()));
  return ds;
}

}  // namespace triosc
