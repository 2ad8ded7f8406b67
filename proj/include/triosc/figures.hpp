#pragma once

// Reproduction of the reference figure datasets. Default parameters for
// every figure are frozen in the table below; the config can override the
// scaled Planck constant and grids where that makes sense.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "triosc/bifurcation.hpp"
#include "triosc/config.hpp"
#include "triosc/dataset.hpp"
#include "triosc/kinetics.hpp"
#include "triosc/model.hpp"
#include "triosc/orbits.hpp"
#include "triosc/spectrum.hpp"

namespace triosc {

struct FigureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using NamedDatasets = std::vector<std::pair<std::string, Dataset>>;

// Frozen per-figure defaults (drive amplitudes, Planck constants, Planck
// numbers, grids); kept in one place rather than scattered over the code.
namespace figdef {
inline constexpr double kLambdaSpectrum = 0.04;   // fig1d
inline constexpr double kLambdaWannier = 0.004;   // fig7, fig10, fig12
inline constexpr double kFigF = 0.5;              // fig7, fig10, fig12
inline constexpr double kFigKappa = 0.01;         // fig7, fig10 (R' and the
                                                  // normalized flux are
                                                  // kappa-invariant)
inline constexpr double kFig12G = -0.1;
inline const std::vector<double> kFig3F{0.1, 0.5, 2.0};
inline const std::vector<double> kFig4Nbar{0.0, 0.01, 0.1, 1.0};
inline const std::vector<double> kFig5F{0.1, 0.25, 0.5, 2.0};
inline const std::vector<double> kFig8F{0.1, 0.5, 2.0};
inline const std::vector<double> kFig9Nbar{0.01, 0.1, 1.0};
inline const std::vector<double> kFig9F{0.25, 0.5, 0.75, 1.0, 1.5, 2.0};
inline const std::vector<double> kFig10Nbar{0.0, 0.05};
}  // namespace figdef

namespace detail {
inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = a + (b - a) * i / (n - 1.0);
  return v;
}
inline void stamp(Dataset& ds, const ModelParams& m, uint64_t seed) {
  ds.provenance.push_back("f=" + format_number(m.f) +
                          " lambda=" + format_number(m.lambda) +
                          " kappa=" + format_number(m.kappa) +
                          " nbar=" + format_number(m.nbar) +
                          " sign_delta=" + std::to_string(m.sign_delta));
  ds.provenance.push_back("seed=" + std::to_string(seed));
}
}  // namespace detail

inline NamedDatasets figure_fig1d(const RunConfig& cfg) {
  ModelParams m = cfg.model;
  m.lambda = figdef::kLambdaSpectrum;
  NamedDatasets out;
  Dataset levels;
  levels.columns = {"f", "sector", "level", "g"};
  Dataset extrema;
  extrema.columns = {"f", "g_min", "g_s", "g_origin"};
  for (double f = 0.0; f <= 2.0 + 1e-9; f += 0.05) {
    m.f = f;
    const auto qs = diagonalize(m, cfg.n_max);
    for (int k = 0; k < 3; ++k) {
      const auto& ev = qs.sector[static_cast<size_t>(k)].eigenvalues;
      for (size_t i = 0; i < ev.size() && ev[i] < 0.45; ++i)
        levels.add_row({f, double(k), double(i), ev[i]});
    }
    const auto fp = fixed_points(m);
    extrema.add_row({f, fp.has_wells ? fp.g_min : 0.25,
                     fp.has_wells ? fp.g_s : 0.25, 0.25});
  }
  detail::stamp(levels, m, cfg.seed);
  detail::stamp(extrema, m, cfg.seed);
  out.emplace_back("fig1d_levels", std::move(levels));
  out.emplace_back("fig1d_extrema", std::move(extrema));
  return out;
}

inline NamedDatasets figure_fig3(const RunConfig& cfg) {
  ModelParams m = cfg.model;
  Dataset ds;
  ds.columns = {"f", "delta_g", "omega", "tau_inf", "omega_tau_inf"};
  for (double f : figdef::kFig3F) {
    m.f = f;
    const auto fp = fixed_points(m);
    for (double dg : detail::linspace(0.01, 0.97, 33)) {
      const double g = fp.g_min + dg * well_depth(fp);
      const double w = orbit_solve(m, g).omega;
      const double ti = tau_infinity(m, g);
      ds.add_row({f, dg, w, ti, w * ti});
    }
  }
  detail::stamp(ds, m, cfg.seed);
  return {{"fig3_tau_inf", std::move(ds)}};
}

inline NamedDatasets figure_fig4(const RunConfig& cfg) {
  ModelParams m = cfg.model;
  Dataset harm;
  harm.columns = {"nbar", "f", "inv_temperature"};
  Dataset dots;
  dots.columns = {"nbar", "f", "inv_temperature_eikonal"};
  for (double nbar : figdef::kFig4Nbar) {
    m.nbar = nbar;
    for (double f = 0.05; f <= 2.0 + 1e-9; f += 0.025) {
      m.f = f;
      const auto hd = harmonic_distribution(m);
      harm.add_row({nbar, f, hd.infinite ? 1e9 : hd.inv_temperature});
    }
    for (double f = 0.1; f <= 2.0 + 1e-9; f += 0.1) {
      m.f = f;
      const auto fp = fixed_points(m);
      const auto pt = eikonal_point(m, fp.g_min + 1e-4 * well_depth(fp));
      dots.add_row({nbar, f, pt.local ? pt.Rprime * pt.omega : -1.0});
    }
  }
  detail::stamp(harm, m, cfg.seed);
  detail::stamp(dots, m, cfg.seed);
  return {{"fig4_harmonic", std::move(harm)}, {"fig4_eikonal", std::move(dots)}};
}

inline NamedDatasets figure_fig5(const RunConfig& cfg) {
  ModelParams m = cfg.model;
  m.nbar = 0.0;
  Dataset ds;
  ds.columns = {"f", "delta_g", "local", "influx_falloff"};
  for (double f : figdef::kFig5F) {
    m.f = f;
    const auto fp = fixed_points(m);
    for (double dg : detail::linspace(0.02, 0.96, 40)) {
      const double g = fp.g_min + dg * well_depth(fp);
      const auto pt = eikonal_point(m, g);
      const double rate = pt.local
                              ? pt.omega * (2.0 * pt.tau_inf - pt.Rprime)
                              : std::numeric_limits<double>::quiet_NaN();
      ds.add_row({f, dg, pt.local ? 1.0 : 0.0, rate});
    }
  }
  detail::stamp(ds, m, cfg.seed);
  return {{"fig5_locality", std::move(ds)}};
}

inline NamedDatasets figure_fig6(const RunConfig& cfg) {
  ModelParams m = cfg.model;
  m.nbar = 0.0;
  Dataset ds;
  ds.columns = {"f", "found", "delta_g_NL"};
  for (double f = 0.15; f <= 1.6 + 1e-9; f += 0.05) {
    m.f = f;
    const auto rep = detect_nonlocality(m);
    ds.add_row({f, rep.found ? 1.0 : 0.0,
                rep.found ? rep.delta_g_NL
                          : std::numeric_limits<double>::quiet_NaN()});
  }
  detail::stamp(ds, m, cfg.seed);
  return {{"fig6_g_NL", std::move(ds)}};
}

inline NamedDatasets figure_fig7(const RunConfig& cfg) {
  ModelParams m = cfg.model;
  m.f = figdef::kFigF;
  m.lambda = figdef::kLambdaWannier;
  if (m.kappa <= 0) m.kappa = figdef::kFigKappa;
  const auto fp = fixed_points(m);
  const auto qs = diagonalize(m, cfg.n_max);
  const auto wb = build_wannier(qs, classify_triplets(qs, qs.g_s));
  NamedDatasets out;
  Dataset eik;
  eik.columns = {"nbar", "delta_g", "local", "Rprime", "two_tau_inf"};
  Dataset wan;
  wan.columns = {"nbar", "delta_g", "g", "Rprime_wannier"};
  for (double nbar : {0.0, 0.1}) {
    m.nbar = nbar;
    for (double dg : detail::linspace(0.02, 0.96, 40)) {
      const double g = fp.g_min + dg * well_depth(fp);
      const auto pt = eikonal_point(m, g);
      eik.add_row({nbar, dg, pt.local ? 1.0 : 0.0,
                   pt.local ? pt.Rprime
                            : std::numeric_limits<double>::quiet_NaN(),
                   2.0 * pt.tau_inf});
    }
    const auto sd = stationary_solve(quantum_rate_matrix(wb, m));
    for (size_t n = 1; n + 1 < sd.g.size(); ++n)
      wan.add_row({nbar, delta_g(fp, sd.g[n]), sd.g[n], sd.Rprime[n]});
  }
  detail::stamp(eik, m, cfg.seed);
  detail::stamp(wan, m, cfg.seed);
  out.emplace_back("fig7_eikonal", std::move(eik));
  out.emplace_back("fig7_wannier", std::move(wan));
  return out;
}

inline NamedDatasets figure_fig8(const RunConfig& cfg) {
  ModelParams m = cfg.model;
  Dataset ds;
  ds.columns = {"f", "delta_g", "abs_tau_tun", "tau_inf"};
  for (double f : figdef::kFig8F) {
    m.f = f;
    const auto fp = fixed_points(m);
    for (double dg : detail::linspace(0.02, 0.96, 20)) {
      const double g = fp.g_min + dg * well_depth(fp);
      ds.add_row({f, dg, std::fabs(tau_tunnel(m, g)), tau_infinity(m, g)});
    }
  }
  detail::stamp(ds, m, cfg.seed);
  return {{"fig8_tunneling_time", std::move(ds)}};
}

inline NamedDatasets figure_fig9(const RunConfig& cfg) {
  ModelParams m = cfg.model;
  Dataset ds;
  ds.columns = {"nbar", "f", "R_A", "condition_ok"};
  Dataset cls;
  cls.columns = {"f", "R_A_classical_scaled"};  // (2 nbar + 1) R_A in the limit
  for (double f : figdef::kFig9F) {
    m.f = f;
    for (double nbar : figdef::kFig9Nbar) {
      m.nbar = nbar;
      const auto ae = activation_energy(m, cfg.grid_points);
      ds.add_row({nbar, f, ae.R_A, ae.condition_ok ? 1.0 : 0.0});
    }
    cls.add_row({f, classical_activation_energy(m, cfg.grid_points)});
  }
  detail::stamp(ds, m, cfg.seed);
  detail::stamp(cls, m, cfg.seed);
  return {{"fig9_activation", std::move(ds)},
          {"fig9_classical", std::move(cls)}};
}

inline NamedDatasets figure_fig10(const RunConfig& cfg) {
  ModelParams m = cfg.model;
  m.f = figdef::kFigF;
  m.lambda = figdef::kLambdaWannier;
  if (m.kappa <= 0) m.kappa = figdef::kFigKappa;
  const auto fp = fixed_points(m);
  const auto qs = diagonalize(m, cfg.n_max);
  const auto wb = build_wannier(qs, classify_triplets(qs, qs.g_s));
  Dataset ds;
  ds.columns = {"nbar", "src", "tgt", "delta_g_src", "delta_g_tgt", "flux"};
  for (double nbar : figdef::kFig10Nbar) {
    m.nbar = nbar;
    const auto rm = quantum_rate_matrix(wb, m);
    const auto sd = stationary_solve(rm);
    const auto flux = flux_matrix(sd, rm);
    for (int src = 0; src < rm.size(); ++src)
      for (int tgt = 0; tgt < rm.size(); ++tgt) {
        if (src == tgt) continue;
        ds.add_row({nbar, double(src), double(tgt),
                    delta_g(fp, wb.g[static_cast<size_t>(src)]),
                    delta_g(fp, wb.g[static_cast<size_t>(tgt)]),
                    flux(src, tgt)});
      }
  }
  detail::stamp(ds, m, cfg.seed);
  return {{"fig10_flux", std::move(ds)}};
}

inline NamedDatasets figure_fig12(const RunConfig& cfg) {
  ModelParams m = cfg.model;
  m.f = figdef::kFigF;
  m.lambda = figdef::kLambdaWannier;
  const double g = figdef::kFig12G;
  const auto ft = fourier_precise(m, g, m.lambda, 32);
  OrbitAsymptotics oa;
  oa.f = m.f;
  oa.lambda = m.lambda;
  oa.omega = ft.omega;
  oa.tau_inf = tau_infinity(m, g);
  Dataset ds;
  ds.columns = {"m", "abs_a_up", "abs_a_up_asym", "abs_a_down",
                "abs_a_down_asym"};
  for (int mm = 1; mm <= 30; ++mm)
    ds.add_row({double(mm), ft.abs_a(mm), oa.abs_a(mm), ft.abs_a(-mm),
                oa.abs_a(-mm)});
  detail::stamp(ds, m, cfg.seed);
  ds.provenance.push_back("g=" + format_number(g));
  return {{"fig12_matrix_elements", std::move(ds)}};
}

inline NamedDatasets figure_fig13(const RunConfig& cfg) {
  ModelParams m = cfg.model;
  Dataset ds;
  ds.columns = {"inv_kappa", "ftilde_sq_B"};
  for (double inv_kappa : detail::linspace(0.5, 20.0, 79)) {
    const double kappa = 1.0 / inv_kappa;
    const double fb = f_bifurcation(m, kappa);
    ds.add_row({inv_kappa, fb * fb / kappa});
  }
  detail::stamp(ds, m, cfg.seed);
  return {{"fig13_bifurcation_curve", std::move(ds)}};
}

inline NamedDatasets run_figure(const std::string& id, const RunConfig& cfg) {
  if (id == "fig1d") return figure_fig1d(cfg);
  if (id == "fig3") return figure_fig3(cfg);
  if (id == "fig4") return figure_fig4(cfg);
  if (id == "fig5") return figure_fig5(cfg);
  if (id == "fig6") return figure_fig6(cfg);
  if (id == "fig7") return figure_fig7(cfg);
  if (id == "fig8") return figure_fig8(cfg);
  if (id == "fig9") return figure_fig9(cfg);
  if (id == "fig10") return figure_fig10(cfg);
  if (id == "fig12") return figure_fig12(cfg);
  if (id == "fig13") return figure_fig13(cfg);
  throw FigureError("unknown figure id '" + id +
                    "' (known: fig1d fig3 fig4 fig5 fig6 fig7 fig8 fig9 "
                    "fig10 fig12 fig13)");
}

}  // namespace triosc
