#pragma once

// Dissipative transitions between intrawell states and the quasistationary
// distribution they form: semiclassical and Wannier-based rate matrices, the
// stationary balance-equation solution, the eikonal equation for R'(g), the
// locality criterion and its breakdown, detailed-balance diagnostics,
// probability fluxes, the quantum activation energy, and a small-truncation
// Lindblad steady state used as a brute-force cross-check.

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/LU>

#include "triosc/model.hpp"
#include "triosc/numerics.hpp"
#include "triosc/orbits.hpp"
#include "triosc/spectrum.hpp"

namespace triosc {

inline constexpr int kDirectRateM = 12;  // |m| <= 12 from the orbit DFT

// ---------------------------------------------------------------------------
// Per-(f, g) ingredients of the balance equation in the semiclassical limit.
// Down-rates W_{n+m,n} and up-rates W_{n,n+m} (m > 0) divided by 2*kappa:
//   w_dn(m) = (nbar+1)|a_-m|^2 + nbar|a_+m|^2
//   w_up(m) = (nbar+1)|a_+m|^2 + nbar|a_-m|^2
// with |a_{+-m}|^2 -> pref * m^(-4/3 or -2/3) * exp(-2 m omega tau_inf) in
// the tails.

struct EikonalRates {
  double g = 0.0;
  double omega = 0.0;
  double tau_inf = 0.0;
  double lambda = 0.0;
  std::array<double, kDirectRateM + 1> a2_dn{};  // |a_{-m}|^2, m = 1..12
  std::array<double, kDirectRateM + 1> a2_up{};  // |a_{+m}|^2
  double pref_dn = 0.0;  // coefficient of m^(-2/3) exp(-2 m omega tau_inf)
  double pref_up = 0.0;  // coefficient of m^(-4/3) exp(-2 m omega tau_inf)
};

inline EikonalRates eikonal_rates(const ModelParams& m, double g) {
  EikonalRates er;
  er.g = g;
  er.lambda = m.lambda;
  const ClassicalOrbit orb = orbit_solve(m, g);
  er.omega = orb.omega;
  er.tau_inf = tau_infinity(m, g);
  const FourierTable ft = fourier_coefficients(orb, m.lambda, kDirectRateM);
  const double cdn = std::pow(1.5, 1.0 / 6.0) * std::tgamma(1.0 / 3.0) /
                     (2.0 * kPi * std::sqrt(m.lambda)) *
                     std::cbrt(er.omega * er.omega / m.f);
  const double cup = std::pow(2.0 / 3.0, 1.0 / 6.0) * std::tgamma(2.0 / 3.0) /
                     (2.0 * kPi * std::sqrt(m.lambda)) *
                     std::cbrt(m.f * er.omega);
  er.pref_dn = cdn * cdn;
  er.pref_up = cup * cup;
  // Components that decayed under the double-precision noise floor of the
  // transform would otherwise re-enter the balance equation amplified by the
  // population ratio exp(m omega R'); substitute the asymptotic forms there.
  const double floor_a = 1e-12 * std::max(ft.abs_a(0), ft.abs_a(-1));
  for (int mm = 1; mm <= kDirectRateM; ++mm) {
    const double decay = std::exp(-2.0 * mm * er.omega * er.tau_inf);
    const double dn = ft.abs_a(-mm), up = ft.abs_a(mm);
    er.a2_dn[static_cast<size_t>(mm)] =
        dn > floor_a ? dn * dn
                     : er.pref_dn * std::pow(mm, -2.0 / 3.0) * decay;
    er.a2_up[static_cast<size_t>(mm)] =
        up > floor_a ? up * up
                     : er.pref_up * std::pow(mm, -4.0 / 3.0) * decay;
  }
  return er;
}

// F(x)/2kappa of the stationary eikonal equation, x = omega R'(g); the down
// and up tails are polylog-type sums starting at m = 13. Valid for
// 0 <= x <= 2 omega tau_inf (the up tail diverges beyond).
inline double eikonal_balance(const EikonalRates& er, double nbar, double x) {
  const double e2 = 2.0 * er.omega * er.tau_inf;
  double acc = 0.0;
  for (int mm = 1; mm <= kDirectRateM; ++mm) {
    const double wdn = (nbar + 1.0) * er.a2_dn[static_cast<size_t>(mm)] +
                       nbar * er.a2_up[static_cast<size_t>(mm)];
    const double wup = (nbar + 1.0) * er.a2_up[static_cast<size_t>(mm)] +
                       nbar * er.a2_dn[static_cast<size_t>(mm)];
    acc += wdn * std::expm1(-mm * x) + wup * std::expm1(mm * x);
  }
  const double s23_0 = tail_power_exp_sum(2.0 / 3.0, e2, kDirectRateM + 1);
  const double s43_0 = tail_power_exp_sum(4.0 / 3.0, e2, kDirectRateM + 1);
  const double s23_dn = tail_power_exp_sum(2.0 / 3.0, e2 + x, kDirectRateM + 1);
  const double s43_dn = tail_power_exp_sum(4.0 / 3.0, e2 + x, kDirectRateM + 1);
  const double eps_in = e2 - x;
  if (eps_in < 0) return std::numeric_limits<double>::infinity();
  const double s23_up = tail_power_exp_sum(2.0 / 3.0, eps_in, kDirectRateM + 1);
  const double s43_up = tail_power_exp_sum(4.0 / 3.0, eps_in, kDirectRateM + 1);
  acc += (nbar + 1.0) * er.pref_dn * (s23_dn - s23_0) +
         nbar * er.pref_up * (s43_dn - s43_0);
  acc += (nbar + 1.0) * er.pref_up * (s43_up - s43_0) +
         nbar * er.pref_dn * (s23_up - s23_0);
  return acc;
}

struct EikonalPoint {
  double g = 0.0;
  double omega = 0.0;
  double tau_inf = 0.0;
  bool local = false;
  double Rprime = 0.0;  // defined only where local
  double xi = 0.0;      // exp(-Rprime * omega)
};

// Solve the balance equation for the nontrivial root xi in (xi_c, 1), i.e.
// x = omega R' in (0, 2 omega tau_inf). The trivial root xi = 1 (x = 0) is
// excluded by construction: F(x -> 0+) < 0 while F grows toward the boundary.
inline EikonalPoint eikonal_point_from_rates(const EikonalRates& er,
                                             double nbar) {
  EikonalPoint pt;
  pt.g = er.g;
  pt.omega = er.omega;
  pt.tau_inf = er.tau_inf;
  const double xc = 2.0 * er.omega * er.tau_inf;
  const double x_hi = xc * (1.0 - 1e-13);
  const double f_hi = eikonal_balance(er, nbar, x_hi);
  if (!(f_hi > 0.0)) {
    pt.local = false;  // no root: locality broken at this g
    return pt;
  }
  double lo = 0.0, hi = x_hi;  // F(0) = 0 with F < 0 just above 0
  for (int it = 0; it < 200 && (hi - lo) > 1e-13 * xc; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (eikonal_balance(er, nbar, mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  pt.local = true;
  pt.Rprime = 0.5 * (lo + hi) / er.omega;
  pt.xi = std::exp(-0.5 * (lo + hi));
  return pt;
}

inline EikonalPoint eikonal_point(const ModelParams& m, double g) {
  return eikonal_point_from_rates(eikonal_rates(m, g), m.nbar);
}

struct EikonalSolution {
  ModelParams params;
  std::vector<EikonalPoint> points;  // ascending in g
  std::vector<double> R;             // cumulative integral of R' from g lo
};

inline EikonalSolution eikonal_solve(const ModelParams& m,
                                     const std::vector<double>& g_grid) {
  detail::require_positive_detuning(m, "eikonal_solve");
  EikonalSolution sol;
  sol.params = m;
  for (double g : g_grid) sol.points.push_back(eikonal_point(m, g));
  sol.R.assign(sol.points.size(), 0.0);
  for (size_t i = 1; i < sol.points.size(); ++i) {
    if (sol.points[i].local && sol.points[i - 1].local)
      sol.R[i] = sol.R[i - 1] + 0.5 *
                                    (sol.points[i].Rprime +
                                     sol.points[i - 1].Rprime) *
                                    (sol.points[i].g - sol.points[i - 1].g);
    else
      sol.R[i] = sol.R[i - 1];
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Semiclassical rate row W_{n, n+m}, m in [-m_range, m_range]; |m| <= 12 from
// the orbit Fourier components, the rest from the asymptotic forms.

inline std::vector<double> semiclassical_rate_row(const ModelParams& m,
                                                  double g, int m_range) {
  const EikonalRates er = eikonal_rates(m, g);
  auto a2 = [&](int mm) {  // |a_mm|^2
    const int am = std::abs(mm);
    if (am == 0) return 0.0;
    if (am <= kDirectRateM)
      return mm < 0 ? er.a2_dn[static_cast<size_t>(am)]
                    : er.a2_up[static_cast<size_t>(am)];
    const double decay = std::exp(-2.0 * am * er.omega * er.tau_inf);
    return mm < 0 ? er.pref_dn * std::pow(am, -2.0 / 3.0) * decay
                  : er.pref_up * std::pow(am, -4.0 / 3.0) * decay;
  };
  std::vector<double> row(static_cast<size_t>(2 * m_range + 1), 0.0);
  for (int mm = -m_range; mm <= m_range; ++mm) {
    if (mm == 0) continue;
    row[static_cast<size_t>(mm + m_range)] =
        2.0 * m.kappa * ((m.nbar + 1.0) * a2(mm) + m.nbar * a2(-mm));
  }
  return row;
}

// ---------------------------------------------------------------------------
// Rate matrices and the stationary distribution.

struct RateMatrix {
  enum class Provenance { quantum, semiclassical };
  Eigen::MatrixXd W;  // W(n, n') = rate of |n> -> |n'>, zero diagonal
  std::vector<double> g;
  double kappa = 0.0;
  double nbar = 0.0;
  double lambda = 0.0;
  Provenance provenance = Provenance::quantum;

  int size() const { return static_cast<int>(W.rows()); }
};

// Rates from the Wannier matrix elements of a. Elements between remote
// levels decay like exp(-|m| omega tau_inf) and fall under the eigenvector
// noise floor (~1e-12 of the diagonal) long before they stop mattering for
// the stationary distribution, whose populations span exp(-R/lambda). Such
// elements are replaced by their semiclassical asymptotic magnitudes; the
// subtraction-free stationary solve then keeps full relative accuracy.
inline RateMatrix quantum_rate_matrix(const WannierBasis& wb,
                                      const ModelParams& m) {
  m.validate();
  RateMatrix rm;
  rm.kappa = m.kappa;
  rm.nbar = m.nbar;
  rm.lambda = m.lambda;
  rm.provenance = RateMatrix::Provenance::quantum;
  rm.g = wb.g;
  const Eigen::MatrixXd a = lowering_elements(wb);
  const int L = wb.levels();

  double a_scale = 0.0;
  for (int n = 0; n < L; ++n) a_scale = std::max(a_scale, std::fabs(a(n, n)));
  const double floor_el = 1e-12 * a_scale;

  bool need_asym = false;
  for (int n = 0; n < L && !need_asym; ++n)
    for (int np = 0; np < L; ++np)
      if (n != np && (std::fabs(a(np, n)) < floor_el ||
                      std::fabs(a(n, np)) < floor_el)) {
        need_asym = true;
        break;
      }

  // WKB substitute for an unresolved element between levels n < np: the
  // exponent accumulates omega tau_inf per level step, i.e. (1/lambda)
  // int tau_inf dg between the levels; prefactors at the midpoint level.
  std::vector<double> omega_lv(static_cast<size_t>(L), 0.0);
  std::vector<double> tcum(static_cast<size_t>(L), 0.0);  // int tau_inf dg
  if (need_asym) {
    std::vector<double> ti(static_cast<size_t>(L), 0.0);
    for (int n = 0; n < L; ++n) {
      omega_lv[static_cast<size_t>(n)] = orbit_solve(m, wb.g[n]).omega;
      ti[static_cast<size_t>(n)] = tau_infinity(m, wb.g[n]);
    }
    for (int n = 1; n < L; ++n)
      tcum[static_cast<size_t>(n)] =
          tcum[static_cast<size_t>(n - 1)] +
          0.5 * (ti[static_cast<size_t>(n)] + ti[static_cast<size_t>(n - 1)]) *
              (wb.g[static_cast<size_t>(n)] - wb.g[static_cast<size_t>(n - 1)]);
  }
  auto substitute = [&](int lo, int hi, bool down) {
    // |a| between levels lo < hi; "down" = the (hi -> lo)-type element a_-m
    const int dm = hi - lo;
    const int mid = (lo + hi) / 2;
    const double om = omega_lv[static_cast<size_t>(mid)];
    const double expo = (tcum[static_cast<size_t>(hi)] -
                         tcum[static_cast<size_t>(lo)]) /
                        m.lambda;
    if (down) {
      return std::pow(1.5, 1.0 / 6.0) * std::tgamma(1.0 / 3.0) /
             (2.0 * kPi * std::sqrt(m.lambda)) *
             std::cbrt(om * om / (dm * m.f)) * std::exp(-expo);
    }
    return std::pow(2.0 / 3.0, 1.0 / 6.0) * std::tgamma(2.0 / 3.0) /
           (2.0 * kPi * std::sqrt(m.lambda)) *
           std::cbrt(m.f * om / (double(dm) * dm)) * std::exp(-expo);
  };

  rm.W = Eigen::MatrixXd::Zero(L, L);
  for (int n = 0; n < L; ++n)
    for (int np = 0; np < L; ++np) {
      if (n == np) continue;
      const int lo = std::min(n, np), hi = std::max(n, np);
      // |<np|a|n>|^2 and |<n|a|np>|^2; the first is an "up" element when
      // np > n and a "down" element otherwise.
      double to2 = a(np, n) * a(np, n);
      double from2 = a(n, np) * a(n, np);
      if (std::fabs(a(np, n)) < floor_el) {
        const double v = substitute(lo, hi, np < n);
        to2 = v * v;
      }
      if (std::fabs(a(n, np)) < floor_el) {
        const double v = substitute(lo, hi, np > n);
        from2 = v * v;
      }
      rm.W(n, np) =
          2.0 * m.kappa * ((m.nbar + 1.0) * to2 + m.nbar * from2);
    }
  return rm;
}

struct StationaryDistribution {
  std::vector<double> g;
  std::vector<double> rho;     // normalized populations
  std::vector<double> R;       // -lambda ln rho
  std::vector<double> Rprime;  // centered difference of R over g
  double max_residual = 0.0;   // stationarity per state, relative
};

inline StationaryDistribution stationary_solve(const RateMatrix& rm) {
  StationaryDistribution sd;
  sd.g = rm.g;
  sd.rho = gth_stationary(rm.W);
  const int n = rm.size();
  for (int i = 0; i < n; ++i) {
    double in = 0.0, out = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      in += sd.rho[static_cast<size_t>(j)] * rm.W(j, i);
      out += sd.rho[static_cast<size_t>(i)] * rm.W(i, j);
    }
    if (out > 0)
      sd.max_residual = std::max(sd.max_residual, std::fabs(in - out) / out);
  }
  sd.R.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    sd.R[static_cast<size_t>(i)] =
        -rm.lambda * std::log(sd.rho[static_cast<size_t>(i)]);
  sd.Rprime.assign(static_cast<size_t>(n), 0.0);
  for (int i = 1; i + 1 < n; ++i)
    sd.Rprime[static_cast<size_t>(i)] =
        -rm.lambda *
        std::log(sd.rho[static_cast<size_t>(i + 1)] /
                 sd.rho[static_cast<size_t>(i - 1)]) /
        (sd.g[static_cast<size_t>(i + 1)] - sd.g[static_cast<size_t>(i - 1)]);
  if (n >= 2) {
    sd.Rprime[0] = sd.Rprime[1];
    sd.Rprime[static_cast<size_t>(n - 1)] = sd.Rprime[static_cast<size_t>(n - 2)];
  }
  return sd;
}

// ---------------------------------------------------------------------------
// Harmonic (well-bottom) distribution and the effective Planck number.

struct HarmonicDistribution {
  double n_eff = 0.0;
  double inv_temperature = 0.0;  // lambda omega_min / T_eff
  bool infinite = false;         // n_eff = 0, zero effective temperature
};

inline HarmonicDistribution harmonic_distribution(const ModelParams& m) {
  const WellGeometry w = well_geometry(m);
  HarmonicDistribution hd;
  const double sh2 = std::sinh(w.phi_star) * std::sinh(w.phi_star);
  hd.n_eff = m.nbar + (2.0 * m.nbar + 1.0) * sh2;
  if (hd.n_eff == 0.0) {
    hd.infinite = true;
    hd.inv_temperature = std::numeric_limits<double>::infinity();
  } else {
    hd.inv_temperature = std::log((hd.n_eff + 1.0) / hd.n_eff);
  }
  return hd;
}

// ---------------------------------------------------------------------------
// Classical limit R'(g) = 2 M / ((2 nbar + 1) N) with M the enclosed area and
// N = (1/2) \iint laplacian(g) dQ dP, both over the orbit interior (the area
// integrals reduce to boundary line integrals).

inline double classical_limit_Rprime(const ModelParams& m, double g) {
  const ClassicalOrbit orb = orbit_solve(m, g);
  const size_t n = orb.samples.size();
  double area2 = 0.0, line = 0.0;
  auto F = [&](double Q, double P) {
    // dF/dQ = 4(Q^2+P^2) - 2 s
    return (4.0 / 3.0) * Q * Q * Q + 4.0 * Q * P * P - 2.0 * m.sign_delta * Q;
  };
  for (size_t i = 0; i < n; ++i) {
    const auto& a = orb.samples[i];
    const auto& b = orb.samples[(i + 1) % n];
    area2 += a.Q * b.P - b.Q * a.P;
    line += 0.5 * (F(a.Q, a.P) + F(b.Q, b.P)) * (b.P - a.P);
  }
  const double orient = area2 > 0 ? 1.0 : -1.0;
  const double M = 0.5 * std::fabs(area2);
  const double N = 0.5 * orient * line;
  if (N <= 0)
    throw NumericError("classical_limit_Rprime: nonpositive curvature integral");
  return 2.0 * M / ((2.0 * m.nbar + 1.0) * N);
}

// ---------------------------------------------------------------------------
// Large-|m| contribution to the relative influx from below, evaluated at a
// given R'. The thermal part diverges as R' -> 2 tau_inf with exponent -1/3;
// the spontaneous part stays finite (exponent +1/3).

struct TailSum {
  double spontaneous = 0.0;  // (nbar+1) component
  double thermal = 0.0;      // nbar component
  double total = 0.0;
  bool thermal_divergent = false;
};

inline TailSum influx_tail(const ModelParams& m, double g, double Rprime) {
  const EikonalRates er = eikonal_rates(m, g);
  TailSum ts;
  const double eps = er.omega * (2.0 * er.tau_inf - Rprime);
  if (eps < 0) {
    ts.thermal_divergent = true;
    ts.thermal = std::numeric_limits<double>::infinity();
    ts.total = ts.thermal;
    return ts;
  }
  ts.spontaneous = (m.nbar + 1.0) * er.pref_up *
                   tail_power_exp_sum(4.0 / 3.0, eps, kDirectRateM + 1);
  if (m.nbar > 0) {
    const double s = tail_power_exp_sum(2.0 / 3.0, eps, kDirectRateM + 1);
    ts.thermal = m.nbar * er.pref_dn * s;
    ts.thermal_divergent = std::isinf(s);
  }
  ts.total = ts.spontaneous + ts.thermal;
  return ts;
}

// ---------------------------------------------------------------------------
// Locality breakdown: the smallest g where the eikonal root reaches the
// boundary R' = 2 tau_inf. Scans a depth grid, then bisects the boundary
// margin F(x_c)(g). Only meaningful at nbar = 0: any nonzero Planck number
// restores locality in the semiclassical limit.

struct NonlocalityReport {
  bool found = false;
  double g_NL = 0.0;
  double delta_g_NL = 0.0;  // (g_NL - g_min)/(g_s - g_min)
  double nbar = 0.0;
  double f = 0.0;
};

inline NonlocalityReport detect_nonlocality(const ModelParams& m,
                                            int grid_points = 48) {
  detail::require_positive_detuning(m, "detect_nonlocality");
  NonlocalityReport rep;
  rep.nbar = m.nbar;
  rep.f = m.f;
  if (m.nbar > 0) return rep;  // thermal influx keeps the equation solvable

  const FixedPointSet fp = fixed_points(m);
  auto margin = [&](double dg) {
    const double g = fp.g_min + dg * well_depth(fp);
    const EikonalRates er = eikonal_rates(m, g);
    const double xc = 2.0 * er.omega * er.tau_inf;
    return eikonal_balance(er, 0.0, xc * (1.0 - 1e-13));
  };
  const double dg_lo = 0.03, dg_hi = 0.97;
  double prev_dg = dg_lo, prev_margin = margin(dg_lo);
  if (prev_margin <= 0)
    throw NumericError("detect_nonlocality: locality already broken at the "
                       "bottom grid point");
  for (int i = 1; i < grid_points; ++i) {
    const double dg = dg_lo + (dg_hi - dg_lo) * i / (grid_points - 1.0);
    const double cur = margin(dg);
    if (cur <= 0) {
      const double dg_nl =
          bisect([&](double x) { return margin(x); }, prev_dg, dg, 1e-10);
      rep.found = true;
      rep.delta_g_NL = dg_nl;
      rep.g_NL = fp.g_min + dg_nl * well_depth(fp);
      return rep;
    }
    prev_dg = dg;
    prev_margin = cur;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Detailed balance: maximal Kolmogorov cycle violation over state triples,
// |ln (W_nn' W_n'n'' W_n''n) / (W_nn'' W_n''n' W_n'n)|. Triples with a zero
// rate are skipped and counted.

struct CycleResidual {
  double max_violation = 0.0;
  long triples_tested = 0;
  long triples_skipped = 0;
};

inline CycleResidual detailed_balance_residual(const RateMatrix& rm,
                                               uint64_t seed = 12345) {
  CycleResidual cr;
  const int n = rm.size();
  auto test_triple = [&](int a, int b, int c) {
    const double fwd = rm.W(a, b) * rm.W(b, c) * rm.W(c, a);
    const double rev = rm.W(a, c) * rm.W(c, b) * rm.W(b, a);
    if (fwd <= 0.0 || rev <= 0.0) {
      ++cr.triples_skipped;
      return;
    }
    ++cr.triples_tested;
    cr.max_violation = std::max(cr.max_violation, std::fabs(std::log(fwd / rev)));
  };
  if (n <= 30) {
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        for (int c = b + 1; c < n; ++c) test_triple(a, b, c);
  } else {
    Rng rng(seed);
    for (int i = 0; i < 10000; ++i) {
      const int a = static_cast<int>(rng.next_u64() % n);
      const int b = static_cast<int>(rng.next_u64() % n);
      const int c = static_cast<int>(rng.next_u64() % n);
      if (a == b || b == c || a == c) continue;
      test_triple(a, b, c);
    }
  }
  return cr;
}

// ---------------------------------------------------------------------------
// Stationary probability flux into each state, normalized per target column.

inline Eigen::MatrixXd flux_matrix(const StationaryDistribution& sd,
                                   const RateMatrix& rm) {
  const int n = rm.size();
  Eigen::MatrixXd flux = Eigen::MatrixXd::Zero(n, n);
  for (int np = 0; np < n; ++np)
    for (int nn = 0; nn < n; ++nn)
      if (np != nn) flux(np, nn) = sd.rho[static_cast<size_t>(np)] * rm.W(np, nn);
  for (int nn = 0; nn < n; ++nn) {
    const double mx = flux.col(nn).maxCoeff();
    if (mx > 0) flux.col(nn) /= mx;
  }
  return flux;
}

// ---------------------------------------------------------------------------
// Quantum activation energy R_A = int R'(g) dg across the well. Where the
// eikonal solution is local, its lambda-free R' is used; at nbar = 0 the
// nonlocal stretch is filled from the Wannier-based stationary distribution
// (lambda-dependent), spliced at g_NL.

struct ActivationEnergy {
  double R_A = 0.0;
  bool condition_ok = false;  // R' < 2 |tau_tun| across the grid
  bool used_wannier_splice = false;
  double splice_delta_g = 0.0;
};

namespace detail {
inline std::vector<double> depth_grid(int n, double lo = 0.004,
                                      double hi = 0.996) {
  std::vector<double> dg(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double x = 0.5 * (1.0 - std::cos(kPi * (i + 0.5) / n));
    dg[static_cast<size_t>(i)] = lo + (hi - lo) * x;
  }
  return dg;
}
}  // namespace detail

inline ActivationEnergy activation_energy(const ModelParams& m,
                                          int grid_points = 40) {
  detail::require_positive_detuning(m, "activation_energy");
  const FixedPointSet fp = fixed_points(m);
  const double depth = well_depth(fp);
  const auto dgs = detail::depth_grid(grid_points);

  std::vector<double> gg, rp;
  bool any_nonlocal = false;
  ActivationEnergy out;
  for (double dg : dgs) {
    const double g = fp.g_min + dg * depth;
    const EikonalPoint pt = eikonal_point(m, g);
    gg.push_back(g);
    if (pt.local) {
      rp.push_back(pt.Rprime);
    } else {
      any_nonlocal = true;
      rp.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }

  if (any_nonlocal) {
    // Fill the nonlocal stretch from the balance equation solved with
    // Wannier-basis rates at the model's lambda.
    out.used_wannier_splice = true;
    const NonlocalityReport rep = detect_nonlocality(m);
    out.splice_delta_g = rep.delta_g_NL;
    const QuasienergySpectrum qs = diagonalize(m);
    const WannierBasis wb = build_wannier(qs, classify_triplets(qs, qs.g_s));
    // R' of the stationary solution is invariant under rescaling the rates,
    // so a unit decay rate stands in when kappa = 0.
    ModelParams msolve = m;
    if (msolve.kappa <= 0) msolve.kappa = 1.0;
    const StationaryDistribution sd =
        stationary_solve(quantum_rate_matrix(wb, msolve));
    for (size_t i = 0; i < gg.size(); ++i) {
      if (!std::isnan(rp[i])) continue;
      // nearest Wannier level's centered R'
      size_t best = 0;
      for (size_t j = 1; j < sd.g.size(); ++j)
        if (std::fabs(sd.g[j] - gg[i]) < std::fabs(sd.g[best] - gg[i])) best = j;
      rp[i] = sd.Rprime[best];
    }
  }

  // Trapezoid over the grid plus flat extensions to the well edges.
  double ra = 0.0;
  for (size_t i = 1; i < gg.size(); ++i)
    ra += 0.5 * (rp[i] + rp[i - 1]) * (gg[i] - gg[i - 1]);
  ra += rp.front() * (gg.front() - fp.g_min);
  ra += rp.back() * (fp.g_s - gg.back());
  out.R_A = ra;

  out.condition_ok = true;
  for (size_t i = 0; i < gg.size(); i += 2) {
    const double tt = std::fabs(tau_tunnel(m, gg[i]));
    if (!(rp[i] < 2.0 * tt)) out.condition_ok = false;
  }
  return out;
}

// (2 nbar + 1)-independent classical activation integral int 2M/N dg.
inline double classical_activation_energy(const ModelParams& m,
                                          int grid_points = 40) {
  const FixedPointSet fp = fixed_points(m);
  const double depth = well_depth(fp);
  const auto dgs = detail::depth_grid(grid_points);
  ModelParams mm = m;
  mm.nbar = 0.0;  // classical_limit_Rprime divides by (2 nbar + 1) itself
  std::vector<double> gg, rp;
  for (double dg : dgs) {
    const double g = fp.g_min + dg * depth;
    gg.push_back(g);
    rp.push_back(classical_limit_Rprime(mm, g));
  }
  double ra = 0.0;
  for (size_t i = 1; i < gg.size(); ++i)
    ra += 0.5 * (rp[i] + rp[i - 1]) * (gg[i] - gg[i - 1]);
  ra += rp.front() * (gg.front() - fp.g_min);
  ra += rp.back() * (fp.g_s - gg.back());
  return ra;
}

// ---------------------------------------------------------------------------
// Small-truncation Lindblad steady state. The generator preserves the Fock
// residue difference (i - j) mod 3, and the trace lives in the zero block,
// so only that block is solved (inverse iteration on the dense LU).

struct LindbladResult {
  int n_max = 0;
  Eigen::MatrixXcd rho;
  double trace_error = 0.0;
  double residual = 0.0;  // |L rho| relative to |L| |rho|
};

inline LindbladResult lindblad_steady_state(const ModelParams& m,
                                            int n_max_small) {
  m.validate();
  if (n_max_small > 80)
    throw ModelError("lindblad_steady_state: truncation guard is 80");
  if (n_max_small < 6)
    throw ModelError("lindblad_steady_state: truncation too small");
  const int N = n_max_small;

  // enumerate the (i, j) pairs with i = j (mod 3)
  std::vector<std::pair<int, int>> pairs;
  Eigen::MatrixXi index = Eigen::MatrixXi::Constant(N, N, -1);
  for (int i = 0; i < N; ++i)
    for (int j = i % 3; j < N; j += 3) {
      index(i, j) = static_cast<int>(pairs.size());
      pairs.emplace_back(i, j);
    }
  const int dim = static_cast<int>(pairs.size());

  Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(dim, dim);
  const std::complex<double> iu(0.0, 1.0);
  auto add = [&](int row, int i, int j, std::complex<double> c) {
    if (i < 0 || i >= N || j < 0 || j >= N) return;
    const int col = index(i, j);
    if (col >= 0) L(row, col) += c;
  };
  for (int row = 0; row < dim; ++row) {
    const auto [i, j] = pairs[static_cast<size_t>(row)];
    // (i/lambda) (rho g - g rho), g tridiagonal in steps of 3
    add(row, i, j,
        (iu / m.lambda) * (sector_diagonal(m, j) - sector_diagonal(m, i)));
    add(row, i, j - 3, (iu / m.lambda) * sector_coupling(m, j - 3));
    add(row, i, j + 3, (iu / m.lambda) * sector_coupling(m, j));
    add(row, i - 3, j, -(iu / m.lambda) * sector_coupling(m, i - 3));
    add(row, i + 3, j, -(iu / m.lambda) * sector_coupling(m, i));
    // -kappa D[a]
    add(row, i, j, -m.kappa * ((m.nbar + 1.0) * double(i + j) +
                               m.nbar * double(i + j + 2)));
    add(row, i + 1, j + 1,
        2.0 * m.kappa * (m.nbar + 1.0) * std::sqrt(double(i + 1) * (j + 1)));
    if (i > 0 && j > 0)
      add(row, i - 1, j - 1,
          2.0 * m.kappa * m.nbar * std::sqrt(double(i) * double(j)));
  }

  // Null vector by shifted inverse iteration. The shift keeps the LU away
  // from an exactly singular pivot; the kernel direction dominates after a
  // few solves since the spectral gap is of order kappa.
  const double scale = L.diagonal().cwiseAbs().mean();
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(dim);
  for (int i = 0; i < N; ++i) x[index(i, i)] = 1.0 / double(N);
  bool converged = false;
  for (double mu : {1e-12 * scale, 1e-9 * scale}) {
    Eigen::MatrixXcd shifted = L;
    shifted.diagonal().array() -= mu;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(shifted);
    Eigen::VectorXcd xi = x;
    bool ok = true;
    for (int it = 0; it < 5 && ok; ++it) {
      Eigen::VectorXcd y = lu.solve(xi);
      const double nn = y.norm();
      if (!std::isfinite(nn) || nn == 0.0)
        ok = false;
      else
        xi = y / nn;
    }
    if (ok) {
      x = xi;
      converged = true;
      break;
    }
  }
  if (!converged)
    throw NumericError("lindblad_steady_state: inverse iteration failed");

  LindbladResult res;
  res.n_max = N;
  res.rho = Eigen::MatrixXcd::Zero(N, N);
  for (int k = 0; k < dim; ++k) {
    const auto [i, j] = pairs[static_cast<size_t>(k)];
    res.rho(i, j) = x[k];
  }
  res.rho = 0.5 * (res.rho + res.rho.adjoint()).eval();
  const std::complex<double> tr = res.rho.trace();
  if (std::abs(tr) < 1e-12)
    throw NumericError("lindblad_steady_state: traceless kernel vector");
  res.rho /= tr;
  // residual of the balance
  Eigen::VectorXcd v(dim);
  for (int k = 0; k < dim; ++k) {
    const auto [i, j] = pairs[static_cast<size_t>(k)];
    v[k] = res.rho(i, j);
  }
  res.residual = (L * v).norm() / (L.norm() * v.norm());
  res.trace_error = std::abs(res.rho.trace() - 1.0);
  return res;
}

// Populations of the well-0 Wannier levels in a density matrix.
inline std::vector<double> wannier_populations(const Eigen::MatrixXcd& rho,
                                               const WannierBasis& wb) {
  const int N = static_cast<int>(rho.rows());
  std::vector<double> pops;
  for (int n = 0; n < wb.levels(); ++n) {
    const Eigen::VectorXd w = wb.well0_vector(n);
    Eigen::VectorXcd wt = Eigen::VectorXcd::Zero(N);
    for (int i = 0; i < std::min<int>(N, static_cast<int>(w.size())); ++i)
      wt[i] = w[i];
    pops.push_back(std::real(wt.dot(rho * wt)));
  }
  return pops;
}

}  // namespace triosc
