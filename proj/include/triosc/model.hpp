#pragma once

// Scaled rotating-frame model of an oscillator driven near triple its
// eigenfrequency: parameter scalings, the quasienergy surface g(Q,P), its
// fixed points and the local geometry of the wells.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "triosc/numerics.hpp"

namespace triosc {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Laboratory-frame parameters; used only for conversion to scaled units.
struct PhysicalParams {
  double omega0 = 1.0;   // oscillator eigenfrequency
  double omegaF = 3.0;   // drive frequency, close to 3*omega0
  double gamma = 0.0;    // quartic nonlinearity, > 0
  double F0 = 0.0;       // drive amplitude, >= 0
  double Gamma = 0.0;    // amplitude decay rate, >= 0
  double nbar = 0.0;     // thermal Planck number, >= 0
  double hbar = 1.0;     // action scale
};

// Everything downstream depends only on these scaled quantities.
struct ModelParams {
  double f = 0.5;        // scaled drive amplitude
  double lambda = 0.01;  // scaled Planck constant
  double kappa = 0.0;    // scaled amplitude decay rate
  double nbar = 0.0;     // Planck number
  int sign_delta = +1;   // sign of the drive detuning

  void validate() const {
    if (f < 0) throw ModelError("ModelParams: f must be >= 0");
    if (lambda <= 0) throw ModelError("ModelParams: lambda must be > 0");
    if (kappa < 0) throw ModelError("ModelParams: kappa must be >= 0");
    if (nbar < 0) throw ModelError("ModelParams: nbar must be >= 0");
    if (sign_delta != 1 && sign_delta != -1)
      throw ModelError("ModelParams: sign_delta must be +1 or -1");
  }
};

// Detuning-free scaling, usable on exact resonance.
struct AlternativeScaling {
  double lambda_prime = 0.0;
  double zeta_prime = 0.0;
  bool tristable() const { return zeta_prime > -0.25; }
};

struct ScaledParams {
  ModelParams model;
  AlternativeScaling alt;
  double delta_omega = 0.0;
};

inline ScaledParams scale_physical(const PhysicalParams& p) {
  const double dw = p.omegaF / 3.0 - p.omega0;
  if (dw == 0.0)
    throw ModelError(
        "scale_physical: zero detuning; the primary scaling is undefined, "
        "use the AlternativeScaling (lambda', zeta') instead");
  if (p.gamma <= 0) throw ModelError("scale_physical: gamma must be > 0");
  if (p.F0 < 0) throw ModelError("scale_physical: F0 must be >= 0");
  if (p.Gamma < 0) throw ModelError("scale_physical: Gamma must be >= 0");
  ScaledParams out;
  out.delta_omega = dw;
  out.model.lambda =
      27.0 * p.gamma * p.hbar / (8.0 * p.omegaF * p.omegaF * std::fabs(dw));
  out.model.f = p.F0 / std::sqrt(8.0 * p.omegaF * p.gamma * std::fabs(dw));
  out.model.kappa = p.Gamma / std::fabs(dw);
  out.model.nbar = p.nbar;
  out.model.sign_delta = dw > 0 ? +1 : -1;
  if (p.F0 > 0) {
    out.alt.lambda_prime =
        9.0 * p.hbar * p.gamma * p.gamma / (4.0 * p.omega0 * p.F0 * p.F0);
    out.alt.zeta_prime = 24.0 * p.omega0 * p.gamma * dw / (p.F0 * p.F0);
  }
  return out;
}

struct PhasePoint {
  double Q = 0.0, P = 0.0;
};

// Scaled RWA quasienergy surface.
inline double g_value(const PhasePoint& pt, const ModelParams& m) {
  const double r2 = pt.Q * pt.Q + pt.P * pt.P;
  const double u = r2 - m.sign_delta;
  return 0.25 * u * u - (m.f / 3.0) * (pt.Q * pt.Q * pt.Q - 3.0 * pt.Q * pt.P * pt.P);
}

// (dQ/dtau, dP/dtau) = (dg/dP, -dg/dQ).
inline PhasePoint hamiltonian_vector_field(const PhasePoint& pt,
                                           const ModelParams& m) {
  const double r2u = pt.Q * pt.Q + pt.P * pt.P - m.sign_delta;
  return {pt.P * r2u + 2.0 * m.f * pt.Q * pt.P,
          -pt.Q * r2u + m.f * (pt.Q * pt.Q - pt.P * pt.P)};
}

inline double laplacian_g(const PhasePoint& pt, const ModelParams& m) {
  return 4.0 * (pt.Q * pt.Q + pt.P * pt.P) - 2.0 * m.sign_delta;
}

enum class OriginKind { local_max, local_min };

struct FixedPointSet {
  bool has_wells = false;
  std::array<PhasePoint, 3> minima{};
  std::array<PhasePoint, 3> saddles{};
  OriginKind origin_kind = OriginKind::local_max;
  double g_min = 0.0;
  double g_s = 0.0;
  double Q0 = 0.0;
  double Qs = 0.0;
};

namespace detail {
inline PhasePoint rotate(const PhasePoint& pt, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * pt.Q - s * pt.P, s * pt.Q + c * pt.P};
}
inline double extremum_g(double Q, double f, int s) {
  return -f * Q * (Q * Q + 3.0 * s) / 12.0;
}
}  // namespace detail

// Minima at (Q0,0) and its 2pi/3 rotations, saddles analogous with Qs.
// For negative detuning the off-origin wells only exist for f > 2; this is
// reported through has_wells rather than an exception.
inline FixedPointSet fixed_points(const ModelParams& m) {
  FixedPointSet fp;
  fp.origin_kind =
      m.sign_delta > 0 ? OriginKind::local_max : OriginKind::local_min;
  const double disc = m.f * m.f + 4.0 * m.sign_delta;
  if (disc <= 0.0 || m.f <= 0.0) {
    fp.has_wells = false;
    return fp;
  }
  const double root = std::sqrt(disc);
  fp.Q0 = 0.5 * (m.f + root);
  fp.Qs = 0.5 * (m.f - root);
  fp.g_min = detail::extremum_g(fp.Q0, m.f, m.sign_delta);
  fp.g_s = detail::extremum_g(fp.Qs, m.f, m.sign_delta);
  fp.has_wells = fp.g_min < fp.g_s;
  for (int nu = 0; nu < 3; ++nu) {
    const double ang = 2.0 * kPi * nu / 3.0;
    fp.minima[nu] = detail::rotate({fp.Q0, 0.0}, ang);
    fp.saddles[nu] = detail::rotate({fp.Qs, 0.0}, ang);
  }
  return fp;
}

inline double well_depth(const FixedPointSet& fp) { return fp.g_s - fp.g_min; }

// Relative depth coordinate (g - g_min)/(g_s - g_min).
inline double delta_g(const FixedPointSet& fp, double g) {
  return (g - fp.g_min) / well_depth(fp);
}

struct WellGeometry {
  double gPP = 0.0;        // curvature along P at the nu=0 minimum
  double gQQ = 0.0;        // curvature along Q
  double omega_min = 0.0;  // bottom-of-well vibration frequency
  double phi_star = 0.0;   // squeezing parameter
  double Q_cr = 0.0;       // orbit-shape crossover coordinate
  double g_cr = 0.0;       // orbit-shape crossover quasienergy
};

inline WellGeometry well_geometry(const ModelParams& m) {
  const FixedPointSet fp = fixed_points(m);
  if (!fp.has_wells)
    throw ModelError("well_geometry: no off-origin wells for these parameters");
  WellGeometry w;
  w.gPP = 3.0 * m.f * fp.Q0;
  w.gQQ = m.f * fp.Q0 + 2.0 * m.sign_delta;
  if (w.gPP * w.gQQ <= 0.0)
    throw ModelError("well_geometry: degenerate well (gPP*gQQ <= 0)");
  w.omega_min = std::sqrt(w.gPP * w.gQQ);
  const double sq = std::sqrt(std::fabs(w.gQQ)), sp = std::sqrt(std::fabs(w.gPP));
  w.phi_star = std::atanh((sq - sp) / (sq + sp));
  w.Q_cr = -m.f + std::sqrt(m.f * m.f + m.sign_delta);
  w.g_cr = g_value({w.Q_cr, 0.0}, m);
  return w;
}

}  // namespace triosc
