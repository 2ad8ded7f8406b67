#pragma once

// Classical dissipative dynamics in the rotating frame: stationary states
// and their stability, the saddle-node bifurcation where the period-3 states
// merge with the saddles, the slow-mode normal form near threshold, quantum
// Langevin simulation (full plane and reduced), and Kramers-type escape
// exponents.

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "triosc/model.hpp"
#include "triosc/numerics.hpp"

namespace triosc {

// Drift of the classical Langevin dynamics (noise-free part).
inline PhasePoint dissipative_drift(const PhasePoint& pt, const ModelParams& m,
                                    double kappa) {
  const PhasePoint h = hamiltonian_vector_field(pt, m);
  return {h.Q - kappa * pt.Q, h.P - kappa * pt.P};
}

// Jacobian of the drift.
inline Eigen::Matrix2d drift_jacobian(const PhasePoint& pt, const ModelParams& m,
                                      double kappa) {
  const double r2u = pt.Q * pt.Q + pt.P * pt.P - m.sign_delta;
  const double gQQ = r2u + 2.0 * pt.Q * pt.Q - 2.0 * m.f * pt.Q;
  const double gPP = r2u + 2.0 * pt.P * pt.P + 2.0 * m.f * pt.Q;
  const double gQP = 2.0 * pt.Q * pt.P + 2.0 * m.f * pt.P;
  Eigen::Matrix2d j;
  j << gQP - kappa, gPP, -gQQ, -gQP - kappa;
  return j;
}

struct ClassicalState {
  PhasePoint pt;
  std::complex<double> eig1, eig2;
  bool stable = false;
};

struct StationaryStateSet {
  ClassicalState origin;
  bool period3_exist = false;
  double r_plus = 0.0, r_minus = 0.0;
  std::array<ClassicalState, 3> stable{};   // radius r_plus
  std::array<ClassicalState, 3> saddles{};  // radius r_minus
  double kappa = 0.0, f = 0.0;
};

namespace detail {
inline ClassicalState make_state(const PhasePoint& pt, const ModelParams& m,
                                 double kappa) {
  ClassicalState st;
  st.pt = pt;
  const Eigen::Matrix2d j = drift_jacobian(pt, m, kappa);
  const Eigen::EigenSolver<Eigen::Matrix2d> es(j);
  st.eig1 = es.eigenvalues()[0];
  st.eig2 = es.eigenvalues()[1];
  st.stable = st.eig1.real() < 0 && st.eig2.real() < 0;
  return st;
}
}  // namespace detail

// Bifurcational decay rate: period-3 states exist for kappa < kappa_B(f).
inline double kappa_bifurcation(const ModelParams& m) {
  const double v = m.f * m.f * m.sign_delta + 0.25 * std::pow(m.f, 4);
  return v > 0 ? std::sqrt(v) : 0.0;
}

// Inverse relation: threshold drive at a given decay rate.
inline double f_bifurcation(const ModelParams& m, double kappa) {
  return std::sqrt(
      2.0 * (std::sqrt(1.0 + kappa * kappa) - double(m.sign_delta)));
}

inline StationaryStateSet classical_fixed_points(const ModelParams& m,
                                                 double kappa) {
  m.validate();
  if (kappa < 0) throw ModelError("classical_fixed_points: kappa must be >= 0");
  StationaryStateSet set;
  set.kappa = kappa;
  set.f = m.f;
  set.origin = detail::make_state({0.0, 0.0}, m, kappa);

  const double disc = m.f * m.f * m.sign_delta + 0.25 * std::pow(m.f, 4) -
                      kappa * kappa;
  if (disc < 0 || m.f <= 0) return set;  // only the zero-amplitude state
  set.period3_exist = true;
  const double root = std::sqrt(disc);
  set.r_plus = std::sqrt(m.sign_delta + 0.5 * m.f * m.f + root);
  set.r_minus = std::sqrt(m.sign_delta + 0.5 * m.f * m.f - root);

  auto place = [&](double r, std::array<ClassicalState, 3>& out) {
    const std::complex<double> rhs =
        m.f * r /
        std::complex<double>(r * r - m.sign_delta, -kappa);
    const double phi0 = std::arg(rhs) / 3.0;
    for (int j = 0; j < 3; ++j) {
      const double phi = phi0 + 2.0 * kPi * j / 3.0;
      out[static_cast<size_t>(j)] = detail::make_state(
          {r * std::cos(phi), r * std::sin(phi)}, m, kappa);
    }
  };
  place(set.r_plus, set.stable);
  place(set.r_minus, set.saddles);
  return set;
}

// ---------------------------------------------------------------------------
// Slow-mode (saddle-node normal form) reduction at kappa = kappa_B.

struct BifurcationData {
  double kappa_B = 0.0;
  double r_B = 0.0;
  std::complex<double> x_B;  // complex amplitude at the bifurcation point
  double phi_B = 0.0;        // rotation angle isolating the slow variable
  double k_ad = 0.0;         // adiabatic slope of the fast variable
  double a_B = 0.0, b_B = 0.0;  // normal-form coefficients, a_B b_B < 0
};

inline BifurcationData slow_mode_reduction(const ModelParams& m) {
  m.validate();
  BifurcationData bd;
  bd.kappa_B = kappa_bifurcation(m);
  if (bd.kappa_B <= 0)
    throw ModelError("slow_mode_reduction: no saddle-node threshold here");
  bd.r_B = std::sqrt(m.sign_delta + 0.5 * m.f * m.f);
  bd.k_ad = -(1.0 + m.f * m.f) / bd.kappa_B;

  const std::complex<double> iu(0.0, 1.0);
  auto phase_rhs = [&](const std::complex<double>& xb) {
    return -iu * (xb * xb - 2.0 * m.f * std::conj(xb)) /
           std::complex<double>(bd.kappa_B,
                                -(2.0 * std::norm(xb) - 1.0));
  };
  auto coeffs = [&](const std::complex<double>& xb,
                    double phib) -> std::pair<double, double> {
    const std::complex<double> XB = xb * std::exp(-iu * phib);
    const std::complex<double> kfac =
        std::complex<double>(1.0, bd.k_ad) * std::complex<double>(1.0, bd.k_ad);
    const double a =
        std::imag(kfac * (std::conj(XB) +
                          m.f * std::exp(3.0 * iu * phib))) +
        2.0 * (1.0 + bd.k_ad * bd.k_ad) * std::imag(XB);
    return {a, std::real(XB)};
  };

  // The three period-3 states at threshold; the coefficients must coincide.
  const std::complex<double> ph_rhs =
      m.f * bd.r_B / std::complex<double>(0.5 * m.f * m.f, -bd.kappa_B);
  const double phi_st = std::arg(ph_rhs) / 3.0;
  bd.x_B = std::polar(bd.r_B, phi_st);
  bd.phi_B = 0.5 * std::arg(phase_rhs(bd.x_B));
  std::tie(bd.a_B, bd.b_B) = coeffs(bd.x_B, bd.phi_B);

  for (int j = 1; j < 3; ++j) {
    const std::complex<double> xj = std::polar(bd.r_B, phi_st + 2.0 * kPi * j / 3.0);
    const double phij = bd.phi_B + 2.0 * kPi * j / 3.0;
    // the rotated angle must solve the phase condition for the rotated state
    const std::complex<double> rhs_j = phase_rhs(xj);
    if (std::abs(std::exp(2.0 * iu * phij) - rhs_j / std::abs(rhs_j)) > 1e-8)
      throw NumericError("slow_mode_reduction: rotated phase inconsistent");
    const auto [aj, bj] = coeffs(xj, phij);
    if (std::fabs(aj - bd.a_B) > 1e-8 || std::fabs(bj - bd.b_B) > 1e-8)
      throw NumericError(
          "slow_mode_reduction: normal-form coefficients differ across wells");
  }
  if (bd.a_B * bd.b_B >= 0)
    throw NumericError("slow_mode_reduction: expected a_B b_B < 0");
  return bd;
}

// ---------------------------------------------------------------------------
// Quantum-noise Langevin simulation in the (Q, P) plane, Euler-Maruyama with
// per-quadrature noise variance lambda kappa (2 nbar + 1) dt.

struct Sim2DOptions {
  double dt = 1e-3;
  double tau_max = 100.0;
  uint64_t seed = 1;
  int record_stride = 1;  // store every k-th step
};

struct Trajectory2D {
  std::vector<double> tau;
  std::vector<PhasePoint> pts;
};

inline void check_step_guard(double dt, double kappa) {
  if (dt > 0.01 / std::max(1.0, kappa))
    throw ModelError("simulate_2d: dt must satisfy dt <= 0.01/max(1, kappa)");
}

inline Trajectory2D simulate_2d(const ModelParams& m, double kappa,
                                PhasePoint start, const Sim2DOptions& opt) {
  m.validate();
  check_step_guard(opt.dt, kappa);
  Rng rng(opt.seed);
  const double sigma =
      std::sqrt(m.lambda * kappa * (2.0 * m.nbar + 1.0) * opt.dt);
  Trajectory2D tr;
  PhasePoint pt = start;
  const long nsteps = static_cast<long>(opt.tau_max / opt.dt);
  for (long i = 0; i <= nsteps; ++i) {
    if (i % opt.record_stride == 0) {
      tr.tau.push_back(i * opt.dt);
      tr.pts.push_back(pt);
    }
    const PhasePoint d = dissipative_drift(pt, m, kappa);
    pt.Q += d.Q * opt.dt + sigma * rng.gauss();
    pt.P += d.P * opt.dt + sigma * rng.gauss();
  }
  return tr;
}

enum class Attractor { origin, well0, well1, well2, unresolved };

// Noiseless relaxation to the nearest attractor decides basin membership.
inline Attractor classify_basin(const ModelParams& m, double kappa,
                                PhasePoint pt, double tau_relax = -1.0) {
  if (kappa <= 0)
    throw ModelError("classify_basin: requires kappa > 0 for relaxation");
  if (tau_relax < 0) tau_relax = 50.0 / kappa;
  const StationaryStateSet set = classical_fixed_points(m, kappa);
  auto rhs = [&](double, const Vec2& y) {
    const PhasePoint d = dissipative_drift({y.x, y.y}, m, kappa);
    return Vec2{d.Q, d.P};
  };
  Rk45<decltype(rhs)> ode{rhs};
  ode.abstol = ode.reltol = 1e-10;
  ode.hmax = 0.1;
  double t = 0.0;
  Vec2 y{pt.Q, pt.P};
  ode.integrate_to(t, y, tau_relax);
  auto near = [&](const PhasePoint& target) {
    return std::hypot(y.x - target.Q, y.y - target.P) < 0.02;
  };
  if (near(set.origin.pt)) return Attractor::origin;
  if (set.period3_exist) {
    for (int j = 0; j < 3; ++j)
      if (near(set.stable[static_cast<size_t>(j)].pt))
        return static_cast<Attractor>(static_cast<int>(Attractor::well0) + j);
  }
  return Attractor::unresolved;
}

struct EscapeStatistics {
  long n_trajectories = 0;
  long n_escaped = 0;
  double mfpt = 0.0;
  double stderr_mfpt = 0.0;
  uint64_t seed = 0;
};

// Full-plane escape from the well-0 period-3 state: Euler-Maruyama with
// basin membership re-checked every check_interval of slow time (membership
// via noiseless relaxation). First passage is the first membership change.
inline EscapeStatistics simulate_2d_escape(const ModelParams& m, double kappa,
                                           long n_traj, const Sim2DOptions& opt,
                                           double check_interval = -1.0) {
  m.validate();
  check_step_guard(opt.dt, kappa);
  if (kappa <= 0) throw ModelError("simulate_2d_escape: kappa must be > 0");
  const StationaryStateSet set = classical_fixed_points(m, kappa);
  if (!set.period3_exist)
    throw ModelError("simulate_2d_escape: no period-3 states at this kappa");
  if (check_interval <= 0) check_interval = 1.0 / kappa;
  const long steps_per_check =
      std::max<long>(1, static_cast<long>(check_interval / opt.dt));
  const double sigma =
      std::sqrt(m.lambda * kappa * (2.0 * m.nbar + 1.0) * opt.dt);

  EscapeStatistics st;
  st.seed = opt.seed;
  st.n_trajectories = 0;
  double sum = 0.0, sum2 = 0.0;
  for (long traj = 0; traj < n_traj; ++traj) {
    ++st.n_trajectories;
    Rng rng(opt.seed, static_cast<uint64_t>(traj));
    PhasePoint pt = set.stable[0].pt;
    double tau = 0.0;
    bool escaped = false;
    while (tau < opt.tau_max && !escaped) {
      for (long s = 0; s < steps_per_check && tau < opt.tau_max; ++s) {
        const PhasePoint d = dissipative_drift(pt, m, kappa);
        pt.Q += d.Q * opt.dt + sigma * rng.gauss();
        pt.P += d.P * opt.dt + sigma * rng.gauss();
        tau += opt.dt;
      }
      if (classify_basin(m, kappa, pt) != Attractor::well0) escaped = true;
    }
    if (escaped) {
      ++st.n_escaped;
      sum += tau;
      sum2 += tau * tau;
    }
  }
  if (st.n_escaped > 0) {
    st.mfpt = sum / double(st.n_escaped);
    const double var = sum2 / double(st.n_escaped) - st.mfpt * st.mfpt;
    st.stderr_mfpt = std::sqrt(std::max(var, 0.0) / double(st.n_escaped));
  }
  return st;
}

// ---------------------------------------------------------------------------
// Reduced slow-mode SDE near the bifurcation:
//   dz = (a_B z^2 - b_B (kappa - kappa_B)) dtau + xi,
//   <xi xi> = lambda kappa (2 nbar + 1) delta.
// The metastable state sits at -z_st sgn(a_B), the saddle at +z_st sgn(a_B);
// the absorbing boundary is placed two z_st beyond the saddle.

struct SlowModeOptions {
  double dt = 5e-3;
  long n_trajectories = 1000;
  uint64_t seed = 1;
  double tau_cap = 1e7;
  double boundary_factor = 3.0;  // absorbing at factor * z_st * sgn(a_B)
};

inline double slow_mode_zst(const BifurcationData& bd, double kappa) {
  const double v = bd.b_B * (kappa - bd.kappa_B) / bd.a_B;
  if (v <= 0)
    throw ModelError("slow_mode: no metastable state at kappa >= kappa_B");
  return std::sqrt(v);
}

inline EscapeStatistics simulate_slow_mode(const BifurcationData& bd,
                                           const ModelParams& m, double kappa,
                                           const SlowModeOptions& opt) {
  m.validate();
  if (kappa >= bd.kappa_B)
    throw ModelError("simulate_slow_mode: kappa must be below kappa_B");
  if (std::fabs(kappa - bd.kappa_B) > 0.2 * bd.kappa_B)
    throw ModelError(
        "simulate_slow_mode: outside the normal-form window "
        "|kappa - kappa_B| <= 0.2 kappa_B");
  const double zst = slow_mode_zst(bd, kappa);
  const double sgn_a = bd.a_B > 0 ? 1.0 : -1.0;
  const double z0 = -zst * sgn_a;
  const double zabs = opt.boundary_factor * zst * sgn_a;
  const double drift_const = -bd.b_B * (kappa - bd.kappa_B);
  const double sigma =
      std::sqrt(m.lambda * kappa * (2.0 * m.nbar + 1.0) * opt.dt);

  EscapeStatistics st;
  st.seed = opt.seed;
  st.n_trajectories = opt.n_trajectories;
  double sum = 0.0, sum2 = 0.0;
  for (long traj = 0; traj < opt.n_trajectories; ++traj) {
    Rng rng(opt.seed, static_cast<uint64_t>(traj));
    double z = z0;
    double tau = 0.0;
    while (tau < opt.tau_cap) {
      z += (bd.a_B * z * z + drift_const) * opt.dt + sigma * rng.gauss();
      tau += opt.dt;
      if ((sgn_a > 0 && z >= zabs) || (sgn_a < 0 && z <= zabs)) break;
    }
    if (tau < opt.tau_cap) {
      ++st.n_escaped;
      sum += tau;
      sum2 += tau * tau;
    }
  }
  if (st.n_escaped == 0)
    throw NumericError("simulate_slow_mode: no escapes within the time cap");
  st.mfpt = sum / double(st.n_escaped);
  const double var = sum2 / double(st.n_escaped) - st.mfpt * st.mfpt;
  st.stderr_mfpt = std::sqrt(std::max(var, 0.0) / double(st.n_escaped));
  return st;
}

// Escape-rate exponent near threshold (logarithmic accuracy).
inline double kramers_exponent(const BifurcationData& bd, const ModelParams& m,
                               double kappa) {
  const double num =
      std::pow(std::fabs(bd.b_B * (kappa - bd.kappa_B)), 1.5);
  return -(2.0 / 3.0) * num /
         (std::sqrt(std::fabs(bd.a_B)) * bd.kappa_B * m.lambda *
          (2.0 * m.nbar + 1.0));
}

// Barrier height of the cubic pseudo-potential over the diffusion constant
// D = lambda kappa (2 nbar + 1)/2; reported alongside the exponent above so
// the prefactor conventions can be compared.
inline double slow_mode_barrier_over_noise(const BifurcationData& bd,
                                           const ModelParams& m, double kappa) {
  const double zst = slow_mode_zst(bd, kappa);
  const double barrier = (4.0 / 3.0) * std::fabs(bd.a_B) * zst * zst * zst;
  const double diffusion = 0.5 * m.lambda * kappa * (2.0 * m.nbar + 1.0);
  return barrier / diffusion;
}

}  // namespace triosc
