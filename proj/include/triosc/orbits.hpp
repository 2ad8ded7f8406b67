#pragma once

// Classical intrawell orbits of g(Q,P) and the quantities derived from them:
// the vibration frequency omega(g), Fourier components a_m(g) of the complex
// amplitude, the imaginary-time singularity scale tau_inf(g), the asymptotic
// large-|m| matrix elements, the imaginary tunneling time tau_tun(g) and the
// tunneling action S_tun(g), and Bohr-Sommerfeld level estimates.
//
// Positive detuning only: the well nu=0 is centered on the P=0 axis.
//
// The orbit integration core is templated on the scalar type. Fourier
// components decay like exp(-|m| omega tau_inf); beyond m ~ 20 they drop
// under the double-precision noise floor, so the precise path runs the
// integrator and the DFT in long double.

#include <cmath>
#include <complex>
#include <vector>

#include "triosc/model.hpp"
#include "triosc/numerics.hpp"

namespace triosc {

namespace detail {
inline void require_positive_detuning(const ModelParams& m, const char* who) {
  if (m.sign_delta != +1)
    throw ModelError(std::string(who) +
                     ": only positive detuning is supported here");
}

// Momentum-branch building blocks on the P=0 section:
// P^2 = A(Q) + sqrt(B(Q)) on the nu=0 orbit.
inline double poly_A(double Q, const ModelParams& m) {
  return m.sign_delta - Q * Q - 2.0 * m.f * Q;
}
inline double poly_B(double Q, double g, const ModelParams& m) {
  return 4.0 * m.f * Q * ((4.0 / 3.0) * Q * Q + m.f * Q - m.sign_delta) + 4.0 * g;
}
// A + sqrt(B) evaluated through (B - A^2)/(sqrt(B) - A) = 4(g - g(Q,0)) /
// (sqrt(B) - A); cancellation-free near the turning points where A < 0.
inline double momentum_branch_sq(double Q, double g, const ModelParams& m) {
  const double A = poly_A(Q, m);
  const double B = poly_B(Q, g, m);
  return 4.0 * (g - g_value({Q, 0.0}, m)) / (std::sqrt(B) - A);
}

template <typename T>
struct V2 {
  T Q{}, P{};
};

template <typename T>
inline V2<T> hamilton_rhs(const V2<T>& y, T f, T s) {
  const T r2u = y.Q * y.Q + y.P * y.P - s;
  return {y.P * r2u + T(2) * f * y.Q * y.P,
          -y.Q * r2u + f * (y.Q * y.Q - y.P * y.P)};
}

// Dormand-Prince 5(4) specialized to the Hamiltonian flow, scalar type T.
template <typename T>
struct HamiltonIntegrator {
  T f, s, tol;
  T h = T(1e-3);

  V2<T> rhs(const V2<T>& y) const { return hamilton_rhs(y, f, s); }

  void step(T& t, V2<T>& y) {
    auto nrm = [](const V2<T>& v) {
      using std::fabs;
      return std::max(fabs(v.Q), fabs(v.P));
    };
    auto axpy = [](const V2<T>& a, T c, const V2<T>& b) {
      return V2<T>{a.Q + c * b.Q, a.P + c * b.P};
    };
    for (int attempt = 0; attempt < 200; ++attempt) {
      const V2<T> k1 = rhs(y);
      V2<T> yy = axpy(y, h * T(0.2), k1);
      const V2<T> k2 = rhs(yy);
      yy = {y.Q + h * (T(3. / 40) * k1.Q + T(9. / 40) * k2.Q),
            y.P + h * (T(3. / 40) * k1.P + T(9. / 40) * k2.P)};
      const V2<T> k3 = rhs(yy);
      yy = {y.Q + h * (T(44. / 45) * k1.Q - T(56. / 15) * k2.Q + T(32. / 9) * k3.Q),
            y.P + h * (T(44. / 45) * k1.P - T(56. / 15) * k2.P + T(32. / 9) * k3.P)};
      const V2<T> k4 = rhs(yy);
      yy = {y.Q + h * (T(19372. / 6561) * k1.Q - T(25360. / 2187) * k2.Q +
                       T(64448. / 6561) * k3.Q - T(212. / 729) * k4.Q),
            y.P + h * (T(19372. / 6561) * k1.P - T(25360. / 2187) * k2.P +
                       T(64448. / 6561) * k3.P - T(212. / 729) * k4.P)};
      const V2<T> k5 = rhs(yy);
      yy = {y.Q + h * (T(9017. / 3168) * k1.Q - T(355. / 33) * k2.Q +
                       T(46732. / 5247) * k3.Q + T(49. / 176) * k4.Q -
                       T(5103. / 18656) * k5.Q),
            y.P + h * (T(9017. / 3168) * k1.P - T(355. / 33) * k2.P +
                       T(46732. / 5247) * k3.P + T(49. / 176) * k4.P -
                       T(5103. / 18656) * k5.P)};
      const V2<T> k6 = rhs(yy);
      const V2<T> ynew = {
          y.Q + h * (T(35. / 384) * k1.Q + T(500. / 1113) * k3.Q +
                     T(125. / 192) * k4.Q - T(2187. / 6784) * k5.Q +
                     T(11. / 84) * k6.Q),
          y.P + h * (T(35. / 384) * k1.P + T(500. / 1113) * k3.P +
                     T(125. / 192) * k4.P - T(2187. / 6784) * k5.P +
                     T(11. / 84) * k6.P)};
      const V2<T> k7 = rhs(ynew);
      const V2<T> err = {
          h * (T(71. / 57600) * k1.Q - T(71. / 16695) * k3.Q +
               T(71. / 1920) * k4.Q - T(17253. / 339200) * k5.Q +
               T(22. / 525) * k6.Q - T(1. / 40) * k7.Q),
          h * (T(71. / 57600) * k1.P - T(71. / 16695) * k3.P +
               T(71. / 1920) * k4.P - T(17253. / 339200) * k5.P +
               T(22. / 525) * k6.P - T(1. / 40) * k7.P)};
      const T sc = tol * std::max(T(1), std::max(nrm(y), nrm(ynew)));
      const T enorm = nrm(err) / sc;
      if (enorm <= T(1)) {
        t += h;
        y = ynew;
        using std::pow;
        T fac = T(0.9) * pow(std::max(enorm, T(1e-12)), T(-0.2));
        fac = std::min(std::max(fac, T(0.2)), T(5));
        h = std::min(h * fac, T(0.05));
        return;
      }
      using std::pow;
      T fac = T(0.9) * pow(enorm, T(-0.2));
      fac = std::min(std::max(fac, T(0.1)), T(0.5));
      h *= fac;
      if (h < T(1e-16)) throw NumericError("orbit integrator step underflow");
    }
    throw NumericError("orbit integrator failed to control the step size");
  }

  void integrate_to(T& t, V2<T>& y, T t_end) {
    while (t < t_end) {
      h = std::min(h, t_end - t);
      if (h <= T(0)) break;
      step(t, y);
    }
    t = t_end;
  }
};

// One full period from (Qstart, 0). The orbit spins clockwise, so the period
// ends on the P=0 section with Q > Q0, entered from P > 0.
template <typename T>
inline T find_period(T f, T s, T Qstart, T Q0, T tol, T tau_cap) {
  HamiltonIntegrator<T> ode{f, s, tol};
  T t = T(0);
  V2<T> y{Qstart, T(0)};
  bool armed = false;
  T prev_P = T(0);
  while (t < tau_cap) {
    const T t_before = t;
    const V2<T> y_before = y;
    ode.step(t, y);
    if (!armed && std::fabs(double(y.P)) > 1e-6) armed = true;
    if (armed && prev_P > T(0) && y.P <= T(0) && y.Q > Q0) {
      // Bracketed crossing; bisect with short re-integrations.
      T lo = t_before, hi = t;
      for (int it = 0; it < 200 && (hi - lo) > tol * std::max(T(1), t); ++it) {
        const T mid = (lo + hi) / T(2);
        T tt = t_before;
        V2<T> yy = y_before;
        HamiltonIntegrator<T> fine{f, s, tol};
        fine.h = std::max((mid - t_before) / T(8), T(1e-18));
        fine.integrate_to(tt, yy, mid);
        if (yy.P > T(0))
          lo = mid;
        else
          hi = mid;
      }
      return (lo + hi) / T(2);
    }
    prev_P = y.P;
  }
  throw NumericError(
      "orbit_solve: period detection failed (g too close to the saddle value?)");
}

template <typename T>
inline std::vector<V2<T>> resample_orbit(T f, T s, T Qstart, T period, T tol,
                                         int n) {
  HamiltonIntegrator<T> ode{f, s, tol};
  ode.h = period / T(n);
  T t = T(0);
  V2<T> y{Qstart, T(0)};
  std::vector<V2<T>> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    out[static_cast<size_t>(i)] = y;
    ode.integrate_to(t, y, period * T(i + 1) / T(n));
  }
  const double closure =
      std::max(std::fabs(double(y.Q - Qstart)), std::fabs(double(y.P)));
  if (closure > 1e-7 * std::max(1.0, std::fabs(double(Qstart))))
    throw NumericError("orbit_solve: orbit failed to close after one period");
  return out;
}

}  // namespace detail

enum class OrbitClass { elliptic, horseshoe };

struct TurningPoints {
  double Q_min = 0.0;               // inner P=0 crossing of the nu=0 orbit
  double Q_max = 0.0;               // outer P=0 crossing
  std::array<double, 3> B_roots{};  // ascending; B_roots[1] = Q_fin, [2] = Q_B
  OrbitClass orbit_class = OrbitClass::elliptic;

  double Q_fin() const { return B_roots[1]; }
  double Q_B() const { return B_roots[2]; }
};

inline TurningPoints turning_points(const ModelParams& m, double g) {
  detail::require_positive_detuning(m, "turning_points");
  const FixedPointSet fp = fixed_points(m);
  if (!fp.has_wells || g <= fp.g_min || g >= fp.g_s)
    throw ModelError("turning_points: g must lie strictly inside (g_min, g_s)");
  TurningPoints tp;

  // Quartic g(Q,0) = g: (Q^2-s)^2/4 - f Q^3/3 - g = 0.
  const double s = m.sign_delta;
  const std::vector<double> quartic = {0.25 * s * s - g, 0.0, -0.5 * s,
                                       -m.f / 3.0, 0.25};
  std::vector<double> qroots = real_roots(quartic);
  bool found = false;
  for (size_t i = 0; i + 1 < qroots.size(); ++i) {
    if (qroots[i] < fp.Q0 && qroots[i + 1] > fp.Q0) {
      tp.Q_min = qroots[i];
      tp.Q_max = qroots[i + 1];
      found = true;
    }
  }
  if (!found)
    throw NumericError("turning_points: quartic roots do not bracket Q0");

  // Cubic B(Q,g) = 0: (16f/3) Q^3 + 4f^2 Q^2 - 4fs Q + 4g = 0.
  const std::vector<double> cubic = {4.0 * g, -4.0 * m.f * s, 4.0 * m.f * m.f,
                                     16.0 * m.f / 3.0};
  std::vector<double> broots = real_roots(cubic);
  if (broots.size() != 3)
    throw NumericError("turning_points: B(Q,g) must have three real roots, got " +
                       std::to_string(broots.size()));
  for (int i = 0; i < 3; ++i) tp.B_roots[i] = broots[i];

  const WellGeometry w = well_geometry(m);
  tp.orbit_class = g > w.g_cr ? OrbitClass::horseshoe : OrbitClass::elliptic;
  return tp;
}

struct OrbitSample {
  double tau = 0.0, Q = 0.0, P = 0.0;
};

struct ClassicalOrbit {
  double g = 0.0;
  double omega = 0.0;     // 2*pi / period
  double period = 0.0;
  double avg_Q2P2 = 0.0;  // time average of Q^2 + P^2 over one period
  double area = 0.0;      // phase-space area enclosed by the orbit
  std::vector<OrbitSample> samples;  // uniform time grid over one period
  TurningPoints turning;
  ModelParams params;

  double action() const { return area / (2.0 * kPi); }
};

inline constexpr int kOrbitSamples = 4096;

inline ClassicalOrbit orbit_solve(const ModelParams& m, double g,
                                  double tol = 1e-12) {
  detail::require_positive_detuning(m, "orbit_solve");
  ClassicalOrbit orb;
  orb.g = g;
  orb.params = m;
  orb.turning = turning_points(m, g);
  const FixedPointSet fp = fixed_points(m);

  orb.period = detail::find_period<double>(m.f, m.sign_delta, orb.turning.Q_max,
                                           fp.Q0, tol, 2000.0);
  orb.omega = 2.0 * kPi / orb.period;
  const auto pts = detail::resample_orbit<double>(
      m.f, m.sign_delta, orb.turning.Q_max, orb.period, tol, kOrbitSamples);

  orb.samples.resize(pts.size());
  double area2 = 0.0, avg = 0.0;
  for (size_t i = 0; i < pts.size(); ++i) {
    orb.samples[i] = {orb.period * double(i) / kOrbitSamples, pts[i].Q, pts[i].P};
    const auto& nxt = pts[(i + 1) % pts.size()];
    area2 += pts[i].Q * nxt.P - nxt.Q * pts[i].P;
    avg += pts[i].Q * pts[i].Q + pts[i].P * pts[i].P;
  }
  orb.area = 0.5 * std::fabs(area2);
  orb.avg_Q2P2 = avg / double(pts.size());
  return orb;
}

// Fourier components a_m of a(tau) = (Q + iP)/sqrt(2*lambda) over one period,
// a_m = (omega/2pi) \int exp(-i m omega tau) a(tau) dtau. With the time origin
// at (Q_max, 0) the components are real up to roundoff.
struct FourierTable {
  double g = 0.0;
  double lambda = 0.0;
  double omega = 0.0;
  int m_max = 0;
  std::vector<std::complex<double>> coeff;  // index m + m_max
  double avg_Q2P2 = 0.0;

  std::complex<double> a(int m_index) const {
    if (std::abs(m_index) > m_max)
      throw NumericError("FourierTable: |m| out of range");
    return coeff[static_cast<size_t>(m_index + m_max)];
  }
  double abs_a(int m_index) const { return std::abs(a(m_index)); }
  // 2 lambda sum_m |a_m|^2, for the Parseval identity against avg_Q2P2.
  double parseval_sum() const {
    double s = 0.0;
    for (const auto& c : coeff) s += std::norm(c);
    return 2.0 * lambda * s;
  }
};

namespace detail {
inline constexpr long double kPiL = 3.141592653589793238462643383279502884L;

template <typename T>
inline std::vector<std::complex<double>> dft_coeffs(const std::vector<V2<T>>& pts,
                                                    double lambda, int m_max) {
  const int n = static_cast<int>(pts.size());
  std::vector<std::complex<double>> out(static_cast<size_t>(2 * m_max + 1));
  const T scale = T(1) / std::sqrt(T(2) * T(lambda));
  // Twiddle table indexed by (m*j mod n) keeps the phases exact.
  std::vector<T> tc(static_cast<size_t>(n)), ts(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    const T phase = T(-2) * T(kPiL) * T(k) / T(n);
    using std::cos;
    using std::sin;
    tc[static_cast<size_t>(k)] = cos(phase);
    ts[static_cast<size_t>(k)] = sin(phase);
  }
  for (int m = -m_max; m <= m_max; ++m) {
    T re = T(0), im = T(0);
    const int mr = ((m % n) + n) % n;
    for (int j = 0; j < n; ++j) {
      const int k = static_cast<int>((static_cast<long long>(mr) * j) % n);
      const T c = tc[static_cast<size_t>(k)], s = ts[static_cast<size_t>(k)];
      re += c * pts[j].Q - s * pts[j].P;
      im += s * pts[j].Q + c * pts[j].P;
    }
    out[static_cast<size_t>(m + m_max)] = {double(re * scale / T(n)),
                                           double(im * scale / T(n))};
  }
  return out;
}
}  // namespace detail

inline FourierTable fourier_coefficients(const ClassicalOrbit& orbit,
                                         double lambda, int m_max) {
  if (lambda <= 0) throw ModelError("fourier_coefficients: lambda must be > 0");
  const int n = static_cast<int>(orbit.samples.size());
  if (m_max < 0 || 2 * m_max + 1 > n)
    throw NumericError(
        "fourier_coefficients: m range exceeds the aliasing guard of the "
        "sampling grid");
  FourierTable ft;
  ft.g = orbit.g;
  ft.lambda = lambda;
  ft.omega = orbit.omega;
  ft.m_max = m_max;
  ft.avg_Q2P2 = orbit.avg_Q2P2;
  std::vector<detail::V2<double>> pts(orbit.samples.size());
  for (size_t i = 0; i < pts.size(); ++i)
    pts[i] = {orbit.samples[i].Q, orbit.samples[i].P};
  ft.coeff = detail::dft_coeffs(pts, lambda, m_max);
  return ft;
}

// Long-double pipeline for components below the double-precision noise floor
// (|a_m|/|a_0| ~ 1e-16 already at m ~ 20 mid-well).
inline FourierTable fourier_precise(const ModelParams& m, double g,
                                    double lambda, int m_max) {
  detail::require_positive_detuning(m, "fourier_precise");
  using LD = long double;
  const TurningPoints tp = turning_points(m, g);
  const FixedPointSet fp = fixed_points(m);
  const LD tol = 1e-17L;
  const LD period = detail::find_period<LD>(LD(m.f), LD(m.sign_delta),
                                            LD(tp.Q_max), LD(fp.Q0), tol, 2000.0L);
  const auto pts = detail::resample_orbit<LD>(LD(m.f), LD(m.sign_delta),
                                              LD(tp.Q_max), period, tol,
                                              kOrbitSamples);
  FourierTable ft;
  ft.g = g;
  ft.lambda = lambda;
  ft.omega = double(2.0L * kPi / period);
  ft.m_max = m_max;
  LD avg = 0;
  for (const auto& p : pts) avg += p.Q * p.Q + p.P * p.P;
  ft.avg_Q2P2 = double(avg / LD(pts.size()));
  ft.coeff = detail::dft_coeffs(pts, lambda, m_max);
  return ft;
}

// Imaginary time to reach Q -> infinity from (Q_max, 0) along the purely
// imaginary-momentum branch. Endpoint square-root singularity handled by
// u^2 = Q - Q_max; the algebraic Q^{-5/2} tail by Q = Q_big / t^2.
inline double tau_infinity(const ModelParams& m, double g, double tol = 1e-9) {
  detail::require_positive_detuning(m, "tau_infinity");
  const TurningPoints tp = turning_points(m, g);
  const double Qmax = tp.Q_max;

  auto inv_speed = [&](double Q) {
    const double B = detail::poly_B(Q, g, m);
    const double p2 = -detail::momentum_branch_sq(Q, g, m);  // |P|^2 > 0
    return 1.0 / (std::sqrt(p2) * std::sqrt(B));
  };

  const double Qbig = 10.0 * (std::fabs(Qmax) + 1.0);
  auto near = [&](double u) { return 2.0 * u * inv_speed(Qmax + u * u); };
  const double part1 =
      integrate_adaptive(near, 0.0, std::sqrt(Qbig - Qmax), tol);
  auto far = [&](double t) {
    const double Q = Qbig / (t * t);
    return inv_speed(Q) * 2.0 * Qbig / (t * t * t);
  };
  const double part2 = integrate_adaptive(far, 0.0, 1.0, tol);
  return part1 + part2;
}

// Large-|m| asymptotics of |a_m(g)|; the decay exponent omega*tau_inf is the
// same on both sides, the prefactors differ (branch points of different order).
struct OrbitAsymptotics {
  double f = 0.0;
  double lambda = 0.0;
  double omega = 0.0;
  double tau_inf = 0.0;

  double abs_a(int m_index) const {
    if (m_index == 0) throw NumericError("OrbitAsymptotics: m must be nonzero");
    const double am = std::fabs(static_cast<double>(m_index));
    const double decay = std::exp(-am * omega * tau_inf);
    if (m_index < 0) {
      return std::pow(1.5, 1.0 / 6.0) * std::tgamma(1.0 / 3.0) /
             (2.0 * kPi * std::sqrt(lambda)) *
             std::cbrt(omega * omega / (am * f)) * decay;
    }
    return std::pow(2.0 / 3.0, 1.0 / 6.0) * std::tgamma(2.0 / 3.0) /
           (2.0 * kPi * std::sqrt(lambda)) * std::cbrt(f * omega / (am * am)) *
           decay;
  }
  // The expansion parameter is |m| omega tau_inf; flag values below 3.
  bool reliable(int m_index) const {
    return std::fabs(static_cast<double>(m_index)) * omega * tau_inf >= 3.0;
  }
};

inline OrbitAsymptotics orbit_asymptotics(const ModelParams& m, double g,
                                          double lambda) {
  OrbitAsymptotics oa;
  oa.f = m.f;
  oa.lambda = lambda;
  oa.omega = orbit_solve(m, g).omega;
  oa.tau_inf = tau_infinity(m, g);
  return oa;
}

struct AsymptoticElement {
  double value = 0.0;
  bool reliable = true;
};

inline AsymptoticElement asymptotic_element(const ModelParams& m, double g,
                                            double lambda, int m_index) {
  const OrbitAsymptotics oa = orbit_asymptotics(m, g, lambda);
  return {oa.abs_a(m_index), oa.reliable(m_index)};
}

// Imaginary tunneling time tau_tun(g) < 0 between the nu=0 well and a
// neighboring well, by quadrature across the classically forbidden region.
// The two-region split follows the orbit-shape crossover at g_cr.
inline double tau_tunnel(const ModelParams& m, double g, double tol = 1e-9) {
  detail::require_positive_detuning(m, "tau_tunnel");
  const WellGeometry w = well_geometry(m);
  const TurningPoints tp = turning_points(m, g);
  const double Qfin = tp.Q_fin();
  const double QB = tp.Q_B();

  // Region 1: Q in (Q_fin, Q_B), B < 0, momentum fully complex with
  // Im P < 0 on the tail of the nu=0 well.
  auto integrand1 = [&](double Q) {
    const double A = detail::poly_A(Q, m);
    const double Babs = std::fabs(detail::poly_B(Q, g, m));
    const double mod = std::sqrt(A * A + Babs);  // |P|^2
    const double reP = -std::sqrt(std::max(0.5 * (mod + A), 0.0));
    return reP / (std::sqrt(Babs) * mod);
  };
  const double mid1 = 0.5 * (Qfin + QB);
  auto left1 = [&](double u) { return 2.0 * u * integrand1(Qfin + u * u); };
  auto right1 = [&](double u) { return 2.0 * u * integrand1(QB - u * u); };
  double tau = integrate_adaptive(left1, 0.0, std::sqrt(mid1 - Qfin), tol) +
               integrate_adaptive(right1, 0.0, std::sqrt(QB - mid1), tol);

  // Region 2: Q in (Q_B, Q_min), only below the crossover; here B > 0 and the
  // momentum is purely imaginary, P = -i |A + sqrt(B)|^(1/2).
  if (g < w.g_cr) {
    auto integrand2 = [&](double Q) {
      const double B = detail::poly_B(Q, g, m);
      const double imP =
          -std::sqrt(std::max(-detail::momentum_branch_sq(Q, g, m), 0.0));
      return 1.0 / (std::sqrt(B) * imP);
    };
    const double mid2 = 0.5 * (QB + tp.Q_min);
    auto left2 = [&](double u) { return 2.0 * u * integrand2(QB + u * u); };
    auto right2 =
        [&](double u) { return 2.0 * u * integrand2(tp.Q_min - u * u); };
    tau += integrate_adaptive(left2, 0.0, std::sqrt(mid2 - QB), tol) +
           integrate_adaptive(right2, 0.0, std::sqrt(tp.Q_min - mid2), tol);
  }
  return tau;
}

// Reported alongside tau_inf: the next singularity along the imaginary axis
// sits at |tau_tun| - tau_inf, which must exceed tau_inf itself.
inline bool closest_singularity_ordering_ok(const ModelParams& m, double g) {
  return tau_infinity(m, g) < std::fabs(tau_tunnel(m, g)) - tau_infinity(m, g);
}

// S_tun(g) = int_{g_s}^{g} tau_tun dg' >= 0, with S_tun(g_s) = 0.
inline double tunneling_action(const ModelParams& m, double g,
                               double tol = 1e-7) {
  const FixedPointSet fp = fixed_points(m);
  if (!(g > fp.g_min && g <= fp.g_s))
    throw ModelError("tunneling_action: g must lie in (g_min, g_s]");
  if (g == fp.g_s) return 0.0;
  // Integrand |tau_tun| has an integrable log divergence at g_min, but we
  // only integrate down to g > g_min; near g_s evaluate slightly inside
  // (tau_tun is linear and finite there, so the clamp costs ~1e-4 * depth).
  const double eps = 1e-4 * well_depth(fp);
  auto f = [&](double gp) { return -tau_tunnel(m, std::min(gp, fp.g_s - eps)); };
  return integrate_adaptive(f, g, fp.g_s, tol, 2000);
}

// Bohr-Sommerfeld levels: I(g_n) = lambda (n + 1/2) with I(g) the scaled
// action (enclosed area / 2pi).
struct BohrSommerfeld {
  std::vector<double> levels;  // predicted g_n, ascending
  std::vector<double> action_grid_g;
  std::vector<double> action_grid_I;
  std::vector<double> action_grid_omega;
};

inline BohrSommerfeld bohr_sommerfeld(const ModelParams& m, double lambda,
                                      int grid_points = 60) {
  detail::require_positive_detuning(m, "bohr_sommerfeld");
  const FixedPointSet fp = fixed_points(m);
  if (!fp.has_wells) throw ModelError("bohr_sommerfeld: wells required");
  BohrSommerfeld bs;
  const double depth = well_depth(fp);
  const double lo = fp.g_min + 1e-7 * depth;
  const double hi = fp.g_s - 2e-3 * depth;
  for (int i = 0; i < grid_points; ++i) {
    // Cosine-clustered grid resolves both ends.
    const double x = 0.5 * (1.0 - std::cos(kPi * (i + 0.5) / grid_points));
    const double g = lo + (hi - lo) * x;
    const ClassicalOrbit orb = orbit_solve(m, g);
    bs.action_grid_g.push_back(g);
    bs.action_grid_I.push_back(orb.action());
    bs.action_grid_omega.push_back(orb.omega);
  }
  const double I_max = bs.action_grid_I.back();
  for (int n = 0;; ++n) {
    const double target = lambda * (n + 0.5);
    if (target >= I_max) break;
    size_t k = 0;
    while (k + 1 < bs.action_grid_I.size() && bs.action_grid_I[k + 1] < target)
      ++k;
    double g = bs.action_grid_g[k] +
               (target - bs.action_grid_I[k]) /
                   std::max(bs.action_grid_I[k + 1] - bs.action_grid_I[k],
                            1e-300) *
                   (bs.action_grid_g[k + 1] - bs.action_grid_g[k]);
    for (int it = 0; it < 30; ++it) {
      const ClassicalOrbit orb = orbit_solve(m, g);
      const double resid = orb.action() - target;
      const double step = -resid * orb.omega;  // dg = -resid / (dI/dg)
      g += step;
      if (std::fabs(resid) < 1e-12 + 1e-10 * target) break;
      g = std::clamp(g, lo, hi);
    }
    bs.levels.push_back(g);
  }
  return bs;
}

}  // namespace triosc
