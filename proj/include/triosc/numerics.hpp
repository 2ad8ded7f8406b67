#pragma once

// Shared numerical machinery: adaptive RK integration, adaptive quadrature,
// polynomial roots, GTH stationary solve, power-law exponential tail sums,
// a splittable RNG and small fitting helpers.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace triosc {

inline constexpr double kPi = 3.14159265358979323846;

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// 2-vector used by the phase-plane integrators.

struct Vec2 {
  double x = 0.0, y = 0.0;
  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
};
inline Vec2 operator*(double s, const Vec2& v) { return v * s; }
inline double norm_inf(const Vec2& v) { return std::max(std::fabs(v.x), std::fabs(v.y)); }

// Dormand-Prince 5(4) step with embedded error estimate.
template <typename F>
struct Rk45 {
  F rhs;
  double abstol = 1e-12;
  double reltol = 1e-12;
  double h = 1e-3;
  double hmin = 1e-14;
  double hmax = 1.0;

  // One accepted adaptive step from (t, y); updates t, y and the stored h.
  void step(double& t, Vec2& y) {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                            a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    for (int attempt = 0; attempt < 200; ++attempt) {
      const Vec2 k1 = rhs(t, y);
      const Vec2 k2 = rhs(t + a21 * h, y + h * (a21 * k1));
      const Vec2 k3 = rhs(t + 0.3 * h, y + h * (a31 * k1 + a32 * k2));
      const Vec2 k4 = rhs(t + 0.8 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
      const Vec2 k5 =
          rhs(t + 8.0 / 9 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const Vec2 k6 =
          rhs(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      const Vec2 ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const Vec2 k7 = rhs(t + h, ynew);
      const Vec2 err =
          h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const double sc = abstol + reltol * std::max(norm_inf(y), norm_inf(ynew));
      const double enorm = norm_inf(err) / sc;
      if (enorm <= 1.0 || h <= hmin * (1 + std::fabs(t))) {
        t += h;
        y = ynew;
        const double fac =
            std::clamp(0.9 * std::pow(std::max(enorm, 1e-10), -0.2), 0.2, 5.0);
        h = std::clamp(h * fac, hmin, hmax);
        return;
      }
      h = std::max(h * std::clamp(0.9 * std::pow(enorm, -0.2), 0.1, 0.5),
                   hmin);
    }
    throw NumericError("Rk45: step size control failed to converge");
  }

  // Integrate exactly to t_end (clipping the last steps).
  void integrate_to(double& t, Vec2& y, double t_end) {
    while (t < t_end) {
      h = std::min(h, t_end - t);
      if (h <= 0) break;
      step(t, y);
    }
    t = t_end;
  }
};

// ---------------------------------------------------------------------------
// Adaptive Gauss-Kronrod (G7,K15) quadrature. Endpoints are never evaluated,
// so integrable endpoint singularities regularized by substitution are safe.

namespace detail {
inline constexpr std::array<double, 8> kKronrodX = {
    0.0,
    0.2077849550078985,
    0.4058451513773972,
    0.5860872354676911,
    0.7415311855993945,
    0.8648644233597691,
    0.9491079123427585,
    0.9914553711208126};
inline constexpr std::array<double, 8> kKronrodW = {
    0.2094821410847278,
    0.2044329400752989,
    0.1903505780647854,
    0.1690047266392679,
    0.1406532597155259,
    0.1047900103222502,
    0.0630920926299786,
    0.0229353220105292};
inline constexpr std::array<double, 4> kGaussW = {
    0.4179591836734694, 0.3818300505051189, 0.2797053914892767,
    0.1294849661688697};

template <typename F>
inline void gk15(const F& f, double a, double b, double& val, double& err) {
  const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
  const double f0 = f(c);
  double resk = kKronrodW[0] * f0;
  double resg = kGaussW[0] * f0;
  for (int i = 1; i < 8; ++i) {
    const double fx1 = f(c - hw * kKronrodX[i]);
    const double fx2 = f(c + hw * kKronrodX[i]);
    resk += kKronrodW[i] * (fx1 + fx2);
    if (i % 2 == 0) resg += kGaussW[i / 2] * (fx1 + fx2);
  }
  val = resk * hw;
  err = std::fabs((resk - resg) * hw);
}
}  // namespace detail

template <typename F>
inline double integrate_adaptive(const F& f, double a, double b, double tol = 1e-9,
                                 int max_intervals = 20000) {
  struct Seg {
    double a, b, val, err;
  };
  double v, e;
  detail::gk15(f, a, b, v, e);
  std::vector<Seg> segs{{a, b, v, e}};
  double total = v, toterr = e;
  int n = 1;
  while (toterr > tol * std::max(1.0, std::fabs(total)) && n < max_intervals) {
    // split the worst segment
    size_t worst = 0;
    for (size_t i = 1; i < segs.size(); ++i)
      if (segs[i].err > segs[worst].err) worst = i;
    Seg s = segs[worst];
    if (s.b - s.a < 1e-15 * (std::fabs(s.a) + std::fabs(s.b) + 1.0)) break;
    const double m = 0.5 * (s.a + s.b);
    Seg l{s.a, m, 0, 0}, r{m, s.b, 0, 0};
    detail::gk15(f, l.a, l.b, l.val, l.err);
    detail::gk15(f, r.a, r.b, r.val, r.err);
    total += l.val + r.val - s.val;
    toterr += l.err + r.err - s.err;
    segs[worst] = l;
    segs.push_back(r);
    ++n;
  }
  if (!std::isfinite(total))
    throw NumericError("integrate_adaptive: non-finite result");
  return total;
}

// ---------------------------------------------------------------------------
// Root finding.

template <typename F>
inline double bisect(const F& f, double lo, double hi, double tol = 1e-12,
                     int maxit = 200) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0) return lo;
  if (fhi == 0) return hi;
  if ((flo > 0) == (fhi > 0))
    throw NumericError("bisect: endpoints do not bracket a root");
  for (int i = 0; i < maxit && hi - lo > tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0) return mid;
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Real roots of a monic-normalizable polynomial c[0] + c[1] x + ... + c[n] x^n
// via the companion matrix, Newton-polished.
inline std::vector<double> real_roots(const std::vector<double>& c,
                                      double im_tol = 1e-8) {
  int n = static_cast<int>(c.size()) - 1;
  while (n > 0 && c[n] == 0.0) --n;
  if (n < 1) return {};
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) comp(i, n - 1) = -c[i] / c[n];
  for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  std::vector<double> roots;
  double scale = 0.0;
  for (int i = 0; i <= n; ++i) scale = std::max(scale, std::fabs(c[i]));
  for (int i = 0; i < n; ++i) {
    const auto z = es.eigenvalues()[i];
    if (std::fabs(z.imag()) > im_tol * (1.0 + std::fabs(z.real()))) continue;
    double x = z.real();
    for (int it = 0; it < 4; ++it) {  // Newton polish
      double p = 0, dp = 0;
      for (int k = n; k >= 0; --k) {
        dp = dp * x + p;
        p = p * x + c[k];
      }
      if (std::fabs(dp) < 1e-300) break;
      const double dx = p / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-15 * (1.0 + std::fabs(x))) break;
    }
    (void)scale;
    roots.push_back(x);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

// ---------------------------------------------------------------------------
// GTH (state-reduction) stationary distribution of a CTMC generator.
// rates(i,j) >= 0 is the i->j transition rate, diagonal ignored. All
// arithmetic is subtraction-free, so tiny stationary weights keep full
// relative accuracy.
inline std::vector<double> gth_stationary(Eigen::MatrixXd rates) {
  const int n = static_cast<int>(rates.rows());
  if (n == 0) return {};
  if (n == 1) return {1.0};
  for (int k = n - 1; k >= 1; --k) {
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += rates(k, j);
    if (s <= 0.0)
      throw NumericError("gth_stationary: reducible rate matrix (state " +
                         std::to_string(k) + " has no downward path)");
    for (int i = 0; i < k; ++i) {
      const double q = rates(i, k) / s;
      rates(i, k) = q;
      if (q == 0.0) continue;
      for (int j = 0; j < k; ++j)
        if (j != i) rates(i, j) += q * rates(k, j);
    }
  }
  std::vector<double> pi(n, 0.0);
  pi[0] = 1.0;
  double tot = 1.0;
  for (int k = 1; k < n; ++k) {
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += pi[i] * rates(i, k);
    pi[k] = s;
    tot += s;
  }
  for (double& p : pi) p /= tot;
  return pi;
}

// ---------------------------------------------------------------------------
// Upper incomplete gamma for fractional a, needed by the tail sums.

namespace detail {
inline double upper_gamma_cf(double a, double z) {
  // Lentz continued fraction, valid for z >~ 1.
  const double tiny = 1e-300;
  double b = z + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 400; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-z + a * std::log(z)) * h;
}
}  // namespace detail

inline double upper_incomplete_gamma(double a, double z) {
  if (z < 0) throw NumericError("upper_incomplete_gamma: z < 0");
  if (z == 0) return std::tgamma(a);
  if (z >= 1.5) return detail::upper_gamma_cf(a, z);
  // Gamma(a) - lower series.
  double sum = 1.0 / a, term = sum;
  for (int k = 1; k < 300; ++k) {
    term *= z / (a + k);
    sum += term;
    if (std::fabs(term) < 1e-17 * std::fabs(sum)) break;
  }
  return std::tgamma(a) - std::exp(-z + a * std::log(z)) * sum;
}

// Sum_{m >= m0} m^{-s} exp(-eps*m). Direct summation switches to an
// Euler-Maclaurin remainder once the summand is smooth; eps = 0 is allowed
// for s > 1 (returns +inf otherwise).
inline double tail_power_exp_sum(double s, double eps, int m0) {
  if (m0 < 1) throw NumericError("tail_power_exp_sum: m0 must be >= 1");
  if (eps < 0) throw NumericError("tail_power_exp_sum: eps < 0");
  if (eps == 0.0 && s <= 1.0) return std::numeric_limits<double>::infinity();

  auto t = [&](double x) { return std::pow(x, -s) * std::exp(-eps * x); };
  double acc = 0.0;
  int m = m0;
  const int m_switch = std::max(m0 + 48, 64);
  for (; m < m_switch; ++m) {
    const double term = t(m);
    acc += term;
    if (term < 1e-16 * acc) return acc;
  }
  // Euler-Maclaurin remainder from M = m (first uncounted index).
  const double M = m;
  double integral;
  if (eps == 0.0) {
    integral = std::pow(M, 1.0 - s) / (s - 1.0);
  } else {
    integral = std::pow(eps, s - 1.0) * upper_incomplete_gamma(1.0 - s, eps * M);
  }
  const double tM = t(M);
  const double d1 = -(s / M + eps) * tM;
  const double d3 = -(s * (s + 1) * (s + 2) / (M * M * M) +
                      3 * s * (s + 1) * eps / (M * M) + 3 * s * eps * eps / M +
                      eps * eps * eps) *
                    tM;
  return acc + integral + 0.5 * tM - d1 / 12.0 + d3 / 720.0;
}

// ---------------------------------------------------------------------------
// Splittable counter-based RNG: xoshiro256++ seeded through splitmix64.
// Deterministic per (seed, stream) pair regardless of threading.

struct Rng {
  std::array<uint64_t, 4> s;

  explicit Rng(uint64_t seed, uint64_t stream = 0) {
    uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    auto next = [&x]() {
      x += 0x9e3779b97f4a7c15ULL;
      uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      return z ^ (z >> 31);
    };
    for (auto& si : s) si = next();
  }

  uint64_t next_u64() {
    auto rotl = [](uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
    const uint64_t result = rotl(s[0] + s[3], 23) + s[0];
    const uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }

  double uniform() {  // in (0,1)
    return (next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  double spare = 0.0;
  bool has_spare = false;
  double gauss() {  // Marsaglia polar method
    if (has_spare) {
      has_spare = false;
      return spare;
    }
    double u, v, q;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      q = u * u + v * v;
    } while (q >= 1.0 || q == 0.0);
    const double fac = std::sqrt(-2.0 * std::log(q) / q);
    spare = v * fac;
    has_spare = true;
    return u * fac;
  }
};

// ---------------------------------------------------------------------------
// Least squares on (x, y) pairs.

struct LinearFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
};

inline LinearFit linear_fit(const std::vector<double>& x,
                            const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw NumericError("linear_fit: need at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

}  // namespace triosc
