#pragma once

// Fock-basis spectrum of the scaled RWA Hamiltonian. The phase-space
// rotation symmetry makes the Fock residue mod 3 a good quantum number, so
// the matrix splits into three independent tridiagonal sectors (coupling
// n <-> n+3 only). Below the saddle the sector eigenvalues cluster into
// tunnel-split triplets, from which orthonormal Wannier-type intrawell
// states are assembled.

#include <array>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "triosc/model.hpp"
#include "triosc/numerics.hpp"

namespace triosc {

struct SectorMatrix {
  int residue = 0;   // Fock index mod 3; equals the symmetry label k
  int n_max = 0;     // Fock-space truncation (exclusive)
  std::vector<double> diag;      // entries at Fock index residue + 3*i
  std::vector<double> offdiag3;  // coupling (n, n+3), compressed subdiagonal
  bool truncation_warning = false;
};

inline double sector_diagonal(const ModelParams& m, int n) {
  return m.lambda * (-m.sign_delta * (n + 0.5) + m.lambda * double(n) * (n + 1.0)) +
         0.25 * (1.0 + m.lambda * m.lambda);
}

inline double sector_coupling(const ModelParams& m, int n) {
  // <n| g |n+3> = -lambda (f/3) sqrt(2 lambda) sqrt((n+1)(n+2)(n+3))
  return -m.lambda * (m.f / 3.0) * std::sqrt(2.0 * m.lambda) *
         std::sqrt((n + 1.0) * (n + 2.0) * (n + 3.0));
}

// Fock-space containment of a tridiagonal sector is set by the lower band
// edge diag(n) - 2|coupling(n)|, not the bare diagonal: eigenvectors decay
// only beyond the index where the band edge clears the eigenvalue. Require
// half a well depth of margin above the saddle.
inline double sector_band_edge(const ModelParams& m, int n) {
  return sector_diagonal(m, n) - 2.0 * std::fabs(sector_coupling(m, n));
}

// Truncate where the accumulated WKB decay of a state at the saddle energy
// reaches ~e^-16 in amplitude, so below-saddle eigenvalues are converged to
// well under 1e-10.
inline int default_n_max(const ModelParams& m) {
  const FixedPointSet fp = fixed_points(m);
  const double e_top = fp.has_wells ? fp.g_s : 0.5;
  int n = 30;
  while (n < 200000 && sector_band_edge(m, n) < e_top) ++n;
  double acc = 0.0;
  while (acc < 16.0 && n < 200000) {
    n += 3;
    const double ratio = (sector_diagonal(m, n) - e_top) /
                         (2.0 * std::fabs(sector_coupling(m, n)) + 1e-300);
    if (ratio > 1.0) acc += std::acosh(ratio);
  }
  return std::max(n + 3, 30);
}

inline SectorMatrix build_sector_matrix(const ModelParams& m, int residue,
                                        int n_max) {
  m.validate();
  if (residue < 0 || residue > 2)
    throw ModelError("build_sector_matrix: residue must be 0, 1 or 2");
  if (n_max < 30) throw ModelError("build_sector_matrix: n_max must be >= 30");
  SectorMatrix sm;
  sm.residue = residue;
  sm.n_max = n_max;
  for (int n = residue; n < n_max; n += 3) {
    sm.diag.push_back(sector_diagonal(m, n));
    if (n + 3 < n_max) sm.offdiag3.push_back(sector_coupling(m, n));
  }
  if (n_max < default_n_max(m)) sm.truncation_warning = true;
  return sm;
}

struct SectorEigen {
  std::vector<double> eigenvalues;  // ascending
  Eigen::MatrixXd vectors;          // column j: eigenvector j (sector coords)
};

struct QuasienergySpectrum {
  ModelParams params;
  int n_max = 0;
  std::array<SectorEigen, 3> sector;
  double g_min = 0.0, g_s = 0.0;
  bool has_wells = false;

  // Fock index of compressed coordinate i in sector k.
  static int fock_index(int k, int i) { return k + 3 * i; }
  int sector_size(int k) const {
    return static_cast<int>(sector[static_cast<size_t>(k)].eigenvalues.size());
  }
};

inline QuasienergySpectrum diagonalize(const ModelParams& m, int n_max = -1) {
  m.validate();
  if (n_max < 0) n_max = default_n_max(m);
  QuasienergySpectrum qs;
  qs.params = m;
  qs.n_max = n_max;
  const FixedPointSet fp = fixed_points(m);
  qs.g_min = fp.g_min;
  qs.g_s = fp.g_s;
  qs.has_wells = fp.has_wells;
  for (int r = 0; r < 3; ++r) {
    const SectorMatrix sm = build_sector_matrix(m, r, n_max);
    const int n = static_cast<int>(sm.diag.size());
    Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(sm.diag.data(), n);
    Eigen::VectorXd e(n - 1);
    for (int i = 0; i + 1 < n; ++i) e[i] = sm.offdiag3[static_cast<size_t>(i)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success)
      throw NumericError("diagonalize: tridiagonal eigensolver failed in sector " +
                         std::to_string(r));
    auto& out = qs.sector[static_cast<size_t>(r)];
    out.eigenvalues.assign(solver.eigenvalues().data(),
                           solver.eigenvalues().data() + n);
    out.vectors = solver.eigenvectors();
  }
  return qs;
}

struct Triplet {
  double mean = 0.0;
  std::array<double, 3> deviation{};  // per sector k, eigenvalue - mean
  double splitting = 0.0;             // max - min within the triple
  double tunnel_estimate = 0.0;       // |J| from the deviation pattern
};

struct TripletTable {
  std::vector<Triplet> triplets;    // ascending in mean, below the guard band
  int excluded_near_saddle = 0;     // complete below-saddle triples dropped
  double guard_width = 0.0;
};

// Group the three sectors' below-saddle levels into tunnel-split triples.
// A guard band of three local level spacings under g_s is excluded; the
// local spacing is estimated from the topmost below-saddle levels.
inline TripletTable classify_triplets(const QuasienergySpectrum& qs,
                                      double g_s) {
  if (!qs.has_wells)
    throw ModelError("classify_triplets: no wells for these parameters");
  std::array<std::vector<double>, 3> below;
  for (int k = 0; k < 3; ++k)
    for (double ev : qs.sector[static_cast<size_t>(k)].eigenvalues)
      if (ev < g_s) below[static_cast<size_t>(k)].push_back(ev);
  const size_t count = std::min(
      {below[0].size(), below[1].size(), below[2].size()});
  if (count == 0) return {};

  TripletTable table;
  std::vector<Triplet> all;
  for (size_t i = 0; i < count; ++i) {
    Triplet t;
    double lo = 1e300, hi = -1e300, sum = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double ev = below[static_cast<size_t>(k)][i];
      sum += ev;
      lo = std::min(lo, ev);
      hi = std::max(hi, ev);
    }
    t.mean = sum / 3.0;
    for (int k = 0; k < 3; ++k)
      t.deviation[static_cast<size_t>(k)] =
          below[static_cast<size_t>(k)][i] - t.mean;
    t.splitting = hi - lo;
    double s2 = 0.0;
    for (double d : t.deviation) s2 += d * d;
    t.tunnel_estimate = std::sqrt(s2 / 6.0);
    all.push_back(t);
  }
  double spacing = all.size() >= 2
                       ? all.back().mean - all[all.size() - 2].mean
                       : 0.0;
  table.guard_width = 3.0 * spacing;
  for (const auto& t : all) {
    if (t.mean < g_s - table.guard_width)
      table.triplets.push_back(t);
    else
      ++table.excluded_near_saddle;
  }
  return table;
}

// Anti-normally ordered projector onto the half-plane Q > 0 in Fock basis;
// used to fix the relative signs of the sector eigenvectors so that all
// three align inside the nu=0 well.
inline Eigen::MatrixXd half_plane_mask(int n_max) {
  Eigen::MatrixXd mask = Eigen::MatrixXd::Zero(n_max, n_max);
  for (int n = 0; n < n_max; ++n) {
    mask(n, n) = 0.5;
    for (int mm = 0; mm < n; ++mm) {
      const int d = n - mm;
      if (d % 2 == 0) continue;
      const double lg = std::lgamma(0.5 * (n + mm) + 1.0) -
                        0.5 * std::lgamma(n + 1.0) - 0.5 * std::lgamma(mm + 1.0);
      const double val = std::exp(lg) * std::sin(0.5 * kPi * d) / (kPi * d);
      mask(n, mm) = val;
      mask(mm, n) = val;
    }
  }
  return mask;
}

struct WannierBasis {
  int n_max = 0;
  double lambda = 0.0;
  std::vector<double> g;  // triplet means, ascending
  // Sign-fixed real sector eigenvectors per level, compressed coordinates.
  std::vector<std::array<Eigen::VectorXd, 3>> phi;

  int levels() const { return static_cast<int>(g.size()); }

  // Well-0 Wannier vector in the full Fock basis (real by construction).
  Eigen::VectorXd well0_vector(int level) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n_max);
    const auto& p = phi[static_cast<size_t>(level)];
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < p[static_cast<size_t>(k)].size(); ++i)
        v[k + 3 * i] = p[static_cast<size_t>(k)][i] / std::sqrt(3.0);
    return v;
  }

  // General well nu = 0, 1, 2 with phases exp(2 pi i nu k / 3).
  Eigen::VectorXcd wannier_vector(int level, int nu) const {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n_max);
    const auto& p = phi[static_cast<size_t>(level)];
    for (int k = 0; k < 3; ++k) {
      const std::complex<double> ph =
          std::polar(1.0 / std::sqrt(3.0), 2.0 * kPi * nu * k / 3.0);
      for (int i = 0; i < p[static_cast<size_t>(k)].size(); ++i)
        v[k + 3 * i] = ph * p[static_cast<size_t>(k)][i];
    }
    return v;
  }
};

inline WannierBasis build_wannier(const QuasienergySpectrum& qs,
                                  const TripletTable& table) {
  WannierBasis wb;
  wb.n_max = qs.n_max;
  wb.lambda = qs.params.lambda;
  const Eigen::MatrixXd mask = half_plane_mask(qs.n_max);

  // The i-th triplet pairs with the i-th (lowest) eigenvector of each sector.
  for (size_t ti = 0; ti < table.triplets.size(); ++ti) {
    const auto& t = table.triplets[ti];
    std::array<Eigen::VectorXd, 3> phis;
    for (int k = 0; k < 3; ++k) {
      const auto& sec = qs.sector[static_cast<size_t>(k)];
      const double target = t.mean + t.deviation[static_cast<size_t>(k)];
      if (std::fabs(sec.eigenvalues[ti] - target) > 1e-9)
        throw NumericError("build_wannier: triplet/eigenvalue mismatch");
      phis[static_cast<size_t>(k)] = sec.vectors.col(static_cast<int>(ti));
    }

    // Half-plane overlaps between sector states, in the full Fock basis.
    auto overlap = [&](int ka, int kb) {
      double acc = 0.0;
      const auto& va = phis[static_cast<size_t>(ka)];
      const auto& vb = phis[static_cast<size_t>(kb)];
      for (int i = 0; i < va.size(); ++i)
        for (int j = 0; j < vb.size(); ++j)
          acc += va[i] * mask(ka + 3 * i, kb + 3 * j) * vb[j];
      return acc;
    };
    const double o01 = overlap(0, 1), o02 = overlap(0, 2), o12 = overlap(1, 2);
    const double scale =
        std::max({std::fabs(o01), std::fabs(o02), std::fabs(o12)});
    if (scale < 1e-10)
      throw NumericError(
          "build_wannier: sign ambiguity (near-zero well-0 weight) at level " +
          std::to_string(wb.g.size()));
    double best = -1e300;
    int best_s1 = 1, best_s2 = 1;
    for (int s1 : {+1, -1})
      for (int s2 : {+1, -1}) {
        const double total = s1 * o01 + s2 * o02 + s1 * s2 * o12;
        if (total > best) {
          best = total;
          best_s1 = s1;
          best_s2 = s2;
        }
      }
    phis[1] *= best_s1;
    phis[2] *= best_s2;
    wb.g.push_back(t.mean);
    wb.phi.push_back(std::move(phis));
  }
  return wb;
}

// Matrix elements of the lowering operator a between well-0 Wannier states,
// <n'|a|n> at (row n', column n). Interwell elements are exponentially small
// and are not represented.
inline Eigen::MatrixXd lowering_elements(const WannierBasis& wb) {
  const int L = wb.levels();
  Eigen::MatrixXd w(wb.n_max, L);
  for (int n = 0; n < L; ++n) w.col(n) = wb.well0_vector(n);
  // (a w)[i] = sqrt(i+1) w[i+1]
  Eigen::MatrixXd aw = Eigen::MatrixXd::Zero(wb.n_max, L);
  for (int i = 0; i + 1 < wb.n_max; ++i)
    aw.row(i) = std::sqrt(i + 1.0) * w.row(i + 1);
  return w.transpose() * aw;
}

}  // namespace triosc
