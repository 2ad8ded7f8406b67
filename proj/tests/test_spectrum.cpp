#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>

#include "triosc/model.hpp"
#include "triosc/orbits.hpp"
#include "triosc/spectrum.hpp"

using namespace triosc;

namespace {
ModelParams params(double f, double lambda) {
  ModelParams m;
  m.f = f;
  m.lambda = lambda;
  return m;
}

// Brute-force oracle: dense Fock matrix of g assembled directly from the
// ladder-operator form, diagonalized as a whole.
Eigen::MatrixXd dense_g_matrix(const ModelParams& m, int n_max) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n_max, n_max);
  for (int n = 0; n < n_max; ++n) {
    h(n, n) = m.lambda * (-m.sign_delta * (n + 0.5) +
                          m.lambda * double(n) * (n + 1.0)) +
              0.25 * (1.0 + m.lambda * m.lambda);
    if (n + 3 < n_max) {
      const double c = -m.lambda * (m.f / 3.0) * std::sqrt(2.0 * m.lambda) *
                       std::sqrt((n + 1.0) * (n + 2.0) * (n + 3.0));
      h(n, n + 3) = c;
      h(n + 3, n) = c;
    }
  }
  return h;
}

// Husimi weight of a Fock-space vector inside the well-0 wedge |arg| < pi/3,
// by direct coherent-state grid quadrature (independent of the mask matrix).
double wedge_weight(const Eigen::VectorXcd& psi, double r_max) {
  const int nr = 160, nth = 120;
  double inside = 0.0, total = 0.0;
  std::vector<double> lfact(static_cast<size_t>(psi.size()));
  for (int n = 0; n < psi.size(); ++n)
    lfact[static_cast<size_t>(n)] = 0.5 * std::lgamma(n + 1.0);
  for (int ir = 0; ir < nr; ++ir) {
    const double r = r_max * (ir + 0.5) / nr;
    for (int it = 0; it < nth; ++it) {
      const double th = -kPi + 2.0 * kPi * (it + 0.5) / nth;
      std::complex<double> amp = 0.0;
      for (int n = 0; n < psi.size(); ++n) {
        const double ln_mag = -0.5 * r * r + n * std::log(r) -
                              lfact[static_cast<size_t>(n)];
        if (ln_mag < -60.0) continue;
        // <alpha|n> = e^{-|a|^2/2} conj(alpha)^n / sqrt(n!)
        amp += std::polar(std::exp(ln_mag), -th * n) * psi[n];
      }
      const double q = std::norm(amp) * r;  // d^2alpha = r dr dtheta
      total += q;
      if (std::fabs(th) < kPi / 3.0) inside += q;
    }
  }
  return inside / total;
}
}  // namespace

TEST_CASE("sector matrix entries: zero-drive diagonal and the f=1 coupling") {
  const ModelParams m0 = params(0.0, 0.04);
  const auto sm = build_sector_matrix(m0, 0, 60);
  CHECK(sm.diag[0] == doctest::Approx(0.2304).epsilon(1e-12));
  // diagonal closed form at a few Fock indices
  for (int i : {1, 5, 10}) {
    const int n = 3 * i;
    CHECK(sm.diag[static_cast<size_t>(i)] ==
          doctest::Approx(0.04 * (-(n + 0.5) + 0.04 * n * (n + 1)) +
                          0.25 * (1 + 0.0016)).epsilon(1e-14));
  }
  const ModelParams m1 = params(1.0, 0.04);
  const auto sm1 = build_sector_matrix(m1, 0, 60);
  CHECK(sm1.offdiag3[0] == doctest::Approx(-0.0092376).epsilon(1e-4));
  CHECK(sm1.offdiag3[0] ==
        doctest::Approx(-0.04 / 3.0 * std::sqrt(0.08) * std::sqrt(6.0))
            .epsilon(1e-14));
}

TEST_CASE("zero drive: eigenvalues equal the diagonal closed form exactly") {
  const ModelParams m = params(0.0, 0.04);
  const auto qs = diagonalize(m, 90);
  for (int k = 0; k < 3; ++k) {
    const auto sm = build_sector_matrix(m, k, 90);
    std::vector<double> sorted = sm.diag;
    std::sort(sorted.begin(), sorted.end());
    for (size_t i = 0; i < sorted.size(); ++i)
      CHECK(std::fabs(qs.sector[static_cast<size_t>(k)].eigenvalues[i] -
                      sorted[i]) < 1e-12);
  }
}

TEST_CASE("sector solver agrees with the dense full-matrix oracle") {
  const ModelParams m = params(1.0, 0.04);
  const int n_max = default_n_max(m);
  const auto qs = diagonalize(m, n_max);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> dense(dense_g_matrix(m, n_max));
  // merge the three sectors and compare the lowest 30 levels
  std::vector<double> merged;
  for (int k = 0; k < 3; ++k)
    for (double ev : qs.sector[static_cast<size_t>(k)].eigenvalues)
      merged.push_back(ev);
  std::sort(merged.begin(), merged.end());
  for (int i = 0; i < 30; ++i)
    CHECK(merged[static_cast<size_t>(i)] ==
          doctest::Approx(dense.eigenvalues()[i]).epsilon(1e-12));
}

TEST_CASE("lowest level sits near the harmonic bottom of the well") {
  const ModelParams m = params(1.0, 0.04);
  const auto qs = diagonalize(m);
  const auto fp = fixed_points(m);
  const auto w = well_geometry(m);
  double lowest = 1e300;
  for (int k = 0; k < 3; ++k)
    lowest = std::min(lowest, qs.sector[static_cast<size_t>(k)].eigenvalues[0]);
  const double harmonic = fp.g_min + 0.5 * m.lambda * w.omega_min;
  CHECK(harmonic == doctest::Approx(-0.6737).epsilon(1e-3));
  CHECK(std::fabs(lowest - harmonic) < 0.005);
}

TEST_CASE("doubling the truncation leaves below-saddle levels unchanged") {
  const ModelParams m = params(1.0, 0.04);
  const int n0 = default_n_max(m);
  const auto qs1 = diagonalize(m, n0);
  const auto qs2 = diagonalize(m, 2 * n0);
  for (int k = 0; k < 3; ++k) {
    const auto& a = qs1.sector[static_cast<size_t>(k)].eigenvalues;
    const auto& b = qs2.sector[static_cast<size_t>(k)].eigenvalues;
    for (size_t i = 0; i < a.size(); ++i) {
      if (a[i] > qs1.g_s) break;
      CHECK(std::fabs(a[i] - b[i]) < 1e-10);
    }
  }
}

TEST_CASE("same-sector levels anticross across the drive sweep") {
  // f = 0 is excluded: there the matrix is diagonal and distinct Fock states
  // are exactly degenerate pairwise (1 = lambda(n1+n2+1)); any finite drive
  // lifts this through the n <-> n+3 coupling.
  for (double f = 0.05; f <= 2.0 + 1e-9; f += 0.05) {
    const auto qs = diagonalize(params(f, 0.04));
    for (int k = 0; k < 3; ++k) {
      const auto& ev = qs.sector[static_cast<size_t>(k)].eigenvalues;
      for (size_t i = 0; i + 1 < ev.size() && ev[i] < 0.5; ++i)
        CHECK(ev[i + 1] - ev[i] > 1e-13);
    }
  }
}

TEST_CASE("triplet clustering at f=1, lambda=0.04") {
  const ModelParams m = params(1.0, 0.04);
  const auto qs = diagonalize(m);
  const auto w = well_geometry(m);
  const auto table = classify_triplets(qs, qs.g_s);
  REQUIRE(table.triplets.size() >= 5);

  // deepest triple: splitting far below the intrawell spacing
  CHECK(table.triplets[0].splitting < 1e-3 * m.lambda * w.omega_min);

  // splitting grows (within solver noise) through the deep two thirds
  const size_t deep = table.triplets.size() * 2 / 3;
  for (size_t i = 0; i + 1 < deep; ++i)
    CHECK(table.triplets[i + 1].splitting >=
          table.triplets[i].splitting - 1e-12);

  // per-triple deviations from the mean cancel to leading order
  for (const auto& t : table.triplets) {
    const double sum = t.deviation[0] + t.deviation[1] + t.deviation[2];
    CHECK(std::fabs(sum) <= 0.02 * t.splitting + 1e-15);
  }
}

TEST_CASE("level count matches the phase-space action at f=0.5, lambda=0.004") {
  const ModelParams m = params(0.5, 0.004);
  const auto qs = diagonalize(m);
  // count below-saddle levels per sector; sectors must agree
  std::array<int, 3> counts{};
  for (int k = 0; k < 3; ++k)
    for (double ev : qs.sector[static_cast<size_t>(k)].eigenvalues)
      if (ev < qs.g_s) ++counts[static_cast<size_t>(k)];
  CHECK(std::abs(counts[0] - counts[1]) <= 1);
  CHECK(std::abs(counts[0] - counts[2]) <= 1);
  // Semiclassical oracle: the count equals I(g_s)/lambda - 1/2 rounded.
  const auto fp = fixed_points(m);
  const auto orb = orbit_solve(m, fp.g_s - 1e-4 * well_depth(fp));
  const double predicted = orb.action() / m.lambda - 0.5;
  CHECK(std::fabs(counts[0] - predicted) <= 1.5);
}

TEST_CASE("wannier basis: orthonormal, and N3 rotates well 0 to well 2") {
  const ModelParams m = params(1.0, 0.04);
  const auto qs = diagonalize(m);
  const auto wb = build_wannier(qs, classify_triplets(qs, qs.g_s));
  REQUIRE(wb.levels() >= 5);

  // Gram matrix of all wells and levels is the identity
  std::vector<Eigen::VectorXcd> all;
  for (int n = 0; n < wb.levels(); ++n)
    for (int nu = 0; nu < 3; ++nu) all.push_back(wb.wannier_vector(n, nu));
  for (size_t i = 0; i < all.size(); ++i)
    for (size_t j = i; j < all.size(); ++j) {
      const std::complex<double> gram = all[i].dot(all[j]);
      CHECK(std::abs(gram - (i == j ? 1.0 : 0.0)) < 1e-10);
    }

  // N3 = exp(-2 pi i n_F / 3) maps well nu to well nu-1
  for (int n = 0; n < wb.levels(); ++n) {
    Eigen::VectorXcd rotated = wb.wannier_vector(n, 0);
    for (int i = 0; i < rotated.size(); ++i)
      rotated[i] *= std::polar(1.0, -2.0 * kPi * (i % 3) / 3.0);
    const Eigen::VectorXcd expect = wb.wannier_vector(n, 2);
    CHECK((rotated - expect).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("wannier states localize in the well-0 wedge (husimi oracle)") {
  const ModelParams m = params(0.5, 0.004);
  const auto qs = diagonalize(m);
  const auto wb = build_wannier(qs, classify_triplets(qs, qs.g_s));
  REQUIRE(wb.levels() >= 30);
  const double r_max = 2.2 / std::sqrt(2.0 * m.lambda);
  for (int n = 0; n < 30; ++n) {
    const Eigen::VectorXcd psi = wb.wannier_vector(n, 0);
    CHECK(wedge_weight(psi, r_max) >= 0.99);
  }
}

TEST_CASE("lowering elements: deep diagonal and near-bottom ladder") {
  const ModelParams m = params(0.5, 0.004);
  const auto qs = diagonalize(m);
  const auto wb = build_wannier(qs, classify_triplets(qs, qs.g_s));
  const auto a = lowering_elements(wb);
  const auto fp = fixed_points(m);
  const auto w = well_geometry(m);

  // deepest diagonal element approaches Q0/sqrt(2 lambda) = 14.319
  CHECK(a(0, 0) == doctest::Approx(fp.Q0 / std::sqrt(2.0 * m.lambda))
                       .epsilon(0.02));
  CHECK(a(0, 0) == doctest::Approx(14.319).epsilon(0.02));
  // and tracks the orbit-average oracle a_0(g_n) through the well
  for (int n : {0, 2, 5, 9, 15, 25}) {
    const auto ft = fourier_coefficients(orbit_solve(m, wb.g[n]), m.lambda, 2);
    CHECK(a(n, n) == doctest::Approx(ft.abs_a(0)).epsilon(1e-4));
  }

  // near-bottom ladder elements follow the squeezed-oscillator algebra
  for (int n = 1; n <= 4; ++n)
    CHECK(std::fabs(a(n - 1, n)) ==
          doctest::Approx(std::cosh(w.phi_star) * std::sqrt(double(n)))
              .epsilon(0.05));
}

TEST_CASE("zero drive leaves the Fock ladder uncoupled") {
  const ModelParams m0 = params(0.0, 0.04);
  const auto sm = build_sector_matrix(m0, 0, 60);
  for (double c : sm.offdiag3) CHECK(c == 0.0);
}

TEST_CASE("bohr-sommerfeld levels track the triplet means mid-well") {
  const ModelParams m = params(0.5, 0.004);
  const auto qs = diagonalize(m);
  const auto table = classify_triplets(qs, qs.g_s);
  const auto bs = bohr_sommerfeld(m, m.lambda);
  const auto fp = fixed_points(m);
  const size_t n_cmp = std::min(table.triplets.size(), bs.levels.size());
  REQUIRE(n_cmp >= 40);
  int compared = 0;
  for (size_t n = 0; n < n_cmp; ++n) {
    const double dg = delta_g(fp, table.triplets[n].mean);
    if (dg < 0.2 || dg > 0.7) continue;  // mid-well comparison
    const double omega = orbit_solve(m, table.triplets[n].mean).omega;
    CHECK(std::fabs(bs.levels[n] - table.triplets[n].mean) <
          0.02 * m.lambda * omega);
    ++compared;
  }
  CHECK(compared >= 15);
}

TEST_CASE("sector matrix rejects bad arguments") {
  const ModelParams m = params(0.5, 0.01);
  CHECK_THROWS_AS(build_sector_matrix(m, 3, 60), ModelError);
  CHECK_THROWS_AS(build_sector_matrix(m, 0, 10), ModelError);
  ModelParams bad = m;
  bad.lambda = -1.0;
  CHECK_THROWS_AS(build_sector_matrix(bad, 0, 60), ModelError);
}
