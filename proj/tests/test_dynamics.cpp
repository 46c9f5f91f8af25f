#include <cmath>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "vort/dynamics.hpp"
#include "vort/stats.hpp"

using namespace vort;
using testutil::rel;

TEST_CASE("test function norms at reference sizes") {
  const Lattice lat = Lattice::make(4, 8.0);
  const Field p1 = make_phi(lat, "gauss_r1");
  const Field p2 = make_phi(lat, "gauss_r2");
  CHECK(sobolev_sq(lat, p1, 1.0) == rel(0.19598918891506234, 1e-12));
  CHECK(sobolev_sq(lat, p1, 2.0) == rel(0.39513432014363536, 1e-12));
  CHECK(sobolev_sq(lat, p2, 1.0) == rel(3.1415842625573354, 1e-12));
  CHECK(sobolev_sq(lat, p2, 2.0) == rel(25.132178931663915, 1e-12));
  CHECK(is_hermitian(lat, p1));
  CHECK(is_hermitian(lat, p2));
}

TEST_CASE("test functions are per-mode and band-stable across lattices") {
  const Lattice small = Lattice::make(4, 8.0);
  const Lattice big = Lattice::make(4, 16.0);
  const Field on_small = make_phi(small, "gauss_r1");
  const Field on_big = testutil::banded(big, make_phi(big, "gauss_r1"), 8.0);
  CHECK(sobolev_sq(big, on_big, 1.0) == rel(sobolev_sq(small, on_small, 1.0), 1e-13));
  CHECK(sobolev_sq(big, on_big, 2.0) == rel(sobolev_sq(small, on_small, 2.0), 1e-13));
  for (int i = 0; i < small.n(); ++i) {
    const auto& p = small.num[static_cast<size_t>(i)];
    const int j = big.index(p[0], p[1]);
    REQUIRE(j >= 0);
    CHECK(std::abs(on_big[static_cast<size_t>(j)] - on_small[static_cast<size_t>(i)]) <=
          1e-15);
  }
}

TEST_CASE("exact relaxation map preserves the stationary variance") {
  const Lattice lat = Lattice::make(4, 8.0);
  const double M2 = 16.0;
  for (double theta : {1.0, 0.5}) {
    for (double h : {0.0005, 0.37}) {
      const OuMap ou(lat, theta, h, 1.0);
      double worst = 0.0;
      for (int i = 0; i < lat.n(); ++i) {
        const size_t u = static_cast<size_t>(i);
        const double target = M2 * lat.w[u];
        const double got = ou.amp[u] * ou.amp[u] * target + 2.0 * ou.sd[u] * ou.sd[u];
        worst = std::max(worst, std::abs(got - target) / target);
      }
      CAPTURE(theta);
      CAPTURE(h);
      CHECK(worst <= 1e-13);
    }
  }
  // inflated noise must break the identity by an O(1) margin
  const OuMap bad(lat, 1.0, 0.37, 1.1);
  double worst = 0.0;
  for (int i = 0; i < lat.n(); ++i) {
    const size_t u = static_cast<size_t>(i);
    const double target = M2 * lat.w[u];
    const double got = bad.amp[u] * bad.amp[u] * target + 2.0 * bad.sd[u] * bad.sd[u];
    worst = std::max(worst, std::abs(got - target) / target);
  }
  CHECK(worst >= 0.05);
}

TEST_CASE("stationary sampler hits the per-mode variance") {
  const Lattice lat = Lattice::make(1, 4.0);
  GaussianStream g(31, 0);
  const int n = 4000;
  std::vector<std::vector<double>> re(static_cast<size_t>(lat.n()));
  for (int rep = 0; rep < n; ++rep) {
    const Field w = sample_invariant(lat, g);
    if (rep < 10) CHECK(is_hermitian(lat, w, 0.0));
    for (int i = 0; i < lat.n(); ++i)
      re[static_cast<size_t>(i)].push_back(w[static_cast<size_t>(i)].real());
  }
  for (int i = 0; i < lat.n(); ++i) {
    const size_t u = static_cast<size_t>(i);
    const double sigma0_sq = lat.w[u] / 2.0;  // per component at M = 1
    const MomentReport r = moment_report(re[u], sigma0_sq);
    CAPTURE(lat.num[u][0]);
    CAPTURE(lat.num[u][1]);
    CHECK(std::abs(r.z_mean) <= 4.5);
    CHECK(std::abs(r.z_var) <= 4.5);
  }
}

TEST_CASE("trajectories are a pure function of seed and stream") {
  const Lattice lat = Lattice::make(1, 8.0);
  const MollifierSpec mol{8.0};
  FastNonlinearity nl(lat, mol);
  const std::vector<Field> phis{make_phi(lat, "gauss_r1")};
  const std::vector<FastNonlinearity::TestGrids> tg{nl.make_test_grids(phis[0])};

  SimParams p;
  p.cpl = CouplingSpec{1.0, 1.0, 8.0, false};
  p.mol = mol;
  p.dt = 0.05;
  p.T = 0.2;
  p.record_every = 1;

  const TrajectoryResult a = simulate_one(nl, p, phis, tg, 99, 5);
  const TrajectoryResult b = simulate_one(nl, p, phis, tg, 99, 5);
  const TrajectoryResult c = simulate_one(nl, p, phis, tg, 99, 6);
  REQUIRE(a.ok);
  REQUIRE(a.times.size() == 5);
  for (size_t t = 0; t < a.times.size(); ++t) {
    CHECK(a.omega_phi[t][0] == b.omega_phi[t][0]);
    CHECK(a.hm1[t] == b.hm1[t]);
  }
  bool differs = false;
  for (size_t t = 0; t < a.times.size(); ++t)
    differs |= a.omega_phi[t][0] != c.omega_phi[t][0];
  CHECK(differs);
}

TEST_CASE("recording grid includes the endpoint") {
  const Lattice lat = Lattice::make(1, 4.0);
  const MollifierSpec mol{4.0};
  FastNonlinearity nl(lat, mol);
  const std::vector<Field> phis{make_phi(lat, "gauss_r1")};
  const std::vector<FastNonlinearity::TestGrids> tg{nl.make_test_grids(phis[0])};

  SimParams p;
  p.cpl = CouplingSpec{1.0, 1.0, 4.0, false};
  p.mol = mol;
  p.dt = 0.1;
  p.T = 1.0;
  p.record_every = 3;
  const TrajectoryResult r = simulate_one(nl, p, phis, tg, 7, 0);
  REQUIRE(r.times.size() == 5);
  const double expect[5] = {0.0, 0.3, 0.6, 0.9, 1.0};
  for (size_t t = 0; t < 5; ++t)
    CHECK(r.times[t] == doctest::Approx(expect[t]).epsilon(1e-12));
}

TEST_CASE("decoupled observables vanish identically at zero coupling") {
  const Lattice lat = Lattice::make(1, 8.0);
  const MollifierSpec mol{8.0};
  FastNonlinearity nl(lat, mol);
  const std::vector<Field> phis{make_phi(lat, "gauss_r1")};
  const std::vector<FastNonlinearity::TestGrids> tg{nl.make_test_grids(phis[0])};

  SimParams p;
  p.cpl = CouplingSpec{0.5, 0.0, 8.0, false};
  p.mol = mol;
  p.dt = 0.05;
  p.T = 0.25;
  p.record_every = 1;
  p.record_B = true;
  p.couple_ou = true;
  p.laplace_kappa = 1.0;
  const TrajectoryResult r = simulate_one(nl, p, phis, tg, 13, 2);
  REQUIRE(r.ok);
  CHECK(r.sup_B2[0] == 0.0);
  CHECK(r.sup_diff2[0] == 0.0);
  CHECK(r.laplace[0] == 0.0);
  for (const auto& row : r.B_phi) CHECK(row[0] == 0.0);

  // fault injection: an independently driven partner no longer tracks
  SimParams q = p;
  q.couple_fault = true;
  const TrajectoryResult s = simulate_one(nl, q, phis, tg, 13, 2);
  CHECK(s.sup_diff2[0] > 0.0);
}

TEST_CASE("noiseless dynamics dissipates the negative-order energy") {
  const Lattice lat = Lattice::make(2, 8.0);
  const MollifierSpec mol{8.0};
  FastNonlinearity nl(lat, mol);
  const std::vector<Field> phis{make_phi(lat, "gauss_r1")};
  const std::vector<FastNonlinearity::TestGrids> tg{nl.make_test_grids(phis[0])};

  SimParams p;
  p.cpl = CouplingSpec{1.0, 1.0, 8.0, false};
  p.mol = mol;
  p.dt = 0.01;
  p.T = 0.5;
  p.record_every = 10;
  p.noise_scale = 0.0;
  const TrajectoryResult r = simulate_one(nl, p, phis, tg, 17, 0);
  REQUIRE(r.ok);
  REQUIRE(r.hm1.size() >= 3);
  for (size_t t = 0; t + 1 < r.hm1.size(); ++t) CHECK(r.hm1[t + 1] < r.hm1[t]);
}
