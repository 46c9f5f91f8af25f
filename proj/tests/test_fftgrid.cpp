#include <cmath>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "vort/fftgrid.hpp"
#include "vort/lattice.hpp"
#include "vort/rng.hpp"

using namespace vort;
using testutil::rel;

TEST_CASE("padded grid size selection") {
  CHECK(choose_grid_size(1) == 6);
  CHECK(choose_grid_size(7) == 24);
  CHECK(choose_grid_size(10) == 32);
  CHECK(choose_grid_size(11) == 36);
  CHECK(choose_grid_size(15) == 48);
  CHECK(choose_grid_size(31) == 96);
  CHECK(choose_grid_size(63) == 192);
  CHECK(choose_grid_size(127) == 384);
  CHECK(choose_grid_size(255) == 768);
}

TEST_CASE("transform round trip on the full lattice") {
  const Lattice lat = Lattice::make(2, 5.0);
  SpectralGrid sg(lat);
  CHECK(sg.G() == 32);  // A = 10, 3A + 2 = 32 already 5-smooth and even

  GaussianStream g(11, 0);
  const Field f = testutil::random_hermitian(lat, g);
  std::vector<double> grid(sg.real_size());
  sg.to_grid(f, grid.data());
  Field back(static_cast<size_t>(lat.n()));
  sg.from_grid(grid.data(), back);

  double scale = 0.0;
  for (const cplx& v : f) scale = std::max(scale, std::abs(v));
  for (int i = 0; i < lat.n(); ++i)
    CHECK(std::abs(back[static_cast<size_t>(i)] - f[static_cast<size_t>(i)]) <=
          1e-13 * scale);
}

TEST_CASE("grid quadrature equals the spectral pairing") {
  const Lattice lat = Lattice::make(2, 6.0);
  SpectralGrid sg(lat);
  GaussianStream g(12, 0);
  const Field f1 = testutil::random_hermitian(lat, g);
  const Field f2 = testutil::random_hermitian(lat, g);
  std::vector<double> g1(sg.real_size()), g2(sg.real_size());
  sg.to_grid(f1, g1.data());
  sg.to_grid(f2, g2.data());
  double quad = 0.0;
  for (size_t i = 0; i < g1.size(); ++i) quad += g1[i] * g2[i];
  const double cell = 2.0 * M_PI * lat.M / sg.G();
  quad *= cell * cell;
  const double spectral = pair_fields(lat, f1, f2).real();
  CHECK(quad == rel(spectral, 1e-12));
}

TEST_CASE("restricted radius keeps the band and zeroes the rest") {
  const Lattice lat = Lattice::make(1, 8.0);
  SpectralGrid sg(lat, 3);
  CHECK(sg.G() == 12);  // 3*3 + 2 = 11 -> 12

  GaussianStream g(13, 0);
  Field f = testutil::random_hermitian(lat, g);
  for (int i = 0; i < lat.n(); ++i) {
    const auto& p = lat.num[static_cast<size_t>(i)];
    if (std::abs(p[0]) > 3 || std::abs(p[1]) > 3) f[static_cast<size_t>(i)] = 0.0;
  }
  std::vector<double> grid(sg.real_size());
  sg.to_grid(f, grid.data());
  Field back(static_cast<size_t>(lat.n()));
  sg.from_grid(grid.data(), back);
  for (int i = 0; i < lat.n(); ++i)
    CHECK(std::abs(back[static_cast<size_t>(i)] - f[static_cast<size_t>(i)]) <= 1e-13);
}

TEST_CASE("multiplier transform equals transforming the multiplied field") {
  const Lattice lat = Lattice::make(1, 6.0);
  SpectralGrid sg(lat);
  GaussianStream g(14, 0);
  const Field f = testutil::random_hermitian(lat, g);

  std::vector<cplx> mult(static_cast<size_t>(lat.n()));
  Field h(static_cast<size_t>(lat.n()));
  for (int i = 0; i < lat.n(); ++i) {
    mult[static_cast<size_t>(i)] = cplx(0.0, lat.jx[static_cast<size_t>(i)]);
    h[static_cast<size_t>(i)] = mult[static_cast<size_t>(i)] * f[static_cast<size_t>(i)];
  }
  std::vector<double> ga(sg.real_size()), gb(sg.real_size());
  sg.transform_multiplied(f, mult.data(), ga.data());
  sg.to_grid(h, gb.data());
  double scale = 0.0;
  for (double v : gb) scale = std::max(scale, std::abs(v));
  for (size_t i = 0; i < ga.size(); ++i) CHECK(std::abs(ga[i] - gb[i]) <= 1e-13 * scale);
}
