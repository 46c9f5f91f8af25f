#include <cmath>

#include "doctest.h"
#include "test_util.hpp"
#include "vort/kernel.hpp"
#include "vort/lattice.hpp"
#include "vort/mollifier.hpp"

using namespace vort;
using testutil::rel;

TEST_CASE("interaction coefficient frozen values at N = 8") {
  const MollifierSpec m{8.0};
  CHECK(kernel_K(1, 0, 0, 1, m) == rel(-0.15915494309189535, 1e-14));
  CHECK(kernel_K(1, 2, 3, -1, m) == rel(0.24509861236151353, 1e-13));
  CHECK(kernel_K(2, 1, -1, 1, m) == rel(-0.047746482927568605, 1e-13));
  CHECK(kernel_K(1, 1, 1, 1, m) == 0.0);    // parallel arguments
  CHECK(kernel_K(2, -3, -2, 3, m) == 0.0);  // l + m = 0
  CHECK(kernel_K(1, 1, -1, -1, m) == 0.0);
  // equal-norm arguments cancel exactly in the symmetrised combination
  CHECK(kernel_K_sym(1, 0, 0, 1, m) == 0.0);
  CHECK(kernel_K_sym(1, 0, 1, 1, m) ==
        rel(0.5 * (kernel_K(1, 0, 1, 1, m) + kernel_K(1, 1, 1, 0, m)), 1e-15));
}

TEST_CASE("symmetrised combination identity and magnitude bound") {
  const MollifierSpec m{4.0};
  const Lattice lat = Lattice::make(1, 4.0);
  int checked = 0;
  for (int a = 0; a < lat.n(); ++a) {
    for (int b = 0; b < lat.n(); ++b) {
      const int lx = lat.num[static_cast<size_t>(a)][0];
      const int ly = lat.num[static_cast<size_t>(a)][1];
      const int mx = lat.num[static_cast<size_t>(b)][0];
      const int my = lat.num[static_cast<size_t>(b)][1];
      if (lx + mx == 0 && ly + my == 0) {
        CHECK(kernel_K(lx, ly, mx, my, m) == 0.0);
        continue;
      }
      const double wl = static_cast<double>(lx) * lx + static_cast<double>(ly) * ly;
      const double wm = static_cast<double>(mx) * mx + static_cast<double>(my) * my;
      const double ws = static_cast<double>(lx + mx) * (lx + mx) +
                        static_cast<double>(ly + my) * (ly + my);
      const double rho3 = rho_hat(std::sqrt(wl), m) * rho_hat(std::sqrt(wm), m) *
                          rho_hat(std::sqrt(ws), m);
      const double perp = ly * mx - lx * my;  // l^perp . m with a^perp = (a_y, -a_x)
      const double expect =
          rho3 * perp * (wm - wl) / (2.0 * M_PI * wl * wm);
      const double got = kernel_K(lx, ly, mx, my, m) + kernel_K(mx, my, lx, ly, m);
      CHECK(std::abs(got - expect) <= 1e-13 * (1.0 + std::abs(expect)));

      const double bound = ws / (2.0 * M_PI * std::sqrt(wl * wm)) + 1e-15;
      CHECK(std::abs(kernel_K(lx, ly, mx, my, m)) <= bound);
      ++checked;
    }
  }
  CHECK(checked > 1000);
}
