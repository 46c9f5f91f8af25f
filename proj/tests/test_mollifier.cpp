#include "doctest.h"
#include "test_util.hpp"
#include "vort/mollifier.hpp"

using namespace vort;
using testutil::rel;

TEST_CASE("smoothstep endpoints and symmetry") {
  CHECK(smoothstep(0.0) == 0.0);
  CHECK(smoothstep(-1.0) == 0.0);
  CHECK(smoothstep(1.0) == 1.0);
  CHECK(smoothstep(2.0) == 1.0);
  CHECK(smoothstep(0.5) == rel(0.5, 1e-15));
  for (double x : {0.1, 0.25, 0.4, 0.45}) {
    CHECK(smoothstep(x) + smoothstep(1.0 - x) == rel(1.0, 1e-14));
    CHECK(smoothstep(x) < smoothstep(x + 0.05));
  }
}

TEST_CASE("radial profile frozen values at N = 8") {
  const MollifierSpec m{8.0};
  // hard zeros outside (1/N, N), boundaries included in the zero set
  CHECK(rho_hat(0.0625, m) == 0.0);
  CHECK(rho_hat(0.125, m) == 0.0);
  CHECK(rho_hat(8.0, m) == 0.0);
  CHECK(rho_hat(9.0, m) == 0.0);
  // plateau is exactly 1
  CHECK(rho_hat(0.25, m) == 1.0);
  CHECK(rho_hat(1.0, m) == 1.0);
  CHECK(rho_hat(3.9, m) == 1.0);
  CHECK(rho_hat(4.0, m) == 1.0);
  // ramp values frozen against an independent evaluation
  CHECK(rho_hat(0.15, m) == rel(0.022977369910025594, 1e-13));
  CHECK(rho_hat(0.2, m) == rel(0.69705928396540739, 1e-13));
  CHECK(rho_hat(5.0, m) == rel(0.93503083087133598, 1e-13));
  CHECK(rho_hat(6.0, m) == rel(0.5, 1e-13));
  CHECK(rho_hat(7.9, m) == rel(1.1848161401287475e-17, 1e-10));
}

TEST_CASE("radial profile at other widths") {
  CHECK(rho_hat(1.0, MollifierSpec{4.0}) == 1.0);
  CHECK(rho_hat(0.25, MollifierSpec{4.0}) == 0.0);
  CHECK(rho_hat(4.0, MollifierSpec{4.0}) == 0.0);
  // range and monotone ramps on a scan
  const MollifierSpec m{16.0};
  double prev = 0.0;
  for (double r = 0.0626; r <= 0.125; r += 0.001) {
    const double v = rho_hat(r, m);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v >= prev);
    prev = v;
  }
  prev = 1.0;
  for (double r = 8.0; r <= 16.0; r += 0.1) {
    const double v = rho_hat(r, m);
    CHECK(v >= 0.0);
    CHECK(v <= prev);
    prev = v;
  }
}
