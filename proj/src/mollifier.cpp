#include "vort/mollifier.hpp"

#include <cmath>

namespace vort {

double smoothstep(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / x);
  const double b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}

double rho_hat(double r, double N) {
  if (r <= 1.0 / N || r >= N) return 0.0;
  if (r <= 2.0 / N) return smoothstep(N * r - 1.0);
  if (r < 0.5 * N) return 1.0;
  return smoothstep(2.0 - 2.0 * r / N);
}

}  // namespace vort
