#include "vort/kernel.hpp"

#include <cmath>

namespace {
constexpr double kInvTwoPi = 0.15915494309189535;
}

namespace vort {

double kernel_K(double lx, double ly, double mx, double my, const MollifierSpec& mol) {
  const double sx = lx + mx;
  const double sy = ly + my;
  if (sx == 0.0 && sy == 0.0) return 0.0;
  const double wl = lx * lx + ly * ly;
  const double wm = mx * mx + my * my;
  const double rho = rho_hat(std::sqrt(wl), mol) * rho_hat(std::sqrt(wm), mol) *
                     rho_hat(std::sqrt(sx * sx + sy * sy), mol);
  if (rho == 0.0) return 0.0;
  const double perp = ly * sx - lx * sy;  // l^perp . (l+m), l^perp = (l_y, -l_x)
  const double along = mx * sx + my * sy;
  return kInvTwoPi * rho * perp * along / (wl * wm);
}

double kernel_K_sym(double lx, double ly, double mx, double my, const MollifierSpec& mol) {
  return 0.5 * (kernel_K(lx, ly, mx, my, mol) + kernel_K(mx, my, lx, ly, mol));
}

}  // namespace vort
