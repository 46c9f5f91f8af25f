#pragma once

#include "vort/mollifier.hpp"

namespace vort {

/* Convolution kernel of the regularised vorticity nonlinearity,
 *
 *   K(l, m) = (1/2pi) rho(l) rho(m) rho(l+m)
 *             (l^perp . (l+m)) (m . (l+m)) / (|l|^2 |m|^2),
 *
 * with a^perp = (a_y, -a_x), and K = 0 when l+m = 0. The inputs are the
 * real frequency components (lattice points j = p/M). Both arguments must
 * be nonzero frequencies.
 *
 * Useful identities (tested):
 *   K(l, l) = 0, K(l, -l) = 0,
 *   K(l,m) + K(m,l) = rho rho rho (l^perp.m)(|m|^2-|l|^2)/(2pi |l|^2 |m|^2),
 *   |K(l,m)| <= rho(l) |l+m|^2 / (|l| |m|).
 */
double kernel_K(double lx, double ly, double mx, double my, const MollifierSpec& mol);

// (K(l,m) + K(m,l)) / 2
double kernel_K_sym(double lx, double ly, double mx, double my, const MollifierSpec& mol);

}  // namespace vort
