#pragma once

namespace vort {

/* Radial Fourier-side mollifier profile: identically 0 outside (1/N, N),
 * identically 1 on the plateau [2/N, N/2], with C^infinity smoothstep
 * ramps in between:
 *
 *   rho(r) = S(N r - 1)  on (1/N, 2/N]
 *   rho(r) = 1           on (2/N, N/2)
 *   rho(r) = S(2 - 2r/N) on [N/2, N)
 *
 * where S(x) = f(x)/(f(x)+f(1-x)) and f(x) = exp(-1/x) for x>0, else 0.
 * Values lie in [0,1]; the plateau lower bound constant is exactly 1.
 */
struct MollifierSpec {
  double N = 1.0;
};

double smoothstep(double x);
double rho_hat(double r, double N);

inline double rho_hat(double r, const MollifierSpec& m) { return rho_hat(r, m.N); }

}  // namespace vort
