#pragma once

#include <vector>

#include "vort/chaos.hpp"
#include "vort/coupling.hpp"
#include "vort/lattice.hpp"
#include "vort/mollifier.hpp"

namespace vort {

/* Deterministic bound machinery for the Laplace functional of |B_t(phi)|^2.
 * Everything here is a closed-form lattice sum: no sampling, no FFTs. The
 * heavy sums stream over (l, m = k - l) pairs and never materialise a
 * kernel, so N = 512 on M = 1 stays in milliseconds.
 */

// sum over ordered pairs of the second-chaos Poisson energy,
//   E_p = (4 lambda^2 / M^4) sum |l|^{2+2theta} |m|^2 K_sym(l,m)^2
//         |phi_hat(l+m)|^2 / (1 + (|l|^{2theta} + |m|^{2theta}) / 2)^2
double energy_of_poisson(const Lattice& lat, const Field& phi, const CouplingSpec& cpl);

struct ItoSums {
  double sum_A = 0.0;  // |phi|_{H2}^2 lambda^2 M^{-2} sum_{0<|l|<=N} 1/(1 + |l|^{2theta}/2)
  double sum_B = 0.0;  // |h|_{Gamma_2}^2 for h = resolvent(kappa=1) of lambda n_phi
};
ItoSums ito_upper_bound_sums(const Lattice& lat, const Field& phi, const CouplingSpec& cpl);

/* Rigorous upper envelope for the normalised Laplace curve,
 *   env(kappa) = 2 kappa^{-2} max(1, kappa^{-1}) (sum_A + sum_B),
 * from resolvent domination of the antisymmetric drift plus the Ito terms.
 */
double ito_envelope(const Lattice& lat, const Field& phi, const CouplingSpec& cpl,
                    double kappa);

/* Second-chaos lower bound for the kappa-Laplace transform (theta = 1):
 *   lb = (2 lambda^2 / kappa^2 M^4) sum_{ordered k1,k2} |k1|^2 |k2|^2
 *        |n_phi(k1,k2)|^2 / (kappa + (c/2)(|k1|^2 + |k2|^2)).
 * `sector_only` keeps only pairs in the symmetric sector hull
 * {k2 in C^N_{k1}} u {k1 in C^N_{k2}} (equivalently 2x the one-sided sum).
 */
double laplace_lower_bound(const Lattice& lat, const Field& phi, const CouplingSpec& cpl,
                           double kappa, double c = 4.0, bool sector_only = false);

/* Closed-form sector comparison integral,
 *   (lambda_hat^2 / (2 log N)) log((kappa + N^2/9) / (kappa + 4 N)),
 * which equals lambda_N^2 int_{2 sqrt N}^{N/3} rho drho / (kappa + rho^2)
 * at theta = 1 and tends to lambda_hat^2 / 2 as N grows (slowly, at rate
 * 1 / log N).
 */
double sector_integral(double lambda_hat, double N, double kappa);

// |phi|^2 in dot-H^s, plus lambda_hat^2 kappa^{-2} |phi|_{H2}^2 normaliser
double bound_normaliser(const Lattice& lat, const Field& phi, const CouplingSpec& cpl,
                        double kappa);

}  // namespace vort
