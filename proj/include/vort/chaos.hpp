#pragma once

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "vort/coupling.hpp"
#include "vort/kernel.hpp"
#include "vort/lattice.hpp"
#include "vort/mollifier.hpp"

namespace vort {

/* Sparse symmetric chaos kernel of order n in {1, 2, 3}: a map from
 * canonical (sorted) mode-index tuples to the symmetrised value at that
 * tuple. Values at non-canonical orderings are implied by symmetry.
 * Reality of the underlying functional corresponds to
 * value(-k_1, ..., -k_n) = conj(value(k_1, ..., k_n)).
 */
struct ChaosKernel {
  int order = 2;
  const Lattice* lat = nullptr;
  std::unordered_map<std::uint64_t, cplx> vals;

  static std::uint64_t key(std::array<int, 3> idx, int order);

  void add(std::array<int, 3> idx, cplx v);   // sorts to canonical, accumulates
  cplx get(std::array<int, 3> idx) const;     // 0 when absent
  bool empty() const { return vals.empty(); }

  /* Canonical tuples of the `count` largest-magnitude entries, ordered by
   * descending |value| with the packed key as a deterministic tiebreak.
   * Unused slots hold 0.
   */
  std::vector<std::array<int, 3>> top_support(std::size_t count) const;
};

// number of distinct orderings of the canonical tuple (1, 2, 3, or 6)
int tuple_multiplicity(const ChaosKernel& k, std::uint64_t packed);

/* Gamma_n pairing <f, g> = (1/M^{2n}) sum over ordered tuples of
 * (prod_i |k_i|^2) f conj(g); computed over canonical tuples with
 * multiplicities. Orders must match.
 */
cplx gamma_pair(const ChaosKernel& f, const ChaosKernel& g);

// multiply each tuple value by -(1/2) sum_i |k_i|^{2 theta}
ChaosKernel apply_L(const ChaosKernel& f, double theta);

// divide each tuple value by kappa + (1/2) sum_i |k_i|^{2 theta}
ChaosKernel resolvent(const ChaosKernel& f, double theta, double kappa);

/* Second-chaos kernel of the observable N[mu](phi):
 *   n_phi(l, m) = K_sym(l, m) conj(phi_hat(l+m)),
 * supported where the mollifier allows; E[N[mu](phi)^2] = 2 |n_phi|^2.
 */
ChaosKernel nphi_kernel(const Lattice& lat, const Field& phi, const MollifierSpec& mol);

// h = lambda * n / (kappa + (1/2)(|l|^{2theta} + |m|^{2theta}))
ChaosKernel poisson_solve(const ChaosKernel& n, double theta, double lambda, double kappa);

/* Chaos-graded pieces of the generator's nonlinear part. A plus raises the
 * order (n in {1, 2}), A minus lowers it (n in {2, 3}); they are mutual
 * adjoints up to sign in the Gamma pairings:
 *   <A+ f, g>_{n+1} + <f, A- g>_n = 0.
 * `flip_sign` is the chaos-check fault injection (breaks adjointness).
 */
ChaosKernel apply_a_plus(const ChaosKernel& g, const CouplingSpec& cpl,
                         const MollifierSpec& mol);
ChaosKernel apply_a_minus(const ChaosKernel& g, const CouplingSpec& cpl,
                          const MollifierSpec& mol, bool flip_sign = false);

/* Resolvent-sandwich ratios against the Dirichlet form:
 *   r_plus  = <g, -A-(kappa - L)^{-1} A+ g> / <(-L) g, g>,
 *   r_minus = <g, -A+(kappa - L)^{-1} A- g> / <(-L) g, g>.
 */
std::array<double, 2> operator_bound_ratio(const ChaosKernel& g, const CouplingSpec& cpl,
                                           const MollifierSpec& mol, double kappa);

}  // namespace vort
