#pragma once

#include <vector>

#include "vort/fftgrid.hpp"
#include "vort/kernel.hpp"
#include "vort/lattice.hpp"
#include "vort/mollifier.hpp"

namespace vort {

/* Biot-Savart velocity: v_hat(k) = -i k^perp / |k|^2 * w_hat(k) with
 * k^perp = (k_y, -k_x), the sign fixed so that the discrete curl identity
 * i k^perp . v_hat(k) = w_hat(k) holds exactly (and i k . v_hat = 0).
 */
void biot_savart(const Lattice& lat, const Field& omega, Field& vx, Field& vy);

/* Reference quadratic nonlinearity, O(n^2) convolution over retained
 * ordered decompositions k = l + m:
 *
 *   N_hat_k = (1/M^2) sum_{l+m=k} K(l, m) w_l w_m.
 */
Field nonlinearity_direct(const Lattice& lat, const Field& omega, const MollifierSpec& mol);

/* Pseudospectral evaluation of the same map: chi = rho * omega, velocity
 * of chi, the product field v chi on the padded grid, forward transform,
 * divergence multiplier ik, final rho. Five transforms per call; equal to
 * nonlinearity_direct to ~1e-14 relative on band-limited inputs.
 *
 * Owns its FFT plans and scratch, so construct once per lattice and reuse
 * across calls (not thread-safe; one instance per worker).
 */
class FastNonlinearity {
 public:
  FastNonlinearity(const Lattice& lat, const MollifierSpec& mol);

  const Lattice& lattice() const { return *lat_; }
  const MollifierSpec& mollifier() const { return mol_; }

  void apply(const Field& omega, Field& out);

  /* Test-function grids W = -grad(rho phi) for the dot-product form
   *   <N[omega], phi> = (2 pi M / G)^2 sum_grid (v chi) . W,
   * computed once per phi and reused every step. */
  struct TestGrids {
    std::vector<double> wx, wy;
  };
  TestGrids make_test_grids(const Field& phi);

  /* <N[omega], phi_i> for every prepared test function, sharing one set of
   * three transforms. Exactly pair_fields(N[omega], phi) up to roundoff. */
  void pair_with(const Field& omega, const std::vector<TestGrids>& tg, double* out);

 private:
  const Lattice* lat_;
  MollifierSpec mol_;
  SpectralGrid grid_;
  std::vector<double> rho_;            // rho at each mode
  std::vector<cplx> mul_vx_, mul_vy_;  // velocity multipliers applied to chi
  std::vector<double> gvx_, gvy_, gchi_;
  Field chi_, scratch_;

  void product_grids(const Field& omega);  // fills gvx_ <- vx*chi, gvy_ <- vy*chi
};

}  // namespace vort
