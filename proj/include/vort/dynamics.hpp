#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vort/coupling.hpp"
#include "vort/lattice.hpp"
#include "vort/mollifier.hpp"
#include "vort/nonlinearity.hpp"
#include "vort/rng.hpp"

namespace vort {

Field make_phi(const Lattice& lat, const std::string& name);  // "gauss_r<R>"

// Invariant Gaussian field: independent hermitian pairs, E|w_k|^2 = M^2 |k|^2.
Field sample_invariant(const Lattice& lat, GaussianStream& g);

/* Exact per-mode Ornstein-Uhlenbeck map over a time span h:
 *   w_k <- e^{-|k|^{2 theta} h / 2} w_k + eta_k,
 *   E|eta_k|^2 = M^2 |k|^2 (1 - e^{-|k|^{2 theta} h}),
 * which preserves the invariant law exactly at lambda = 0. Amplitudes and
 * noise standard deviations are precomputed per mode for a fixed h.
 */
struct OuMap {
  std::vector<double> amp;      // e^{-w^theta h / 2}
  std::vector<double> sd;       // per real component, incl. noise_scale
  OuMap() = default;
  OuMap(const Lattice& lat, double theta, double h, double noise_scale);

  // draws two normals per canonical mode from g (index order), applies the
  // map to every state in `states` with the SAME increments
  void apply(const Lattice& lat, GaussianStream& g, std::vector<Field*>& states) const;
};

struct SimParams {
  CouplingSpec cpl;
  MollifierSpec mol;
  double dt = 1e-3;
  double T = 0.5;
  int record_every = 100;    // steps between recorded times
  double noise_scale = 1.0;  // negative-control fault: != 1 breaks invariance
  bool record_B = false;     // per-step B observables (disables OU merging)
  bool couple_ou = false;    // lambda = 0 partner driven by the same draws
  bool couple_fault = false; // fault: partner gets an independent stream
  double laplace_kappa = 0.0;  // if > 0, accumulate int e^{-kt}|B_t|^2 dt
};

struct TrajectoryResult {
  bool ok = true;
  std::vector<double> times;                   // recorded times, t = 0 first
  std::vector<std::vector<double>> omega_phi;  // [time][phi]
  std::vector<std::vector<double>> B_phi;      // [time][phi]
  std::vector<double> hm1;                     // [time], |omega|^2 in H^-1
  std::vector<double> sup_B2;                  // [phi], sup_t |B_t(phi)|^2
  std::vector<double> sup_diff2;               // [phi], sup_t |omega_t(phi)-ou_t(phi)|^2
  std::vector<double> laplace;                 // [phi], time-quadrature value
};

/* One trajectory from a fresh invariant sample, Strang-split integration:
 * exact OU half step, explicit-midpoint nonlinear step, exact OU half
 * step. Between recorded times (and only when no per-step observables are
 * requested) adjacent OU half steps are fused into one exact full-step
 * map. B uses the left-endpoint Riemann rule at true step boundaries.
 */
TrajectoryResult simulate_one(FastNonlinearity& nl, const SimParams& p,
                              const std::vector<Field>& phis,
                              const std::vector<FastNonlinearity::TestGrids>& test_grids,
                              std::uint64_t seed, std::uint64_t stream_id);

}  // namespace vort
