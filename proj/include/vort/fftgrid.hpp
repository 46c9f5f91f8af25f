#pragma once

#include <vector>

#include "vort/lattice.hpp"

#include <fftw3.h>

namespace vort {

/* Smallest even 5-smooth integer >= 3A+2: alias-free evaluation of
 * quadratic products of fields band-limited to |p|_inf <= A.
 */
int choose_grid_size(int A);

// RAII buffer in FFTW-aligned memory
template <typename T>
struct FftwBuf {
  T* p = nullptr;
  size_t n = 0;
  explicit FftwBuf(size_t count) : n(count) {
    p = static_cast<T*>(fftw_malloc(sizeof(T) * count));
  }
  ~FftwBuf() { fftw_free(p); }
  FftwBuf(const FftwBuf&) = delete;
  FftwBuf& operator=(const FftwBuf&) = delete;
  T& operator[](size_t i) { return p[i]; }
  const T& operator[](size_t i) const { return p[i]; }
};

/* Bridge between lattice coefficients and a G x G real-space grid via
 * FFTW r2c/c2r, with the conventions
 *
 *   to_grid:    g(x_pq) = (1/(2 pi M^2)) sum_j f_j e^{2 pi i (p,q).p_j / G}
 *   from_grid:  f_j     = (2 pi M^2 / G^2) sum_pq g(x_pq) e^{-2 pi i ...}
 *
 * so from_grid(to_grid(f)) = f for band-limited f, and the quadrature
 * (2 pi M / G)^2 sum g1 g2 equals the L^2 pairing of the two fields.
 *
 * `radius` is the largest numerator component the grid has to resolve
 * (0 means the full lattice). Callers working with mollified fields pass
 * the mollifier support radius, which shrinks G from 3A+2 to what the
 * convolutions actually need; modes beyond the radius are treated as 0.
 *
 * Plans are created with FFTW_ESTIMATE: planning is then deterministic,
 * which matters more here than the last factor of transform speed. All
 * transforms run through the internal aligned buffers and are copied in
 * and out; the copies are noise next to the transform itself.
 */
class SpectralGrid {
 public:
  explicit SpectralGrid(const Lattice& lat, int radius = 0);
  ~SpectralGrid();
  SpectralGrid(const SpectralGrid&) = delete;
  SpectralGrid& operator=(const SpectralGrid&) = delete;

  int G() const { return G_; }
  size_t real_size() const { return static_cast<size_t>(G_) * G_; }
  size_t spec_size() const { return static_cast<size_t>(G_) * (G_ / 2 + 1); }

  // half-spectrum scratch -> real grid (scratch content is consumed)
  void to_grid(const Field& f, double* grid);

  // real grid -> lattice coefficients (grid content preserved)
  void from_grid(const double* grid, Field& f);

  /* pack a field (times an optional per-mode complex multiplier) into the
   * internal half-spectrum scratch and run c2r into grid; multiplier may
   * be null. Used for derived fields like velocity components. */
  void transform_multiplied(const Field& f, const cplx* multiplier, double* grid);

 private:
  const Lattice* lat_;
  int rad_;
  int G_;
  FftwBuf<fftw_complex> spec_;
  FftwBuf<double> real_;
  fftw_plan plan_c2r_;
  fftw_plan plan_r2c_;

  void pack(const Field& f, const cplx* multiplier);
};

}  // namespace vort
