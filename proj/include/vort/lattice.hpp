#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

namespace vort {

using cplx = std::complex<double>;

/* Frequency lattice Z^2_M: j in Z^2/M with 0 < |j| <= cutoff.
 *
 * Modes are stored in lexicographic order of the integer numerators
 * p = j*M (px ascending, then py), so iteration order is reproducible.
 * The inclusion test uses a relative epsilon so that modes sitting
 * exactly on the cutoff circle are kept regardless of rounding.
 */
struct Lattice {
  int M = 1;
  double cutoff = 0.0;
  int A = 0;                            // max |px|, |py| over retained modes
  std::vector<std::array<int, 2>> num;  // integer numerators p = j*M
  std::vector<double> jx, jy, w;        // j components and |j|^2
  std::vector<int32_t> conj_index;      // position of -j
  std::vector<int32_t> table;           // (2A+1)^2 lookup, -1 where absent

  static Lattice make(int M, double cutoff);

  int n() const { return static_cast<int>(num.size()); }

  int index(int px, int py) const {
    if (px < -A || px > A || py < -A || py > A) return -1;
    return table[static_cast<size_t>(px + A) * (2 * A + 1) + (py + A)];
  }

  // one representative per hermitian pair {j, -j}
  bool canonical(int i) const {
    return num[i][0] > 0 || (num[i][0] == 0 && num[i][1] > 0);
  }
};

/* Hermitian Fourier field: coefficients aligned with Lattice mode order,
 * f[conj_index[i]] == conj(f[i]). All pairings below are the Riemann-sum
 * forms with weight 1/M^2 per mode.
 */
using Field = std::vector<cplx>;

// (1/M^2) sum_k f_k conj(g_k)
cplx pair_fields(const Lattice& lat, const Field& f, const Field& g);

// (1/M^2) sum_k |k|^{2s} |f_k|^2
double sobolev_sq(const Lattice& lat, const Field& f, double s);

bool is_hermitian(const Lattice& lat, const Field& f, double tol = 0.0);

}  // namespace vort
