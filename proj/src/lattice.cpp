#include "vort/lattice.hpp"

#include <cmath>
#include <stdexcept>

namespace vort {

Lattice Lattice::make(int M, double cutoff) {
  if (M < 1) throw std::invalid_argument("lattice: M must be >= 1");
  if (cutoff <= 0.0) throw std::invalid_argument("lattice: cutoff must be positive");

  Lattice lat;
  lat.M = M;
  lat.cutoff = cutoff;
  lat.A = static_cast<int>(std::floor(cutoff * M + 1e-9));
  const double r2max = (cutoff * M) * (cutoff * M) * (1.0 + 1e-12);

  const int A = lat.A;
  const int side = 2 * A + 1;
  lat.table.assign(static_cast<size_t>(side) * side, -1);

  for (int px = -A; px <= A; ++px) {
    for (int py = -A; py <= A; ++py) {
      if (px == 0 && py == 0) continue;
      const double p2 = static_cast<double>(px) * px + static_cast<double>(py) * py;
      if (p2 > r2max) continue;
      const int32_t idx = static_cast<int32_t>(lat.num.size());
      lat.num.push_back({px, py});
      lat.jx.push_back(static_cast<double>(px) / M);
      lat.jy.push_back(static_cast<double>(py) / M);
      lat.w.push_back(p2 / (static_cast<double>(M) * M));
      lat.table[static_cast<size_t>(px + A) * side + (py + A)] = idx;
    }
  }

  lat.conj_index.resize(lat.num.size());
  for (size_t i = 0; i < lat.num.size(); ++i) {
    const int ci = lat.index(-lat.num[i][0], -lat.num[i][1]);
    lat.conj_index[i] = static_cast<int32_t>(ci);
  }
  return lat;
}

cplx pair_fields(const Lattice& lat, const Field& f, const Field& g) {
  cplx acc = 0.0;
  for (int i = 0; i < lat.n(); ++i) acc += f[i] * std::conj(g[i]);
  return acc / (static_cast<double>(lat.M) * lat.M);
}

double sobolev_sq(const Lattice& lat, const Field& f, double s) {
  double acc = 0.0;
  if (s == 0.0) {
    for (int i = 0; i < lat.n(); ++i) acc += std::norm(f[i]);
  } else if (s == 1.0) {
    for (int i = 0; i < lat.n(); ++i) acc += lat.w[i] * std::norm(f[i]);
  } else if (s == -1.0) {
    for (int i = 0; i < lat.n(); ++i) acc += std::norm(f[i]) / lat.w[i];
  } else if (s == 2.0) {
    for (int i = 0; i < lat.n(); ++i) acc += lat.w[i] * lat.w[i] * std::norm(f[i]);
  } else {
    for (int i = 0; i < lat.n(); ++i) acc += std::pow(lat.w[i], s) * std::norm(f[i]);
  }
  return acc / (static_cast<double>(lat.M) * lat.M);
}

bool is_hermitian(const Lattice& lat, const Field& f, double tol) {
  for (int i = 0; i < lat.n(); ++i) {
    const cplx d = f[i] - std::conj(f[lat.conj_index[i]]);
    if (std::abs(d.real()) > tol || std::abs(d.imag()) > tol) return false;
  }
  return true;
}

}  // namespace vort
