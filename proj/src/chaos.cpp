#include "vort/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace {

constexpr double kInvTwoPi = 0.15915494309189535;
constexpr std::uint64_t kSlotBits = 21;
constexpr std::uint64_t kSlotMask = (1ULL << kSlotBits) - 1;

inline void unpack(std::uint64_t key, int order, int* idx) {
  for (int a = 0; a < order; ++a)
    idx[a] = static_cast<int>((key >> (kSlotBits * a)) & kSlotMask) - 1;
}

double dirichlet(const vort::ChaosKernel& f, double theta, std::uint64_t key) {
  int idx[3];
  unpack(key, f.order, idx);
  double d = 0.0;
  for (int a = 0; a < f.order; ++a)
    d += theta == 1.0 ? f.lat->w[idx[a]] : std::pow(f.lat->w[idx[a]], theta);
  return d;
}

std::vector<std::uint64_t> sorted_keys(const vort::ChaosKernel& f) {
  std::vector<std::uint64_t> ks;
  ks.reserve(f.vals.size());
  for (const auto& kv : f.vals) ks.push_back(kv.first);
  std::sort(ks.begin(), ks.end());
  return ks;
}

}  // namespace

namespace vort {

std::uint64_t ChaosKernel::key(std::array<int, 3> idx, int order) {
  std::sort(idx.begin(), idx.begin() + order);
  std::uint64_t k = 0;
  for (int a = 0; a < order; ++a)
    k |= (static_cast<std::uint64_t>(idx[a] + 1) & kSlotMask) << (kSlotBits * a);
  return k;
}

void ChaosKernel::add(std::array<int, 3> idx, cplx v) { vals[key(idx, order)] += v; }

cplx ChaosKernel::get(std::array<int, 3> idx) const {
  const auto it = vals.find(key(idx, order));
  return it == vals.end() ? cplx(0.0) : it->second;
}

std::vector<std::array<int, 3>> ChaosKernel::top_support(std::size_t count) const {
  std::vector<std::pair<std::uint64_t, double>> ranked;
  ranked.reserve(vals.size());
  for (const auto& kv : vals) ranked.emplace_back(kv.first, std::abs(kv.second));
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (ranked.size() > count) ranked.resize(count);
  std::vector<std::array<int, 3>> out(ranked.size(), {0, 0, 0});
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    int idx[3] = {0, 0, 0};
    unpack(ranked[i].first, order, idx);
    for (int a = 0; a < order; ++a) out[i][a] = idx[a];
  }
  return out;
}

int tuple_multiplicity(const ChaosKernel& k, std::uint64_t packed) {
  int idx[3];
  unpack(packed, k.order, idx);
  if (k.order == 1) return 1;
  if (k.order == 2) return idx[0] == idx[1] ? 1 : 2;
  if (idx[0] == idx[1] && idx[1] == idx[2]) return 1;
  if (idx[0] == idx[1] || idx[1] == idx[2]) return 3;
  return 6;
}

cplx gamma_pair(const ChaosKernel& f, const ChaosKernel& g) {
  if (f.order != g.order || f.lat != g.lat)
    throw std::invalid_argument("gamma_pair: mismatched kernels");
  cplx acc = 0.0;
  int idx[3];
  for (std::uint64_t key : sorted_keys(f)) {
    const auto it = g.vals.find(key);
    if (it == g.vals.end()) continue;
    unpack(key, f.order, idx);
    double wprod = 1.0;
    for (int a = 0; a < f.order; ++a) wprod *= f.lat->w[idx[a]];
    acc += static_cast<double>(tuple_multiplicity(f, key)) * wprod *
           f.vals.at(key) * std::conj(it->second);
  }
  return acc * std::pow(static_cast<double>(f.lat->M), -2.0 * f.order);
}

ChaosKernel apply_L(const ChaosKernel& f, double theta) {
  ChaosKernel out = f;
  for (auto& kv : out.vals) kv.second *= -0.5 * dirichlet(f, theta, kv.first);
  return out;
}

ChaosKernel resolvent(const ChaosKernel& f, double theta, double kappa) {
  ChaosKernel out = f;
  for (auto& kv : out.vals) kv.second /= kappa + 0.5 * dirichlet(f, theta, kv.first);
  return out;
}

ChaosKernel nphi_kernel(const Lattice& lat, const Field& phi, const MollifierSpec& mol) {
  ChaosKernel out;
  out.order = 2;
  out.lat = &lat;
  const int n = lat.n();
  std::vector<double> rho(n);
  std::vector<int> supp;
  for (int i = 0; i < n; ++i) {
    rho[i] = rho_hat(std::sqrt(lat.w[i]), mol);
    if (rho[i] != 0.0) supp.push_back(i);
  }
  for (int a : supp) {
    for (int b : supp) {
      if (b < a) continue;
      const int s = lat.index(lat.num[a][0] + lat.num[b][0], lat.num[a][1] + lat.num[b][1]);
      if (s < 0 || rho[s] == 0.0 || phi[s] == cplx(0.0)) continue;
      const double ks = kernel_K_sym(lat.jx[a], lat.jy[a], lat.jx[b], lat.jy[b], mol);
      if (ks == 0.0) continue;
      out.vals[ChaosKernel::key({a, b, 0}, 2)] = ks * std::conj(phi[s]);
    }
  }
  return out;
}

ChaosKernel poisson_solve(const ChaosKernel& n, double theta, double lambda, double kappa) {
  if (n.order != 2) throw std::invalid_argument("poisson_solve: order-2 input required");
  ChaosKernel out = n;
  for (auto& kv : out.vals)
    kv.second *= lambda / (kappa + 0.5 * dirichlet(n, theta, kv.first));
  return out;
}

ChaosKernel apply_a_plus(const ChaosKernel& g, const CouplingSpec& cpl,
                         const MollifierSpec& mol) {
  if (g.order != 1 && g.order != 2)
    throw std::invalid_argument("apply_a_plus: order must be 1 or 2");
  const Lattice& lat = *g.lat;
  const double lam = cpl.lambda();

  ChaosKernel out;
  out.order = g.order + 1;
  out.lat = g.lat;

  const int n = lat.n();
  std::vector<double> rho(n);
  std::vector<int> supp;
  for (int i = 0; i < n; ++i) {
    rho[i] = rho_hat(std::sqrt(lat.w[i]), mol);
    if (rho[i] != 0.0) supp.push_back(i);
  }

  /* Sym over the (n+1)! output arrangements, realised as emissions: every
   * ordered arrangement (s, t...) of a source tuple and every ordered
   * split x + y = s contributes (n lam K(x,y) value) / (n+1)! at the
   * sorted target (x, y, t...). */
  const double coeff = g.order == 1 ? lam / 2.0 : 2.0 * lam / 6.0;
  int idx[3];
  for (std::uint64_t key : sorted_keys(g)) {
    const cplx v = g.vals.at(key);
    unpack(key, g.order, idx);
    std::array<std::pair<int, int>, 2> arr;
    int n_arr;
    if (g.order == 1) {
      arr[0] = {idx[0], -1};
      n_arr = 1;
    } else if (idx[0] == idx[1]) {
      arr[0] = {idx[0], idx[1]};
      n_arr = 1;
    } else {
      arr[0] = {idx[0], idx[1]};
      arr[1] = {idx[1], idx[0]};
      n_arr = 2;
    }
    for (int a = 0; a < n_arr; ++a) {
      const int s = arr[a].first;
      const int t = arr[a].second;
      if (rho[s] == 0.0) continue;  // K carries rho(x + y) = rho(s)
      const int spx = lat.num[s][0], spy = lat.num[s][1];
      const double jsx = lat.jx[s], jsy = lat.jy[s];
      for (int x : supp) {
        const int y = lat.index(spx - lat.num[x][0], spy - lat.num[x][1]);
        if (y < 0 || rho[y] == 0.0) continue;
        const double perp = lat.jy[x] * jsx - lat.jx[x] * jsy;
        const double along = lat.jx[y] * jsx + lat.jy[y] * jsy;
        const double K = kInvTwoPi * rho[x] * rho[y] * rho[s] * perp * along /
                         (lat.w[x] * lat.w[y]);
        if (K == 0.0) continue;
        out.add({x, y, t}, coeff * K * v);
      }
    }
  }
  /* The emission loop visits each distinct ordered arrangement once, but the
   * symmetrising average runs over all (n+1)! index permutations, so tuples
   * with repeated entries need their repetition factor restored. */
  const double fact = out.order == 3 ? 6.0 : 2.0;
  for (auto& kv : out.vals) kv.second *= fact / tuple_multiplicity(out, kv.first);
  return out;
}

ChaosKernel apply_a_minus(const ChaosKernel& g, const CouplingSpec& cpl,
                          const MollifierSpec& mol, bool flip_sign) {
  if (g.order != 2 && g.order != 3)
    throw std::invalid_argument("apply_a_minus: order must be 2 or 3");
  const Lattice& lat = *g.lat;
  const double lam = cpl.lambda();
  const double M2 = static_cast<double>(lat.M) * lat.M;

  ChaosKernel out;
  out.order = g.order - 1;
  out.lat = g.lat;

  const int n = lat.n();
  std::vector<double> rho(n);
  for (int i = 0; i < n; ++i) rho[i] = rho_hat(std::sqrt(lat.w[i]), mol);

  /* The pair (p, q) of arguments is contracted into k1 = p + q; remaining
   * arguments ride along. Emissions run over the distinct permutations of
   * each source tuple, with the same symmetrisation bookkeeping as A+. */
  const double coeff = (g.order == 3 ? 2.0 * lam : lam) * kInvTwoPi / M2;
  const double sym = g.order == 3 ? 0.5 : 1.0;
  const double sign = flip_sign ? -1.0 : 1.0;

  int idx[3];
  for (std::uint64_t key : sorted_keys(g)) {
    const cplx v = g.vals.at(key);
    unpack(key, g.order, idx);
    std::array<int, 3> perm{};
    for (int a = 0; a < g.order; ++a) perm[a] = idx[a];
    auto first = perm.begin();
    auto last = perm.begin() + g.order;
    do {
      const int p = perm[0];
      const int q = perm[1];
      const int k1 = lat.index(lat.num[p][0] + lat.num[q][0],
                               lat.num[p][1] + lat.num[q][1]);
      if (k1 < 0 || rho[k1] == 0.0 || rho[p] == 0.0 || rho[q] == 0.0) continue;
      const double j1x = lat.jx[k1], j1y = lat.jy[k1];
      const double perp = j1y * lat.jx[p] - j1x * lat.jy[p];  // k1^perp . p
      const double along = j1x * lat.jx[q] + j1y * lat.jy[q];
      const cplx tau = sign * coeff * rho[p] * rho[q] * rho[k1] * perp * along /
                       lat.w[k1] * v * sym;
      if (g.order == 3)
        out.add({k1, perm[2], 0}, tau);
      else
        out.add({k1, 0, 0}, tau);
    } while (std::next_permutation(first, last));
  }
  /* Same repetition-factor bookkeeping as in apply_a_plus; a no-op for the
   * order-1 output of the 2 -> 1 chain. */
  if (out.order == 2)
    for (auto& kv : out.vals) kv.second *= 2.0 / tuple_multiplicity(out, kv.first);
  return out;
}

std::array<double, 2> operator_bound_ratio(const ChaosKernel& g, const CouplingSpec& cpl,
                                           const MollifierSpec& mol, double kappa) {
  if (g.order != 2) throw std::invalid_argument("operator_bound_ratio: order-2 g required");
  const double den = -gamma_pair(apply_L(g, cpl.theta), g).real();
  if (!(den > 0.0))
    throw std::invalid_argument("operator_bound_ratio: degenerate g, <(-L)g, g> = 0");

  const ChaosKernel up = apply_a_minus(
      resolvent(apply_a_plus(g, cpl, mol), cpl.theta, kappa), cpl, mol);
  const double r_plus = -gamma_pair(g, up).real() / den;

  const ChaosKernel down = apply_a_plus(
      resolvent(apply_a_minus(g, cpl, mol), cpl.theta, kappa), cpl, mol);
  const double r_minus = -gamma_pair(g, down).real() / den;

  return {r_plus, r_minus};
}

}  // namespace vort
