#include "vort/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace {

constexpr double kInvTwoPi = 0.15915494309189535;
constexpr double kPi = 3.1415926535897932384626433832795;

struct ModeTables {
  std::vector<double> rho;   // mollifier value per mode
  std::vector<double> wth;   // |k|^{2 theta} per mode
  std::vector<int> phi_set;  // modes where |phi|^2 is above relative floor
};

/* Modes with |phi_k|^2 below 1e-60 of the peak cannot move any of the
 * sums at double precision; skipping them keeps the k-loop short for
 * rapidly decaying profiles on large lattices.
 */
ModeTables make_tables(const vort::Lattice& lat, const vort::Field& phi,
                       const vort::MollifierSpec& mol, double theta) {
  ModeTables t;
  const int n = lat.n();
  t.rho.resize(n);
  t.wth.resize(n);
  double peak = 0.0;
  for (int i = 0; i < n; ++i) {
    t.rho[i] = vort::rho_hat(std::sqrt(lat.w[i]), mol);
    t.wth[i] = theta == 1.0 ? lat.w[i] : std::pow(lat.w[i], theta);
    peak = std::max(peak, std::norm(phi[i]));
  }
  const double floor = peak * 1e-60;
  for (int i = 0; i < n; ++i) {
    if (std::norm(phi[i]) > floor) t.phi_set.push_back(i);
  }
  return t;
}

struct PairTerm {
  double wl, wm, dl, dm, ksym2;
};

/* Streams every ordered pair (l, m = k - l) with k in the phi support and
 * nonzero mollifier factors, handing the per-pair data to `emit`.
 */
template <typename F>
void stream_pairs(const vort::Lattice& lat, const vort::Field& phi, const ModeTables& t,
                  F&& emit) {
  const int n = lat.n();
  for (int k : t.phi_set) {
    if (t.rho[k] == 0.0) continue;
    const double phi2 = std::norm(phi[k]);
    const int kpx = lat.num[k][0], kpy = lat.num[k][1];
    const double jkx = lat.jx[k], jky = lat.jy[k];
    for (int l = 0; l < n; ++l) {
      if (t.rho[l] == 0.0) continue;
      const int m = lat.index(kpx - lat.num[l][0], kpy - lat.num[l][1]);
      if (m < 0 || t.rho[m] == 0.0) continue;
      const double c = kInvTwoPi * t.rho[l] * t.rho[m] * t.rho[k] /
                       (lat.w[l] * lat.w[m]);
      const double k_lm = c * (lat.jy[l] * jkx - lat.jx[l] * jky) *
                          (lat.jx[m] * jkx + lat.jy[m] * jky);
      const double k_ml = c * (lat.jy[m] * jkx - lat.jx[m] * jky) *
                          (lat.jx[l] * jkx + lat.jy[l] * jky);
      const double ksym = 0.5 * (k_lm + k_ml);
      if (ksym == 0.0) continue;
      emit(k, l, m, PairTerm{lat.w[l], lat.w[m], t.wth[l], t.wth[m], ksym * ksym * phi2});
    }
  }
}

bool in_sector(const vort::Lattice& lat, int k1, int k2, double N) {
  const double w1 = lat.w[k1];
  if (w1 > N) return false;  // |k1| <= sqrt(N)
  const double r2 = std::sqrt(lat.w[k2]);
  const double lo = std::max(2.0 * std::sqrt(w1), 2.0 / N);
  if (r2 < lo || r2 > N / 3.0) return false;
  double d = std::atan2(lat.jy[k2], lat.jx[k2]) - std::atan2(lat.jy[k1], lat.jx[k1]);
  if (d < 0.0) d += 2.0 * kPi;
  return d > kPi / 6.0 && d < kPi / 3.0;
}

}  // namespace

namespace vort {

double energy_of_poisson(const Lattice& lat, const Field& phi, const CouplingSpec& cpl) {
  const MollifierSpec mol{cpl.N};
  const ModeTables t = make_tables(lat, phi, mol, cpl.theta);
  const double lam = cpl.lambda();
  double acc = 0.0;
  stream_pairs(lat, phi, t, [&](int, int, int, const PairTerm& pt) {
    const double D = 1.0 + 0.5 * (pt.dl + pt.dm);
    acc += pt.wl * pt.dl * pt.wm * pt.ksym2 / (D * D);
  });
  const double M2 = static_cast<double>(lat.M) * lat.M;
  return 4.0 * lam * lam / (M2 * M2) * acc;
}

ItoSums ito_upper_bound_sums(const Lattice& lat, const Field& phi, const CouplingSpec& cpl) {
  const MollifierSpec mol{cpl.N};
  const ModeTables t = make_tables(lat, phi, mol, cpl.theta);
  const double lam = cpl.lambda();
  const double M2 = static_cast<double>(lat.M) * lat.M;

  ItoSums s;
  const double nsq = cpl.N * cpl.N * (1.0 + 1e-12);
  double resolvent_sum = 0.0;
  for (int i = 0; i < lat.n(); ++i) {
    if (lat.w[i] > nsq) continue;  // inclusive |l| <= N, no mollifier factor
    resolvent_sum += 1.0 / (1.0 + 0.5 * t.wth[i]);
  }
  s.sum_A = sobolev_sq(lat, phi, 2.0) * lam * lam / M2 * resolvent_sum;

  double acc = 0.0;
  stream_pairs(lat, phi, t, [&](int, int, int, const PairTerm& pt) {
    const double D = 1.0 + 0.5 * (pt.dl + pt.dm);
    acc += pt.wl * pt.wm * pt.ksym2 / (D * D);
  });
  s.sum_B = lam * lam / (M2 * M2) * acc;
  return s;
}

double ito_envelope(const Lattice& lat, const Field& phi, const CouplingSpec& cpl,
                    double kappa) {
  if (!(kappa > 0.0)) throw std::invalid_argument("ito_envelope: kappa must be positive");
  const ItoSums s = ito_upper_bound_sums(lat, phi, cpl);
  return 2.0 / (kappa * kappa) * std::max(1.0, 1.0 / kappa) * (s.sum_A + s.sum_B);
}

double laplace_lower_bound(const Lattice& lat, const Field& phi, const CouplingSpec& cpl,
                           double kappa, double c, bool sector_only) {
  if (cpl.theta != 1.0)
    throw std::invalid_argument("laplace_lower_bound: defined at theta = 1 only");
  if (!(kappa > 0.0)) throw std::invalid_argument("laplace_lower_bound: kappa must be positive");
  if (c < 1.0) throw std::invalid_argument("laplace_lower_bound: c must be >= 1");

  const MollifierSpec mol{cpl.N};
  const ModeTables t = make_tables(lat, phi, mol, cpl.theta);
  const double lam = cpl.lambda();
  double acc = 0.0;
  stream_pairs(lat, phi, t, [&](int, int l, int m, const PairTerm& pt) {
    const double term = pt.wl * pt.wm * pt.ksym2 / (kappa + 0.5 * c * (pt.wl + pt.wm));
    if (!sector_only) {
      acc += term;
    } else if (in_sector(lat, l, m, cpl.N)) {
      // symmetric hull {k2 in C(k1)} u {k1 in C(k2)}: twice the one-sided sum
      acc += 2.0 * term;
    }
  });
  const double M2 = static_cast<double>(lat.M) * lat.M;
  return 2.0 * lam * lam / (kappa * kappa * M2 * M2) * acc;
}

double sector_integral(double lambda_hat, double N, double kappa) {
  if (N < 16.0) throw std::invalid_argument("sector_integral: N must be >= 16");
  if (!(kappa > 0.0)) throw std::invalid_argument("sector_integral: kappa must be positive");
  return lambda_hat * lambda_hat / (2.0 * std::log(N)) *
         std::log((kappa + N * N / 9.0) / (kappa + 4.0 * N));
}

double bound_normaliser(const Lattice& lat, const Field& phi, const CouplingSpec& cpl,
                        double kappa) {
  return cpl.lambda_hat * cpl.lambda_hat / (kappa * kappa) * sobolev_sq(lat, phi, 2.0);
}

}  // namespace vort
