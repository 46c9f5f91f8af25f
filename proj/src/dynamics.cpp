#include "vort/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace vort {

double CouplingSpec::lambda() const {
  if (lambda_hat == 0.0) return 0.0;
  if (fixed_lambda) return lambda_hat;
  if (theta == 1.0) {
    if (N <= 1.0) throw std::invalid_argument("coupling: N must exceed 1 when theta = 1");
    return lambda_hat / std::sqrt(std::log(N));
  }
  return lambda_hat * std::pow(N, 2.0 * theta - 2.0);
}

Field make_phi(const Lattice& lat, const std::string& name) {
  const std::string prefix = "gauss_r";
  if (name.rfind(prefix, 0) != 0)
    throw std::invalid_argument("unknown test function profile: " + name);
  const double R = std::stod(name.substr(prefix.size()));
  if (!(R > 0.0)) throw std::invalid_argument("test function radius must be positive");
  /* Fixed smooth profile, independent of the refinement M: coefficients
   * exp(-|s|^2/(2R^2)) on integer frequencies s, zero on the strictly
   * fractional modes.  A given name therefore denotes the same test
   * function on every lattice that can represent it.
   */
  Field phi(lat.n(), 0.0);
  for (int i = 0; i < lat.n(); ++i) {
    if (lat.num[i][0] % lat.M != 0 || lat.num[i][1] % lat.M != 0) continue;
    phi[i] = std::exp(-0.5 * lat.w[i] / (R * R));
  }
  return phi;
}

Field sample_invariant(const Lattice& lat, GaussianStream& g) {
  Field f(lat.n(), 0.0);
  for (int i = 0; i < lat.n(); ++i) {
    if (!lat.canonical(i)) continue;
    const double sd = lat.M * std::sqrt(0.5 * lat.w[i]);
    const cplx v(sd * g.normal(), sd * g.normal());
    f[i] = v;
    f[lat.conj_index[i]] = std::conj(v);
  }
  return f;
}

OuMap::OuMap(const Lattice& lat, double theta, double h, double noise_scale) {
  const int n = lat.n();
  amp.resize(n);
  sd.resize(n);
  for (int i = 0; i < n; ++i) {
    const double d = theta == 1.0 ? lat.w[i] : std::pow(lat.w[i], theta);
    const double a = std::exp(-0.5 * d * h);
    amp[i] = a;
    sd[i] = lat.M * std::sqrt(0.5 * lat.w[i] * (1.0 - a * a)) * noise_scale;
  }
}

void OuMap::apply(const Lattice& lat, GaussianStream& g, std::vector<Field*>& states) const {
  const int n = lat.n();
  for (int i = 0; i < n; ++i) {
    if (!lat.canonical(i)) continue;
    const cplx eta(sd[i] * g.normal(), sd[i] * g.normal());
    const int ci = lat.conj_index[i];
    for (Field* s : states) {
      const cplx v = amp[i] * (*s)[i] + eta;
      (*s)[i] = v;
      (*s)[ci] = std::conj(v);
    }
  }
}

namespace {

// phi-readouts restricted to an index subset (sums are real for hermitian
// pairs of hermitian fields)
double dot_phi(const Lattice& lat, const Field& f, const Field& phi,
               const std::vector<int>& idx) {
  double acc = 0.0;
  for (int i : idx) acc += f[i].real() * phi[i].real() + f[i].imag() * phi[i].imag();
  return acc / (static_cast<double>(lat.M) * lat.M);
}

}  // namespace

TrajectoryResult simulate_one(FastNonlinearity& nl, const SimParams& p,
                              const std::vector<Field>& phis,
                              const std::vector<FastNonlinearity::TestGrids>& test_grids,
                              std::uint64_t seed, std::uint64_t stream_id) {
  const Lattice& lat = nl.lattice();
  const int n = lat.n();
  const int nphi = static_cast<int>(phis.size());
  const int steps = static_cast<int>(std::llround(p.T / p.dt));
  const bool stepwise = p.record_B || p.couple_ou;

  GaussianStream gs(seed, stream_id);
  GaussianStream gs_fault(seed, stream_id | (1ULL << 63));

  Field omega = sample_invariant(lat, gs);
  Field partner;
  if (p.couple_ou) partner = omega;

  const double lam = p.cpl.lambda();
  const OuMap half(lat, p.cpl.theta, 0.5 * p.dt, p.noise_scale);
  const OuMap full(lat, p.cpl.theta, p.dt, p.noise_scale);

  std::vector<int> all_idx(n);
  for (int i = 0; i < n; ++i) all_idx[i] = i;
  std::vector<int> supp_idx;  // nonlinearity-affected modes, for diff readouts
  for (int i = 0; i < n; ++i) {
    if (rho_hat(std::sqrt(lat.w[i]), nl.mollifier()) != 0.0) supp_idx.push_back(i);
  }

  TrajectoryResult res;
  res.sup_B2.assign(nphi, 0.0);
  res.sup_diff2.assign(nphi, 0.0);
  res.laplace.assign(nphi, 0.0);
  std::vector<double> B(nphi, 0.0);
  std::vector<double> nvals(nphi, 0.0);
  Field mid(n), nval(n);

  auto record = [&](double t) {
    res.times.push_back(t);
    std::vector<double> row(nphi), brow(nphi);
    for (int q = 0; q < nphi; ++q) {
      row[q] = dot_phi(lat, omega, phis[q], all_idx);
      brow[q] = B[q];
    }
    res.omega_phi.push_back(row);
    res.B_phi.push_back(brow);
    res.hm1.push_back(sobolev_sq(lat, omega, -1.0));
    if (!std::isfinite(res.hm1.back())) res.ok = false;
    for (double v : row)
      if (!std::isfinite(v)) res.ok = false;
  };

  auto step_observables = [&](double t, bool endpoint) {
    for (int q = 0; q < nphi; ++q) {
      if (B[q] * B[q] > res.sup_B2[q]) res.sup_B2[q] = B[q] * B[q];
      if (p.laplace_kappa > 0.0) {
        const double wgt = endpoint ? 0.5 : 1.0;  // trapezoid ends
        res.laplace[q] += wgt * p.dt * std::exp(-p.laplace_kappa * t) * B[q] * B[q];
      }
      if (p.couple_ou) {
        double d = 0.0;
        for (int i : supp_idx) {
          const cplx df = omega[i] - partner[i];
          d += df.real() * phis[q][i].real() + df.imag() * phis[q][i].imag();
        }
        d /= static_cast<double>(lat.M) * lat.M;
        if (d * d > res.sup_diff2[q]) res.sup_diff2[q] = d * d;
      }
    }
  };

  record(0.0);
  step_observables(0.0, true);

  std::vector<Field*> states{&omega};
  if (p.couple_ou && !p.couple_fault) states.push_back(&partner);
  std::vector<Field*> partner_only{&partner};

  const double ldt = lam * p.dt;
  bool merged_carry = false;
  for (int s = 1; s <= steps; ++s) {
    if (p.record_B && lam != 0.0) {
      nl.pair_with(omega, test_grids, nvals.data());
      for (int q = 0; q < nphi; ++q) B[q] += ldt * nvals[q];
    }

    if (!merged_carry) {
      half.apply(lat, gs, states);
      if (p.couple_ou && p.couple_fault) half.apply(lat, gs_fault, partner_only);
    }

    if (lam != 0.0) {
      nl.apply(omega, nval);
      const double hdt = 0.5 * ldt;
      for (int i = 0; i < n; ++i) mid[i] = omega[i] - hdt * nval[i];
      nl.apply(mid, nval);
      for (int i = 0; i < n; ++i) omega[i] -= ldt * nval[i];
    }

    const bool at_boundary = stepwise || s % p.record_every == 0 || s == steps;
    if (at_boundary) {
      half.apply(lat, gs, states);
      if (p.couple_ou && p.couple_fault) half.apply(lat, gs_fault, partner_only);
      merged_carry = false;
    } else {
      full.apply(lat, gs, states);
      merged_carry = true;
    }

    const double t = s * p.dt;
    if (stepwise || s % p.record_every == 0 || s == steps)
      step_observables(t, s == steps);
    if (s % p.record_every == 0 || s == steps) record(t);
    if (!res.ok) break;
  }
  for (int q = 0; q < nphi; ++q) {
    if (!std::isfinite(res.sup_B2[q]) || !std::isfinite(res.sup_diff2[q]) ||
        !std::isfinite(res.laplace[q]))
      res.ok = false;
  }
  return res;
}

}  // namespace vort
