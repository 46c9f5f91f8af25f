#include "vort/nonlinearity.hpp"

#include <cmath>
#include <stdexcept>

namespace {
constexpr double kInvTwoPi = 0.15915494309189535;
constexpr double kTwoPi = 6.283185307179586476925286766559;

// largest integer numerator magnitude the mollifier support can reach
int support_radius(const vort::Lattice& lat, const vort::MollifierSpec& mol) {
  const double nm = mol.N * lat.M;
  const int b = static_cast<int>(std::ceil(nm - 1e-9)) - 1;
  return std::max(1, std::min(b, lat.A));
}
}  // namespace

namespace vort {

void biot_savart(const Lattice& lat, const Field& omega, Field& vx, Field& vy) {
  const int n = lat.n();
  vx.resize(n);
  vy.resize(n);
  for (int i = 0; i < n; ++i) {
    const cplx iw = cplx(0.0, 1.0) * omega[i] / lat.w[i];
    vx[i] = -lat.jy[i] * iw;
    vy[i] = lat.jx[i] * iw;
  }
}

Field nonlinearity_direct(const Lattice& lat, const Field& omega, const MollifierSpec& mol) {
  const int n = lat.n();
  std::vector<double> rho(n);
  std::vector<int> supp;
  supp.reserve(n);
  for (int i = 0; i < n; ++i) {
    rho[i] = rho_hat(std::sqrt(lat.w[i]), mol);
    if (rho[i] != 0.0) supp.push_back(i);
  }

  Field out(n, 0.0);
  const double invM2 = 1.0 / (static_cast<double>(lat.M) * lat.M);
  for (int a : supp) {
    const double lx = lat.jx[a], ly = lat.jy[a];
    const double cl = rho[a] / lat.w[a];
    for (int b : supp) {
      const int sx = lat.num[a][0] + lat.num[b][0];
      const int sy = lat.num[a][1] + lat.num[b][1];
      if (sx == 0 && sy == 0) continue;
      const int s = lat.index(sx, sy);
      if (s < 0 || rho[s] == 0.0) continue;
      const double mx = lat.jx[b], my = lat.jy[b];
      const double jsx = lat.jx[s], jsy = lat.jy[s];
      const double perp = ly * jsx - lx * jsy;
      const double along = mx * jsx + my * jsy;
      const double K = kInvTwoPi * cl * rho[b] * rho[s] * perp * along / lat.w[b];
      out[s] += K * omega[a] * omega[b] * invM2;
    }
  }
  return out;
}

FastNonlinearity::FastNonlinearity(const Lattice& lat, const MollifierSpec& mol)
    : lat_(&lat), mol_(mol), grid_(lat, support_radius(lat, mol)) {
  if (mol.N < 2.0) throw std::invalid_argument("nonlinearity: mollifier N must be >= 2");
  const int n = lat.n();
  rho_.resize(n);
  mul_vx_.resize(n);
  mul_vy_.resize(n);
  for (int i = 0; i < n; ++i) {
    rho_[i] = rho_hat(std::sqrt(lat.w[i]), mol);
    const cplx iw = cplx(0.0, 1.0) / lat.w[i];
    mul_vx_[i] = -lat.jy[i] * iw;
    mul_vy_[i] = lat.jx[i] * iw;
  }
  gvx_.resize(grid_.real_size());
  gvy_.resize(grid_.real_size());
  gchi_.resize(grid_.real_size());
  chi_.resize(n);
  scratch_.resize(n);
}

void FastNonlinearity::product_grids(const Field& omega) {
  const int n = lat_->n();
  for (int i = 0; i < n; ++i) chi_[i] = rho_[i] * omega[i];
  grid_.to_grid(chi_, gchi_.data());
  grid_.transform_multiplied(chi_, mul_vx_.data(), gvx_.data());
  grid_.transform_multiplied(chi_, mul_vy_.data(), gvy_.data());
  const size_t m = grid_.real_size();
  for (size_t q = 0; q < m; ++q) {
    gvx_[q] *= gchi_[q];
    gvy_[q] *= gchi_[q];
  }
}

void FastNonlinearity::apply(const Field& omega, Field& out) {
  product_grids(omega);
  const int n = lat_->n();
  out.assign(n, 0.0);
  grid_.from_grid(gvx_.data(), scratch_);
  for (int i = 0; i < n; ++i) out[i] = cplx(0.0, lat_->jx[i]) * scratch_[i];
  grid_.from_grid(gvy_.data(), scratch_);
  for (int i = 0; i < n; ++i) {
    out[i] += cplx(0.0, lat_->jy[i]) * scratch_[i];
    out[i] *= rho_[i];
  }
}

FastNonlinearity::TestGrids FastNonlinearity::make_test_grids(const Field& phi) {
  const int n = lat_->n();
  Field wmul(n);
  TestGrids tg;
  tg.wx.resize(grid_.real_size());
  tg.wy.resize(grid_.real_size());
  // W = -grad(rho phi), so <N[omega], phi> = quadrature of (v chi) . W
  for (int i = 0; i < n; ++i) wmul[i] = cplx(0.0, -lat_->jx[i]) * rho_[i] * phi[i];
  grid_.to_grid(wmul, tg.wx.data());
  for (int i = 0; i < n; ++i) wmul[i] = cplx(0.0, -lat_->jy[i]) * rho_[i] * phi[i];
  grid_.to_grid(wmul, tg.wy.data());
  return tg;
}

void FastNonlinearity::pair_with(const Field& omega, const std::vector<TestGrids>& tg,
                                 double* out) {
  product_grids(omega);
  const size_t m = grid_.real_size();
  const double quad = kTwoPi * lat_->M / grid_.G();
  const double scale = quad * quad;
  for (size_t p = 0; p < tg.size(); ++p) {
    double acc = 0.0;
    const double* wx = tg[p].wx.data();
    const double* wy = tg[p].wy.data();
    for (size_t q = 0; q < m; ++q) acc += gvx_[q] * wx[q] + gvy_[q] * wy[q];
    out[p] = acc * scale;
  }
}

}  // namespace vort
