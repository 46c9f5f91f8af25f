#include "vort/fftgrid.hpp"

#include <cmath>
#include <cstring>
#include <mutex>
#include <stdexcept>

namespace {

bool five_smooth(int g) {
  while (g % 2 == 0) g /= 2;
  while (g % 3 == 0) g /= 3;
  while (g % 5 == 0) g /= 5;
  return g == 1;
}

// FFTW planning mutates global state; execution is thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

namespace vort {

int choose_grid_size(int A) {
  int g = 3 * A + 2;
  while (g % 2 != 0 || !five_smooth(g)) ++g;
  return g;
}

SpectralGrid::SpectralGrid(const Lattice& lat, int radius)
    : lat_(&lat),
      rad_(radius > 0 ? std::min(radius, lat.A) : lat.A),
      G_(choose_grid_size(rad_)),
      spec_(static_cast<size_t>(G_) * (G_ / 2 + 1)),
      real_(static_cast<size_t>(G_) * G_) {
  std::lock_guard<std::mutex> lock(planner_mutex());
  plan_c2r_ = fftw_plan_dft_c2r_2d(G_, G_, spec_.p, real_.p, FFTW_ESTIMATE);
  plan_r2c_ = fftw_plan_dft_r2c_2d(G_, G_, real_.p, spec_.p, FFTW_ESTIMATE);
  if (!plan_c2r_ || !plan_r2c_) throw std::runtime_error("fftgrid: planning failed");
}

SpectralGrid::~SpectralGrid() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(plan_c2r_);
  fftw_destroy_plan(plan_r2c_);
}

void SpectralGrid::pack(const Field& f, const cplx* multiplier) {
  std::memset(spec_.p, 0, sizeof(fftw_complex) * spec_size());
  const int half = G_ / 2 + 1;
  const double scale = 1.0 / (kTwoPi * lat_->M * lat_->M);
  const int n = lat_->n();
  for (int i = 0; i < n; ++i) {
    const int px = lat_->num[i][0];
    const int py = lat_->num[i][1];
    if (py < 0 || px > rad_ || px < -rad_ || py > rad_) continue;
    cplx v = f[i] * scale;
    if (multiplier) v *= multiplier[i];
    const int gx = px >= 0 ? px : px + G_;
    spec_[static_cast<size_t>(gx) * half + py][0] = v.real();
    spec_[static_cast<size_t>(gx) * half + py][1] = v.imag();
  }
}

void SpectralGrid::to_grid(const Field& f, double* grid) {
  transform_multiplied(f, nullptr, grid);
}

void SpectralGrid::transform_multiplied(const Field& f, const cplx* multiplier,
                                        double* grid) {
  pack(f, multiplier);
  fftw_execute(plan_c2r_);
  std::memcpy(grid, real_.p, sizeof(double) * real_size());
}

void SpectralGrid::from_grid(const double* grid, Field& f) {
  std::memcpy(real_.p, grid, sizeof(double) * real_size());
  fftw_execute(plan_r2c_);
  const int half = G_ / 2 + 1;
  const double scale = kTwoPi * lat_->M * lat_->M / (static_cast<double>(G_) * G_);
  const int n = lat_->n();
  f.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const int px = lat_->num[i][0];
    const int py = lat_->num[i][1];
    if (py < 0 || px > rad_ || px < -rad_ || py > rad_) continue;
    const int gx = px >= 0 ? px : px + G_;
    const size_t q = static_cast<size_t>(gx) * half + py;
    f[i] = cplx(spec_[q][0], spec_[q][1]) * scale;
  }
  for (int i = 0; i < n; ++i) {
    if (lat_->num[i][1] < 0) f[i] = std::conj(f[lat_->conj_index[i]]);
  }
}

}  // namespace vort
