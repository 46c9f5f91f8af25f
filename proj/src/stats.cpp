#include "vort/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vort/rng.hpp"

namespace vort {

double sample_mean(const std::vector<double>& xs) {
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

MomentReport moment_report(const std::vector<double>& xs, double sigma0_sq) {
  const auto n = static_cast<std::int64_t>(xs.size());
  if (n < 2) throw std::invalid_argument("moment_report: need at least 2 samples");
  MomentReport r;
  r.n = n;
  r.mean = sample_mean(xs);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = x - r.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  const double dn = static_cast<double>(n);
  r.var = m2 / (dn - 1.0);
  m2 /= dn;
  m3 /= dn;
  m4 /= dn;
  r.skew = m3 / std::pow(m2, 1.5);
  r.ex_kurt = m4 / (m2 * m2) - 3.0;

  r.z_mean = r.mean / std::sqrt(sigma0_sq / dn);
  r.z_var = (r.var / sigma0_sq - 1.0) / std::sqrt(2.0 / (dn - 1.0));
  r.z_skew = r.skew / std::sqrt(6.0 / dn);
  r.z_kurt = r.ex_kurt / std::sqrt(24.0 / dn);
  return r;
}

namespace {

double ols_slope(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<int>& pick, double* intercept) {
  const double n = static_cast<double>(pick.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (int i : pick) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  const double slope = (n * sxy - sx * sy) / denom;
  if (intercept) *intercept = (sy - slope * sx) / n;
  return slope;
}

}  // namespace

SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y,
                   int resamples, std::uint64_t seed) {
  if (x.size() != y.size() || x.size() < 4)
    throw std::invalid_argument("fit_slope: need at least 4 points");
  const int n = static_cast<int>(x.size());
  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;

  SlopeFit fit;
  fit.slope = ols_slope(x, y, all, &fit.intercept);

  GaussianStream g(seed, 0x626f6f74ULL);  // dedicated bootstrap stream
  std::vector<double> slopes;
  slopes.reserve(resamples);
  std::vector<int> pick(n);
  for (int r = 0; r < resamples; ++r) {
    double sx = 0.0, sxx = 0.0;
    do {  // degenerate resamples (all one point) carry no slope
      for (int i = 0; i < n; ++i) pick[i] = static_cast<int>(g.uniform_index(n));
      sx = sxx = 0.0;
      for (int i : pick) {
        sx += x[i];
        sxx += x[i] * x[i];
      }
    } while (n * sxx - sx * sx == 0.0);
    slopes.push_back(ols_slope(x, y, pick, nullptr));
  }
  std::sort(slopes.begin(), slopes.end());
  const auto lo = static_cast<size_t>(std::floor(0.025 * (resamples - 1)));
  const auto hi = static_cast<size_t>(std::ceil(0.975 * (resamples - 1)));
  fit.ci_half_width = 0.5 * (slopes[hi] - slopes[lo]);
  return fit;
}

}  // namespace vort
