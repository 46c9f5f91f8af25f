#pragma once

#include <cstdint>
#include <vector>

namespace vort {

/* Sample moments and their standardised deviations from a reference
 * Gaussian N(0, sigma0^2). The z-scores use the null sampling variances
 *   mean:     sigma0^2 / n
 *   variance: 2 sigma0^4 / (n - 1)
 *   skewness: 6 / n
 *   ex.kurt:  24 / n
 * so |z| <= 4 is the acceptance window at these ensemble sizes.
 */
struct MomentReport {
  std::int64_t n = 0;
  double mean = 0.0;
  double var = 0.0;       // unbiased
  double skew = 0.0;
  double ex_kurt = 0.0;
  double z_mean = 0.0;
  double z_var = 0.0;
  double z_skew = 0.0;
  double z_kurt = 0.0;
};

MomentReport moment_report(const std::vector<double>& xs, double sigma0_sq);

double sample_mean(const std::vector<double>& xs);

/* Least-squares slope of y against x with a bootstrap confidence band:
 * `resamples` draws with replacement (deterministic, seeded), half-width =
 * half the central 95% spread of the resampled slopes.
 */
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci_half_width = 0.0;
};

SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y,
                   int resamples = 200, std::uint64_t seed = 0);

}  // namespace vort
