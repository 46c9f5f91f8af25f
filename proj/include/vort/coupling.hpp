#pragma once

namespace vort {

/* Coupling strength under the regularisation sweep:
 *   theta = 1:  lambda_N = lambda_hat / sqrt(log N)
 *   theta < 1:  lambda_N = lambda_hat * N^{2 theta - 2}
 * (natural logarithm; N > 1 required when theta = 1).
 *
 * fixed_lambda is a negative-control fault: lambda() returns lambda_hat
 * with no N dependence, which must break every scaling verdict.
 */
struct CouplingSpec {
  double theta = 1.0;
  double lambda_hat = 1.0;
  double N = 8.0;
  bool fixed_lambda = false;

  double lambda() const;
};

}  // namespace vort
