#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mgcrnn/core/matrix.hpp"
#include "mgcrnn/data/pipeline.hpp"

namespace mgcrnn {

/// Historical average for row t of history: the mean of every earlier row
/// congruent to t modulo period, per column. Returns 1×cols. Throws
/// ContractError when t < period (no earlier row of the same phase).
Matrix ha_forecast(const Matrix& history, std::size_t t, std::size_t period = kSeasonLag);

struct LassoOptions {
  double lambda = 1e-4;
  double tol = 1e-6;        // largest coefficient change in a sweep
  std::size_t max_sweeps = 20000;
};

/// Multi-output LASSO: one independent ℓ₁ regression per output column of
/// (1/2n)‖y − b − Xβ‖² + λ‖β‖₁, intercept unpenalized.
struct LassoModel {
  Matrix coef;                    // features × outputs
  std::vector<double> intercept;  // per output
  double lambda = 0.0;
  bool converged = false;
  std::size_t sweeps = 0;                       // most sweeps any output needed
  std::vector<std::vector<double>> objective;   // per output, after every sweep, starting at β = 0

  [[nodiscard]] std::size_t features() const { return coef.rows(); }
  [[nodiscard]] std::size_t outputs() const { return coef.cols(); }
  /// x is 1×features (or rows×features); returns rows×outputs.
  [[nodiscard]] Matrix predict(const Matrix& x) const;
};

/// Cyclic coordinate descent with soft-thresholding on centered data.
/// Not converging within max_sweeps leaves converged = false (and warns).
LassoModel lasso_fit(const Matrix& x, const Matrix& y, const LassoOptions& options = {});
/// Smallest λ at which every coefficient is zero: max |x_aᵀ(y_j − ȳ_j)| / n on centered x.
double lasso_lambda_max(const Matrix& x, const Matrix& y);

/// Design matrix from windows: row w is window w's l inputs flattened step by
/// step; the target is the window's first target step.
void lasso_design(std::span<const SampleWindow> windows, Matrix& x, Matrix& y);
LassoModel lasso_fit(std::span<const SampleWindow> windows, const LassoOptions& options = {});

/// p×outputs recursive forecast: step k+1 feeds on the input window shifted
/// by one with step k's prediction appended as the newest slot.
Matrix lasso_recursive_forecast(const LassoModel& model, const Matrix& inputs, std::size_t p);

}  // namespace mgcrnn
