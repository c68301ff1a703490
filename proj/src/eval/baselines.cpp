#include "mgcrnn/eval/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "mgcrnn/core/errors.hpp"
#include "mgcrnn/core/log.hpp"

namespace mgcrnn {

Matrix ha_forecast(const Matrix& history, std::size_t t, std::size_t period) {
  if (period == 0) throw ContractError("ha_forecast: period must be positive");
  if (t < period)
    throw ContractError("ha_forecast: slot " + std::to_string(t) + " has no earlier slot of the same phase (period " +
                        std::to_string(period) + ")");
  if (t > history.rows())
    throw ContractError("ha_forecast: slot " + std::to_string(t) + " beyond history of " +
                        std::to_string(history.rows()) + " rows");
  Matrix out(1, history.cols());
  std::size_t count = 0;
  for (std::size_t r = t % period; r < t; r += period) {
    for (std::size_t c = 0; c < history.cols(); ++c) out(0, c) += history(r, c);
    ++count;
  }
  out *= 1.0 / static_cast<double>(count);
  return out;
}

Matrix LassoModel::predict(const Matrix& x) const {
  if (x.cols() != features())
    throw DimensionError("lasso predict: input has " + std::to_string(x.cols()) + " features, model " +
                         std::to_string(features()));
  Matrix y = matmul(x, coef);
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t j = 0; j < outputs(); ++j) y(r, j) += intercept[j];
  return y;
}

namespace {

struct Centered {
  Matrix x;
  std::vector<double> x_mean;
  std::vector<double> y_mean;
};

Centered center(const Matrix& x, const Matrix& y) {
  Centered c{x, std::vector<double>(x.cols(), 0.0), std::vector<double>(y.cols(), 0.0)};
  const double n = static_cast<double>(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t a = 0; a < x.cols(); ++a) c.x_mean[a] += x(r, a) / n;
    for (std::size_t j = 0; j < y.cols(); ++j) c.y_mean[j] += y(r, j) / n;
  }
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t a = 0; a < x.cols(); ++a) c.x(r, a) -= c.x_mean[a];
  return c;
}

double soft(double z, double t) { return z > t ? z - t : (z < -t ? z + t : 0.0); }

void require_design(const Matrix& x, const Matrix& y) {
  if (x.rows() == 0) throw ContractError("lasso: no samples");
  if (x.rows() != y.rows())
    throw DimensionError("lasso: " + std::to_string(x.rows()) + " input rows vs " + std::to_string(y.rows()) +
                         " target rows");
  if (!all_finite(x) || !all_finite(y)) throw ContractError("lasso: non-finite design");
}

}  // namespace

double lasso_lambda_max(const Matrix& x, const Matrix& y) {
  require_design(x, y);
  const Centered c = center(x, y);
  const double n = static_cast<double>(x.rows());
  double best = 0.0;
  for (std::size_t j = 0; j < y.cols(); ++j)
    for (std::size_t a = 0; a < x.cols(); ++a) {
      double s = 0.0;
      for (std::size_t r = 0; r < x.rows(); ++r) s += c.x(r, a) * (y(r, j) - c.y_mean[j]);
      best = std::max(best, std::abs(s) / n);
    }
  return best;
}

LassoModel lasso_fit(const Matrix& x, const Matrix& y, const LassoOptions& options) {
  require_design(x, y);
  if (options.lambda < 0.0) throw ParameterError("lasso: lambda must be nonnegative");
  const std::size_t n = x.rows(), d = x.cols(), m = y.cols();
  const double nd = static_cast<double>(n);
  const Centered c = center(x, y);

  // Covariance form: G = XᵀX/n, q_j = Xᵀ(y_j − ȳ_j)/n, gradient kept as q − Gβ.
  Matrix gram = matmul_tn(c.x, c.x);
  gram *= 1.0 / nd;
  Matrix yc = y;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < m; ++j) yc(r, j) -= c.y_mean[j];
  Matrix q = matmul_tn(c.x, yc);
  q *= 1.0 / nd;

  LassoModel model;
  model.lambda = options.lambda;
  model.coef = Matrix(d, m);
  model.intercept.assign(m, 0.0);
  model.objective.resize(m);
  model.converged = true;
  const double lam = options.lambda;

  for (std::size_t j = 0; j < m; ++j) {
    double yy = 0.0;
    for (std::size_t r = 0; r < n; ++r) yy += yc(r, j) * yc(r, j);
    yy /= 2.0 * nd;
    std::vector<double> beta(d, 0.0), resid(d);  // resid = q − Gβ
    for (std::size_t a = 0; a < d; ++a) resid[a] = q(a, j);
    auto objective = [&] {
      // ½‖y − Xβ‖²/n = yy − βᵀq + ½βᵀGβ  and  Gβ = q − resid
      double fit = yy, l1 = 0.0;
      for (std::size_t a = 0; a < d; ++a) {
        fit += -beta[a] * q(a, j) + 0.5 * beta[a] * (q(a, j) - resid[a]);
        l1 += std::abs(beta[a]);
      }
      return fit + lam * l1;
    };
    model.objective[j].push_back(objective());
    bool done = false;
    std::size_t sweep = 0;
    while (sweep < options.max_sweeps && !done) {
      ++sweep;
      double biggest = 0.0;
      for (std::size_t a = 0; a < d; ++a) {
        const double g = gram(a, a);
        if (g <= 0.0) continue;
        const double next = soft(resid[a] + g * beta[a], lam) / g;
        const double delta = next - beta[a];
        if (delta == 0.0) continue;
        beta[a] = next;
        for (std::size_t b = 0; b < d; ++b) resid[b] -= gram(b, a) * delta;
        biggest = std::max(biggest, std::abs(delta));
      }
      model.objective[j].push_back(objective());
      done = biggest < options.tol;
    }
    model.sweeps = std::max(model.sweeps, sweep);
    if (!done) {
      model.converged = false;
      spdlog::warn("lasso: output {} did not converge in {} sweeps", j, options.max_sweeps);
    }
    double b0 = c.y_mean[j];
    for (std::size_t a = 0; a < d; ++a) {
      model.coef(a, j) = beta[a];
      b0 -= c.x_mean[a] * beta[a];
    }
    model.intercept[j] = b0;
  }
  return model;
}

void lasso_design(std::span<const SampleWindow> windows, Matrix& x, Matrix& y) {
  if (windows.empty()) throw ContractError("lasso_design: no windows");
  const std::size_t l = windows.front().inputs.rows(), cols = windows.front().inputs.cols();
  x = Matrix(windows.size(), l * cols);
  y = Matrix(windows.size(), cols);
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const auto& win = windows[w];
    if (win.inputs.rows() != l || win.inputs.cols() != cols)
      throw DimensionError("lasso_design: window at anchor " + std::to_string(win.anchor) + " has inputs " +
                           win.inputs.shape_string());
    std::copy(win.inputs.values().begin(), win.inputs.values().end(), x.row(w).begin());
    const auto t = win.targets.row(0);
    std::copy(t.begin(), t.end(), y.row(w).begin());
  }
}

LassoModel lasso_fit(std::span<const SampleWindow> windows, const LassoOptions& options) {
  Matrix x, y;
  lasso_design(windows, x, y);
  return lasso_fit(x, y, options);
}

Matrix lasso_recursive_forecast(const LassoModel& model, const Matrix& inputs, std::size_t p) {
  const std::size_t cols = inputs.cols();
  if (inputs.size() != model.features() || cols != model.outputs())
    throw DimensionError("lasso_recursive_forecast: window " + inputs.shape_string() + " for a model with " +
                         std::to_string(model.features()) + " features and " + std::to_string(model.outputs()) +
                         " outputs");
  Matrix window = inputs;
  Matrix out(p, cols);
  for (std::size_t k = 0; k < p; ++k) {
    const Matrix flat(1, window.size(), std::vector<double>(window.values().begin(), window.values().end()));
    const Matrix next = model.predict(flat);
    std::copy(next.values().begin(), next.values().end(), out.row(k).begin());
    for (std::size_t r = 0; r + 1 < window.rows(); ++r)
      for (std::size_t c = 0; c < cols; ++c) window(r, c) = window(r + 1, c);
    for (std::size_t c = 0; c < cols; ++c) window(window.rows() - 1, c) = next(0, c);
  }
  return out;
}

}  // namespace mgcrnn
