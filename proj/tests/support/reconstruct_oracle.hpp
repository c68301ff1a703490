#pragma once

// Plain projected-gradient solver for the nonnegative sparse reconstruction
// program, written independently of the library solver: its step size comes
// from the Frobenius-norm bound on the curvature (never smaller than the
// Lipschitz constant), no backtracking, objective computed entrywise.

#include <cmath>

#include "mgcrnn/core/matrix.hpp"

namespace mgcrnn::oracle {

inline double objective_entrywise(const Matrix& x, const Matrix& lap, const Matrix& w, double rho1,
                                  double rho2) {
  const std::size_t p = x.rows(), n = x.cols();
  Matrix xw(p, n);
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += x(a, k) * w(k, j);
      xw(a, j) = s;
    }
  double fit = 0.0, l1 = 0.0, smooth = 0.0;
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t j = 0; j < n; ++j) fit += (xw(a, j) - x(a, j)) * (xw(a, j) - x(a, j));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) l1 += std::abs(w(i, j));
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < p; ++b) smooth += xw(a, j) * lap(a, b) * xw(b, j);
  return fit + rho1 * l1 + rho2 * smooth;
}

struct OracleSolution {
  Matrix w;
  double objective = 0.0;
  long iterations = 0;
};

inline OracleSolution projected_gradient_oracle(const Matrix& x, const Matrix& lap, double rho1,
                                                double rho2, double tol = 1e-10,
                                                long max_iter = 2'000'000) {
  const std::size_t p = x.rows(), n = x.cols();
  // A = XᵀX + ρ₂ XᵀLX, built with explicit loops.
  Matrix gram(n, n), a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double g = 0.0, s = 0.0;
      for (std::size_t r = 0; r < p; ++r) {
        g += x(r, i) * x(r, j);
        for (std::size_t q = 0; q < p; ++q) s += x(r, i) * lap(r, q) * x(q, j);
      }
      gram(i, j) = g;
      a(i, j) = g + rho2 * s;
    }
  double fro = 0.0;
  for (double v : a.values()) fro += v * v;
  const double step = 1.0 / (2.0 * std::sqrt(fro));

  OracleSolution sol{Matrix(n, n), 0.0, 0};
  double obj = objective_entrywise(x, lap, sol.w, rho1, rho2);
  for (long it = 0; it < max_iter; ++it) {
    Matrix next(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        double g = -2.0 * gram(i, j);
        for (std::size_t k = 0; k < n; ++k) g += 2.0 * a(i, k) * sol.w(k, j);
        const double v = sol.w(i, j) - step * (g + rho1);
        next(i, j) = v > 0.0 ? v : 0.0;
      }
    const double next_obj = objective_entrywise(x, lap, next, rho1, rho2);
    sol.w = next;
    sol.iterations = it + 1;
    const double change = std::abs(obj - next_obj);
    obj = next_obj;
    if (change <= tol * std::max(std::abs(obj), 1e-300)) break;
  }
  sol.objective = obj;
  return sol;
}

}  // namespace mgcrnn::oracle
