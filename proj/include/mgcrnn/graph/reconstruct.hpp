#pragma once

#include <cstddef>
#include <vector>

#include "mgcrnn/core/matrix.hpp"

namespace mgcrnn::graph {

/// Laplacian over feature rows of X (P×N): RBF similarity of z-scored rows
/// with bandwidth τ = median pairwise row distance, L = diag(S·1) − S.
/// Zero-variance rows z-score to zeros (a warning is logged).
Matrix feature_laplacian(const Matrix& x);

struct ReconstructOptions {
  double rho1 = 0.1;
  double rho2 = 0.01;
  double tol = 1e-6;
  int max_iter = 5000;
};

struct ReconstructResult {
  Matrix weights;                 // N×N, nonnegative, zero diagonal
  bool converged = false;
  int iterations = 0;
  std::vector<double> objective;  // objective of every accepted iterate, starting at W = 0
};

/// ‖XW − X‖²_F + ρ₁‖W‖₁ + ρ₂ Tr(WᵀXᵀLXW).
double reconstruction_objective(const Matrix& x, const Matrix& laplacian, const Matrix& w,
                                double rho1, double rho2);

/// Minimizes reconstruction_objective subject to W ≥ 0 and diag(W) = 0 by
/// projected proximal gradient with step 1/Lip. Lip is the power-iteration
/// estimate of the largest eigenvalue of 2XᵀX + 2ρ₂XᵀLX; when an iterate would
/// raise the objective the step is halved and the iterate retried, so the
/// accepted sequence is nonincreasing. Stops when the relative objective
/// change falls below tol; otherwise returns with converged = false.
ReconstructResult sparse_reconstruct(const Matrix& x, const Matrix& laplacian,
                                     const ReconstructOptions& options = {});

/// Min-max scales every feature row of X to [0, 1] across stations
/// (constant rows become zeros).
Matrix normalize_feature_rows(const Matrix& x);

/// (W + Wᵀ) / 2.
Matrix symmetrize(const Matrix& w);

}  // namespace mgcrnn::graph
