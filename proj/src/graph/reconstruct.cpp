#include "mgcrnn/graph/reconstruct.hpp"

#include <algorithm>
#include <cmath>

#include "mgcrnn/core/errors.hpp"
#include "mgcrnn/core/log.hpp"

namespace mgcrnn::graph {

Matrix feature_laplacian(const Matrix& x) {
  const std::size_t p = x.rows(), n = x.cols();
  if (p == 0) throw ContractError("feature_laplacian: feature matrix has no rows");

  Matrix z(p, n);
  for (std::size_t a = 0; a < p; ++a) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x(a, i);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (x(a, i) - mean) * (x(a, i) - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    if (sd == 0.0) {
      spdlog::warn("feature_laplacian: feature row {} has zero variance; z-scored to zeros", a);
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) z(a, i) = (x(a, i) - mean) / sd;
  }

  Matrix dist(p, p);
  std::vector<double> pairwise;
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = a + 1; b < p; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += (z(a, i) - z(b, i)) * (z(a, i) - z(b, i));
      dist(a, b) = dist(b, a) = std::sqrt(s);
      pairwise.push_back(dist(a, b));
    }

  double tau = 0.0;
  if (!pairwise.empty()) {
    std::sort(pairwise.begin(), pairwise.end());
    const std::size_t m = pairwise.size();
    tau = m % 2 == 1 ? pairwise[m / 2] : 0.5 * (pairwise[m / 2 - 1] + pairwise[m / 2]);
  }

  Matrix sim(p, p);
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b) {
      const double d = dist(a, b);
      if (tau > 0.0) {
        sim(a, b) = std::exp(-(d * d) / (2.0 * tau * tau));
      } else {
        // Degenerate bandwidth: only identical rows are similar.
        sim(a, b) = d == 0.0 ? 1.0 : 0.0;
      }
    }

  Matrix lap(p, p);
  for (std::size_t a = 0; a < p; ++a) {
    double deg = 0.0;
    for (std::size_t b = 0; b < p; ++b) deg += sim(a, b);
    for (std::size_t b = 0; b < p; ++b) lap(a, b) = -sim(a, b);
    lap(a, a) += deg;
  }
  return lap;
}

double reconstruction_objective(const Matrix& x, const Matrix& laplacian, const Matrix& w,
                                double rho1, double rho2) {
  Matrix xw = matmul(x, w);
  Matrix resid = xw - x;
  double fit = 0.0;
  for (double v : resid.values()) fit += v * v;
  double l1 = 0.0;
  for (double v : w.values()) l1 += std::abs(v);
  double smooth = 0.0;
  if (rho2 != 0.0) {
    // Tr((XW)ᵀ L (XW))
    Matrix lxw = matmul(laplacian, xw);
    for (std::size_t i = 0; i < xw.size(); ++i) smooth += xw.values()[i] * lxw.values()[i];
  }
  return fit + rho1 * l1 + rho2 * smooth;
}

namespace {

double largest_eigenvalue_psd(const Matrix& h) {
  const std::size_t n = h.rows();
  Matrix v(n, 1, 1.0 / std::sqrt(static_cast<double>(n)));
  double lambda = 0.0;
  for (int it = 0; it < 500; ++it) {
    Matrix w = matmul(h, v);
    const double norm = frobenius_norm(w);
    if (norm == 0.0) return 0.0;
    const double next = norm;
    v = w * (1.0 / norm);
    if (it > 10 && std::abs(next - lambda) <= 1e-12 * next) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return lambda;
}

}  // namespace

ReconstructResult sparse_reconstruct(const Matrix& x, const Matrix& laplacian,
                                     const ReconstructOptions& opt) {
  if (opt.rho1 < 0.0 || opt.rho2 < 0.0)
    throw ParameterError("sparse_reconstruct: rho1 and rho2 must be nonnegative");
  if (!all_finite(x)) throw ContractError("sparse_reconstruct: feature matrix is not finite");
  if (laplacian.rows() != x.rows() || laplacian.cols() != x.rows())
    throw DimensionError("sparse_reconstruct: Laplacian is " + laplacian.shape_string() +
                         ", expected " + std::to_string(x.rows()) + "x" + std::to_string(x.rows()));

  const std::size_t n = x.cols();
  const Matrix gram = matmul_tn(x, x);                      // XᵀX
  Matrix curv = gram;                                       // XᵀX + ρ₂XᵀLX
  if (opt.rho2 != 0.0) curv += matmul_tn(x, matmul(laplacian, x)) * opt.rho2;

  double lip = 2.0 * largest_eigenvalue_psd(curv) * 1.01;
  ReconstructResult res;
  res.weights = Matrix(n, n);
  double obj = reconstruction_objective(x, laplacian, res.weights, opt.rho1, opt.rho2);
  res.objective.push_back(obj);
  if (!(lip > 0.0)) {
    res.converged = true;
    return res;
  }

  Matrix& w = res.weights;
  for (int it = 0; it < opt.max_iter; ++it) {
    // ∇ = 2(XᵀX + ρ₂XᵀLX)W − 2XᵀX
    Matrix grad = matmul(curv, w);
    grad -= gram;
    grad *= 2.0;

    Matrix cand(n, n);
    double cand_obj = 0.0;
    for (int attempt = 0; attempt < 60; ++attempt) {
      const double step = 1.0 / lip;
      const double thresh = opt.rho1 * step;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double v = w(i, j) - step * grad(i, j) - thresh;
          cand(i, j) = (i == j || v <= 0.0) ? 0.0 : v;
        }
      cand_obj = reconstruction_objective(x, laplacian, cand, opt.rho1, opt.rho2);
      if (cand_obj <= obj) break;
      lip *= 2.0;
    }
    res.iterations = it + 1;
    if (cand_obj > obj) {
      // No descent at any tried step: W is stationary to working precision.
      res.converged = true;
      break;
    }
    w = std::move(cand);
    const double change = obj - cand_obj;
    obj = cand_obj;
    res.objective.push_back(obj);
    if (change <= opt.tol * std::max(std::abs(obj), 1e-300)) {
      res.converged = true;
      break;
    }
  }
  return res;
}

Matrix normalize_feature_rows(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t a = 0; a < x.rows(); ++a) {
    auto r = x.row(a);
    const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
    const double span = *hi - *lo;
    if (span == 0.0) continue;
    for (std::size_t i = 0; i < x.cols(); ++i) out(a, i) = (x(a, i) - *lo) / span;
  }
  return out;
}

Matrix symmetrize(const Matrix& w) {
  if (w.rows() != w.cols()) throw DimensionError("symmetrize: non-square " + w.shape_string());
  Matrix s(w.rows(), w.cols());
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) s(i, j) = 0.5 * (w(i, j) + w(j, i));
  return s;
}

}  // namespace mgcrnn::graph
