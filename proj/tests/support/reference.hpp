#pragma once

// Independent reference computations used only by tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "clipvrg/linalg.hpp"
#include "clipvrg/problems.hpp"

namespace reference {

using clipvrg::DenseMatrix;
using clipvrg::Vec;

// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
inline Vec jacobi_eigenvalues(DenseMatrix a, double tol = 1e-15, int max_sweeps = 100) {
  const std::size_t n = a.rows();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) < tol) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  Vec ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end(), [](double x, double y) { return x > y; });
  return ev;
}

// |lambda_2| of a symmetric doubly stochastic matrix: the largest magnitude
// once one eigenvalue equal to 1 is removed.
inline double second_eigenvalue_magnitude(const DenseMatrix& w) {
  Vec ev = jacobi_eigenvalues(w);
  ev.erase(ev.begin());  // the eigenvalue 1 is the largest
  double m = 0.0;
  for (double e : ev) m = std::max(m, std::abs(e));
  return m;
}

// Solves a x = b by Gaussian elimination with partial pivoting.
inline Vec solve(DenseMatrix a, Vec b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    for (std::size_t k = 0; k < n; ++k) std::swap(a(c, k), a(piv, k));
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a(r, c) / a(c, c);
      for (std::size_t k = c; k < n; ++k) a(r, k) -= f * a(c, k);
      b[r] -= f * b[c];
    }
  }
  Vec x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a(i, k) * x[k];
    x[i] = s / a(i, i);
  }
  return x;
}

// Damped Newton on the regularized logistic loss with backtracking.
inline Vec newton_logistic(const clipvrg::LogisticProblem& p, double tol = 1e-13) {
  const std::size_t d = p.dimension(), m = p.data.size();
  Vec x(d, 0.0), g(d);
  for (int it = 0; it < 200; ++it) {
    p.full_gradient_into(x, g);
    if (clipvrg::norm2(g) < tol) return x;
    DenseMatrix h(d, d);
    for (std::size_t r = 0; r < m; ++r) {
      const auto th = p.data.features.row(r);
      const double z = p.data.labels[r] * clipvrg::dot(x, th);
      const double s = 1.0 / (1.0 + std::exp(-z));
      const double w = s * (1.0 - s) / static_cast<double>(m);
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) h(a, b) += w * th[a] * th[b];
    }
    for (std::size_t a = 0; a < d; ++a) h(a, a) += p.lambda;
    Vec step = solve(h, g);
    double t = 1.0;
    const double f0 = p.objective(x);
    Vec trial(d);
    for (;;) {
      for (std::size_t k = 0; k < d; ++k) trial[k] = x[k] - t * step[k];
      if (p.objective(trial) <= f0 - 0.25 * t * clipvrg::dot(g, step) || t < 1e-10) break;
      t *= 0.5;
    }
    x = trial;
  }
  throw std::runtime_error("newton did not converge");
}

}  // namespace reference
