#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "clipvrg/error.hpp"
#include "clipvrg/linalg.hpp"
#include "clipvrg/problems.hpp"

namespace clipvrg {

struct Conditioning {
  double mu = 0.0;
  double L = 0.0;
  double kappa = 0.0;
};

// Gradient descent x <- x - alpha grad(x) with alpha = 2 / (L + mu), which
// contracts ||x - x*|| by (1 - alpha mu) per step on a mu-strongly convex,
// L-smooth objective. Stops once ||grad|| <= tol.
template <class Gradient>
Vec gradient_descent_minimize(Gradient&& grad, Vec x, double mu, double L, double tol,
                              std::size_t max_iterations = 1'000'000) {
  require(mu > 0.0 && L >= mu, Errc::invalid_argument, "need 0 < mu <= L");
  const double alpha = 2.0 / (L + mu);
  Vec g(x.size());
  for (std::size_t it = 0; it <= max_iterations; ++it) {
    grad(std::span<const double>(x), std::span<double>(g));
    if (!all_finite(g)) fail(Errc::numerical_failure, "gradient became non-finite");
    if (norm2(g) <= tol) return x;
    axpy(-alpha, g, x);
  }
  fail(Errc::numerical_failure, "gradient descent did not reach tolerance within the iteration cap");
}

// Largest eigenvalue of a symmetric positive semidefinite matrix.
inline double top_eigenvalue_psd(const DenseMatrix& a, double rel_tol = 1e-12,
                                 std::size_t max_iterations = 100'000) {
  const std::size_t n = a.rows();
  Vec x(n);
  std::mt19937_64 rng(0xe19e);
  std::normal_distribution<double> gauss;
  for (double& v : x) v = gauss(rng);
  double nx = norm2(x);
  for (double& v : x) v /= nx;
  double lambda = 0.0;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    Vec y = multiply(a, x);
    const double next = dot(x, y);
    const double ny = norm2(y);
    if (ny < 1e-300) return 0.0;
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ny;
    if (it > 0 && std::abs(next - lambda) <= rel_tol * std::abs(next)) return next;
    lambda = next;
  }
  fail(Errc::numerical_failure, "power iteration did not converge");
}

// The aggregated Hessian (2/|N|) sum H_i^T H_i is diagonal with entries
// 2 * coverage_k / |N|.
inline Conditioning condition_number(const LinearMeasurementProblem& p,
                                     std::span<const std::size_t> honest) {
  require(!honest.empty(), Errc::invalid_argument, "no unattacked agents");
  std::vector<std::size_t> coverage(p.dimension(), 0);
  for (std::size_t i : honest)
    for (std::size_t k : p.measured[i]) ++coverage[k];
  const auto [lo, hi] = std::minmax_element(coverage.begin(), coverage.end());
  const double scale = 2.0 / static_cast<double>(honest.size());
  Conditioning c{scale * static_cast<double>(*lo), scale * static_cast<double>(*hi), 0.0};
  require(c.mu > 0.0, Errc::not_strongly_convex,
          "some coordinate is not measured by any unattacked agent");
  c.kappa = c.L / c.mu;
  return c;
}

// mu is the regularizer (a lower bound), L = lambda + lambda_max((1/4m) sum theta theta^T),
// so kappa is conservative.
inline Conditioning condition_number(const LogisticProblem& p, std::span<const std::size_t> = {}) {
  require(p.lambda > 0.0, Errc::not_strongly_convex, "lambda = 0 gives no strong convexity");
  const std::size_t d = p.dimension();
  DenseMatrix second(d, d);
  for (std::size_t r = 0; r < p.data.size(); ++r) {
    const auto th = p.data.features.row(r);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) second(a, b) += th[a] * th[b];
  }
  const double scale = 1.0 / (4.0 * static_cast<double>(p.data.size()));
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) second(a, b) *= scale;
  Conditioning c{p.lambda, p.lambda + top_eigenvalue_psd(second), 0.0};
  c.kappa = c.L / c.mu;
  return c;
}

inline Vec solve_minimizer(const LinearMeasurementProblem& p, std::span<const std::size_t> honest,
                           double tol) {
  const Conditioning c = condition_number(p, honest);
  return gradient_descent_minimize(
      [&](std::span<const double> x, std::span<double> g) {
        const Vec tg = true_gradient(p, honest, x);
        std::copy(tg.begin(), tg.end(), g.begin());
      },
      Vec(p.dimension(), 0.0), c.mu, c.L, tol);
}

inline Vec solve_minimizer(const LogisticProblem& p, std::span<const std::size_t> honest, double tol) {
  const Conditioning c = condition_number(p, honest);
  return gradient_descent_minimize(
      [&](std::span<const double> x, std::span<double> g) { p.full_gradient_into(x, g); },
      Vec(p.dimension(), 0.0), c.mu, c.L, tol);
}

// Largest attack fraction tolerated: rho < 1 / (1 + kappa).
inline double feasible_rho(double kappa) {
  require(kappa >= 1.0, Errc::invalid_argument, "condition number must be >= 1");
  return 1.0 / (1.0 + kappa);
}

inline bool check_attack_fraction(double rho, double kappa) { return rho < feasible_rho(kappa); }

// Largest b with b / n < 1 / (1 + kappa).
inline std::size_t max_attacked_count(std::size_t n, double kappa) {
  const double bound = static_cast<double>(n) * feasible_rho(kappa);
  std::size_t b = static_cast<std::size_t>(std::ceil(bound));
  while (b > 0 && !(static_cast<double>(b) < bound)) --b;
  return b;
}

}  // namespace clipvrg
