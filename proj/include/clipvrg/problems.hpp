#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "clipvrg/error.hpp"
#include "clipvrg/linalg.hpp"
#include "clipvrg/random.hpp"

namespace clipvrg {

// What an oracle returned to one agent in one round.
struct GradientSample {
  Vec m;
  std::size_t agent = 0;
  std::size_t round = 0;
};

// Anything the engine can query for stochastic gradients. `local_gradient_into`
// is the exact gradient of the agent's own objective, used only by metrics.
template <class P>
concept GradientOracle = requires(const P& p, std::size_t i, std::span<const double> x, Rng& rng,
                                  std::span<double> out) {
  { p.dimension() } -> std::convertible_to<std::size_t>;
  p.sample_into(i, x, rng, out);
  p.local_gradient_into(i, x, out);
};

// ---------------------------------------------------------------------------
// Linear measurements y_i = H_i theta* + w_i where every row of H_i picks one
// coordinate. Per-agent loss E ||H_i x - y_i||^2.

struct LinearMeasurementProblem {
  Vec theta_star;
  std::vector<std::vector<std::size_t>> measured;  // coordinates observed by each agent
  double noise_std = 0.0;

  std::size_t dimension() const { return theta_star.size(); }
  std::size_t agents() const { return measured.size(); }

  void sample_into(std::size_t i, std::span<const double> x, Rng& rng, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t k : measured[i]) {
      const double y = theta_star[k] + (noise_std > 0.0 ? noise_std * noise(rng) : 0.0);
      out[k] += 2.0 * (x[k] - y);
    }
  }

  void local_gradient_into(std::size_t i, std::span<const double> x, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t k : measured[i]) out[k] += 2.0 * (x[k] - theta_star[k]);
  }

  // ||H_i (x - theta*)||^2 + rows(H_i) * noise_std^2
  double local_objective(std::size_t i, std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t k : measured[i]) {
      const double r = x[k] - theta_star[k];
      s += r * r;
    }
    return s + static_cast<double>(measured[i].size()) * noise_std * noise_std;
  }
};

inline LinearMeasurementProblem make_linear_problem(Vec theta_star,
                                                    std::vector<std::vector<std::size_t>> measured,
                                                    double noise_std) {
  require(!theta_star.empty(), Errc::invalid_argument, "theta* must be nonempty");
  require(noise_std >= 0.0, Errc::invalid_argument, "noise_std must be nonnegative");
  std::vector<char> covered(theta_star.size(), 0);
  for (const auto& rows : measured)
    for (std::size_t k : rows) {
      require(k < theta_star.size(), Errc::invalid_argument, "measured coordinate out of range");
      covered[k] = 1;
    }
  require(std::all_of(covered.begin(), covered.end(), [](char c) { return c != 0; }),
          Errc::invalid_argument, "measurements do not cover every coordinate");
  return {std::move(theta_star), std::move(measured), noise_std};
}

// Agent i measures every lattice site within `sensing_radius` of its own site.
inline LinearMeasurementProblem make_grid_measurement_problem(std::size_t rows, std::size_t cols,
                                                              double sensing_radius, Vec theta_star,
                                                              double noise_std) {
  const std::size_t n = rows * cols;
  require(theta_star.size() == n, Errc::invalid_argument, "theta* must have one entry per site");
  const double r2 = sensing_radius * sensing_radius * (1.0 + 1e-12);
  std::vector<std::vector<std::size_t>> measured(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ri = static_cast<double>(i / cols), ci = static_cast<double>(i % cols);
    for (std::size_t k = 0; k < n; ++k) {
      const double dr = ri - static_cast<double>(k / cols);
      const double dc = ci - static_cast<double>(k % cols);
      if (dr * dr + dc * dc <= r2) measured[i].push_back(k);
    }
  }
  return make_linear_problem(std::move(theta_star), std::move(measured), noise_std);
}

inline Vec sample_uniform_box(std::size_t d, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(d);
  for (double& a : v) a = u(rng);
  return v;
}

inline GradientSample linear_oracle_sample(const LinearMeasurementProblem& p, std::size_t i,
                                           std::span<const double> x, Rng& rng,
                                           std::size_t round = 0) {
  require(x.size() == p.dimension(), Errc::invalid_argument, "x has the wrong dimension");
  require(i < p.agents(), Errc::invalid_argument, "agent index out of range");
  GradientSample s{Vec(p.dimension()), i, round};
  p.sample_into(i, x, rng, s.m);
  return s;
}

// ---------------------------------------------------------------------------
// Regularized logistic regression, every agent holding the same training set.

struct LabeledData {
  DenseMatrix features;  // one point per row
  Vec labels;            // +1 / -1

  std::size_t size() const { return labels.size(); }
  std::size_t dimension() const { return features.cols(); }
};

namespace detail {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z))
inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

}  // namespace detail

struct LogisticProblem {
  LabeledData data;
  double lambda = 0.0;
  std::size_t batch_size = 1;

  std::size_t dimension() const { return data.dimension(); }

  // (1/|batch|) sum -xi theta sigmoid(-xi x^T theta) + lambda x over the given rows.
  template <class Indices>
  void batch_gradient_into(const Indices& rows, std::size_t count, std::span<const double> x,
                           std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t r : rows) {
      const auto theta = data.features.row(r);
      const double xi = data.labels[r];
      const double coef = -xi * detail::sigmoid(-xi * dot(x, theta));
      axpy(coef, theta, out);
    }
    const double inv = 1.0 / static_cast<double>(count);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = out[k] * inv + lambda * x[k];
  }

  void full_gradient_into(std::span<const double> x, std::span<double> out) const {
    struct Range {
      std::size_t n;
      struct It {
        std::size_t v;
        std::size_t operator*() const { return v; }
        It& operator++() { ++v; return *this; }
        bool operator!=(const It& o) const { return v != o.v; }
      };
      It begin() const { return {0}; }
      It end() const { return {n}; }
    };
    batch_gradient_into(Range{data.size()}, data.size(), x, out);
  }

  void sample_into(std::size_t, std::span<const double> x, Rng& rng, std::span<double> out) const {
    const std::size_t m = data.size();
    if (batch_size >= m) {
      full_gradient_into(x, out);
      return;
    }
    // Floyd's algorithm: uniform subset of size batch_size without replacement.
    std::vector<std::size_t> picked;
    picked.reserve(batch_size);
    for (std::size_t j = m - batch_size; j < m; ++j) {
      std::uniform_int_distribution<std::size_t> u(0, j);
      const std::size_t t = u(rng);
      if (std::find(picked.begin(), picked.end(), t) == picked.end())
        picked.push_back(t);
      else
        picked.push_back(j);
    }
    batch_gradient_into(picked, batch_size, x, out);
  }

  void local_gradient_into(std::size_t, std::span<const double> x, std::span<double> out) const {
    full_gradient_into(x, out);
  }

  double objective(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t r = 0; r < data.size(); ++r)
      s += detail::softplus(-data.labels[r] * dot(x, data.features.row(r)));
    return s / static_cast<double>(data.size()) + 0.5 * lambda * dot(x, x);
  }
};

inline LogisticProblem make_logistic_problem(LabeledData data, double lambda,
                                             std::size_t batch_size = 1) {
  require(data.size() > 0, Errc::invalid_argument, "dataset is empty");
  require(data.features.rows() == data.size(), Errc::invalid_argument,
          "feature rows and labels disagree");
  require(lambda >= 0.0, Errc::invalid_argument, "lambda must be nonnegative");
  require(batch_size > 0 && batch_size <= data.size(), Errc::invalid_argument,
          "batch size must lie in [1, m]");
  for (double l : data.labels)
    require(l == 1.0 || l == -1.0, Errc::invalid_argument, "labels must be +1 or -1");
  return {std::move(data), lambda, batch_size};
}

inline GradientSample logistic_oracle_sample(const LogisticProblem& p, std::size_t batch_size,
                                             std::span<const double> x, Rng& rng,
                                             std::size_t agent = 0, std::size_t round = 0) {
  require(p.data.size() > 0, Errc::invalid_argument, "dataset is empty");
  require(batch_size > 0 && batch_size <= p.data.size(), Errc::invalid_argument,
          "batch size must lie in [1, m]");
  require(x.size() == p.dimension(), Errc::invalid_argument, "x has the wrong dimension");
  LogisticProblem q = p;
  q.batch_size = batch_size;
  GradientSample s{Vec(p.dimension()), agent, round};
  q.sample_into(agent, x, rng, s.m);
  return s;
}

// ---------------------------------------------------------------------------
// Aggregates over the unattacked agents N. Only evaluators call these.

inline Vec true_gradient(const LinearMeasurementProblem& p, std::span<const std::size_t> honest,
                         std::span<const double> x) {
  require(!honest.empty(), Errc::invalid_argument, "no unattacked agents");
  Vec g(p.dimension(), 0.0), gi(p.dimension());
  for (std::size_t i : honest) {
    p.local_gradient_into(i, x, gi);
    axpy(1.0, gi, g);
  }
  for (double& a : g) a /= static_cast<double>(honest.size());
  return g;
}

inline double objective_value(const LinearMeasurementProblem& p, std::span<const std::size_t> honest,
                              std::span<const double> x) {
  require(!honest.empty(), Errc::invalid_argument, "no unattacked agents");
  double s = 0.0;
  for (std::size_t i : honest) s += p.local_objective(i, x);
  return s / static_cast<double>(honest.size());
}

inline Vec true_gradient(const LogisticProblem& p, std::span<const std::size_t>,
                         std::span<const double> x) {
  Vec g(p.dimension());
  p.full_gradient_into(x, g);
  return g;
}

inline double objective_value(const LogisticProblem& p, std::span<const std::size_t>,
                              std::span<const double> x) {
  return p.objective(x);
}

}  // namespace clipvrg
