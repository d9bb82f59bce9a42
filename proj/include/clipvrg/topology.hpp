#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "clipvrg/error.hpp"
#include "clipvrg/linalg.hpp"

namespace clipvrg {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// Undirected simple graph over agents 0..n-1.
class Graph {
 public:
  explicit Graph(std::size_t n) : adjacency_(n) {
    require(n > 0, Errc::invalid_argument, "graph needs at least one agent");
  }

  std::size_t size() const { return adjacency_.size(); }
  std::size_t edge_count() const { return edge_count_; }

  // Returns false if the edge already exists.
  bool add_edge(std::size_t i, std::size_t j) {
    require(i < size() && j < size(), Errc::invalid_argument, "edge endpoint out of range");
    require(i != j, Errc::invalid_argument, "self-loops are not allowed");
    auto& ai = adjacency_[i];
    auto it = std::lower_bound(ai.begin(), ai.end(), j);
    if (it != ai.end() && *it == j) return false;
    ai.insert(it, j);
    auto& aj = adjacency_[j];
    aj.insert(std::lower_bound(aj.begin(), aj.end(), i), i);
    ++edge_count_;
    return true;
  }

  bool has_edge(std::size_t i, std::size_t j) const {
    const auto& ai = adjacency_.at(i);
    return std::binary_search(ai.begin(), ai.end(), j);
  }

  const std::vector<std::size_t>& neighbors(std::size_t i) const { return adjacency_.at(i); }
  std::size_t degree(std::size_t i) const { return adjacency_.at(i).size(); }

  // Sorted (i, j) pairs with i < j.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(edge_count_);
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j : adjacency_[i])
        if (i < j) out.emplace_back(i, j);
    return out;
  }

  const std::optional<std::vector<Point2>>& positions() const { return positions_; }
  void set_positions(std::vector<Point2> p) {
    require(p.size() == size(), Errc::invalid_argument, "one position per agent required");
    positions_ = std::move(p);
  }

 private:
  std::vector<std::vector<std::size_t>> adjacency_;
  std::size_t edge_count_ = 0;
  std::optional<std::vector<Point2>> positions_;
};

namespace detail {

inline void link_within_radius(Graph& g, const std::vector<Point2>& pts, double radius) {
  // Small slack so that radius = sqrt(2) reliably captures lattice diagonals.
  const double r2 = radius * radius * (1.0 + 1e-12);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double dx = pts[i].x - pts[j].x;
      const double dy = pts[i].y - pts[j].y;
      if (dx * dx + dy * dy <= r2) g.add_edge(i, j);
    }
  }
}

}  // namespace detail

// Agent r * cols + c sits at lattice point (c, r) with unit spacing.
inline Graph build_grid(std::size_t rows, std::size_t cols, double link_radius) {
  require(rows > 0 && cols > 0, Errc::invalid_argument, "grid needs positive rows and cols");
  require(rows * cols >= 2, Errc::invalid_argument, "grid needs at least two agents");
  require(link_radius > 0.0, Errc::invalid_argument, "link radius must be positive");
  std::vector<Point2> pts;
  pts.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      pts.push_back({static_cast<double>(c), static_cast<double>(r)});
  Graph g(rows * cols);
  detail::link_within_radius(g, pts, link_radius);
  g.set_positions(std::move(pts));
  return g;
}

// Points uniform on the unit square, linked when within `radius`.
inline Graph build_random_geometric(std::size_t n, double radius, std::uint64_t seed) {
  require(n >= 2, Errc::invalid_argument, "geometric graph needs at least two agents");
  require(radius >= 0.0, Errc::invalid_argument, "radius must be nonnegative");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Point2> pts(n);
  for (auto& p : pts) {
    p.x = unit(rng);
    p.y = unit(rng);
  }
  Graph g(n);
  if (radius > 0.0) detail::link_within_radius(g, pts, radius);
  g.set_positions(std::move(pts));
  return g;
}

// Ring where each agent links to the k/2 nearest agents on either side.
inline Graph build_cycle_k(std::size_t n, std::size_t k) {
  require(k > 0 && k % 2 == 0, Errc::invalid_argument, "k must be a positive even integer");
  require(k < n, Errc::invalid_argument, "k must be smaller than n");
  Graph g(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s = 1; s <= k / 2; ++s) g.add_edge(i, (i + s) % n);
  return g;
}

inline Graph build_complete(std::size_t n) {
  require(n >= 2, Errc::invalid_argument, "complete graph needs at least two agents");
  Graph g(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) g.add_edge(i, j);
  return g;
}

inline bool is_connected(const Graph& g) {
  std::vector<char> seen(g.size(), 0);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = 1;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const std::size_t u = frontier.front();
    frontier.pop();
    for (std::size_t v : g.neighbors(u)) {
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        frontier.push(v);
      }
    }
  }
  return reached == g.size();
}

// ---------------------------------------------------------------------------
// Edge-list text format: n on the first line, then one "i j" pair per line.

inline void write_edge_list(std::ostream& os, const Graph& g) {
  os << g.size() << '\n';
  for (const auto& [i, j] : g.edges()) os << i << ' ' << j << '\n';
}

inline Graph read_edge_list(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(is, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) fail(Errc::parse_error, "edge list is empty");
  long long n = 0;
  {
    std::istringstream ls(line);
    if (!(ls >> n) || n <= 0) fail(Errc::parse_error, "line 1: expected positive agent count");
  }
  Graph g(static_cast<std::size_t>(n));
  while (next_line()) {
    std::istringstream ls(line);
    long long i = -1, j = -1;
    if (!(ls >> i >> j) || i < 0 || j < 0 || i >= n || j >= n || i == j)
      fail(Errc::parse_error, "line " + std::to_string(lineno) + ": bad edge '" + line + "'");
    g.add_edge(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  }
  return g;
}

// ---------------------------------------------------------------------------
// Mixing matrices.

// Nonzero entries of a row, used for sparse mixing.
struct WeightEntry {
  std::size_t col;
  double weight;
};

// |lambda_2| of a symmetric doubly stochastic matrix. Power iteration on
// B = W - (1/n) 11^T restricted to 1-perp; the eigenvalue is read off the
// Rayleigh quotient of B^2 so eigenvalues of opposite sign do not stall it.
inline double spectral_gap(const DenseMatrix& w, double rel_tol = 1e-10,
                           std::size_t max_iterations = 2'000'000) {
  const std::size_t n = w.rows();
  require(n == w.cols(), Errc::invalid_argument, "mixing matrix must be square");
  if (n == 1) return 0.0;

  std::vector<std::vector<WeightEntry>> rows(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (w(i, j) != 0.0) rows[i].push_back({j, w(i, j)});

  auto project = [n](Vec& v) {
    double mean = 0.0;
    for (double a : v) mean += a;
    mean /= static_cast<double>(n);
    for (double& a : v) a -= mean;
  };
  auto apply = [&](const Vec& in, Vec& out) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (const auto& e : rows[i]) s += e.weight * in[e.col];
      out[i] = s;
    }
    project(out);
  };

  // Deterministic start vector with components along every eigenvector in practice.
  Vec x(n);
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> gauss;
  for (double& a : x) a = gauss(rng);
  project(x);
  double nx = norm2(x);
  for (double& a : x) a /= nx;

  Vec bx(n), bbx(n);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    apply(x, bx);
    const double lambda_sq = dot(bx, bx);  // x^T B^2 x
    if (lambda_sq < 1e-28) return 0.0;  // |lambda_2| at round-off level (||W|| <= 1)
    apply(bx, bbx);
    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = bbx[i] - lambda_sq * x[i];
      residual += r * r;
    }
    residual = std::sqrt(residual);
    if (residual <= rel_tol * lambda_sq) return std::sqrt(lambda_sq);
    const double nb = norm2(bbx);
    if (nb < 1e-300) return std::sqrt(lambda_sq);
    for (std::size_t i = 0; i < n; ++i) x[i] = bbx[i] / nb;
  }
  fail(Errc::numerical_failure, "spectral gap power iteration did not converge");
}

class MixingMatrix {
 public:
  // Validates symmetry and double stochasticity, then computes beta.
  explicit MixingMatrix(DenseMatrix w) : w_(std::move(w)) {
    const std::size_t n = w_.rows();
    require(n > 0 && n == w_.cols(), Errc::invalid_argument, "mixing matrix must be square");
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double a = w_(i, j);
        require(a >= 0.0, Errc::invalid_argument, "mixing weights must be nonnegative");
        require(a == w_(j, i), Errc::invalid_argument, "mixing matrix must be symmetric");
        row += a;
      }
      require(std::abs(row - 1.0) < 1e-12, Errc::invalid_argument,
              "row " + std::to_string(i) + " does not sum to 1");
    }
    rows_.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (w_(i, j) != 0.0) rows_[i].push_back({j, w_(i, j)});
    beta_ = spectral_gap(w_);
  }

  std::size_t size() const { return w_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return w_(i, j); }
  const DenseMatrix& dense() const { return w_; }
  const std::vector<WeightEntry>& row(std::size_t i) const { return rows_[i]; }
  double beta() const { return beta_; }

  // True if every off-diagonal nonzero is an edge of g.
  bool supported_on(const Graph& g) const {
    if (g.size() != size()) return false;
    for (std::size_t i = 0; i < size(); ++i)
      for (const auto& e : rows_[i])
        if (e.col != i && !g.has_edge(i, e.col)) return false;
    return true;
  }

 private:
  DenseMatrix w_;
  std::vector<std::vector<WeightEntry>> rows_;
  double beta_ = 0.0;
};

inline double spectral_gap(const MixingMatrix& w) { return spectral_gap(w.dense()); }

// w_ij = 1 / (1 + max(deg_i, deg_j)) on edges, diagonal takes the remainder.
inline MixingMatrix metropolis_weights(const Graph& g) {
  require(is_connected(g), Errc::precondition_violation,
          "metropolis weights need a connected graph");
  const std::size_t n = g.size();
  DenseMatrix w(n, n);
  for (const auto& [i, j] : g.edges()) {
    const double a = 1.0 / (1.0 + static_cast<double>(std::max(g.degree(i), g.degree(j))));
    w(i, j) = a;
    w(j, i) = a;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double off = 0.0;
    for (std::size_t j : g.neighbors(i)) off += w(i, j);
    w(i, i) = 1.0 - off;
  }
  return MixingMatrix(std::move(w));
}

}  // namespace clipvrg
