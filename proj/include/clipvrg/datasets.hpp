#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "clipvrg/error.hpp"
#include "clipvrg/linalg.hpp"
#include "clipvrg/problems.hpp"

namespace clipvrg {

inline constexpr double kSyntheticNoiseStd = 0.4;

// `diagonal` puts the class centers on the all-ones axis, u = 1/sqrt(d).
enum class SeparationDirection { random, diagonal };

struct SyntheticSplit {
  LabeledData train;
  LabeledData test;
  Vec direction;  // unit separation direction
};

// Two isotropic Gaussian blobs (std kSyntheticNoiseStd per coordinate) whose
// centers +-(margin/2) u are `margin` apart along a unit direction u.
// Labels alternate +1, -1 so the classes are balanced. Training points are
// drawn before test points from one stream, so the test set of a split does
// not perturb its training set.
inline SyntheticSplit make_synthetic_split(std::size_t n_train, std::size_t n_test, std::size_t d,
                                           double margin, std::uint64_t seed,
                                           double noise_std = kSyntheticNoiseStd,
                                           SeparationDirection direction = SeparationDirection::random) {
  require(margin > 0.0, Errc::invalid_argument, "margin must be positive");
  require(d > 0, Errc::invalid_argument, "dimension must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec u(d, 1.0 / std::sqrt(static_cast<double>(d)));
  if (direction == SeparationDirection::random) {
    double nu = 0.0;
    do {
      for (double& a : u) a = gauss(rng);
      nu = norm2(u);
    } while (nu < 1e-12);
    for (double& a : u) a /= nu;
  }

  auto draw = [&](std::size_t count) {
    LabeledData data{DenseMatrix(count, d), Vec(count)};
    for (std::size_t r = 0; r < count; ++r) {
      const double xi = (r % 2 == 0) ? 1.0 : -1.0;
      data.labels[r] = xi;
      auto row = data.features.row(r);
      for (std::size_t k = 0; k < d; ++k) row[k] = xi * 0.5 * margin * u[k] + noise_std * gauss(rng);
    }
    return data;
  };
  SyntheticSplit split;
  split.train = draw(n_train);
  split.test = draw(n_test);
  split.direction = std::move(u);
  return split;
}

inline LogisticProblem make_synthetic_classification(std::size_t n_points, std::size_t d, double margin,
                                                     std::uint64_t seed, double lambda = 0.1,
                                                     std::size_t batch_size = 1) {
  return make_logistic_problem(make_synthetic_split(n_points, 0, d, margin, seed).train, lambda,
                               std::min(batch_size, n_points));
}

// One point per line: d feature columns followed by a +1/-1 label column.
inline LabeledData load_labeled_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open " + path);
  std::vector<Vec> rows;
  Vec labels;
  std::string line;
  std::size_t lineno = 0, width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Vec values;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        fail(Errc::parse_error, path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (values.size() < 2)
      fail(Errc::parse_error, path + ":" + std::to_string(lineno) + ": need features and a label");
    if (width == 0) width = values.size();
    if (values.size() != width)
      fail(Errc::parse_error, path + ":" + std::to_string(lineno) + ": inconsistent column count");
    const double label = values.back();
    if (label != 1.0 && label != -1.0)
      fail(Errc::parse_error, path + ":" + std::to_string(lineno) + ": label must be +1 or -1");
    values.pop_back();
    rows.push_back(std::move(values));
    labels.push_back(label);
  }
  if (rows.empty()) fail(Errc::invalid_argument, path + ": dataset is empty");
  LabeledData data{DenseMatrix(rows.size(), width - 1), std::move(labels)};
  for (std::size_t r = 0; r < rows.size(); ++r)
    std::copy(rows[r].begin(), rows[r].end(), data.features.row(r).begin());
  return data;
}

}  // namespace clipvrg
