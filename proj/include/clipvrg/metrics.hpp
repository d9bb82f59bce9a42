#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "clipvrg/engine.hpp"
#include "clipvrg/error.hpp"
#include "clipvrg/linalg.hpp"
#include "clipvrg/problems.hpp"
#include "clipvrg/schedules.hpp"

namespace clipvrg {

// (1/scale) max_i ||x_i - reference||
inline double max_l2_error(std::span<const AgentState> states, std::span<const double> reference,
                           double scale) {
  require(scale > 0.0, Errc::invalid_argument, "scale must be positive");
  double worst = 0.0;
  for (const auto& s : states) worst = std::max(worst, distance(s.x, reference));
  return worst / scale;
}

// Mean over agents of f(x_i) - f*, with round-off below zero clipped to 0.
template <class Objective>
double suboptimality(Objective&& f, double f_star, std::span<const AgentState> states) {
  double s = 0.0;
  for (const auto& st : states) s += f(std::span<const double>(st.x)) - f_star;
  s /= static_cast<double>(states.size());
  return (s < 0.0 && s > -1e-9) ? 0.0 : s;
}

// Least-squares slope of log(value) against log(t + 1) over the last
// `tail_fraction` of the samples, negated: a series c (t+1)^{-tau} gives tau.
inline double fit_rate_exponent(std::span<const std::pair<double, double>> series,
                                double tail_fraction = 0.5) {
  require(tail_fraction > 0.0 && tail_fraction <= 1.0, Errc::invalid_argument,
          "tail fraction must lie in (0, 1]");
  const std::size_t count = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(series.size()))));
  require(series.size() >= 2 && count <= series.size(), Errc::not_fittable,
          "need at least two samples");
  const auto tail = series.subspan(series.size() - count);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [t, v] : tail) {
    require(v > 0.0 && std::isfinite(v), Errc::not_fittable, "nonpositive value in the fitted tail");
    const double lx = std::log(t + 1.0), ly = std::log(v);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double m = static_cast<double>(count);
  const double denom = m * sxx - sx * sx;
  require(denom > 0.0, Errc::not_fittable, "fitted rounds are all identical");
  return -(m * sxy - sx * sy) / denom;
}

// Mean over agents of the fraction of points with sign(x^T theta) = label;
// a zero score counts as wrong.
inline double classification_accuracy(const LabeledData& holdout, std::span<const AgentState> states) {
  require(holdout.size() > 0, Errc::invalid_argument, "holdout set is empty");
  double total = 0.0;
  for (const auto& s : states) {
    std::size_t correct = 0;
    for (std::size_t r = 0; r < holdout.size(); ++r) {
      const double score = dot(s.x, holdout.features.row(r));
      if ((score > 0.0 && holdout.labels[r] > 0.0) || (score < 0.0 && holdout.labels[r] < 0.0))
        ++correct;
    }
    total += static_cast<double>(correct) / static_cast<double>(holdout.size());
  }
  return total / static_cast<double>(states.size());
}

// Mean over unattacked agents of ||v_i - grad f_i(x_i)||.
template <GradientOracle Oracle>
double mean_estimator_error(const Oracle& oracle, std::span<const std::size_t> honest,
                            std::span<const AgentState> states) {
  if (honest.empty()) return 0.0;
  Vec g(oracle.dimension());
  double s = 0.0;
  for (std::size_t i : honest) {
    oracle.local_gradient_into(i, states[i].x, g);
    s += distance(states[i].v, g);
  }
  return s / static_cast<double>(honest.size());
}

struct ConsensusReport {
  double error = 0.0;
  double bound = 0.0;
  double margin = 0.0;
};

// Consensus error against c sqrt(n) alpha_t gamma_t with c from lemma1_constant.
inline ConsensusReport consensus_report(std::span<const AgentState> states, const ScheduleSet& schedules,
                                        double beta, std::size_t t) {
  const double c = lemma1_constant(beta, schedules.alpha.tau, schedules.gamma.tau, schedules.phi());
  ConsensusReport r;
  r.error = consensus_error(states);
  r.bound = c * std::sqrt(static_cast<double>(states.size())) * schedules.alpha(t) * schedules.gamma(t);
  r.margin = r.bound - r.error;
  return r;
}

// ---------------------------------------------------------------------------
// CSV rows.

struct MetricsRow {
  std::size_t t = 0;
  double max_l2_error = 0.0;
  double consensus_error = 0.0;
  std::optional<double> lemma1_bound;
  double avg_subopt = 0.0;
  std::optional<double> avg_accuracy;
  double mean_estimator_error = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "t,max_l2_error,consensus_error,lemma1_bound,avg_subopt,avg_accuracy,mean_estimator_error";

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string to_csv(const MetricsRow& r) {
  std::string s = std::to_string(r.t);
  s += ',' + format_number(r.max_l2_error);
  s += ',' + format_number(r.consensus_error);
  s += ',' + (r.lemma1_bound ? format_number(*r.lemma1_bound) : std::string());
  s += ',' + format_number(r.avg_subopt);
  s += ',' + (r.avg_accuracy ? format_number(*r.avg_accuracy) : std::string());
  s += ',' + format_number(r.mean_estimator_error);
  return s;
}

inline void write_metrics_csv(std::ostream& os, std::span<const MetricsRow> rows) {
  os << kMetricsHeader << '\n';
  for (const auto& r : rows) os << to_csv(r) << '\n';
}

}  // namespace clipvrg
