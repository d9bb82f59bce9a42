#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "clipvrg/attack.hpp"
#include "clipvrg/error.hpp"
#include "clipvrg/linalg.hpp"
#include "clipvrg/parallel.hpp"
#include "clipvrg/problems.hpp"
#include "clipvrg/random.hpp"
#include "clipvrg/schedules.hpp"
#include "clipvrg/topology.hpp"

namespace clipvrg {

enum class Algorithm { clipvrg, dsgd };

inline const char* to_string(Algorithm a) { return a == Algorithm::clipvrg ? "clipvrg" : "dsgd"; }

struct AgentState {
  Vec x;         // iterate x_i^t
  Vec v;         // estimator v_i^t (raw oracle output for DSGD)
  double k = 1;  // clipping coefficient k_i^t
};

// 1 if ||v|| <= gamma, gamma / ||v|| otherwise.
inline double clip_coefficient(std::span<const double> v, double gamma) {
  require(gamma > 0.0, Errc::invalid_argument, "clipping threshold must be positive");
  const double n = norm2(v);
  require(std::isfinite(n), Errc::invalid_state, "estimator is not finite");
  return n <= gamma ? 1.0 : gamma / n;
}

// (1 - eta) v_prev + eta m, in place on v_prev.
inline void estimator_update_into(std::span<double> v, std::span<const double> m, double eta) {
  require(v.size() == m.size(), Errc::invalid_argument, "estimator and sample dimensions differ");
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = (1.0 - eta) * v[k] + eta * m[k];
}

inline Vec estimator_update(std::span<const double> v_prev, const GradientSample& m, double eta) {
  Vec v(v_prev.begin(), v_prev.end());
  estimator_update_into(v, m.m, eta);
  return v;
}

inline Vec network_average(std::span<const AgentState> states) {
  Vec xbar(states.front().x.size(), 0.0);
  for (const auto& s : states) axpy(1.0, s.x, xbar);
  for (double& a : xbar) a /= static_cast<double>(states.size());
  return xbar;
}

// ||x - 1 (x) xbar||
inline double consensus_error(std::span<const AgentState> states) {
  const Vec xbar = network_average(states);
  double s = 0.0;
  for (const auto& st : states) {
    const double d = distance(st.x, xbar);
    s += d * d;
  }
  return std::sqrt(s);
}

// Per-agent random streams: agent i in round t draws from a stream seeded by
// (master, i, t), so results do not depend on evaluation order or thread count.
class AgentStreams {
 public:
  explicit AgentStreams(std::uint64_t master) : master_(master) {}

  Rng stream(std::size_t agent, std::size_t round) const {
    return Rng(derive_seed(derive_seed(master_, stream_tag("oracle"), agent), 0, round));
  }

 private:
  std::uint64_t master_;
};

// Round-t bookkeeping produced by the local phase and consumed by the mixing phase.
struct RoundWorkspace {
  std::vector<Vec> samples;   // m_i^t after the attack wrapper
  std::vector<Vec> messages;  // x_i^t - alpha_t k_i^t v_i^t
  Vec xbar_before;
  Vec step_mean;  // (1/n) sum k_i v_i
};

struct SelfChecks {
  // max over (i, t) of ||k_i^t v_i^t|| - gamma_t
  double max_clip_excess = -std::numeric_limits<double>::infinity();
  // max over rounds and coordinates of |xbar^{t+1} - (xbar^t - alpha_t/n sum k_i v_i)|
  double max_average_residual = 0.0;
  // min over rounds of sqrt(n) sum_{s<t} beta^{t-s} alpha_s gamma_s - consensus error
  double min_consensus_sum_margin = std::numeric_limits<double>::infinity();
  std::size_t rounds_checked = 0;
};

namespace detail {

template <GradientOracle Oracle>
void query_oracle(const Oracle& oracle, const AttackSpec& attack, const AgentStreams& streams,
                  std::size_t i, std::size_t t, std::span<const double> x, std::span<double> out) {
  const bool attacked = attack.is_attacked(i);
  if (!attacked || attack.needs_honest_sample()) {
    Rng rng = streams.stream(i, t);
    oracle.sample_into(i, x, rng, out);
  }
  if (attacked) apply_attack_into(attack, i, t, x, out);
  if (!all_finite(out)) fail(Errc::invalid_state, "oracle returned a non-finite gradient");
}

template <class Fn>
void for_each_agent(std::size_t n, std::size_t t, unsigned threads, Fn&& fn) {
  parallel_for(n, threads, [&](std::size_t i) {
    try {
      fn(i);
    } catch (const Error& e) {
      throw Error(e.code(), "round " + std::to_string(t) + ", agent " + std::to_string(i) + ": " +
                                e.what());
    }
  });
}

}  // namespace detail

// Local phase of a CLIP-VRG round: query oracles at x_i^t, update estimators,
// compute clipping coefficients and outgoing messages.
template <GradientOracle Oracle>
void clipvrg_local_phase(std::vector<AgentState>& states, const ScheduleSet& schedules,
                         const Oracle& oracle, const AttackSpec& attack, std::size_t t,
                         const AgentStreams& streams, RoundWorkspace& ws, unsigned threads = 1) {
  const std::size_t n = states.size();
  ws.samples.resize(n);
  ws.messages.resize(n);
  const double alpha = schedules.alpha(t);
  const double gamma = schedules.gamma(t);
  // v^0 = m^0; v^t = (1 - eta_{t-1}) v^{t-1} + eta_{t-1} m^t
  const double eta = t == 0 ? 1.0 : schedules.eta_clamped(t - 1);
  detail::for_each_agent(n, t, threads, [&](std::size_t i) {
    AgentState& s = states[i];
    Vec& m = ws.samples[i];
    m.resize(s.x.size());
    detail::query_oracle(oracle, attack, streams, i, t, s.x, m);
    if (t == 0 || s.v.size() != m.size())
      s.v = m;
    else
      estimator_update_into(s.v, m, eta);
    s.k = clip_coefficient(s.v, gamma);
    Vec& msg = ws.messages[i];
    msg = s.x;
    axpy(-alpha * s.k, s.v, msg);
  });
}

// Local phase of a DSGD round: v_i = m_i, k_i = 1.
template <GradientOracle Oracle>
void dsgd_local_phase(std::vector<AgentState>& states, double alpha, const Oracle& oracle,
                      const AttackSpec& attack, std::size_t t, const AgentStreams& streams,
                      RoundWorkspace& ws, unsigned threads = 1) {
  const std::size_t n = states.size();
  ws.samples.resize(n);
  ws.messages.resize(n);
  detail::for_each_agent(n, t, threads, [&](std::size_t i) {
    AgentState& s = states[i];
    Vec& m = ws.samples[i];
    m.resize(s.x.size());
    detail::query_oracle(oracle, attack, streams, i, t, s.x, m);
    s.v = m;
    s.k = 1.0;
    Vec& msg = ws.messages[i];
    msg = s.x;
    axpy(-alpha, s.v, msg);
  });
}

// x_i^{t+1} = sum_j w_ij message_j. Records xbar^t and (1/n) sum k_i v_i first
// so the average dynamics can be checked afterwards.
inline void mixing_phase(std::vector<AgentState>& states, const MixingMatrix& w, RoundWorkspace& ws,
                         std::size_t t, unsigned threads = 1) {
  const std::size_t n = states.size();
  require(w.size() == n, Errc::invalid_argument, "mixing matrix size does not match agent count");
  ws.xbar_before = network_average(states);
  ws.step_mean.assign(states.front().x.size(), 0.0);
  for (const auto& s : states) axpy(s.k, s.v, ws.step_mean);
  for (double& a : ws.step_mean) a /= static_cast<double>(n);
  detail::for_each_agent(n, t, threads, [&](std::size_t i) {
    // sum_j w_ij msg_j written as msg_i + sum_{j != i} w_ij (msg_j - msg_i):
    // identical messages then mix to themselves bit for bit.
    Vec& x = states[i].x;
    const Vec& own = ws.messages[i];
    x = own;
    for (const auto& e : w.row(i)) {
      if (e.col == i) continue;
      const Vec& other = ws.messages[e.col];
      for (std::size_t k = 0; k < x.size(); ++k) x[k] += e.weight * (other[k] - own[k]);
    }
    if (!all_finite(x)) fail(Errc::invalid_state, "iterate became non-finite");
  });
}

template <GradientOracle Oracle>
void clipvrg_round(std::vector<AgentState>& states, const MixingMatrix& w, const ScheduleSet& schedules,
                   const Oracle& oracle, const AttackSpec& attack, std::size_t t,
                   const AgentStreams& streams, unsigned threads = 1) {
  RoundWorkspace ws;
  clipvrg_local_phase(states, schedules, oracle, attack, t, streams, ws, threads);
  mixing_phase(states, w, ws, t, threads);
}

template <GradientOracle Oracle>
void dsgd_round(std::vector<AgentState>& states, const MixingMatrix& w, double alpha,
                const Oracle& oracle, const AttackSpec& attack, std::size_t t,
                const AgentStreams& streams, unsigned threads = 1) {
  RoundWorkspace ws;
  dsgd_local_phase(states, alpha, oracle, attack, t, streams, ws, threads);
  mixing_phase(states, w, ws, t, threads);
}

inline std::vector<AgentState> initial_states(std::size_t n, const Vec& x0) {
  return std::vector<AgentState>(n, AgentState{x0, Vec(x0.size(), 0.0), 1.0});
}

// ---------------------------------------------------------------------------
// Multi-round driver.

struct RunOptions {
  Algorithm algorithm = Algorithm::clipvrg;
  ScheduleSet schedules;  // DSGD reads only `alpha`
  std::size_t rounds = 0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool self_check = true;
  std::vector<std::size_t> record;  // sorted rounds in [0, rounds] to hand to the observer
};

// What the observer sees at a recorded round t: x^t together with v^t and k^t
// computed from it during round t.
struct RoundTrace {
  std::size_t t = 0;
  const std::vector<AgentState>* states = nullptr;
  Vec xbar;
  double alpha = 0.0;
  double gamma = 0.0;
  // sqrt(n) sum_{s<t} beta^{t-s} alpha_s gamma_s (CLIP-VRG only)
  double consensus_sum_bound = 0.0;
};

struct RunResult {
  std::vector<AgentState> final_states;
  SelfChecks checks;
};

template <GradientOracle Oracle, class Observer>
RunResult run(const Oracle& oracle, const MixingMatrix& w, const AttackSpec& attack,
              const RunOptions& opt, const Vec& x0, Observer&& observe) {
  const std::size_t n = w.size();
  require(x0.size() == oracle.dimension(), Errc::invalid_argument, "x0 has the wrong dimension");
  require(std::is_sorted(opt.record.begin(), opt.record.end()), Errc::invalid_argument,
          "recorded rounds must be sorted");
  const bool clipping = opt.algorithm == Algorithm::clipvrg;
  const AgentStreams streams(opt.seed);
  const double beta = w.beta();
  const double sqrt_n = std::sqrt(static_cast<double>(n));

  std::vector<AgentState> states = initial_states(n, x0);
  RoundWorkspace ws;
  SelfChecks checks;
  double geometric_sum = 0.0;  // sum_{s<t} beta^{t-s} alpha_s gamma_s
  auto next_record = opt.record.begin();

  for (std::size_t t = 0; t <= opt.rounds; ++t) {
    const double alpha = opt.schedules.alpha(t);
    const double gamma = clipping ? opt.schedules.gamma(t) : 0.0;
    if (clipping)
      clipvrg_local_phase(states, opt.schedules, oracle, attack, t, streams, ws, opt.threads);
    else
      dsgd_local_phase(states, alpha, oracle, attack, t, streams, ws, opt.threads);

    if (opt.self_check) {
      if (clipping) {
        for (const auto& s : states)
          checks.max_clip_excess = std::max(checks.max_clip_excess, s.k * norm2(s.v) - gamma);
        const double margin = sqrt_n * geometric_sum - consensus_error(states);
        checks.min_consensus_sum_margin = std::min(checks.min_consensus_sum_margin, margin);
      }
      ++checks.rounds_checked;
    }

    while (next_record != opt.record.end() && *next_record < t) ++next_record;
    if (next_record != opt.record.end() && *next_record == t) {
      RoundTrace trace{t, &states, network_average(states), alpha, gamma, sqrt_n * geometric_sum};
      observe(static_cast<const RoundTrace&>(trace));
    }
    if (t == opt.rounds) break;

    mixing_phase(states, w, ws, t, opt.threads);
    if (opt.self_check) {
      const Vec xbar = network_average(states);
      for (std::size_t k = 0; k < xbar.size(); ++k) {
        const double predicted = ws.xbar_before[k] - alpha * ws.step_mean[k];
        checks.max_average_residual =
            std::max(checks.max_average_residual, std::abs(xbar[k] - predicted));
      }
    }
    if (clipping) geometric_sum = beta * (geometric_sum + alpha * gamma);
  }
  return {std::move(states), checks};
}

}  // namespace clipvrg
