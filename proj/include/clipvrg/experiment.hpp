#pragma once

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "clipvrg/analysis.hpp"
#include "clipvrg/attack.hpp"
#include "clipvrg/config.hpp"
#include "clipvrg/datasets.hpp"
#include "clipvrg/engine.hpp"
#include "clipvrg/error.hpp"
#include "clipvrg/metrics.hpp"
#include "clipvrg/problems.hpp"
#include "clipvrg/random.hpp"
#include "clipvrg/schedules.hpp"
#include "clipvrg/topology.hpp"

namespace clipvrg {

using Problem = std::variant<LinearMeasurementProblem, LogisticProblem>;

// Everything derived from a config. The evaluator-side knowledge (honest set,
// minimizer) lives here; the engine only ever sees the oracle and the attack.
struct Experiment {
  ExperimentConfig config;
  Graph graph{1};
  std::optional<MixingMatrix> mixing;  // absent when the graph is disconnected
  Problem problem;
  std::optional<LabeledData> holdout;
  AttackSpec attack;
  std::vector<std::size_t> honest;
  std::optional<Conditioning> conditioning;
  std::string conditioning_error;
  ScheduleSet schedules;
  Vec x_star;
  double f_star = 0.0;

  std::size_t agents() const { return graph.size(); }
  double beta() const { return mixing ? mixing->beta() : 1.0; }
  double error_scale() const {
    return config.metrics.error_scale.value_or(static_cast<double>(agents()));
  }
};

inline std::size_t configured_agent_count(const ExperimentConfig& c) {
  if (c.topology.kind == TopologyKind::grid) {
    if (c.problem != ProblemKind::grid_estimation)
      fail(Errc::invalid_argument, "grid topology is only available for grid-estimation problems");
    return c.grid.rows * c.grid.cols;
  }
  return c.topology.n;
}

inline Graph build_topology(const ExperimentConfig& c) {
  const auto& t = c.topology;
  switch (t.kind) {
    case TopologyKind::grid: return build_grid(c.grid.rows, c.grid.cols, t.link_radius);
    case TopologyKind::geometric:
      return build_random_geometric(t.n, t.radius,
                                    t.seed.value_or(derive_seed(c.master_seed, stream_tag("topology"))));
    case TopologyKind::cycle_k: return build_cycle_k(t.n, t.k);
    case TopologyKind::complete: return build_complete(t.n);
  }
  fail(Errc::invalid_argument, "unknown topology");
}

inline double resolved_tau_alpha(const AlgorithmConfig& a) {
  return a.optimal_exponents ? kOptimalTauAlpha : a.alpha.tau.value_or(0.0);
}
inline double resolved_tau_gamma(const AlgorithmConfig& a) {
  return a.optimal_exponents ? kOptimalTauGamma : a.gamma.tau.value_or(0.0);
}

// Resolves exponents and the offset phi ("auto" -> min_phi(beta, .)).
inline ScheduleSet resolve_schedules(const AlgorithmConfig& a, double beta) {
  ScheduleSet s;
  if (a.kind == Algorithm::dsgd) {
    const long phi = a.phi.value_or(1);
    s.alpha = {a.alpha.c, a.alpha.tau.value_or(1.0), phi};
    s.gamma = {1.0, 0.0, phi};
    s.eta = {1.0, 0.0, phi};
    return s;
  }
  const double ta = resolved_tau_alpha(a), tg = resolved_tau_gamma(a);
  const double te = a.eta.tau.value_or(derive_eta(ta, tg));
  long phi = 1;
  if (a.phi)
    phi = *a.phi;
  else if (beta < 1.0 && ta + tg > 0.0)
    phi = min_phi(beta, ta, tg);
  s.alpha = {a.alpha.c, ta, phi};
  s.gamma = {a.gamma.c, tg, phi};
  s.eta = {a.eta.c, te, phi};
  return s;
}

inline Experiment build_experiment(const ExperimentConfig& c) {
  Experiment e;
  e.config = c;
  const std::size_t n = configured_agent_count(c);
  require(n >= 1, Errc::invalid_argument, "experiment needs agents");
  e.graph = build_topology(c);
  if (is_connected(e.graph)) e.mixing = metropolis_weights(e.graph);

  // Attacked set.
  std::vector<std::size_t> ids = c.attack.ids;
  if (c.attack.count) {
    Rng rng = make_stream(c.master_seed, "attack");
    ids = sample_attacked_set(n, *c.attack.count, rng);
  }
  for (std::size_t i : ids) require(i < n, Errc::invalid_argument, "attacked id out of range");
  e.attack = make_attack(ids, ids.empty() ? AttackMode::none : c.attack.mode, c.attack.value);

  if (c.problem == ProblemKind::grid_estimation) {
    Rng rng = make_stream(c.master_seed, "theta");
    Vec theta = sample_uniform_box(n, c.grid.theta_lo, c.grid.theta_hi, rng);
    auto lp = make_grid_measurement_problem(c.grid.rows, c.grid.cols, c.grid.sensing_radius,
                                            std::move(theta), c.grid.noise_std);
    require(lp.agents() == n, Errc::invalid_argument, "problem and topology disagree on agent count");
    if (c.attack.measured_support) e.attack.support = lp.measured;
    e.problem = std::move(lp);
  } else {
    const auto& cl = c.classification;
    LabeledData train, test;
    if (cl.synthetic) {
      auto split = make_synthetic_split(cl.synthetic->n_train, cl.synthetic->n_test, cl.synthetic->d,
                                        cl.synthetic->margin,
                                        derive_seed(c.master_seed, stream_tag("dataset")),
                                        kSyntheticNoiseStd, cl.synthetic->direction);
      train = std::move(split.train);
      test = std::move(split.test);
    } else {
      train = load_labeled_csv(cl.csv);
      test = cl.holdout_csv.empty() ? train : load_labeled_csv(cl.holdout_csv);
      require(test.dimension() == train.dimension(), Errc::invalid_argument,
              "holdout and training feature counts differ");
    }
    if (test.size() > 0) e.holdout = std::move(test);
    e.problem = make_logistic_problem(std::move(train), cl.lambda,
                                      std::min<std::size_t>(cl.batch_size, std::max<std::size_t>(1, train.size())));
  }
  e.honest = unattacked_agents(n, e.attack);

  std::visit(
      [&](const auto& p) {
        try {
          e.conditioning = condition_number(p, e.honest);
        } catch (const Error& err) {
          e.conditioning_error = err.what();
        }
      },
      e.problem);
  e.schedules = resolve_schedules(c.algorithm, e.beta());
  return e;
}

// Solves for x* and f(x*) on the unattacked objective.
inline void solve_reference(Experiment& e, double tol = 1e-10) {
  std::visit(
      [&](const auto& p) {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, LinearMeasurementProblem>)
          e.x_star = p.theta_star;
        else
          e.x_star = solve_minimizer(p, e.honest, tol);
        e.f_star = objective_value(p, e.honest, e.x_star);
      },
      e.problem);
}

// ---------------------------------------------------------------------------
// Validation

enum class CheckStatus { pass, warn, fail };

inline const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "PASS";
    case CheckStatus::warn: return "WARN";
    case CheckStatus::fail: return "FAIL";
  }
  return "FAIL";
}

struct Check {
  std::string name;
  CheckStatus status = CheckStatus::pass;
  std::string detail;
};

struct Diagnostics {
  std::vector<Check> checks;
  double beta = 1.0;
  std::optional<Conditioning> conditioning;
  double rho = 0.0;
  std::size_t max_attacked = 0;
  long phi = 1;
  long min_phi = 1;

  bool ok() const {
    return std::none_of(checks.begin(), checks.end(),
                        [](const Check& c) { return c.status == CheckStatus::fail; });
  }
  const Check* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

inline std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

inline Diagnostics validate_experiment(const Experiment& e) {
  const auto& c = e.config;
  Diagnostics d;
  auto add = [&](std::string name, CheckStatus s, std::string detail) {
    d.checks.push_back({std::move(name), s, std::move(detail)});
  };
  auto enforced = [](bool on) { return on ? CheckStatus::fail : CheckStatus::warn; };
  const std::size_t n = e.agents();

  const bool connected = e.mixing.has_value();
  add("connectivity", connected ? CheckStatus::pass : CheckStatus::fail,
      std::to_string(n) + " agents, " + std::to_string(e.graph.edge_count()) + " edges" +
          (connected ? "" : ", graph is disconnected"));
  d.beta = e.beta();
  if (connected)
    add("mixing", d.beta < 1.0 ? CheckStatus::pass : CheckStatus::fail,
        "Metropolis weights, beta = " + fmt(d.beta, 10));

  d.rho = e.attack.fraction(n);
  const std::size_t attacked = e.attack.mode == AttackMode::none ? 0 : e.attack.attacked.size();
  if (e.conditioning) {
    d.conditioning = e.conditioning;
    const auto& k = *e.conditioning;
    add("conditioning", CheckStatus::pass,
        "mu = " + fmt(k.mu) + ", L = " + fmt(k.L) + ", kappa = " + fmt(k.kappa));
    d.max_attacked = max_attacked_count(n, k.kappa);
    const bool feasible = check_attack_fraction(d.rho, k.kappa);
    add("assumption7", feasible ? CheckStatus::pass : enforced(c.enforce_assumption7),
        "rho = " + std::to_string(attacked) + "/" + std::to_string(n) + " = " + fmt(d.rho) +
            (feasible ? " < " : " >= ") + "1/(1+kappa) = " + fmt(feasible_rho(k.kappa)) +
            " (at most " + std::to_string(d.max_attacked) + " attacked agents; n/(1+kappa) = " +
            fmt(static_cast<double>(n) * feasible_rho(k.kappa)) + ")");
  } else {
    add("conditioning", CheckStatus::fail, e.conditioning_error);
  }

  if (c.algorithm.kind == Algorithm::clipvrg) {
    const double ta = e.schedules.alpha.tau, tg = e.schedules.gamma.tau;
    const auto violations = validate_exponents(ta, tg);
    std::string detail = "tau_alpha = " + fmt(ta) + ", tau_gamma = " + fmt(tg);
    for (const auto& v : violations) detail += "; violated: " + v;
    add("theorem1_exponents", violations.empty() ? CheckStatus::pass : enforced(c.enforce_theorem1),
        detail);
    const double te = e.schedules.eta.tau, want = derive_eta(ta, tg);
    add("theorem1_eta", std::abs(te - want) <= 1e-9 ? CheckStatus::pass : enforced(c.enforce_theorem1),
        "tau_eta = " + fmt(te) + ", 2(tau_alpha+tau_gamma)/3 = " + fmt(want));
    d.phi = e.schedules.phi();
    if (connected && d.beta < 1.0) {
      d.min_phi = min_phi(d.beta, ta, tg);
      const bool phi_ok = d.phi >= d.min_phi;
      add("lemma1_phi", phi_ok ? CheckStatus::pass : CheckStatus::warn,
          "phi = " + std::to_string(d.phi) + ", min_phi = " + std::to_string(d.min_phi) +
              (phi_ok ? ", c = " + fmt(lemma1_constant(d.beta, ta, tg, d.phi))
                      : " (consensus bound column left empty)"));
    }
  }
  return d;
}

inline Diagnostics validate_config(const ExperimentConfig& c) { return validate_experiment(build_experiment(c)); }

inline void print_diagnostics(std::ostream& os, const Diagnostics& d) {
  for (const auto& c : d.checks) os << to_string(c.status) << "  " << c.name << ": " << c.detail << '\n';
}

// ---------------------------------------------------------------------------
// Running

inline std::vector<std::size_t> record_rounds(std::size_t rounds, const MetricsConfig& m) {
  std::vector<std::size_t> out{0};
  if (m.cadence == Cadence::every) {
    for (std::size_t t = m.interval; t < rounds; t += m.interval) out.push_back(t);
  } else {
    const double ppd = static_cast<double>(m.points_per_decade);
    for (std::size_t j = 0;; ++j) {
      const double v = std::pow(10.0, static_cast<double>(j) / ppd);
      if (v >= static_cast<double>(rounds)) break;
      out.push_back(static_cast<std::size_t>(std::llround(v)));
    }
  }
  out.push_back(rounds);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct RunReport {
  std::vector<MetricsRow> rows;
  SelfChecks checks;
  std::vector<AgentState> final_states;
  std::optional<double> min_lemma1_margin;  // min over rows of bound - consensus error
  std::optional<double> fitted_exponent;    // of max_l2_error over the tail of the rows
  double beta = 0.0;
};

struct RunSettings {
  unsigned threads = 1;
  std::string out_path;  // empty: no CSV written
};

template <GradientOracle Oracle>
MetricsRow compute_row(const Experiment& e, const Oracle& oracle, const RoundTrace& tr,
                       std::optional<double> lemma1_c) {
  const std::span<const AgentState> states(*tr.states);
  MetricsRow row;
  row.t = tr.t;
  row.max_l2_error = max_l2_error(states, e.x_star, e.error_scale());
  row.consensus_error = consensus_error(states);
  if (lemma1_c)
    row.lemma1_bound = *lemma1_c * std::sqrt(static_cast<double>(states.size())) * tr.alpha * tr.gamma;
  row.avg_subopt = suboptimality(
      [&](std::span<const double> x) { return objective_value(oracle, e.honest, x); }, e.f_star, states);
  if (e.holdout) row.avg_accuracy = classification_accuracy(*e.holdout, states);
  row.mean_estimator_error = mean_estimator_error(oracle, e.honest, states);
  return row;
}

// Runs an already validated experiment. Rows are streamed to the CSV as they
// are produced, so an engine failure leaves the rows computed so far on disk.
inline RunReport run_built_experiment(Experiment& e, const RunSettings& settings) {
  require(e.mixing.has_value(), Errc::precondition_violation, "graph is disconnected");
  if (e.x_star.empty()) solve_reference(e);
  const auto& c = e.config;

  std::optional<double> lemma1_c;
  if (c.algorithm.kind == Algorithm::clipvrg) {
    const double ta = e.schedules.alpha.tau, tg = e.schedules.gamma.tau;
    if (e.beta() < 1.0 && e.schedules.phi() >= min_phi(e.beta(), ta, tg))
      lemma1_c = lemma1_constant(e.beta(), ta, tg, e.schedules.phi());
  }

  std::ofstream csv;
  if (!settings.out_path.empty()) {
    const auto parent = std::filesystem::path(settings.out_path).parent_path();
    if (!parent.empty()) {
      std::error_code ec;
      std::filesystem::create_directories(parent, ec);
    }
    csv.open(settings.out_path, std::ios::out | std::ios::trunc);
    if (!csv) fail(Errc::io_error, "cannot write " + settings.out_path);
    csv << kMetricsHeader << '\n';
  }

  RunOptions opt;
  opt.algorithm = c.algorithm.kind;
  opt.schedules = e.schedules;
  opt.rounds = c.rounds;
  opt.seed = c.master_seed;
  opt.threads = settings.threads;
  opt.record = record_rounds(c.rounds, c.metrics);

  RunReport report;
  report.beta = e.beta();
  const Vec x0(std::visit([](const auto& p) { return p.dimension(); }, e.problem), 0.0);
  try {
    std::visit(
        [&](const auto& oracle) {
          auto result = run(oracle, *e.mixing, e.attack, opt, x0, [&](const RoundTrace& tr) {
            MetricsRow row = compute_row(e, oracle, tr, lemma1_c);
            if (csv.is_open()) csv << to_csv(row) << '\n';
            report.rows.push_back(std::move(row));
          });
          report.checks = result.checks;
          report.final_states = std::move(result.final_states);
        },
        e.problem);
  } catch (...) {
    if (csv.is_open()) csv.flush();
    throw;
  }
  if (csv.is_open()) {
    csv.flush();
    if (!csv) fail(Errc::io_error, "failed writing " + settings.out_path);
  }

  for (const auto& r : report.rows)
    if (r.lemma1_bound) {
      const double m = *r.lemma1_bound - r.consensus_error;
      report.min_lemma1_margin = std::min(report.min_lemma1_margin.value_or(m), m);
    }
  std::vector<std::pair<double, double>> series;
  for (const auto& r : report.rows)
    if (r.t > 0) series.emplace_back(static_cast<double>(r.t), r.max_l2_error);
  try {
    if (series.size() >= 4) report.fitted_exponent = fit_rate_exponent(series, 0.5);
  } catch (const Error&) {
  }
  return report;
}

inline RunReport run_experiment(const ExperimentConfig& c, const RunSettings& settings) {
  Experiment e = build_experiment(c);
  const Diagnostics d = validate_experiment(e);
  if (!d.ok()) {
    std::ostringstream os;
    print_diagnostics(os, d);
    fail(Errc::precondition_violation, "config failed validation\n" + os.str());
  }
  return run_built_experiment(e, settings);
}

inline void print_summary(std::ostream& os, const RunReport& r) {
  if (r.rows.empty()) return;
  const auto& last = r.rows.back();
  os << "rounds: " << last.t << "  beta: " << fmt(r.beta, 8) << '\n';
  os << "final max_l2_error: " << fmt(last.max_l2_error) << '\n';
  os << "final consensus_error: " << fmt(last.consensus_error) << '\n';
  os << "final avg_subopt: " << fmt(last.avg_subopt) << '\n';
  if (last.avg_accuracy) os << "final avg_accuracy: " << fmt(*last.avg_accuracy) << '\n';
  os << "final mean_estimator_error: " << fmt(last.mean_estimator_error) << '\n';
  if (r.fitted_exponent) os << "fitted decay exponent of max_l2_error (tail 50%): " << fmt(*r.fitted_exponent) << '\n';
  if (r.min_lemma1_margin) os << "min consensus bound margin: " << fmt(*r.min_lemma1_margin) << '\n';
  if (r.checks.rounds_checked > 0) {
    if (std::isfinite(r.checks.max_clip_excess))
      os << "max ||k v|| - gamma: " << fmt(r.checks.max_clip_excess) << '\n';
    os << "max average-dynamics residual: " << fmt(r.checks.max_average_residual) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Tightness demo: 2m agents on a complete graph, honest objective x^2. Attacked
// agents report the gradient of (x - 1)^2, which makes rho = 1/2 = 1/(1 + kappa).

enum class DemoVariant { half_attacked, honest_control, all_attacked };

struct DemoSummary {
  DemoVariant variant = DemoVariant::half_attacked;
  std::size_t agents = 0;
  std::size_t attacked = 0;
  double kappa = 1.0;
  double rho = 0.0;
  double rho_bound = 0.5;
  double final_mean = 0.0;
  double final_spread = 0.0;  // max_i |x_i - mean|
  SelfChecks checks;
};

inline DemoSummary run_tightness_demo(std::size_t m, std::size_t rounds,
                                      DemoVariant variant = DemoVariant::half_attacked,
                                      unsigned threads = 1, double x0 = 1.0) {
  require(m >= 1, Errc::invalid_argument, "m must be positive");
  const std::size_t n = 2 * m;
  const LinearMeasurementProblem quad =
      make_linear_problem(Vec{0.0}, std::vector<std::vector<std::size_t>>(n, {0}), 0.0);
  std::vector<std::size_t> ids;
  if (variant == DemoVariant::half_attacked)
    for (std::size_t i = m; i < n; ++i) ids.push_back(i);
  if (variant == DemoVariant::all_attacked)
    for (std::size_t i = 0; i < n; ++i) ids.push_back(i);
  AttackSpec attack = make_attack(ids, ids.empty() ? AttackMode::none : AttackMode::custom);
  attack.custom = [](std::size_t, std::size_t, std::span<const double> x) {
    return Vec{2.0 * (x[0] - 1.0)};
  };

  const MixingMatrix w = metropolis_weights(build_complete(n));
  RunOptions opt;
  opt.algorithm = Algorithm::clipvrg;
  const long phi = min_phi(w.beta(), kOptimalTauAlpha, kOptimalTauGamma);
  opt.schedules = {{1.0, kOptimalTauAlpha, phi},
                   {1.0, kOptimalTauGamma, phi},
                   {1.0, derive_eta(kOptimalTauAlpha, kOptimalTauGamma), phi}};
  opt.rounds = rounds;
  opt.threads = threads;
  auto result = run(quad, w, attack, opt, Vec{x0}, [](const RoundTrace&) {});

  DemoSummary s;
  s.variant = variant;
  s.agents = n;
  s.attacked = ids.size();
  s.rho = static_cast<double>(ids.size()) / static_cast<double>(n);
  s.rho_bound = feasible_rho(s.kappa);
  s.final_mean = network_average(result.final_states)[0];
  for (const auto& st : result.final_states)
    s.final_spread = std::max(s.final_spread, std::abs(st.x[0] - s.final_mean));
  s.checks = result.checks;
  return s;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepParameter { attack_count, noise_std, tau_alpha, tau_gamma, seed };

inline SweepParameter parse_sweep_parameter(const std::string& s) {
  if (s == "attack_count") return SweepParameter::attack_count;
  if (s == "noise_std") return SweepParameter::noise_std;
  if (s == "tau_alpha") return SweepParameter::tau_alpha;
  if (s == "tau_gamma") return SweepParameter::tau_gamma;
  if (s == "seed") return SweepParameter::seed;
  fail(Errc::invalid_argument, "unknown sweep parameter '" + s + "'");
}

// A value is a number, or "a:b" for tau_alpha / tau_gamma meaning set both
// (tau_alpha = a, tau_gamma = b).
inline ExperimentConfig apply_sweep_value(ExperimentConfig c, SweepParameter p, const std::string& value) {
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      fail(Errc::invalid_argument, "bad sweep value '" + s + "'");
    }
  };
  switch (p) {
    case SweepParameter::attack_count:
      c.attack.ids.clear();
      c.attack.count = static_cast<std::size_t>(number(value));
      break;
    case SweepParameter::noise_std: c.grid.noise_std = number(value); break;
    case SweepParameter::seed: c.master_seed = static_cast<std::uint64_t>(std::stoull(value)); break;
    case SweepParameter::tau_alpha:
    case SweepParameter::tau_gamma: {
      c.algorithm.optimal_exponents = false;
      const auto colon = value.find(':');
      if (colon != std::string::npos) {
        c.algorithm.alpha.tau = number(value.substr(0, colon));
        c.algorithm.gamma.tau = number(value.substr(colon + 1));
      } else if (p == SweepParameter::tau_alpha) {
        c.algorithm.alpha.tau = number(value);
        if (!c.algorithm.gamma.tau) c.algorithm.gamma.tau = kOptimalTauGamma;
      } else {
        c.algorithm.gamma.tau = number(value);
        if (!c.algorithm.alpha.tau) c.algorithm.alpha.tau = kOptimalTauAlpha;
      }
      c.algorithm.eta.tau.reset();
      break;
    }
  }
  return c;
}

struct SweepEntry {
  std::string value;
  bool feasible = true;
  std::string status;  // "ok", or why the run was skipped
  std::string csv_path;
  std::optional<MetricsRow> final_row;
};

inline std::string sweep_file_name(const std::string& value) {
  std::string s;
  for (char ch : value) s += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-') ? ch : '_';
  return "run_" + s + ".csv";
}

// Comparison table of final metrics; with two or more completed runs, mean/min/max rows follow.
inline void write_sweep_table(std::ostream& os, const std::vector<SweepEntry>& entries) {
  os << "value,status," << kMetricsHeader << '\n';
  std::vector<const MetricsRow*> done;
  for (const auto& e : entries) {
    os << e.value << ',' << e.status << ',';
    if (e.final_row) {
      os << to_csv(*e.final_row);
      done.push_back(&*e.final_row);
    } else {
      os << ",,,,,,";
    }
    os << '\n';
  }
  if (done.size() < 2) return;
  using Field = std::optional<double>;
  auto fields = [](const MetricsRow& r) {
    return std::vector<Field>{static_cast<double>(r.t), r.max_l2_error, r.consensus_error, r.lemma1_bound,
                              r.avg_subopt, r.avg_accuracy, r.mean_estimator_error};
  };
  const std::size_t width = fields(*done.front()).size();
  for (const char* stat : {"mean", "min", "max"}) {
    os << stat << ",summary";
    for (std::size_t k = 0; k < width; ++k) {
      double acc = 0.0;
      std::size_t count = 0;
      for (const MetricsRow* r : done) {
        const Field f = fields(*r)[k];
        if (!f) continue;
        if (count == 0)
          acc = *f;
        else if (stat[1] == 'e')
          acc += *f;
        else if (stat[1] == 'i')
          acc = std::min(acc, *f);
        else
          acc = std::max(acc, *f);
        ++count;
      }
      os << ',';
      if (count > 0) os << format_number(stat[1] == 'e' ? acc / static_cast<double>(count) : acc);
    }
    os << '\n';
  }
}

// One run per value; infeasible values are reported and skipped. Writes
// <out_dir>/run_<value>.csv per run and <out_dir>/sweep_summary.csv.
inline std::vector<SweepEntry> sweep(const ExperimentConfig& base, SweepParameter param,
                                     const std::vector<std::string>& values, const std::string& out_dir,
                                     unsigned threads = 1) {
  std::vector<SweepEntry> entries;
  for (const auto& v : values) {
    SweepEntry entry;
    entry.value = v;
    const ExperimentConfig c = apply_sweep_value(base, param, v);
    Experiment e = build_experiment(c);
    const Diagnostics d = validate_experiment(e);
    if (!d.ok()) {
      entry.feasible = false;
      entry.status = "infeasible:";
      for (const auto& ch : d.checks)
        if (ch.status == CheckStatus::fail) entry.status += " " + ch.name;
      entries.push_back(std::move(entry));
      continue;
    }
    entry.csv_path = out_dir.empty() ? std::string() : (std::filesystem::path(out_dir) / sweep_file_name(v)).string();
    RunReport r = run_built_experiment(e, {threads, entry.csv_path});
    entry.status = "ok";
    if (!r.rows.empty()) entry.final_row = r.rows.back();
    entries.push_back(std::move(entry));
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const auto path = std::filesystem::path(out_dir) / "sweep_summary.csv";
    std::ofstream os(path);
    if (!os) fail(Errc::io_error, "cannot write " + path.string());
    write_sweep_table(os, entries);
  }
  return entries;
}

}  // namespace clipvrg
