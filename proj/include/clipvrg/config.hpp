#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "clipvrg/attack.hpp"
#include "clipvrg/datasets.hpp"
#include "clipvrg/engine.hpp"
#include "clipvrg/error.hpp"

namespace clipvrg {

// Experiment description, read from and written to JSON. See README.md for
// the schema.

enum class ProblemKind { grid_estimation, classification };
enum class TopologyKind { grid, geometric, cycle_k, complete };
enum class Cadence { log, every };

struct GridProblemConfig {
  std::size_t rows = 5;
  std::size_t cols = 5;
  double sensing_radius = 2.0;
  double theta_lo = -40.0;
  double theta_hi = 180.0;
  double noise_std = 3.1622776601683795;  // variance 10
  bool operator==(const GridProblemConfig&) const = default;
};

struct SyntheticDataConfig {
  std::size_t n_train = 1000;
  std::size_t n_test = 500;
  std::size_t d = 20;
  double margin = 2.0;
  SeparationDirection direction = SeparationDirection::random;
  bool operator==(const SyntheticDataConfig&) const = default;
};

struct ClassificationConfig {
  std::optional<SyntheticDataConfig> synthetic;
  std::string csv;          // used when `synthetic` is absent
  std::string holdout_csv;  // defaults to the training file
  double lambda = 0.1;
  std::size_t batch_size = 10;
  bool operator==(const ClassificationConfig&) const = default;
};

struct TopologyConfig {
  TopologyKind kind = TopologyKind::grid;
  double link_radius = 1.4142135623730951;  // grid
  std::size_t n = 0;                        // geometric, cycle_k, complete
  double radius = 0.2;                      // geometric
  std::size_t k = 2;                        // cycle_k
  std::optional<std::uint64_t> seed;        // geometric; derived from master seed if absent
  bool operator==(const TopologyConfig&) const = default;
};

struct ScheduleParams {
  double c = 1.0;
  std::optional<double> tau;  // eta: absent means tau_eta = 2 (tau_alpha + tau_gamma) / 3
  bool operator==(const ScheduleParams&) const = default;
};

struct AlgorithmConfig {
  Algorithm kind = Algorithm::clipvrg;
  bool optimal_exponents = false;  // overrides alpha.tau, gamma.tau with 5/6, 1/6
  ScheduleParams alpha{1.0, 0.82};
  ScheduleParams gamma{1.0, 0.17};
  ScheduleParams eta{1.0, std::nullopt};
  std::optional<long> phi;  // absent = "auto" (min_phi of the mixing matrix)
  bool operator==(const AlgorithmConfig&) const = default;
};

struct AttackConfig {
  AttackMode mode = AttackMode::none;
  std::optional<std::size_t> count;
  std::vector<std::size_t> ids;
  double value = 0.0;
  bool measured_support = true;  // grid problems: write the constant only on measured coordinates
  bool operator==(const AttackConfig&) const = default;
};

struct MetricsConfig {
  Cadence cadence = Cadence::log;
  std::size_t points_per_decade = 10;
  std::size_t interval = 100;
  std::optional<double> error_scale;  // defaults to n
  bool operator==(const MetricsConfig&) const = default;
};

struct ExperimentConfig {
  ProblemKind problem = ProblemKind::grid_estimation;
  GridProblemConfig grid;
  ClassificationConfig classification;
  TopologyConfig topology;
  AlgorithmConfig algorithm;
  AttackConfig attack;
  std::size_t rounds = 1000;
  std::uint64_t master_seed = 1;
  MetricsConfig metrics;
  std::string output = "run.csv";
  bool enforce_assumption7 = true;
  bool enforce_theorem1 = true;
  bool operator==(const ExperimentConfig&) const = default;
};

// ---------------------------------------------------------------------------
// JSON

namespace detail {

using json = nlohmann::json;

template <class T>
T get_or(const json& j, const char* key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(Errc::parse_error, where + "." + key + ": " + e.what());
  }
}

template <class T>
T get_required(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) fail(Errc::parse_error, where + ": missing '" + key + "'");
  return get_or<T>(j, key, where, T{});
}

inline const json& object_at(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) fail(Errc::parse_error, where + ": missing '" + key + "'");
  if (!j.at(key).is_object()) fail(Errc::parse_error, where + "." + key + ": expected an object");
  return j.at(key);
}

// "phi" may be an integer >= 1 or "auto"; returns whether the key was present.
inline bool parse_phi(const json& j, const std::string& where, std::optional<long>& out) {
  if (!j.contains("phi")) return false;
  const json& p = j.at("phi");
  if (p.is_string() && p.get<std::string>() == "auto")
    out.reset();
  else if (p.is_number_integer() && p.get<long>() >= 1)
    out = p.get<long>();
  else
    fail(Errc::parse_error, where + ".phi: expected a positive integer or \"auto\"");
  return true;
}

// Reads {c, tau, phi}. The offset is shared by all schedules, so a phi given
// here must agree with any phi seen before (`phi_seen`).
inline ScheduleParams parse_schedule(const json& j, const std::string& where, bool tau_optional,
                                     std::optional<long>& phi, bool& phi_seen) {
  if (!j.is_object()) fail(Errc::parse_error, where + ": expected {c, tau, phi}");
  ScheduleParams s;
  s.c = get_required<double>(j, "c", where);
  if (j.contains("tau")) {
    const json& t = j.at("tau");
    if (t.is_string() && t.get<std::string>() == "derive" && tau_optional)
      s.tau.reset();
    else if (t.is_number())
      s.tau = t.get<double>();
    else
      fail(Errc::parse_error, where + ".tau: expected a number" +
                                  std::string(tau_optional ? " or \"derive\"" : ""));
  } else if (!tau_optional) {
    fail(Errc::parse_error, where + ": missing 'tau'");
  }
  std::optional<long> local;
  if (parse_phi(j, where, local)) {
    if (phi_seen && local != phi)
      fail(Errc::parse_error, where + ".phi: all schedules share one offset phi");
    phi = local;
    phi_seen = true;
  }
  return s;
}

inline const char* to_string(ProblemKind k) {
  return k == ProblemKind::grid_estimation ? "grid-estimation" : "classification";
}

inline const char* to_string(TopologyKind k) {
  switch (k) {
    case TopologyKind::grid: return "grid";
    case TopologyKind::geometric: return "geometric";
    case TopologyKind::cycle_k: return "cycle_k";
    case TopologyKind::complete: return "complete";
  }
  return "grid";
}

inline AttackMode parse_attack_mode(const std::string& s, const std::string& where) {
  for (AttackMode m : {AttackMode::none, AttackMode::constant, AttackMode::sign_flip, AttackMode::zero})
    if (s == clipvrg::to_string(m)) return m;
  fail(Errc::parse_error, where + ": unknown attack mode '" + s + "'");
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using detail::get_or;
  using detail::get_required;
  using detail::object_at;
  if (!j.is_object()) fail(Errc::parse_error, "config: expected a JSON object");
  ExperimentConfig c;

  const auto& p = object_at(j, "problem", "config");
  const auto ptype = get_required<std::string>(p, "type", "problem");
  if (ptype == "grid-estimation") {
    c.problem = ProblemKind::grid_estimation;
    auto& g = c.grid;
    g.rows = get_required<std::size_t>(p, "rows", "problem");
    g.cols = get_required<std::size_t>(p, "cols", "problem");
    g.sensing_radius = get_or<double>(p, "sensing_radius", "problem", g.sensing_radius);
    if (p.contains("theta_range")) {
      const auto range = get_required<std::vector<double>>(p, "theta_range", "problem");
      if (range.size() != 2 || !(range[0] <= range[1]))
        fail(Errc::parse_error, "problem.theta_range: expected [lo, hi] with lo <= hi");
      g.theta_lo = range[0];
      g.theta_hi = range[1];
    }
    g.noise_std = get_or<double>(p, "noise_std", "problem", g.noise_std);
  } else if (ptype == "classification") {
    c.problem = ProblemKind::classification;
    auto& cl = c.classification;
    if (p.contains("synthetic")) {
      const auto& s = object_at(p, "synthetic", "problem");
      SyntheticDataConfig sc;
      sc.n_train = get_or<std::size_t>(s, "n_train", "problem.synthetic", sc.n_train);
      sc.n_test = get_or<std::size_t>(s, "n_test", "problem.synthetic", sc.n_test);
      sc.d = get_or<std::size_t>(s, "d", "problem.synthetic", sc.d);
      sc.margin = get_or<double>(s, "margin", "problem.synthetic", sc.margin);
      const auto dir = get_or<std::string>(s, "direction", "problem.synthetic", "random");
      if (dir != "random" && dir != "diagonal")
        fail(Errc::parse_error, "problem.synthetic.direction: expected \"random\" or \"diagonal\"");
      sc.direction = dir == "diagonal" ? SeparationDirection::diagonal : SeparationDirection::random;
      cl.synthetic = sc;
    } else {
      cl.csv = get_required<std::string>(p, "csv", "problem");
      cl.holdout_csv = get_or<std::string>(p, "holdout_csv", "problem", "");
    }
    cl.lambda = get_or<double>(p, "lambda", "problem", cl.lambda);
    cl.batch_size = get_or<std::size_t>(p, "batch_size", "problem", cl.batch_size);
  } else {
    fail(Errc::parse_error, "problem.type: unknown problem '" + ptype + "'");
  }

  const auto& t = object_at(j, "topology", "config");
  const auto ttype = get_required<std::string>(t, "type", "topology");
  auto& topo = c.topology;
  if (ttype == "grid") {
    topo.kind = TopologyKind::grid;
    topo.link_radius = get_or<double>(t, "link_radius", "topology", topo.link_radius);
  } else if (ttype == "geometric") {
    topo.kind = TopologyKind::geometric;
    topo.n = get_required<std::size_t>(t, "n", "topology");
    topo.radius = get_required<double>(t, "radius", "topology");
    if (t.contains("seed")) topo.seed = get_required<std::uint64_t>(t, "seed", "topology");
  } else if (ttype == "cycle_k") {
    topo.kind = TopologyKind::cycle_k;
    topo.n = get_required<std::size_t>(t, "n", "topology");
    topo.k = get_required<std::size_t>(t, "k", "topology");
  } else if (ttype == "complete") {
    topo.kind = TopologyKind::complete;
    topo.n = get_required<std::size_t>(t, "n", "topology");
  } else {
    fail(Errc::parse_error, "topology.type: unknown topology '" + ttype + "'");
  }

  const auto& a = object_at(j, "algorithm", "config");
  const auto atype = get_required<std::string>(a, "type", "algorithm");
  auto& alg = c.algorithm;
  bool phi_seen = detail::parse_phi(a, "algorithm", alg.phi);
  if (atype == "clipvrg") {
    alg.kind = Algorithm::clipvrg;
    alg.optimal_exponents =
        a.contains("exponents") && get_required<std::string>(a, "exponents", "algorithm") == "optimal";
    if (a.contains("exponents") && !alg.optimal_exponents)
      fail(Errc::parse_error, "algorithm.exponents: only \"optimal\" is recognized");
    alg.alpha = detail::parse_schedule(object_at(a, "alpha", "algorithm"), "algorithm.alpha",
                                       alg.optimal_exponents, alg.phi, phi_seen);
    alg.gamma = detail::parse_schedule(object_at(a, "gamma", "algorithm"), "algorithm.gamma",
                                       alg.optimal_exponents, alg.phi, phi_seen);
    alg.eta = detail::parse_schedule(object_at(a, "eta", "algorithm"), "algorithm.eta", true, alg.phi,
                                     phi_seen);
    if (alg.optimal_exponents) {
      alg.alpha.tau.reset();
      alg.gamma.tau.reset();
    }
  } else if (atype == "dsgd") {
    alg.kind = Algorithm::dsgd;
    alg.alpha = detail::parse_schedule(object_at(a, "alpha", "algorithm"), "algorithm.alpha", false,
                                       alg.phi, phi_seen);
    alg.gamma = {};
    alg.eta = {};
    if (!phi_seen) alg.phi = 1;
  } else {
    fail(Errc::parse_error, "algorithm.type: unknown algorithm '" + atype + "'");
  }

  if (j.contains("attack")) {
    const auto& at = object_at(j, "attack", "config");
    auto& ac = c.attack;
    ac.mode = detail::parse_attack_mode(get_or<std::string>(at, "mode", "attack", "none"), "attack.mode");
    if (at.contains("ids")) ac.ids = get_required<std::vector<std::size_t>>(at, "ids", "attack");
    if (at.contains("count")) ac.count = get_required<std::size_t>(at, "count", "attack");
    if (ac.count && !ac.ids.empty())
      fail(Errc::parse_error, "attack: give either 'count' or 'ids', not both");
    ac.value = get_or<double>(at, "value", "attack", 0.0);
    const auto support = get_or<std::string>(at, "support", "attack", "measured");
    if (support != "measured" && support != "all")
      fail(Errc::parse_error, "attack.support: expected \"measured\" or \"all\"");
    ac.measured_support = support == "measured";
  }

  c.rounds = get_required<std::size_t>(j, "rounds", "config");
  c.master_seed = get_or<std::uint64_t>(j, "master_seed", "config", c.master_seed);
  if (j.contains("metrics")) {
    const auto& m = object_at(j, "metrics", "config");
    const auto cadence = get_or<std::string>(m, "cadence", "metrics", "log");
    if (cadence == "log")
      c.metrics.cadence = Cadence::log;
    else if (cadence == "every")
      c.metrics.cadence = Cadence::every;
    else
      fail(Errc::parse_error, "metrics.cadence: expected \"log\" or \"every\"");
    c.metrics.points_per_decade =
        get_or<std::size_t>(m, "points_per_decade", "metrics", c.metrics.points_per_decade);
    c.metrics.interval = get_or<std::size_t>(m, "interval", "metrics", c.metrics.interval);
    if (m.contains("error_scale")) c.metrics.error_scale = get_required<double>(m, "error_scale", "metrics");
    if (c.metrics.points_per_decade == 0 || c.metrics.interval == 0)
      fail(Errc::parse_error, "metrics: cadence parameters must be positive");
  }
  c.output = get_or<std::string>(j, "output", "config", c.output);
  c.enforce_assumption7 = get_or<bool>(j, "enforce_assumption7", "config", true);
  c.enforce_theorem1 = get_or<bool>(j, "enforce_theorem1", "config", true);
  return c;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  using json = nlohmann::json;
  json j;
  json p;
  p["type"] = detail::to_string(c.problem);
  if (c.problem == ProblemKind::grid_estimation) {
    p["rows"] = c.grid.rows;
    p["cols"] = c.grid.cols;
    p["sensing_radius"] = c.grid.sensing_radius;
    p["theta_range"] = {c.grid.theta_lo, c.grid.theta_hi};
    p["noise_std"] = c.grid.noise_std;
  } else {
    const auto& cl = c.classification;
    if (cl.synthetic) {
      p["synthetic"] = {{"n_train", cl.synthetic->n_train},
                        {"n_test", cl.synthetic->n_test},
                        {"d", cl.synthetic->d},
                        {"margin", cl.synthetic->margin},
                        {"direction", cl.synthetic->direction == SeparationDirection::diagonal ? "diagonal" : "random"}};
    } else {
      p["csv"] = cl.csv;
      if (!cl.holdout_csv.empty()) p["holdout_csv"] = cl.holdout_csv;
    }
    p["lambda"] = cl.lambda;
    p["batch_size"] = cl.batch_size;
  }
  j["problem"] = p;

  json t;
  t["type"] = detail::to_string(c.topology.kind);
  switch (c.topology.kind) {
    case TopologyKind::grid: t["link_radius"] = c.topology.link_radius; break;
    case TopologyKind::geometric:
      t["n"] = c.topology.n;
      t["radius"] = c.topology.radius;
      if (c.topology.seed) t["seed"] = *c.topology.seed;
      break;
    case TopologyKind::cycle_k:
      t["n"] = c.topology.n;
      t["k"] = c.topology.k;
      break;
    case TopologyKind::complete: t["n"] = c.topology.n; break;
  }
  j["topology"] = t;

  auto sched = [](const ScheduleParams& s) {
    json o;
    o["c"] = s.c;
    if (s.tau)
      o["tau"] = *s.tau;
    else
      o["tau"] = "derive";
    return o;
  };
  json a;
  const auto& alg = c.algorithm;
  a["type"] = to_string(alg.kind);
  if (alg.phi)
    a["phi"] = *alg.phi;
  else
    a["phi"] = "auto";
  a["alpha"] = sched(alg.alpha);
  if (alg.kind == Algorithm::clipvrg) {
    if (alg.optimal_exponents) {
      a["exponents"] = "optimal";
      a["alpha"].erase("tau");
    }
    a["gamma"] = sched(alg.gamma);
    if (alg.optimal_exponents) a["gamma"].erase("tau");
    a["eta"] = sched(alg.eta);
  }
  j["algorithm"] = a;

  json at;
  at["mode"] = to_string(c.attack.mode);
  if (c.attack.count) at["count"] = *c.attack.count;
  if (!c.attack.ids.empty()) at["ids"] = c.attack.ids;
  at["value"] = c.attack.value;
  at["support"] = c.attack.measured_support ? "measured" : "all";
  j["attack"] = at;

  j["rounds"] = c.rounds;
  j["master_seed"] = c.master_seed;
  json m;
  m["cadence"] = c.metrics.cadence == Cadence::log ? "log" : "every";
  m["points_per_decade"] = c.metrics.points_per_decade;
  m["interval"] = c.metrics.interval;
  if (c.metrics.error_scale) m["error_scale"] = *c.metrics.error_scale;
  j["metrics"] = m;
  j["output"] = c.output;
  j["enforce_assumption7"] = c.enforce_assumption7;
  j["enforce_theorem1"] = c.enforce_theorem1;
  return j;
}

inline ExperimentConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(Errc::parse_error, std::string("config: ") + e.what());
  }
  return config_from_json(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline std::string serialize_config(const ExperimentConfig& c) { return config_to_json(c).dump(2); }

}  // namespace clipvrg
