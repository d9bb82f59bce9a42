#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "clipvrg/config.hpp"
#include "clipvrg/experiment.hpp"

using namespace clipvrg;

namespace {

const std::string kConfigDir = CLIPVRG_CONFIG_DIR;

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "clipvrg_config_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

ExperimentConfig small_grid(std::size_t rounds = 300) {
  auto c = load_config(kConfigDir + "/grid_desk.json");
  c.rounds = rounds;
  return c;
}

void expect_parse_error(const std::string& text, const std::string& where) {
  try {
    parse_config(text);
    ADD_FAILURE() << "accepted: " << text;
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::parse_error);
    EXPECT_NE(std::string(e.what()).find(where), std::string::npos) << e.what();
  }
}

const char* kMinimal = R"({
  "problem": {"type": "grid-estimation", "rows": 3, "cols": 3},
  "topology": {"type": "grid"},
  "algorithm": {"type": "clipvrg", "exponents": "optimal", "alpha": {"c": 1}, "gamma": {"c": 5}, "eta": {"c": 1}},
  "rounds": 10
})";

}  // namespace

TEST(Config, ShippedConfigsRoundTrip) {
  for (const auto& entry : std::filesystem::directory_iterator(kConfigDir)) {
    if (entry.path().extension() != ".json") continue;
    const auto c = load_config(entry.path().string());
    const auto again = parse_config(serialize_config(c));
    EXPECT_EQ(c, again) << entry.path();
    EXPECT_EQ(serialize_config(again), serialize_config(c));
  }
}

TEST(Config, VariantsRoundTrip) {
  auto c = parse_config(kMinimal);
  EXPECT_TRUE(c.algorithm.optimal_exponents);
  EXPECT_FALSE(c.algorithm.phi.has_value());
  std::vector<ExperimentConfig> variants{c};
  c.topology.kind = TopologyKind::geometric;
  c.topology.n = 9;
  c.topology.radius = 0.6;
  c.topology.seed = 4;
  c.attack.mode = AttackMode::sign_flip;
  c.attack.ids = {1, 5};
  c.metrics.cadence = Cadence::every;
  c.metrics.interval = 3;
  c.metrics.error_scale = 2.5;
  c.algorithm.phi = 6;
  c.enforce_theorem1 = false;
  variants.push_back(c);
  c.problem = ProblemKind::classification;
  c.grid = {};
  c.classification.synthetic = SyntheticDataConfig{40, 20, 3, 1.5, SeparationDirection::diagonal};
  c.topology = {};
  c.topology.kind = TopologyKind::cycle_k;
  c.topology.n = 9;
  c.topology.k = 4;
  c.algorithm.kind = Algorithm::dsgd;
  c.algorithm.alpha = {22.0, 1.0};
  c.algorithm.gamma = {};
  c.algorithm.eta = {};
  c.algorithm.optimal_exponents = false;
  variants.push_back(c);
  c.classification.synthetic.reset();
  c.classification.csv = "train.csv";
  c.classification.holdout_csv = "test.csv";
  c.attack.mode = AttackMode::constant;
  c.attack.ids.clear();
  c.attack.count = 2;
  c.attack.measured_support = false;
  variants.push_back(c);
  for (const auto& v : variants) EXPECT_EQ(parse_config(serialize_config(v)), v);
}

TEST(Config, ParseErrorsCarryALocation) {
  expect_parse_error("[1, 2]", "config");
  expect_parse_error("{not json", "parse");
  expect_parse_error(R"({"topology": {"type": "grid"}, "rounds": 1})", "problem");
  expect_parse_error(R"({"problem": {"type": "grid-estimation", "rows": "five", "cols": 3},
    "topology": {"type": "grid"}, "algorithm": {"type": "dsgd", "alpha": {"c": 1, "tau": 1}}, "rounds": 1})",
                     "problem.rows");
  expect_parse_error(R"({"problem": {"type": "grid-estimation", "rows": 3, "cols": 3},
    "topology": {"type": "torus"}, "algorithm": {"type": "dsgd", "alpha": {"c": 1, "tau": 1}}, "rounds": 1})",
                     "topology.type");
  expect_parse_error(R"({"problem": {"type": "grid-estimation", "rows": 3, "cols": 3},
    "topology": {"type": "grid"}, "algorithm": {"type": "clipvrg", "alpha": {"c": 1, "tau": 0.8, "phi": 2},
    "gamma": {"c": 1, "tau": 0.1, "phi": 3}, "eta": {"c": 1}}, "rounds": 1})",
                     "algorithm.gamma.phi");
  expect_parse_error(R"({"problem": {"type": "grid-estimation", "rows": 3, "cols": 3},
    "topology": {"type": "grid"}, "algorithm": {"type": "dsgd", "alpha": {"c": 1, "tau": 1}},
    "attack": {"mode": "teleport"}, "rounds": 1})",
                     "attack.mode");
}

TEST(Config, MissingFileIsAnIoError) {
  try {
    load_config("/nonexistent/config.json");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::io_error);
  }
}

TEST(Validate, FullScaleGridPasses) {
  const auto d = validate_config(load_config(kConfigDir + "/grid_625.json"));
  EXPECT_TRUE(d.ok());
  ASSERT_TRUE(d.conditioning.has_value());
  EXPECT_GE(d.conditioning->kappa, 4.0);
  EXPECT_LE(d.conditioning->kappa, 4.7);
  EXPECT_GT(d.max_attacked, 100u);
  EXPECT_EQ(d.find("assumption7")->status, CheckStatus::pass);
  EXPECT_EQ(d.find("lemma1_phi")->status, CheckStatus::warn);
  EXPECT_NEAR(d.beta, 0.99481382, 1e-8);
}

TEST(Validate, TooManyAttackedAgentsFails) {
  auto c = load_config(kConfigDir + "/grid_625.json");
  c.attack.count = 130;
  const auto d = validate_config(c);
  EXPECT_FALSE(d.ok());
  EXPECT_EQ(d.find("assumption7")->status, CheckStatus::fail);
  EXPECT_LT(d.max_attacked, 130u);
  c.enforce_assumption7 = false;
  const auto relaxed = validate_config(c);
  EXPECT_TRUE(relaxed.ok());
  EXPECT_EQ(relaxed.find("assumption7")->status, CheckStatus::warn);
}

TEST(Validate, ExponentViolationIsNamed) {
  auto c = small_grid();
  c.algorithm.alpha.tau = 0.5;
  c.algorithm.gamma.tau = 0.3;
  const auto d = validate_config(c);
  EXPECT_FALSE(d.ok());
  const Check* th = d.find("theorem1_exponents");
  ASSERT_NE(th, nullptr);
  EXPECT_EQ(th->status, CheckStatus::fail);
  EXPECT_NE(th->detail.find("2*tau_gamma < tau_alpha"), std::string::npos);
}

TEST(Validate, InconsistentEtaExponentFailsWhenEnforced) {
  auto c = small_grid();
  c.algorithm.eta.tau = 0.5;
  EXPECT_EQ(validate_config(c).find("theorem1_eta")->status, CheckStatus::fail);
  c.enforce_theorem1 = false;
  EXPECT_EQ(validate_config(c).find("theorem1_eta")->status, CheckStatus::warn);
}

TEST(Validate, DisconnectedGraphFails) {
  auto c = small_grid();
  c.topology.kind = TopologyKind::geometric;
  c.topology.n = 25;
  c.topology.radius = 0.0;
  c.topology.seed = 1;
  c.attack.count = 0;
  EXPECT_EQ(validate_config(c).find("connectivity")->status, CheckStatus::fail);
}

TEST(Validate, DeskConfigsPass) {
  for (const char* name : {"grid_desk.json", "grid_desk_dsgd.json", "classification_desk.json",
                           "classification_desk_dsgd.json", "grid_noattack_optimal.json"}) {
    const auto d = validate_config(load_config(kConfigDir + "/" + name));
    std::ostringstream os;
    print_diagnostics(os, d);
    EXPECT_TRUE(d.ok()) << name << "\n" << os.str();
  }
}

TEST(RecordRounds, IncludesEndpoints) {
  MetricsConfig m;
  const auto r = record_rounds(1000, m);
  EXPECT_EQ(r.front(), 0u);
  EXPECT_EQ(r.back(), 1000u);
  EXPECT_TRUE(std::is_sorted(r.begin(), r.end()));
  EXPECT_NE(std::find(r.begin(), r.end(), 100u), r.end());
  m.cadence = Cadence::every;
  m.interval = 300;
  EXPECT_EQ(record_rounds(1000, m), (std::vector<std::size_t>{0, 300, 600, 900, 1000}));
  EXPECT_EQ(record_rounds(0, m), std::vector<std::size_t>{0});
}

TEST(RunExperiment, WritesTheCsvAndIsDeterministic) {
  auto c = small_grid(500);
  const auto a = scratch("a.csv"), b = scratch("b.csv"), t = scratch("threads.csv");
  const auto ra = run_experiment(c, {1, a.string()});
  run_experiment(c, {1, b.string()});
  run_experiment(c, {3, t.string()});
  const std::string text = read_file(a);
  EXPECT_EQ(text.substr(0, text.find('\n')), kMetricsHeader);
  std::size_t lines = 0;
  for (char ch : text) lines += ch == '\n';
  EXPECT_EQ(lines, 1 + record_rounds(500, c.metrics).size());
  EXPECT_EQ(text, read_file(b));
  EXPECT_EQ(text, read_file(t));
  ASSERT_FALSE(ra.rows.empty());
  EXPECT_TRUE(ra.rows.back().lemma1_bound.has_value());
  EXPECT_GE(*ra.min_lemma1_margin, -1e-10);
  c.master_seed += 1;
  run_experiment(c, {1, b.string()});
  EXPECT_NE(text, read_file(b));
}

TEST(RunExperiment, SeedOverrideAndInvalidConfig) {
  auto c = small_grid(10);
  c.attack.count = 20;
  try {
    run_experiment(c, {1, ""});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::precondition_violation);
  }
}

TEST(RunExperiment, PartialCsvSurvivesAFailure) {
  auto c = small_grid(400);
  Experiment e = build_experiment(c);
  e.attack.mode = AttackMode::custom;
  e.attack.custom = [](std::size_t, std::size_t t, std::span<const double> x) {
    Vec out(x.size(), 1.0);
    if (t == 150) out[0] = INFINITY;
    return out;
  };
  const auto path = scratch("partial.csv");
  try {
    run_built_experiment(e, {1, path.string()});
    ADD_FAILURE();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::attack_output_invalid);
    EXPECT_NE(std::string(err.what()).find("round 150"), std::string::npos);
  }
  const std::string text = read_file(path);
  EXPECT_EQ(text.substr(0, text.find('\n')), kMetricsHeader);
  EXPECT_NE(text.find("\n100,"), std::string::npos);
}

TEST(RunExperiment, ClassificationReportsAccuracy) {
  auto c = load_config(kConfigDir + "/classification_desk.json");
  c.rounds = 200;
  c.attack = {};
  const auto r = run_experiment(c, {1, ""});
  for (const auto& row : r.rows) ASSERT_TRUE(row.avg_accuracy.has_value());
  EXPECT_GT(*r.rows.back().avg_accuracy, 0.9);
}

TEST(Sweep, SeedsWriteOneCsvEachAndASummary) {
  const auto dir = scratch("seed_sweep");
  std::filesystem::remove_all(dir);
  const auto entries = sweep(small_grid(200), SweepParameter::seed, {"1", "2", "3", "4", "5"}, dir.string());
  ASSERT_EQ(entries.size(), 5u);
  for (const auto& e : entries) {
    EXPECT_EQ(e.status, "ok");
    EXPECT_TRUE(std::filesystem::exists(e.csv_path));
  }
  const std::string summary = read_file(dir / "sweep_summary.csv");
  for (const char* tag : {"\nmean,summary,", "\nmin,summary,", "\nmax,summary,"})
    EXPECT_NE(summary.find(tag), std::string::npos) << tag;
}

TEST(Sweep, AttackCountBeyondTheThresholdIsFlagged) {
  auto c = small_grid(100);
  const auto d = validate_config(c);
  const std::size_t bmax = d.max_attacked;
  ASSERT_GE(bmax, 1u);
  const auto entries = sweep(c, SweepParameter::attack_count,
                             {"0", std::to_string(bmax - 1), std::to_string(bmax + 10)}, "");
  ASSERT_EQ(entries.size(), 3u);
  EXPECT_TRUE(entries[0].feasible);
  EXPECT_TRUE(entries[1].feasible);
  EXPECT_FALSE(entries[2].feasible);
  EXPECT_NE(entries[2].status.find("assumption7"), std::string::npos);
}

TEST(Sweep, TauPairsPassValidation) {
  const auto entries =
      sweep(small_grid(50), SweepParameter::tau_alpha, {"0.8333333333333334:0.16666666666666666", "0.82:0.17"}, "");
  for (const auto& e : entries) EXPECT_TRUE(e.feasible) << e.value << " " << e.status;
  try {
    sweep(small_grid(5), SweepParameter::noise_std, {"abc"}, "");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_argument);
  }
}

TEST(TightnessDemo, Variants) {
  const auto control = run_tightness_demo(3, 20000, DemoVariant::honest_control);
  EXPECT_LT(std::abs(control.final_mean), 1e-3);
  const auto all = run_tightness_demo(3, 20000, DemoVariant::all_attacked);
  EXPECT_NEAR(all.final_mean, 1.0, 1e-3);
  const auto half = run_tightness_demo(3, 20000, DemoVariant::half_attacked);
  EXPECT_EQ(half.attacked, 3u);
  EXPECT_DOUBLE_EQ(half.rho, half.rho_bound);
  EXPECT_GE(std::abs(half.final_mean), 0.1);
}
