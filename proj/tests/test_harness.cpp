#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ard/envs.hpp"
#include "ard/harness.hpp"
#include "ard/io.hpp"

using namespace ard;

namespace {

FeatureMap identity_features(int n_states, int n_actions) {
  FeatureMap map;
  map.n_states = n_states;
  map.n_actions = n_actions;
  map.dim = n_states * n_actions;
  map.features = Eigen::MatrixXd::Identity(map.dim, map.dim);
  map.validate();
  return map;
}

struct Instance {
  TabularMdp mdp;
  StochasticPolicy target;
  TrainingConfig cfg;
};

Instance make_instance(std::uint64_t seed, int n_states = 3, int n_actions = 2) {
  Rng rng(seed);
  Instance inst;
  inst.mdp = make_random_mdp(rng, n_states, n_actions, {.gamma = 0.85});
  inst.target = optimal_policy(inst.mdp, inst.mdp.base_reward);
  inst.cfg.total_episodes = 40;
  inst.cfg.reward_period = 5;
  inst.cfg.policy_period = 2;
  inst.cfg.eval_period = 10;
  inst.cfg.designer.features = identity_features(n_states, n_actions);
  inst.cfg.learner.alpha = 0.05;
  inst.cfg.master_seed = seed;
  return inst;
}

// Single-state mdp whose target advantages are exactly `advantage` (gamma=0,
// action 0 assumed best): A(a) = R(a) - R(0).
Instance advantage_chain(const Eigen::RowVectorXd& advantages) {
  Instance inst;
  inst.mdp.n_states = 1;
  inst.mdp.n_actions = static_cast<int>(advantages.size());
  inst.mdp.gamma = 0.0;
  inst.mdp.horizon = 10;
  inst.mdp.transition = Eigen::MatrixXd::Ones(inst.mdp.n_actions, 1);
  inst.mdp.initial_dist = Eigen::VectorXd::Ones(1);
  inst.mdp.base_reward = advantages;
  inst.mdp.terminal.assign(static_cast<size_t>(inst.mdp.n_actions), 0);
  inst.mdp.validate();
  inst.target = StochasticPolicy::Zero(1, inst.mdp.n_actions);
  inst.target(0, 0) = 1.0;
  return inst;
}

TabularMdp distinct_advantage_mdp(Rng& rng, int n_states, int n_actions,
                                  StochasticPolicy* target_out) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    const TabularMdp mdp = make_random_mdp(rng, n_states, n_actions,
                                           {.gamma = 0.9});
    const StochasticPolicy target = optimal_policy(mdp, mdp.base_reward);
    const ValueBundle values = policy_eval(mdp, mdp.base_reward, target);
    bool distinct = true;
    for (int s = 0; s < n_states && distinct; ++s)
      for (int a = 0; a < n_actions && distinct; ++a)
        for (int b = a + 1; b < n_actions; ++b)
          if (std::abs(values.adv(s, a) - values.adv(s, b)) < 1e-6) {
            distinct = false;
            break;
          }
    if (distinct) {
      *target_out = target;
      return mdp;
    }
  }
  throw std::runtime_error("no distinct-advantage mdp found");
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("ard_harness_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("degenerate redesign schedule reproduces the orig baseline") {
  Instance inst = make_instance(11);
  inst.cfg.reward_period = inst.cfg.total_episodes + 1;  // never redesigns
  RunRecord adaptive = run_adaptive(inst.mdp, inst.target, inst.cfg);
  const RunRecord orig =
      run_baseline(inst.mdp, inst.target, inst.cfg, BaselineKind::kOrig);
  CHECK(adaptive.designer_calls == 0);
  CHECK(adaptive.technique == "adaptive");
  CHECK(orig.technique == "orig");
  adaptive.technique = orig.technique;
  CHECK(run_records_identical(adaptive, orig));
}

TEST_CASE("redesign counter follows the schedule arithmetic") {
  Instance inst = make_instance(12);
  inst.cfg.total_episodes = 10;
  inst.cfg.reward_period = 5;
  const RunRecord record = run_adaptive(inst.mdp, inst.target, inst.cfg);
  CHECK(record.designer_calls == 2);

  // evaluation rows: episode 0, every eval_period, and the final episode
  Instance odd = make_instance(13);
  odd.cfg.total_episodes = 25;
  odd.cfg.eval_period = 10;
  const RunRecord rows = run_adaptive(odd.mdp, odd.target, odd.cfg);
  REQUIRE(rows.rows.size() == 4);
  CHECK(rows.rows[0].episode == 0);
  CHECK(rows.rows[1].episode == 10);
  CHECK(rows.rows[2].episode == 20);
  CHECK(rows.rows[3].episode == 25);
}

TEST_CASE("fixed seeds replay bit-identically, distinct seeds do not") {
  Instance inst = make_instance(14);
  inst.cfg.rollout_eval = true;  // exercise the evaluation rng stream too
  inst.cfg.eval_episodes = 5;
  const RunRecord first = run_adaptive(inst.mdp, inst.target, inst.cfg);
  const RunRecord second = run_adaptive(inst.mdp, inst.target, inst.cfg);
  CHECK(run_records_identical(first, second));

  inst.cfg.master_seed += 1;
  const RunRecord other = run_adaptive(inst.mdp, inst.target, inst.cfg);
  CHECK(!run_records_identical(first, other));

  const RunRecord indexed = run_adaptive(inst.mdp, inst.target, inst.cfg, 3);
  CHECK(indexed.run_index == 3);
  CHECK(!run_records_identical(other, indexed));
}

TEST_CASE("orig trains on the base reward, invar designs once and freezes") {
  Instance inst = make_instance(15);
  inst.cfg.snapshot_period = 10;
  const RunRecord orig =
      run_baseline(inst.mdp, inst.target, inst.cfg, BaselineKind::kOrig);
  const std::string base_hash = hash_vector(flatten_table(inst.mdp.base_reward));
  for (const EvalRow& row : orig.rows) CHECK(row.reward_hash == base_hash);
  for (const Snapshot& snap : orig.snapshots)
    CHECK((snap.reward.array() == inst.mdp.base_reward.array()).all());

  const RunRecord invar =
      run_baseline(inst.mdp, inst.target, inst.cfg, BaselineKind::kInvar);
  CHECK(invar.designer_calls == 1);
  REQUIRE(!invar.rows.empty());
  const std::string invar_hash = invar.rows.front().reward_hash;
  for (const EvalRow& row : invar.rows) CHECK(row.reward_hash == invar_hash);
  CHECK(verify_policy_invariance(inst.mdp, inst.mdp.base_reward, inst.target,
                                 invar.snapshots.back().reward)
            .pass);
}

TEST_CASE("external baseline fed the base reward matches orig exactly") {
  Instance inst = make_instance(16);
  inst.cfg.external_reward = inst.mdp.base_reward;
  RunRecord external =
      run_baseline(inst.mdp, inst.target, inst.cfg, BaselineKind::kExternal);
  const RunRecord orig =
      run_baseline(inst.mdp, inst.target, inst.cfg, BaselineKind::kOrig);
  CHECK(external.technique == "external");
  external.technique = orig.technique;
  CHECK(run_records_identical(external, orig));

  inst.cfg.external_reward = Eigen::MatrixXd::Zero(1, 1);
  CHECK_THROWS_WITH_AS(
      run_baseline(inst.mdp, inst.target, inst.cfg, BaselineKind::kExternal),
      doctest::Contains("external_reward"), std::invalid_argument);
}

TEST_CASE("every adaptive redesign passes the invariance check") {
  Instance inst = make_instance(17, 4, 3);
  inst.cfg.total_episodes = 30;
  inst.cfg.reward_period = 5;
  inst.cfg.snapshot_period = 5;  // snapshot right at each redesign episode
  const RunRecord record = run_adaptive(inst.mdp, inst.target, inst.cfg);
  CHECK(record.designer_calls == 6);
  REQUIRE(record.snapshots.size() >= 6);
  for (const Snapshot& snap : record.snapshots) {
    const InvarianceReport report = verify_policy_invariance(
        inst.mdp, inst.mdp.base_reward, inst.target, snap.reward);
    CHECK(report.pass);
  }
}

TEST_CASE("suboptimal targets are rejected unless weak-target mode is on") {
  Instance inst = make_instance(18);
  const StochasticPolicy uniform =
      uniform_policy(inst.mdp.n_states, inst.mdp.n_actions);
  CHECK_THROWS_WITH_AS(run_adaptive(inst.mdp, uniform, inst.cfg),
                       doctest::Contains("not optimal"), std::invalid_argument);
  inst.cfg.weak_target = true;
  const RunRecord record = run_adaptive(inst.mdp, uniform, inst.cfg);
  CHECK(record.rows.size() >= 2);
}

TEST_CASE("infeasible designs abort with a reproducible diagnostic") {
  Instance inst = make_instance(19);
  inst.cfg.designer.support = std::vector<int>{};  // pin every phi to zero
  try {
    run_adaptive(inst.mdp, inst.target, inst.cfg);
    FAIL("expected DesignInfeasible");
  } catch (const DesignInfeasible& e) {
    CHECK(std::string(e.what()).find("episode 5") != std::string::npos);
    CHECK(e.diagnostic.find("z-values") != std::string::npos);
    CHECK(e.diagnostic.find("ard-lp v1") != std::string::npos);
  }
}

TEST_CASE("theorem-1 loop: worst case eliminates one action per round") {
  // the mean of surviving advantages always straddles exactly the worst one
  const Eigen::RowVectorXd advantages =
      (Eigen::RowVectorXd(4) << 0.0, -1.0, -2.5, -7.0).finished();
  const Instance inst = advantage_chain(advantages);
  const Theorem1Report report =
      theorem1_experiment(inst.mdp, inst.target, 1.0, 10);
  CHECK(report.converged);
  CHECK(report.within_action_bound);
  CHECK(report.converged_round == 3);  // |A| - 1 eliminations
  REQUIRE(report.target_argmax.size() == 1);
  CHECK(report.target_argmax[0] == std::vector<int>{0});
  REQUIRE(report.round_supports.size() == 3);
  CHECK(report.round_supports[0][0] == std::vector<int>{0, 1, 2});
  CHECK(report.round_supports[1][0] == std::vector<int>{0, 1});
  CHECK(report.round_supports[2][0] == std::vector<int>{0});
  CHECK(report.trace.find("round 3") != std::string::npos);

  // single elimination: only the best action sits above the uniform mean
  const Eigen::RowVectorXd oneshot =
      (Eigen::RowVectorXd(4) << 0.0, -3.0, -3.0, -3.0).finished();
  const Instance quick = advantage_chain(oneshot);
  const Theorem1Report fast =
      theorem1_experiment(quick.mdp, quick.target, 1.0, 10);
  CHECK(fast.converged);
  CHECK(fast.converged_round == 1);
}

TEST_CASE("theorem-1 loop converges within |A| rounds on random mdps") {
  Rng rng(777);
  int two_action = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int n_states = 2 + rng.uniform_int(5);   // up to 6
    const int n_actions = 2 + rng.uniform_int(4);  // up to 5
    StochasticPolicy target;
    const TabularMdp mdp =
        distinct_advantage_mdp(rng, n_states, n_actions, &target);
    const Theorem1Report report =
        theorem1_experiment(mdp, target, 1.0, n_actions + 3);
    CHECK(report.converged);
    CHECK(report.within_action_bound);
    if (n_actions == 2) {
      ++two_action;
      CHECK(report.converged_round <= 2);
    }
  }
  CHECK(two_action > 0);
}

TEST_CASE("episodes-to-threshold statistics and censoring") {
  const auto make_record = [](std::vector<double> curve, double target) {
    RunRecord record;
    record.technique = "probe";
    record.target_value = target;
    for (size_t i = 0; i < curve.size(); ++i)
      record.rows.push_back({static_cast<int>(10 * i), curve[i], 0.0, 0.0, "h"});
    return record;
  };

  const RunRecord slow = make_record({0.0, 2.0, 5.0, 9.5, 9.8}, 10.0);
  const RunRecord fast = make_record({0.0, 9.2, 9.6, 9.9, 10.0}, 10.0);
  CHECK(episodes_to_threshold(slow, 0.9) == 30.0);
  CHECK(episodes_to_threshold(fast, 0.9) == 10.0);
  CHECK(episodes_to_threshold(fast, 0.9) <= episodes_to_threshold(slow, 0.9));
  const RunRecord never = make_record({0.0, 1.0, 2.0, 3.0, 4.0}, 10.0);
  CHECK(episodes_to_threshold(never, 0.9) == 41.0);  // censored at last+1

  CompareSummary summary = compare_runs({slow, slow, fast, never}, 0.9);
  CHECK(summary.threshold_value == doctest::Approx(9.0));
  REQUIRE(summary.techniques.size() == 1);
  const TechniqueStats& stats = summary.techniques[0];
  CHECK(stats.episodes == std::vector<double>{30.0, 30.0, 10.0, 41.0});
  CHECK(stats.censored == 1);
  // sorted {10,30,30,41}: interpolated quartiles
  CHECK(stats.median == doctest::Approx(30.0));
  CHECK(stats.q1 == doctest::Approx(25.0));
  CHECK(stats.q3 == doctest::Approx(32.75));
  CHECK(stats.mean == doctest::Approx((30.0 + 30.0 + 10.0 + 41.0) / 4));

  RunRecord mismatched = fast;
  mismatched.target_value = 5.0;
  CHECK_THROWS_WITH_AS(compare_runs({slow, mismatched}, 0.9),
                       doctest::Contains("target value"),
                       std::invalid_argument);

  const std::vector<double> sorted{1.0, 2.0, 3.0, 4.0};
  CHECK(linear_quantile(sorted, 0.5) == doctest::Approx(2.5));
  CHECK(linear_quantile(sorted, 0.25) == doctest::Approx(1.75));
  CHECK(linear_quantile(sorted, 0.75) == doctest::Approx(3.25));
  CHECK(linear_quantile(sorted, 0.0) == 1.0);
  CHECK(linear_quantile(sorted, 1.0) == 4.0);
}

TEST_CASE("manifest and convergence files round-trip") {
  RunManifest manifest;
  manifest.technique = "adaptive";
  manifest.master_seed = 123456789012345ULL;
  manifest.run_index = 7;
  manifest.config_text = "{\n  # a comment line\n  \"k\": 1\n\n}";
  std::ostringstream out;
  write_manifest(out, manifest);
  std::istringstream in(out.str());
  const RunManifest parsed = read_manifest(in);
  CHECK(parsed.code_version == std::string(kCodeVersion));
  CHECK(parsed.technique == manifest.technique);
  CHECK(parsed.master_seed == manifest.master_seed);
  CHECK(parsed.run_index == manifest.run_index);
  CHECK(parsed.config_text == manifest.config_text + "\n");

  std::istringstream bad_magic("ard-manifest v2\nend\n");
  CHECK_THROWS_WITH_AS(read_manifest(bad_magic),
                       doctest::Contains("ard-manifest"), std::runtime_error);
  std::istringstream unknown("ard-manifest v1\nflavor vanilla\nend\n");
  CHECK_THROWS_WITH_AS(read_manifest(unknown), doctest::Contains("flavor"),
                       std::runtime_error);
  std::istringstream unclosed("ard-manifest v1\nconfig_begin\n{}\n");
  CHECK_THROWS_WITH_AS(read_manifest(unclosed), doctest::Contains("config"),
                       std::runtime_error);

  RunRecord record;
  record.rows.push_back({0, 0.12345678901234567, 0.0, 0.0, "abc123"});
  record.rows.push_back({10, -3.5e-7, 0.25, 1.75, "def456"});
  std::ostringstream csv;
  write_convergence_csv(csv, record);
  std::istringstream csv_in(csv.str());
  const std::vector<EvalRow> rows = read_convergence_csv(csv_in);
  REQUIRE(rows.size() == 2);
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].episode == record.rows[i].episode);
    CHECK(rows[i].mean_j == record.rows[i].mean_j);
    CHECK(rows[i].stderr_j == record.rows[i].stderr_j);
    CHECK(rows[i].objective == record.rows[i].objective);
    CHECK(rows[i].reward_hash == record.rows[i].reward_hash);
  }
  std::istringstream bad_header("# ard.convergence.v2\n");
  CHECK_THROWS_WITH_AS(read_convergence_csv(bad_header),
                       doctest::Contains("convergence"), std::runtime_error);
}

TEST_CASE("save_run lays out manifest, curve, and snapshots") {
  const TempDir tmp("save");
  Instance inst = make_instance(20);
  inst.cfg.snapshot_period = 20;
  const RunRecord record = run_adaptive(inst.mdp, inst.target, inst.cfg);
  RunManifest manifest;
  manifest.technique = record.technique;
  manifest.master_seed = record.master_seed;
  manifest.run_index = record.run_index;
  manifest.config_text = "{\"total_episodes\": 40}";
  const std::string dir = (tmp.path / "run0").string();
  save_run(dir, manifest, record);

  std::ifstream manifest_in(dir + "/manifest.txt");
  REQUIRE(manifest_in.good());
  const RunManifest reloaded = read_manifest(manifest_in);
  CHECK(reloaded.technique == "adaptive");
  CHECK(reloaded.master_seed == inst.cfg.master_seed);

  std::ifstream csv_in(dir + "/convergence.csv");
  REQUIRE(csv_in.good());
  const std::vector<EvalRow> rows = read_convergence_csv(csv_in);
  REQUIRE(rows.size() == record.rows.size());
  CHECK(rows.back().mean_j == record.rows.back().mean_j);

  const Eigen::MatrixXd final_reward = load_table(dir + "/reward_final.txt");
  CHECK((final_reward.array() == record.snapshots.back().reward.array()).all());
  const Eigen::MatrixXd final_policy = load_table(dir + "/policy_final.txt");
  CHECK((final_policy.array() == record.snapshots.back().policy.array()).all());
  CHECK(std::filesystem::exists(dir + "/reward_000020.txt"));
  CHECK(std::filesystem::exists(dir + "/policy_000040.txt"));
}

TEST_CASE("compare summary serializes as versioned structured text") {
  RunRecord a;
  a.technique = "adaptive";
  a.target_value = 4.0;
  a.rows.push_back({0, 0.0, 0.0, 0.0, "h0"});
  a.rows.push_back({10, 3.9, 0.0, 0.0, "h1"});
  RunRecord b = a;
  b.technique = "orig";
  b.rows[1].mean_j = 1.0;
  const CompareSummary summary = compare_runs({a, b}, 0.9);
  std::ostringstream out;
  write_compare_summary(out, summary);
  const std::string text = out.str();
  CHECK(text.find("ard-compare v1") == 0);
  CHECK(text.find("technique adaptive runs 1 censored 0") != std::string::npos);
  CHECK(text.find("technique orig runs 1 censored 1") != std::string::npos);
  CHECK(text.rfind("end\n") == text.size() - 4);
}

TEST_CASE("diverse initial logits perturb only designated states") {
  Instance inst = make_instance(21, 5, 3);
  Rng rng(42);
  const Eigen::MatrixXd theta = diverse_initial_theta(
      inst.mdp, inst.target, {0, 2}, 0.7, rng);
  REQUIRE(theta.rows() == 5);
  CHECK(theta.array().isFinite().all());
  SoftmaxPolicy policy{theta};
  const StochasticPolicy probs = policy.probabilities();
  for (int s = 0; s < 5; ++s) {
    CHECK(probs.row(s).sum() == doctest::Approx(1.0).epsilon(1e-12));
    if (s != 0 && s != 2)
      for (int a = 0; a < 3; ++a)
        CHECK(probs(s, a) == doctest::Approx(1.0 / 3).epsilon(1e-9));
  }
  // designated states put extra mass on actions the target avoids
  for (const int s : {0, 2}) {
    int target_action = 0;
    inst.target.row(s).maxCoeff(&target_action);
    CHECK(probs(s, target_action) < 1.0 / 3);
  }

  // empty designation falls back to uniform logits
  Rng rng2(43);
  const Eigen::MatrixXd flat =
      diverse_initial_theta(inst.mdp, inst.target, {}, 0.7, rng2);
  CHECK((flat.array() == 0.0).all());

  // different draws designate different subsets across five variants
  bool any_difference = false;
  Eigen::MatrixXd previous;
  for (int variant = 0; variant < 5; ++variant) {
    Rng vr = stream_rng(9, variant, "init");
    const Eigen::MatrixXd candidate = diverse_initial_theta(
        inst.mdp, inst.target, {0, 1, 2, 3, 4}, 0.5, vr);
    if (variant > 0 && (candidate - previous).cwiseAbs().maxCoeff() > 0)
      any_difference = true;
    previous = candidate;
  }
  CHECK(any_difference);
}

TEST_CASE("room environment smoke run keeps the invariants") {
  RoomConfig room_cfg;
  const RoomEnv env = build_room(room_cfg);
  const StochasticPolicy target = optimal_policy(env.mdp, env.mdp.base_reward);
  TrainingConfig cfg;
  cfg.total_episodes = 50;
  cfg.reward_period = 10;
  cfg.policy_period = 2;
  cfg.eval_period = 25;
  cfg.designer.features = env.features;
  cfg.designer.r_max = room_cfg.r_max;
  cfg.learner.alpha = 0.01;
  cfg.master_seed = 3;
  const RunRecord record = run_adaptive(env.mdp, target, cfg);
  CHECK(record.designer_calls == 5);
  CHECK(record.target_value > 0.0);
  REQUIRE(record.rows.size() == 3);
  for (const EvalRow& row : record.rows) {
    CHECK(std::isfinite(row.mean_j));
    CHECK(!row.reward_hash.empty());
  }
  CHECK(verify_policy_invariance(env.mdp, env.mdp.base_reward, target,
                                 record.snapshots.back().reward)
            .pass);
}
