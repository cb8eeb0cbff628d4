// ard: design explicable rewards, train learners against them, and verify
// every library invariant.  Exit codes: 0 success, 1 validation error,
// 2 infeasible design, 3 property violation.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ard/config.hpp"
#include "ard/designer.hpp"
#include "ard/harness.hpp"
#include "ard/informativeness.hpp"
#include "ard/io.hpp"
#include "ard/verify.hpp"

namespace {

using namespace ard;

constexpr int kOk = 0;
constexpr int kValidationError = 1;
constexpr int kInfeasibleDesign = 2;
constexpr int kPropertyViolation = 3;

// Config text for a command, either from a config file or recovered verbatim
// from a previous run's manifest.
struct Source {
  std::string config_text;
  RunManifest manifest;
  bool replay = false;
};

Source resolve_source(const std::string& config_path,
                      const std::string& replay_path, bool allow_default) {
  Source src;
  if (!config_path.empty() && !replay_path.empty())
    throw std::invalid_argument("pass --config or --replay, not both");
  if (!replay_path.empty()) {
    std::ifstream in(replay_path);
    if (!in) throw std::runtime_error("cannot open manifest '" + replay_path + "'");
    src.manifest = read_manifest(in);
    src.config_text = src.manifest.config_text;
    src.replay = true;
  } else if (!config_path.empty()) {
    src.config_text = read_text_file(config_path);
  } else if (allow_default) {
    src.config_text = "{}\n";
  } else {
    throw std::invalid_argument("one of --config or --replay is required");
  }
  return src;
}

// Manifests are written before any other artifact, and before the work they
// describe starts, so even an aborted run leaves enough to replay it.
void write_manifest_file(const std::string& directory,
                         const RunManifest& manifest) {
  std::filesystem::create_directories(directory);
  std::ofstream out(directory + "/manifest.txt");
  if (!out) throw std::runtime_error("cannot write to '" + directory + "'");
  write_manifest(out, manifest);
}

RunManifest make_manifest(const std::string& technique,
                          std::uint64_t master_seed, int run_index,
                          const std::string& config_text) {
  RunManifest manifest;
  manifest.technique = technique;
  manifest.master_seed = master_seed;
  manifest.run_index = run_index;
  manifest.config_text = config_text;
  return manifest;
}

RunRecord run_one(const std::string& technique, const BuiltEnvironment& env,
                  const TrainingConfig& training, int run_index) {
  if (technique == "adaptive")
    return run_adaptive(env.mdp, env.target, training, run_index);
  if (technique == "orig")
    return run_baseline(env.mdp, env.target, training, BaselineKind::kOrig,
                        run_index);
  if (technique == "invar")
    return run_baseline(env.mdp, env.target, training, BaselineKind::kInvar,
                        run_index);
  if (technique == "external")
    return run_baseline(env.mdp, env.target, training, BaselineKind::kExternal,
                        run_index);
  throw std::invalid_argument("unknown technique '" + technique +
                              "' (expected adaptive, orig, invar or external)");
}

// Diverse-learners setting: one of five perturbed initial policies, chosen by
// run index, each moving suboptimal mass onto non-target actions at a random
// subset of the environment's gate states.
void apply_diverse_init(TrainingConfig& training, const BuiltEnvironment& env,
                        const RunSpec& run, int run_index) {
  if (!run.diverse_learners) return;
  std::vector<int> designated = env.gate_states;
  if (designated.empty()) {
    designated.resize(env.mdp.n_states);
    std::iota(designated.begin(), designated.end(), 0);
  }
  const int variant = run_index % 5;
  Rng rng = stream_rng(training.master_seed,
                       static_cast<std::uint64_t>(variant), "init");
  training.initial_theta = diverse_initial_theta(
      env.mdp, env.target, designated, run.suboptimal_prob, rng);
}

int cmd_design(const Source& src, const std::string& out_dir) {
  ExperimentConfig cfg = parse_experiment_config(src.config_text);
  const BuiltEnvironment env = build_environment(cfg.environment);
  finalize_config(cfg, env);
  write_manifest_file(out_dir, make_manifest("design", cfg.training.master_seed,
                                             0, src.config_text));

  const InformativenessContext ctx = make_context(
      env.mdp, env.mdp.base_reward, env.target,
      uniform_policy(env.mdp.n_states, env.mdp.n_actions),
      std::max(1, cfg.training.learner.depth));
  const DesignProblem& problem = cfg.training.designer;
  const DesignSolution solution = solve_design(ctx, problem);
  if (solution.status != LpStatus::kOptimal) {
    std::ostringstream diag;
    diag << "design failed: status " << to_string(solution.status) << "\n";
    diag << "z-values (per state-action):\n";
    write_table(diag, z_values(ctx).z);
    diag << "assembled lp:\n";
    write_lp(diag, assemble_design_lp(ctx, problem));
    throw DesignInfeasible(
        std::string("design infeasible: status ") + to_string(solution.status),
        diag.str());
  }

  const RewardTable designed =
      reward_from_phi({solution.phi, problem.features});
  save_table(out_dir + "/phi.txt", solution.phi);
  save_table(out_dir + "/reward.txt", designed);
  {
    std::ofstream out(out_dir + "/design.txt");
    write_design_solution(out, solution);
  }
  const InvarianceReport report = verify_policy_invariance(
      env.mdp, env.mdp.base_reward, env.target, designed);
  {
    std::ofstream out(out_dir + "/invariance.txt");
    out << "invariance: " << (report.pass ? "PASS" : "FAIL") << "\n";
    for (size_t s = 0; s < report.state_ok.size(); ++s)
      out << "state " << s << " " << (report.state_ok[s] ? "ok" : "VIOLATION")
          << "\n";
  }
  std::cout << "design solved: objective " << format_double(solution.objective_value)
            << ", invariance " << (report.pass ? "PASS" : "FAIL")
            << ", artifacts in " << out_dir << "\n";
  return kOk;
}

int cmd_train(const Source& src, const std::string& technique_flag,
              bool technique_given, std::uint64_t seed_flag, bool seed_given,
              int run_index_flag, bool run_index_given,
              const std::string& out_dir) {
  ExperimentConfig cfg = parse_experiment_config(src.config_text);
  const BuiltEnvironment env = build_environment(cfg.environment);
  finalize_config(cfg, env);

  std::string technique = src.replay ? src.manifest.technique : "adaptive";
  std::uint64_t master_seed =
      src.replay ? src.manifest.master_seed : cfg.training.master_seed;
  int run_index = src.replay ? src.manifest.run_index : 0;
  if (technique_given) technique = technique_flag;
  if (seed_given) master_seed = seed_flag;
  if (run_index_given) run_index = run_index_flag;

  cfg.training.master_seed = master_seed;
  apply_diverse_init(cfg.training, env, cfg.run, run_index);
  const RunManifest manifest =
      make_manifest(technique, master_seed, run_index, src.config_text);
  write_manifest_file(out_dir, manifest);

  const RunRecord record = run_one(technique, env, cfg.training, run_index);
  save_run(out_dir, manifest, record);
  std::cout << "trained " << technique << " on " << env.name << ": "
            << record.rows.size() << " evaluation rows, final J "
            << format_double(record.rows.back().mean_j) << " (target J "
            << format_double(record.target_value) << "), artifacts in "
            << out_dir << "\n";
  return kOk;
}

int cmd_compare(const Source& src, const std::string& out_dir) {
  ExperimentConfig cfg = parse_experiment_config(src.config_text);
  if (cfg.run.techniques.size() < 2)
    throw std::invalid_argument("compare needs at least 2 techniques");
  const BuiltEnvironment env = build_environment(cfg.environment);
  finalize_config(cfg, env);
  write_manifest_file(out_dir, make_manifest("compare",
                                             cfg.training.master_seed, 0,
                                             src.config_text));

  std::vector<RunRecord> records;
  for (const std::string& technique : cfg.run.techniques) {
    for (int seed_index = 0; seed_index < cfg.run.n_seeds; ++seed_index) {
      TrainingConfig training = cfg.training;
      apply_diverse_init(training, env, cfg.run, seed_index);
      RunRecord record = run_one(technique, env, training, seed_index);
      const double reached =
          episodes_to_threshold(record, cfg.run.threshold_fraction);
      char name[64];
      std::snprintf(name, sizeof name, "%s_%02d", technique.c_str(),
                    seed_index);
      save_run(out_dir + "/" + name,
               make_manifest(technique, training.master_seed, seed_index,
                             src.config_text),
               record);
      std::cout << name << ": episodes to threshold "
                << format_double(reached) << "\n";
      records.push_back(std::move(record));
    }
  }

  const CompareSummary summary =
      compare_runs(records, cfg.run.threshold_fraction);
  {
    std::ofstream out(out_dir + "/compare_summary.txt");
    write_compare_summary(out, summary);
  }
  write_compare_summary(std::cout, summary);
  return kOk;
}

int cmd_theorem1(const Source& src, std::uint64_t seed_flag, bool seed_given,
                 const std::string& out_dir) {
  const ExperimentConfig cfg = parse_experiment_config(src.config_text);
  Theorem1Spec spec = cfg.theorem1;
  if (seed_given) spec.seed = seed_flag;
  const int max_rounds = spec.max_rounds > 0 ? spec.max_rounds : spec.n_actions;
  if (!out_dir.empty())
    write_manifest_file(out_dir,
                        make_manifest("theorem1", spec.seed, 0,
                                      src.config_text));

  Rng rng = stream_rng(spec.seed, 0, "theorem1");
  int converged = 0;
  std::ostringstream lines;
  std::ostringstream failures;
  for (int i = 0; i < spec.n_mdps; ++i) {
    StochasticPolicy target;
    const TabularMdp mdp = random_distinct_advantage_mdp(
        rng, spec.n_states, spec.n_actions, &target);
    const Theorem1Report report =
        theorem1_experiment(mdp, target, spec.r_max, max_rounds);
    const bool good = report.converged && report.within_action_bound;
    converged += good ? 1 : 0;
    lines << "mdp " << i << ": "
          << (good ? "converged in round " + std::to_string(report.converged_round)
                   : "DID NOT CONVERGE within " + std::to_string(spec.n_actions) +
                         " rounds")
          << "\n";
    if (!good) failures << "mdp " << i << " trace:\n" << report.trace;
  }

  std::ostringstream summary;
  summary << "converged <= " << spec.n_actions << " rounds: " << converged
          << "/" << spec.n_mdps << "\n";
  std::cout << summary.str();
  if (!out_dir.empty())
    write_text_file(out_dir + "/theorem1_report.txt",
                    summary.str() + lines.str() + failures.str());
  if (converged != spec.n_mdps) {
    std::cerr << "property violation: greedy loop exceeded the action-count "
                 "round bound on "
              << (spec.n_mdps - converged) << " of " << spec.n_mdps
              << " sampled problems\n";
    return kPropertyViolation;
  }
  return kOk;
}

int cmd_verify(std::uint64_t seed, const std::string& out_dir) {
  if (!out_dir.empty())
    write_manifest_file(out_dir, make_manifest("verify", seed, 0, "{}\n"));
  const std::vector<VerifyCheck> checks = run_verification_suite(seed);
  std::ostringstream report;
  int passed = 0;
  for (const VerifyCheck& check : checks) {
    report << (check.pass ? "PASS " : "FAIL ") << check.name << ": "
           << check.detail << "\n";
    passed += check.pass ? 1 : 0;
  }
  report << passed << "/" << checks.size() << " invariants hold\n";
  std::cout << report.str();
  if (!out_dir.empty())
    write_text_file(out_dir + "/verify_report.txt", report.str());
  for (const VerifyCheck& check : checks)
    if (!check.pass) {
      std::cerr << "property violation: invariant '" << check.name
                << "' failed: " << check.detail << "\n";
      return kPropertyViolation;
    }
  return kOk;
}

int guarded(const std::string& out_dir, const std::function<int()>& body) {
  try {
    return body();
  } catch (const DesignInfeasible& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      write_text_file(out_dir + "/diagnostic.txt", e.diagnostic);
      std::cerr << "diagnostic written to " << out_dir << "/diagnostic.txt\n";
    }
    return kInfeasibleDesign;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidationError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"expert-driven reward design and training toolkit"};
  app.require_subcommand(1);

  std::string config_path, replay_path, out_dir, technique;
  std::uint64_t seed = 0;
  int run_index = 0;

  CLI::App* design = app.add_subcommand(
      "design", "Solve one reward-design problem and write the artifacts");
  design->add_option("--config", config_path, "experiment config (JSON)");
  design->add_option("--replay", replay_path, "manifest of a run to reproduce");
  design->add_option("--out", out_dir, "output directory")->required();

  CLI::App* train = app.add_subcommand(
      "train", "Run one technique's interleaved training loop");
  train->add_option("--config", config_path, "experiment config (JSON)");
  train->add_option("--replay", replay_path, "manifest of a run to reproduce");
  train->add_option("--technique", technique,
                    "adaptive | orig | invar | external");
  train->add_option("--seed", seed, "master seed override");
  train->add_option("--run-index", run_index, "run index (seed stream)");
  train->add_option("--out", out_dir, "output directory")->required();

  CLI::App* compare = app.add_subcommand(
      "compare", "Run every configured technique across seeds and summarize");
  compare->add_option("--config", config_path, "experiment config (JSON)");
  compare->add_option("--replay", replay_path, "manifest of a run to reproduce");
  compare->add_option("--out", out_dir, "output directory")->required();

  CLI::App* theorem1 = app.add_subcommand(
      "theorem1", "Bang-bang/greedy convergence experiment on random MDPs");
  theorem1->add_option("--config", config_path, "experiment config (JSON)");
  theorem1->add_option("--replay", replay_path,
                       "manifest of a run to reproduce");
  theorem1->add_option("--seed", seed, "sampling seed override");
  theorem1->add_option("--out", out_dir, "output directory (optional)");

  CLI::App* verify = app.add_subcommand(
      "verify", "Run every module invariant as a live property check");
  verify->add_option("--seed", seed, "sampling seed");
  verify->add_option("--out", out_dir, "output directory (optional)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidationError;
  }

  if (app.got_subcommand(design))
    return guarded(out_dir, [&] {
      return cmd_design(resolve_source(config_path, replay_path, false),
                        out_dir);
    });
  if (app.got_subcommand(train))
    return guarded(out_dir, [&] {
      return cmd_train(resolve_source(config_path, replay_path, false),
                       technique, train->count("--technique") > 0, seed,
                       train->count("--seed") > 0, run_index,
                       train->count("--run-index") > 0, out_dir);
    });
  if (app.got_subcommand(compare))
    return guarded(out_dir, [&] {
      return cmd_compare(resolve_source(config_path, replay_path, false),
                         out_dir);
    });
  if (app.got_subcommand(theorem1))
    return guarded(out_dir, [&] {
      return cmd_theorem1(resolve_source(config_path, replay_path, true), seed,
                          theorem1->count("--seed") > 0, out_dir);
    });
  return guarded(out_dir, [&] { return cmd_verify(seed, out_dir); });
}
