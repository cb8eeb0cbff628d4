#include "ard/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

#include "ard/informativeness.hpp"
#include "ard/io.hpp"

namespace ard {

namespace {

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

std::string trim_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

bool matrices_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return a.size() == 0 || (a.array() == b.array()).all();
}

void check_target_optimal(const TabularMdp& mdp, const StochasticPolicy& pi_t) {
  const ValueBundle star = optimal_values(mdp, mdp.base_reward);
  const ValueBundle target = policy_eval(mdp, mdp.base_reward, pi_t);
  for (int s = 0; s < mdp.n_states; ++s) {
    const double slack = 1e-6 * std::max(1.0, std::abs(star.v(s)));
    if (target.v(s) < star.v(s) - slack)
      throw std::invalid_argument(
          "target policy is not optimal under the base reward at state " +
          std::to_string(s) + " (enable weak_target to run anyway)");
  }
}

std::string reward_hash(const RewardTable& reward) {
  return hash_vector(flatten_table(reward));
}

enum class Mode { kAdaptive, kOrig, kInvar, kExternal };

const char* technique_name(Mode mode) {
  switch (mode) {
    case Mode::kAdaptive: return "adaptive";
    case Mode::kOrig: return "orig";
    case Mode::kInvar: return "invar";
    case Mode::kExternal: return "external";
  }
  return "";
}

std::string infeasible_diagnostic(const InformativenessContext& ctx,
                                  const DesignProblem& problem,
                                  const InvarianceConstraints* prebuilt,
                                  const DesignSolution& solution, int episode) {
  std::ostringstream out;
  out << "designer failed at episode " << episode << ": status "
      << to_string(solution.status) << "\n";
  out << "z-values (per state-action):\n";
  write_table(out, z_values(ctx).z);
  out << "assembled lp:\n";
  write_lp(out, assemble_design_lp(ctx, problem, prebuilt));
  return out.str();
}

EvalRow evaluate(const TabularMdp& mdp, const StochasticPolicy& probs,
                 const RewardTable& reward, const TrainingConfig& cfg,
                 int episode, double objective, Rng& eval_rng) {
  EvalRow row;
  row.episode = episode;
  row.objective = objective;
  row.reward_hash = reward_hash(reward);
  if (!cfg.rollout_eval) {
    row.mean_j = policy_value(mdp, mdp.base_reward, probs);
    row.stderr_j = 0.0;
    return row;
  }
  Eigen::VectorXd returns(cfg.eval_episodes);
  for (int i = 0; i < cfg.eval_episodes; ++i) {
    const Trajectory traj = rollout(mdp, probs, eval_rng);
    returns(i) = trajectory_return(traj, mdp.base_reward, mdp.gamma);
  }
  row.mean_j = returns.mean();
  if (cfg.eval_episodes > 1) {
    const double var = (returns.array() - row.mean_j).square().sum() /
                       (cfg.eval_episodes - 1.0);
    row.stderr_j = std::sqrt(var / cfg.eval_episodes);
  }
  return row;
}

RunRecord run_loop(const TabularMdp& mdp, const StochasticPolicy& pi_t,
                   const TrainingConfig& cfg, Mode mode, int run_index) {
  validate_training_config(cfg, mdp);
  validate_policy(mdp, pi_t);
  if (!cfg.weak_target) check_target_optimal(mdp, pi_t);

  Rng rollout_rng = stream_rng(cfg.master_seed, run_index, "rollout");
  Rng eval_rng = stream_rng(cfg.master_seed, run_index, "eval");
  Rng tie_rng(0);  // uniform tie mode consumes no randomness

  RunRecord record;
  record.technique = technique_name(mode);
  record.master_seed = cfg.master_seed;
  record.run_index = run_index;
  record.target_value = policy_value(mdp, mdp.base_reward, pi_t);

  SoftmaxPolicy policy;
  policy.theta = cfg.initial_theta.size()
                     ? cfg.initial_theta
                     : Eigen::MatrixXd::Zero(mdp.n_states, mdp.n_actions);
  StochasticPolicy probs = policy.probabilities();

  // The context caches the target-side quantities; built only when a
  // designer or the exact-gradient learner needs it.
  std::optional<InformativenessContext> ctx;
  const bool needs_ctx = mode == Mode::kAdaptive || mode == Mode::kInvar ||
                         cfg.learner.kind == LearnerKind::kSimplePg;
  if (needs_ctx)
    ctx = make_context(mdp, mdp.base_reward, pi_t, probs,
                       std::max(1, cfg.learner.depth));

  // The invariant baseline is defined by these constraints, so it ignores the
  // designer flag; adaptive runs honor it (structure + bounds only when off).
  std::optional<InvarianceConstraints> invariance;
  if (mode == Mode::kInvar ||
      (mode == Mode::kAdaptive && cfg.designer.include_invariance))
    invariance = build_invariance_constraints(mdp, mdp.base_reward, pi_t,
                                              cfg.designer.features);
  const InvarianceConstraints* prebuilt =
      invariance ? &invariance.value() : nullptr;

  RewardTable reward = mdp.base_reward;
  double objective = 0.0;
  if (mode == Mode::kInvar) {
    DesignProblem once = cfg.designer;
    once.objective = DesignObjective::kConstant;
    once.include_invariance = true;
    const DesignSolution solution = solve_design(*ctx, once, prebuilt);
    if (solution.status != LpStatus::kOptimal)
      throw DesignInfeasible(
          "one-shot invariant design is infeasible",
          infeasible_diagnostic(*ctx, once, prebuilt, solution, 0));
    reward = reward_from_phi({solution.phi, cfg.designer.features});
    objective = solution.objective_value;
    record.designer_calls = 1;
  } else if (mode == Mode::kExternal) {
    require(cfg.external_reward.rows() == mdp.n_states &&
                cfg.external_reward.cols() == mdp.n_actions,
            "external baseline needs an external_reward shaped like the MDP");
    validate_reward(mdp, cfg.external_reward);
    reward = cfg.external_reward;
  }

  ReplayBuffer buffer(cfg.buffer_capacity);
  const auto snapshot_due = [&](int k) {
    return cfg.snapshot_period > 0 && k % cfg.snapshot_period == 0;
  };

  record.rows.push_back(
      evaluate(mdp, probs, reward, cfg, 0, objective, eval_rng));

  for (int k = 1; k <= cfg.total_episodes; ++k) {
    if (mode == Mode::kAdaptive && k % cfg.reward_period == 0) {
      set_learner(*ctx, probs);
      const DesignSolution solution = solve_design(*ctx, cfg.designer, prebuilt);
      if (solution.status != LpStatus::kOptimal)
        throw DesignInfeasible(
            "reward design became infeasible at episode " + std::to_string(k),
            infeasible_diagnostic(*ctx, cfg.designer, prebuilt, solution, k));
      reward = reward_from_phi({solution.phi, cfg.designer.features});
      objective = solution.objective_value;
      ++record.designer_calls;
    }
    if (k % cfg.policy_period == 0) {
      switch (cfg.learner.kind) {
        case LearnerKind::kReinforce:
          if (buffer.size() > 0) {
            policy = reinforce_update(policy, buffer, reward, mdp.gamma,
                                      cfg.learner);
            probs = policy.probabilities();
          }
          break;
        case LearnerKind::kSimplePg:
          policy = simple_pg_update(policy, reward, *ctx, cfg.learner);
          probs = policy.probabilities();
          break;
        case LearnerKind::kGreedy:
          probs = greedy_update(reward, tie_rng, TieBreak::kUniform);
          break;
      }
    }
    buffer.push(rollout(mdp, probs, rollout_rng));
    if (k % cfg.eval_period == 0 || k == cfg.total_episodes)
      record.rows.push_back(
          evaluate(mdp, probs, reward, cfg, k, objective, eval_rng));
    if (snapshot_due(k) && k != cfg.total_episodes)
      record.snapshots.push_back({k, reward, probs});
  }
  record.snapshots.push_back({cfg.total_episodes, reward, probs});
  return record;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

void validate_training_config(const TrainingConfig& cfg,
                              const TabularMdp& mdp) {
  require(cfg.total_episodes >= 1, "total_episodes must be >= 1");
  require(cfg.reward_period >= 1, "reward_period must be >= 1");
  require(cfg.policy_period >= 1, "policy_period must be >= 1");
  require(cfg.buffer_capacity >= 1, "buffer_capacity must be >= 1");
  require(cfg.eval_period >= 1, "eval_period must be >= 1");
  require(!cfg.rollout_eval || cfg.eval_episodes >= 1,
          "eval_episodes must be >= 1 in rollout evaluation mode");
  require(cfg.snapshot_period >= 0, "snapshot_period must be >= 0");
  if (cfg.initial_theta.size() != 0)
    require(cfg.initial_theta.rows() == mdp.n_states &&
                cfg.initial_theta.cols() == mdp.n_actions,
            "initial_theta must be n_states x n_actions");
}

bool run_records_identical(const RunRecord& a, const RunRecord& b) {
  if (a.technique != b.technique || a.master_seed != b.master_seed ||
      a.run_index != b.run_index || a.target_value != b.target_value ||
      a.designer_calls != b.designer_calls || a.rows.size() != b.rows.size() ||
      a.snapshots.size() != b.snapshots.size())
    return false;
  for (size_t i = 0; i < a.rows.size(); ++i) {
    const EvalRow& x = a.rows[i];
    const EvalRow& y = b.rows[i];
    if (x.episode != y.episode || x.mean_j != y.mean_j ||
        x.stderr_j != y.stderr_j || x.objective != y.objective ||
        x.reward_hash != y.reward_hash)
      return false;
  }
  for (size_t i = 0; i < a.snapshots.size(); ++i) {
    if (a.snapshots[i].episode != b.snapshots[i].episode ||
        !matrices_equal(a.snapshots[i].reward, b.snapshots[i].reward) ||
        !matrices_equal(a.snapshots[i].policy, b.snapshots[i].policy))
      return false;
  }
  return true;
}

RunRecord run_adaptive(const TabularMdp& mdp, const StochasticPolicy& pi_t,
                       const TrainingConfig& cfg, int run_index) {
  return run_loop(mdp, pi_t, cfg, Mode::kAdaptive, run_index);
}

RunRecord run_baseline(const TabularMdp& mdp, const StochasticPolicy& pi_t,
                       const TrainingConfig& cfg, BaselineKind which,
                       int run_index) {
  switch (which) {
    case BaselineKind::kOrig:
      return run_loop(mdp, pi_t, cfg, Mode::kOrig, run_index);
    case BaselineKind::kInvar:
      return run_loop(mdp, pi_t, cfg, Mode::kInvar, run_index);
    case BaselineKind::kExternal:
      return run_loop(mdp, pi_t, cfg, Mode::kExternal, run_index);
  }
  throw std::invalid_argument("unknown baseline kind");
}

Eigen::MatrixXd diverse_initial_theta(const TabularMdp& mdp,
                                      const StochasticPolicy& pi_t,
                                      const std::vector<int>& designated_states,
                                      double suboptimal_prob, Rng& rng) {
  if (designated_states.empty())
    return Eigen::MatrixXd::Zero(mdp.n_states, mdp.n_actions);
  std::vector<int> chosen;
  for (const int s : designated_states)
    if (rng.uniform() < 0.5) chosen.push_back(s);
  if (chosen.empty()) chosen = designated_states;
  const StochasticPolicy perturbed =
      perturbed_initial_policy(mdp, chosen, suboptimal_prob, pi_t);
  return perturbed.array().log();
}

Theorem1Report theorem1_experiment(const TabularMdp& mdp,
                                   const StochasticPolicy& pi_t, double r_max,
                                   int max_rounds) {
  require(r_max > 0.0, "r_max must be positive");
  require(max_rounds >= 1, "max_rounds must be >= 1");
  InformativenessContext ctx =
      make_context(mdp, mdp.base_reward, pi_t,
                   uniform_policy(mdp.n_states, mdp.n_actions));

  Theorem1Report report;
  report.target_argmax.resize(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) {
    const double top = ctx.target_adv.row(s).maxCoeff();
    const double tol = 1e-9 * std::max(1.0, std::abs(top));
    for (int a = 0; a < mdp.n_actions; ++a)
      if (ctx.target_adv(s, a) >= top - tol)
        report.target_argmax[s].push_back(a);
  }

  std::ostringstream trace;
  Rng tie_rng(0);  // uniform tie mode consumes no randomness
  for (int round = 1; round <= max_rounds; ++round) {
    const RewardTable reward = bangbang_support_design(ctx, r_max);
    const StochasticPolicy probs =
        greedy_update(reward, tie_rng, TieBreak::kUniform);
    std::vector<std::vector<int>> supports(mdp.n_states);
    bool all_match = true;
    trace << "round " << round << ":";
    for (int s = 0; s < mdp.n_states; ++s) {
      for (int a = 0; a < mdp.n_actions; ++a)
        if (probs(s, a) > 0.0) supports[s].push_back(a);
      trace << " s" << s << "={";
      for (size_t i = 0; i < supports[s].size(); ++i)
        trace << (i ? "," : "") << supports[s][i];
      trace << "}";
      if (supports[s] != report.target_argmax[s]) all_match = false;
    }
    trace << "\n";
    report.round_supports.push_back(std::move(supports));
    set_learner(ctx, probs);
    if (all_match) {
      report.converged = true;
      report.converged_round = round;
      break;
    }
  }
  report.within_action_bound =
      report.converged && report.converged_round <= mdp.n_actions;
  report.trace = trace.str();
  return report;
}

TabularMdp random_distinct_advantage_mdp(Rng& rng, int n_states, int n_actions,
                                         StochasticPolicy* target_out) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    TabularMdp mdp = make_random_mdp(rng, n_states, n_actions, {.gamma = 0.9});
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
      if (target_out) *target_out = target;
      return mdp;
    }
  }
  throw std::runtime_error(
      "no MDP with pairwise-distinct advantages found in 200 attempts");
}

double episodes_to_threshold(const RunRecord& record,
                             double threshold_fraction) {
  require(!record.rows.empty(), "record has no evaluation rows");
  const double threshold = threshold_fraction * record.target_value;
  for (const EvalRow& row : record.rows)
    if (row.mean_j >= threshold) return row.episode;
  return record.rows.back().episode + 1.0;
}

double linear_quantile(const std::vector<double>& sorted, double p) {
  require(!sorted.empty(), "quantile of an empty sample");
  require(p >= 0.0 && p <= 1.0, "quantile level must be in [0,1]");
  const double position = (sorted.size() - 1) * p;
  const size_t lo = static_cast<size_t>(position);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = position - lo;
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

CompareSummary compare_runs(const std::vector<RunRecord>& records,
                            double threshold_fraction) {
  require(!records.empty(), "compare_runs needs at least one record");
  const double target = records.front().target_value;
  for (const RunRecord& record : records)
    require(std::abs(record.target_value - target) <=
                1e-9 * std::max(1.0, std::abs(target)),
            "records do not share the evaluation target value");

  CompareSummary summary;
  summary.threshold_fraction = threshold_fraction;
  summary.threshold_value = threshold_fraction * target;
  for (const RunRecord& record : records) {
    auto it = std::find_if(
        summary.techniques.begin(), summary.techniques.end(),
        [&](const TechniqueStats& t) { return t.technique == record.technique; });
    if (it == summary.techniques.end()) {
      summary.techniques.push_back({});
      summary.techniques.back().technique = record.technique;
      it = std::prev(summary.techniques.end());
    }
    const double episodes = episodes_to_threshold(record, threshold_fraction);
    it->episodes.push_back(episodes);
    if (episodes > record.rows.back().episode) ++it->censored;
  }
  for (TechniqueStats& stats : summary.techniques) {
    const int n = static_cast<int>(stats.episodes.size());
    stats.mean =
        std::accumulate(stats.episodes.begin(), stats.episodes.end(), 0.0) / n;
    if (n > 1) {
      double ss = 0.0;
      for (const double e : stats.episodes)
        ss += (e - stats.mean) * (e - stats.mean);
      stats.stderr_mean = std::sqrt(ss / (n - 1.0) / n);
    }
    std::vector<double> sorted = stats.episodes;
    std::sort(sorted.begin(), sorted.end());
    stats.median = linear_quantile(sorted, 0.5);
    stats.q1 = linear_quantile(sorted, 0.25);
    stats.q3 = linear_quantile(sorted, 0.75);
  }
  return summary;
}

void write_manifest(std::ostream& out, const RunManifest& manifest) {
  out << "ard-manifest v1\n";
  out << "code_version " << manifest.code_version << "\n";
  out << "technique " << manifest.technique << "\n";
  out << "master_seed " << manifest.master_seed << "\n";
  out << "run_index " << manifest.run_index << "\n";
  out << "config_begin\n";
  if (!manifest.config_text.empty()) {
    out << manifest.config_text;
    if (manifest.config_text.back() != '\n') out << "\n";
  }
  out << "config_end\n";
  out << "end\n";
}

RunManifest read_manifest(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim_cr(line) != "ard-manifest v1")
    throw std::runtime_error("manifest must start with 'ard-manifest v1'");
  RunManifest manifest;
  bool saw_end = false;
  while (std::getline(in, line)) {
    line = trim_cr(line);
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key == "code_version") {
      std::string rest;
      std::getline(fields, rest);
      const auto first = rest.find_first_not_of(' ');
      manifest.code_version = first == std::string::npos ? "" : rest.substr(first);
    } else if (key == "technique") {
      fields >> manifest.technique;
    } else if (key == "master_seed") {
      std::string value;
      fields >> value;
      manifest.master_seed = std::stoull(value);
    } else if (key == "run_index") {
      fields >> manifest.run_index;
    } else if (key == "config_begin") {
      std::string body;
      bool closed = false;
      while (std::getline(in, line)) {
        line = trim_cr(line);
        if (line == "config_end") {
          closed = true;
          break;
        }
        body += line;
        body += '\n';
      }
      if (!closed) throw std::runtime_error("manifest config block not closed");
      manifest.config_text = body;
    } else if (key == "end") {
      saw_end = true;
      break;
    } else {
      throw std::runtime_error("unknown manifest key '" + key + "'");
    }
  }
  if (!saw_end) throw std::runtime_error("manifest missing 'end'");
  return manifest;
}

void write_convergence_csv(std::ostream& out, const RunRecord& record) {
  out << "# ard.convergence.v1\n";
  out << "episode,mean_J,stderr_J,objective,reward_hash\n";
  for (const EvalRow& row : record.rows)
    out << row.episode << "," << format_double(row.mean_j) << ","
        << format_double(row.stderr_j) << "," << format_double(row.objective)
        << "," << row.reward_hash << "\n";
}

std::vector<EvalRow> read_convergence_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim_cr(line) != "# ard.convergence.v1")
    throw std::runtime_error("convergence file must start with '# ard.convergence.v1'");
  if (!std::getline(in, line) ||
      trim_cr(line) != "episode,mean_J,stderr_J,objective,reward_hash")
    throw std::runtime_error("convergence file has an unexpected column header");
  std::vector<EvalRow> rows;
  while (std::getline(in, line)) {
    line = trim_cr(line);
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv(line);
    if (fields.size() != 5)
      throw std::runtime_error("convergence row needs 5 fields, got '" + line +
                               "'");
    EvalRow row;
    row.episode = std::stoi(fields[0]);
    row.mean_j = std::stod(fields[1]);
    row.stderr_j = std::stod(fields[2]);
    row.objective = std::stod(fields[3]);
    row.reward_hash = fields[4];
    rows.push_back(row);
  }
  return rows;
}

void write_compare_summary(std::ostream& out, const CompareSummary& summary) {
  out << "ard-compare v1\n";
  out << "threshold_fraction " << format_double(summary.threshold_fraction)
      << "\n";
  out << "threshold_value " << format_double(summary.threshold_value) << "\n";
  out << "techniques " << summary.techniques.size() << "\n";
  for (const TechniqueStats& stats : summary.techniques) {
    out << "technique " << stats.technique << " runs " << stats.episodes.size()
        << " censored " << stats.censored << "\n";
    out << "mean " << format_double(stats.mean) << " stderr "
        << format_double(stats.stderr_mean) << "\n";
    out << "median " << format_double(stats.median) << " q1 "
        << format_double(stats.q1) << " q3 " << format_double(stats.q3)
        << "\n";
    out << "episodes";
    for (const double e : stats.episodes) out << " " << format_double(e);
    out << "\n";
  }
  out << "end\n";
}

void save_run(const std::string& directory, const RunManifest& manifest,
              const RunRecord& record) {
  std::filesystem::create_directories(directory);
  {
    std::ostringstream out;
    write_manifest(out, manifest);
    write_text_file(directory + "/manifest.txt", out.str());
  }
  {
    std::ostringstream out;
    write_convergence_csv(out, record);
    write_text_file(directory + "/convergence.csv", out.str());
  }
  for (const Snapshot& snapshot : record.snapshots) {
    char suffix[32];
    std::snprintf(suffix, sizeof suffix, "_%06d.txt", snapshot.episode);
    save_table(directory + "/reward" + suffix, snapshot.reward);
    save_table(directory + "/policy" + suffix, snapshot.policy);
  }
  if (!record.snapshots.empty()) {
    save_table(directory + "/reward_final.txt", record.snapshots.back().reward);
    save_table(directory + "/policy_final.txt", record.snapshots.back().policy);
  }
}

}  // namespace ard
