#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ard/designer.hpp"
#include "ard/learners.hpp"
#include "ard/mdp.hpp"

namespace ard {

// Written into every manifest so artifacts identify the code that made them.
inline constexpr char kCodeVersion[] = "ard 1.0.0";

// Interleaved-training schedule: every episode k in 1..total_episodes rolls
// out the learner and pushes the trajectory into a FIFO buffer; the reward is
// re-designed when k % reward_period == 0 (adaptive runs only) and the policy
// is updated from the buffer when k % policy_period == 0, reward before
// policy when both fire.
struct TrainingConfig {
  int total_episodes = 20000;  // K
  int reward_period = 5;       // episodes between reward redesigns
  int policy_period = 2;       // episodes between learner updates
  int buffer_capacity = 10;    // FIFO trajectory buffer size
  int eval_period = 100;       // episodes between evaluation rows
  int eval_episodes = 10;      // rollouts per evaluation in rollout mode
  // Exact policy evaluation is the default curve; rollout_eval estimates the
  // same value from eval_episodes sampled returns (separate rng stream).
  bool rollout_eval = false;
  bool weak_target = false;    // skip the target-optimality precheck
  int snapshot_period = 0;     // extra reward/policy snapshots; 0 = final only
  DesignProblem designer;      // redesign template (features, box, invariance)
  LearnerConfig learner;
  std::uint64_t master_seed = 0;
  // Initial learner logits; empty means uniform (all zeros).  Ignored by the
  // greedy learner, which is rebuilt from the reward each update.
  Eigen::MatrixXd initial_theta;
  // Fixed reward table for the external baseline.
  RewardTable external_reward;
};

// Throws std::invalid_argument naming the offending field.
void validate_training_config(const TrainingConfig& cfg, const TabularMdp& mdp);

struct EvalRow {
  int episode = 0;
  double mean_j = 0.0;    // J(pi^L_k) under the base reward
  double stderr_j = 0.0;  // 0 in exact-evaluation mode
  double objective = 0.0; // designer objective at the latest redesign
  std::string reward_hash;
};

struct Snapshot {
  int episode = 0;
  RewardTable reward;
  StochasticPolicy policy;
};

// Everything a single run produces.  Evaluation is always against the base
// reward, regardless of what reward the learner trains on.
struct RunRecord {
  std::string technique;  // adaptive | orig | invar | external
  std::uint64_t master_seed = 0;
  int run_index = 0;
  double target_value = 0.0;  // J(pi^T) under the base reward
  int designer_calls = 0;
  std::vector<EvalRow> rows;       // episode 0, every eval_period, and K
  std::vector<Snapshot> snapshots; // final state last
};

// Field-by-field bitwise comparison (doubles compared with ==).
bool run_records_identical(const RunRecord& a, const RunRecord& b);

// Raised when a redesign has no feasible reward; diagnostic carries the
// episode, the assembled LP, and the context needed to reproduce it.
struct DesignInfeasible : std::runtime_error {
  DesignInfeasible(const std::string& message, std::string diagnostic_text)
      : std::runtime_error(message), diagnostic(std::move(diagnostic_text)) {}
  std::string diagnostic;
};

// Interleaved adaptive run: starts from the base reward and re-solves the
// design problem against the learner's current policy on the reward
// schedule.  pi_t must be optimal under mdp.base_reward unless
// cfg.weak_target.  Throws DesignInfeasible if a redesign fails.
RunRecord run_adaptive(const TabularMdp& mdp, const StochasticPolicy& pi_t,
                       const TrainingConfig& cfg, int run_index = 0);

enum class BaselineKind {
  kOrig,      // train on the base reward unchanged
  kInvar,     // one-shot feasibility design (constant objective), then fixed
  kExternal,  // cfg.external_reward, fixed
};

// Same loop with a fixed reward; consumes randomness identically to
// run_adaptive so equal schedules with equal rewards replay identically.
RunRecord run_baseline(const TabularMdp& mdp, const StochasticPolicy& pi_t,
                       const TrainingConfig& cfg, BaselineKind which,
                       int run_index = 0);

// Learner logits for the diverse-learners setting: uniform except at a
// random nonempty subset of `designated_states`, where `suboptimal_prob`
// mass moves onto actions the target does not take.
Eigen::MatrixXd diverse_initial_theta(const TabularMdp& mdp,
                                      const StochasticPolicy& pi_t,
                                      const std::vector<int>& designated_states,
                                      double suboptimal_prob, Rng& rng);

// ---------------------------------------------------------------------------
// Convergence experiment for the bang-bang/greedy loop: alternate the
// support-respecting bang-bang design with a greedy learner (uniform over
// argmax) starting from the uniform policy, and report when the learner's
// support at every state equals argmax_a of the target advantage under the
// base reward.  The claim under test: convergence within n_actions rounds.
// ---------------------------------------------------------------------------

struct Theorem1Report {
  bool converged = false;
  int converged_round = -1;           // first matching round (1-based)
  bool within_action_bound = false;   // converged_round <= n_actions
  std::vector<std::vector<int>> target_argmax;          // per state
  // round_supports[r][s]: actions the learner plays at state s after round r+1.
  std::vector<std::vector<std::vector<int>>> round_supports;
  std::string trace;                  // per-round support table
};

Theorem1Report theorem1_experiment(const TabularMdp& mdp,
                                   const StochasticPolicy& pi_t, double r_max,
                                   int max_rounds);

// Random MDP whose optimal target policy has pairwise-distinct advantages at
// every state (min gap 1e-6), the precondition of the convergence claim;
// resamples until it finds one.  Writes the target policy to *target_out.
TabularMdp random_distinct_advantage_mdp(Rng& rng, int n_states, int n_actions,
                                         StochasticPolicy* target_out);

// ---------------------------------------------------------------------------
// Cross-technique comparison: episodes until the evaluation curve first
// reaches threshold_fraction * target_value.  Runs that never reach it are
// censored at (last episode + 1) and included in the statistics.
// ---------------------------------------------------------------------------

struct TechniqueStats {
  std::string technique;
  std::vector<double> episodes;  // per run, in input order (censored included)
  int censored = 0;
  double mean = 0.0;
  double stderr_mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;  // 25th percentile, linear interpolation
  double q3 = 0.0;  // 75th percentile
};

struct CompareSummary {
  double threshold_fraction = 0.0;
  double threshold_value = 0.0;  // threshold_fraction * target_value
  std::vector<TechniqueStats> techniques;  // first-appearance order
};

// First recorded episode whose mean_j reaches the threshold; censored runs
// return rows.back().episode + 1.
double episodes_to_threshold(const RunRecord& record, double threshold_fraction);

// Quantile of a sorted sample by linear interpolation on (n-1)*p.
double linear_quantile(const std::vector<double>& sorted, double p);

// Records must share the evaluation protocol (same target value within
// 1e-9); at least one record required.
CompareSummary compare_runs(const std::vector<RunRecord>& records,
                            double threshold_fraction);

// ---------------------------------------------------------------------------
// Persistence. A run directory holds, in write order:
//   manifest.txt      "ard-manifest v1": code version, technique, seeds, and
//                     the launching config embedded verbatim
//   convergence.csv   "# ard.convergence.v1" header then
//                     episode,mean_J,stderr_J,objective,reward_hash
//   reward_<k>.txt / policy_<k>.txt   snapshots, final state included
// Comparison summaries are "ard-compare v1" structured text.
// ---------------------------------------------------------------------------

struct RunManifest {
  std::string code_version = kCodeVersion;
  std::string technique;
  std::uint64_t master_seed = 0;
  int run_index = 0;
  std::string config_text;  // embedded verbatim between config markers
};

void write_manifest(std::ostream& out, const RunManifest& manifest);
RunManifest read_manifest(std::istream& in);

void write_convergence_csv(std::ostream& out, const RunRecord& record);
std::vector<EvalRow> read_convergence_csv(std::istream& in);

void write_compare_summary(std::ostream& out, const CompareSummary& summary);

// Creates the directory (parents included) and writes manifest first.
void save_run(const std::string& directory, const RunManifest& manifest,
              const RunRecord& record);

}  // namespace ard
