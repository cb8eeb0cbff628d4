#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ard/rng.hpp"

namespace ard {

/** Dense reward values, one per (state, action). */
using RewardTable = Eigen::MatrixXd;

/** Per-state probability rows over actions; each row sums to 1. */
using StochasticPolicy = Eigen::MatrixXd;

/**
 * Finite MDP with a base reward, an episode horizon, and per-(s,a) terminal
 * flags.  Terminal pairs yield their reward and end the episode: backups give
 * them no bootstrapped continuation and rollouts stop after taking them.
 */
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  double gamma = 0.95;
  int horizon = 30;
  Eigen::MatrixXd transition;           // (n_states*n_actions) x n_states
  Eigen::VectorXd initial_dist;         // n_states
  RewardTable base_reward;              // n_states x n_actions
  std::vector<std::uint8_t> terminal;   // n_states*n_actions flags

  int sa_index(int s, int a) const { return s * n_actions + a; }
  bool is_terminal(int s, int a) const { return terminal[sa_index(s, a)] != 0; }

  /** Throws std::invalid_argument on any malformed field. */
  void validate() const;
};

/** q/v/advantage triple; adv(s,a) = q(s,a) - v(s). residual is the max-norm
 *  Bellman residual of q for fixed-point solvers (0 for finite-depth backups). */
struct ValueBundle {
  Eigen::VectorXd v;
  Eigen::MatrixXd q;
  Eigen::MatrixXd adv;
  double residual = 0.0;
};

/**
 * Normalized discounted visitation.  state sums to 1: the discounted
 * visitation of live states is renormalized, which conditions out the mass
 * absorbed by episode termination.  total_mass is the pre-normalization sum,
 * so un-normalized expectations can be reconstructed exactly.
 */
struct OccupancyMeasure {
  Eigen::VectorXd state;        // mu(s)
  Eigen::MatrixXd state_action; // mu(s) * pi(a|s)
  double total_mass = 1.0;
};

struct Step {
  int state = 0;
  int action = 0;
  int next_state = 0;
};

/** Sampled episode; at most `horizon` steps, ending early on a terminal pair. */
struct Trajectory {
  std::vector<Step> steps;
  bool terminated = false;
  std::uint64_t seed_tag = 0;  // seed of the generator that produced it
};

/** Tie handling for greedy policy extraction. */
enum class TieBreak {
  kRandom,       // one-hot, argmax ties broken uniformly at random
  kUniform,      // stochastic, uniform over the argmax set
  kLowestIndex,  // one-hot, deterministic
};

StochasticPolicy uniform_policy(int n_states, int n_actions);

/** Throws std::invalid_argument if the policy shape/rows are invalid. */
void validate_policy(const TabularMdp& mdp, const StochasticPolicy& policy);

/** Throws std::invalid_argument on shape mismatch or non-finite entries. */
void validate_reward(const TabularMdp& mdp, const RewardTable& reward);

/**
 * Exact policy evaluation: q(s,a) = r(s,a) + gamma * sum_s' T(s'|s,a) *
 * sum_a' pi(a'|s') q(s',a'), with no continuation on terminal pairs.
 * Dense linear solve when n_states*n_actions <= 4096, else Gauss-Seidel
 * iterated until the Bellman residual is <= tol.
 */
ValueBundle policy_eval(const TabularMdp& mdp, const RewardTable& reward,
                        const StochasticPolicy& policy, double tol = 1e-10);

/** Value iteration to the optimal Bellman fixed point, residual <= tol. */
ValueBundle optimal_values(const TabularMdp& mdp, const RewardTable& reward,
                           double tol = 1e-10);

/**
 * Greedy policy over per-(s,a) scores with ties within tie_tol of the row
 * maximum.  rng may be null for the non-random modes.
 */
StochasticPolicy greedy_table_policy(const Eigen::MatrixXd& scores,
                                     double tie_tol, TieBreak mode,
                                     Rng* rng = nullptr);

/** Greedy one-hot policy from q-values, random tie-breaking within 1e-9. */
StochasticPolicy greedy_policy(const ValueBundle& values, Rng& rng,
                               double tie_tol = 1e-9);

/** Deterministic optimal policy: greedy over optimal q, lowest-index ties. */
StochasticPolicy optimal_policy(const TabularMdp& mdp,
                                const RewardTable& reward,
                                double tie_tol = 1e-9);

/**
 * Row-wise softmax of logits into a stochastic policy, shifted by the row
 * maximum so it never overflows.  -inf logits yield exact zeros; a row must
 * keep at least one finite entry.
 */
StochasticPolicy softmax_rows(const Eigen::MatrixXd& logits);

/** Exact normalized discounted occupancy of a policy (see OccupancyMeasure). */
OccupancyMeasure occupancy(const TabularMdp& mdp,
                           const StochasticPolicy& policy);

/**
 * Depth-h action values: expectation of the first h+1 discounted reward terms
 * (h = 0 returns the reward table itself).  v and adv are derived from q
 * under the same policy.
 */
ValueBundle h_step_q(const TabularMdp& mdp, const RewardTable& reward,
                     const StochasticPolicy& policy, int h);

/**
 * Samples one episode: s0 ~ P0, a_t ~ pi, s_{t+1} ~ T; stops after a terminal
 * (s,a) or after max_steps (default: the MDP horizon).
 */
Trajectory rollout(const TabularMdp& mdp, const StochasticPolicy& policy,
                   Rng& rng, int max_steps = -1);

/** Discounted return sum_t gamma^t reward(s_t, a_t) of a trajectory. */
double trajectory_return(const Trajectory& traj, const RewardTable& reward,
                         double gamma);

/** Expected discounted return from the initial distribution (exact). */
double policy_value(const TabularMdp& mdp, const RewardTable& reward,
                    const StochasticPolicy& policy);

/** Expected return truncated to the first `steps` reward terms. */
double policy_value_finite(const TabularMdp& mdp, const RewardTable& reward,
                           const StochasticPolicy& policy, int steps);

/** Options for random test/experiment MDPs. */
struct RandomMdpOptions {
  double gamma = 0.9;
  double reward_low = -1.0;
  double reward_high = 1.0;
  bool with_terminals = false;  // marks one random (s,a) terminal
};

/** Random dense MDP with strictly positive kernel rows. */
TabularMdp make_random_mdp(Rng& rng, int n_states, int n_actions,
                           const RandomMdpOptions& opts = {});

/** Random policy with strictly positive rows. */
StochasticPolicy make_random_policy(Rng& rng, int n_states, int n_actions);

}  // namespace ard
