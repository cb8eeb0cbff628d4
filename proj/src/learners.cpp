#include "ard/learners.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ard {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

// Discounted returns-to-go of one trajectory under the given reward.
std::vector<double> returns_to_go(const Trajectory& trajectory,
                                  const RewardTable& reward, double gamma) {
  std::vector<double> g(trajectory.steps.size());
  double acc = 0.0;
  for (size_t i = trajectory.steps.size(); i-- > 0;) {
    const Step& step = trajectory.steps[i];
    acc = reward(step.state, step.action) + gamma * acc;
    g[i] = acc;
  }
  return g;
}

}  // namespace

SoftmaxPolicy uniform_softmax(int n_states, int n_actions) {
  require(n_states >= 1 && n_actions >= 1,
          "uniform_softmax: dimensions must be positive");
  return SoftmaxPolicy{Eigen::MatrixXd::Zero(n_states, n_actions)};
}

ReplayBuffer::ReplayBuffer(int capacity) : capacity_(capacity) {
  require(capacity >= 1, "ReplayBuffer: capacity must be >= 1");
}

void ReplayBuffer::push(Trajectory trajectory) {
  require(!trajectory.steps.empty(), "ReplayBuffer: empty trajectory");
  items_.push_back(std::move(trajectory));
  if (static_cast<int>(items_.size()) > capacity_) items_.pop_front();
}

SoftmaxPolicy reinforce_update(const SoftmaxPolicy& policy,
                               const ReplayBuffer& buffer,
                               const RewardTable& reward, double gamma,
                               const LearnerConfig& cfg) {
  require(buffer.size() > 0, "reinforce_update: empty trajectory buffer");
  require(cfg.alpha >= 0.0, "reinforce_update: alpha must be nonnegative");
  require(gamma >= 0.0 && gamma < 1.0,
          "reinforce_update: gamma must be in [0,1)");
  require(reward.rows() == policy.theta.rows() &&
              reward.cols() == policy.theta.cols(),
          "reinforce_update: reward shape does not match the policy");

  const StochasticPolicy probs = softmax_rows(policy.theta);

  double baseline = 0.0;
  if (cfg.baseline) {
    double total = 0.0;
    long count = 0;
    for (int i = 0; i < buffer.size(); ++i) {
      for (const double g : returns_to_go(buffer.at(i), reward, gamma)) {
        total += g;
        ++count;
      }
    }
    baseline = total / static_cast<double>(count);
  }

  SoftmaxPolicy updated = policy;
  const double per_trajectory = cfg.alpha / buffer.size();
  for (int i = 0; i < buffer.size(); ++i) {
    const Trajectory& trajectory = buffer.at(i);
    const std::vector<double> g = returns_to_go(trajectory, reward, gamma);
    double discount = 1.0;
    for (size_t t = 0; t < trajectory.steps.size(); ++t) {
      const Step& step = trajectory.steps[t];
      const double weight = per_trajectory * discount * (g[t] - baseline);
      // dlog pi(a|s) / dtheta(s,b) = [b == a] - pi(b|s)
      updated.theta.row(step.state) -= weight * probs.row(step.state);
      updated.theta(step.state, step.action) += weight;
      discount *= gamma;
    }
  }
  return updated;
}

SoftmaxPolicy simple_pg_update(const SoftmaxPolicy& policy,
                               const RewardTable& reward,
                               const InformativenessContext& ctx,
                               const LearnerConfig& cfg) {
  require(cfg.alpha >= 0.0, "simple_pg_update: alpha must be nonnegative");
  require(cfg.depth >= 1, "simple_pg_update: depth must be >= 1");
  require(policy.theta.rows() == ctx.mdp.n_states &&
              policy.theta.cols() == ctx.mdp.n_actions,
          "simple_pg_update: policy shape does not match the mdp");
  validate_reward(ctx.mdp, reward);

  const StochasticPolicy probs = softmax_rows(policy.theta);
  const ValueBundle lookahead = h_step_q(ctx.mdp, reward, probs, cfg.depth);
  const OccupancyMeasure mu = occupancy(ctx.mdp, probs);

  SoftmaxPolicy updated = policy;
  for (int s = 0; s < ctx.mdp.n_states; ++s)
    for (int a = 0; a < ctx.mdp.n_actions; ++a)
      updated.theta(s, a) +=
          cfg.alpha * mu.state(s) * probs(s, a) * lookahead.adv(s, a);
  return updated;
}

StochasticPolicy greedy_update(const RewardTable& reward, Rng& rng,
                               TieBreak ties) {
  require(reward.allFinite(), "greedy_update: non-finite rewards");
  const double tie_tol =
      1e-9 * std::max(1.0, reward.cwiseAbs().maxCoeff());
  return greedy_table_policy(reward, tie_tol, ties, &rng);
}

}  // namespace ard
