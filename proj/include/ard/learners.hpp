#pragma once

#include <deque>

#include "ard/informativeness.hpp"
#include "ard/mdp.hpp"
#include "ard/rng.hpp"

namespace ard {

// Tabular softmax policy parameters; probabilities() is the row-wise softmax
// of theta, so adding a constant to a row changes nothing.
struct SoftmaxPolicy {
  Eigen::MatrixXd theta;  // S x A logits

  StochasticPolicy probabilities() const { return softmax_rows(theta); }
};

SoftmaxPolicy uniform_softmax(int n_states, int n_actions);

enum class LearnerKind { kReinforce, kSimplePg, kGreedy };

struct LearnerConfig {
  LearnerKind kind = LearnerKind::kReinforce;
  double alpha = 0.05;    // step size of the gradient learners
  int depth = 1;          // planning depth h of the simple learner
  bool baseline = false;  // REINFORCE: subtract the buffer's mean return
};

// FIFO buffer of the most recent trajectories; pushing beyond capacity
// evicts the oldest.  Rewards are looked up at update time, so buffered
// episodes are always scored under the current designed reward.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity = 10);

  void push(Trajectory trajectory);  // rejects empty trajectories
  int size() const { return static_cast<int>(items_.size()); }
  int capacity() const { return capacity_; }
  const Trajectory& at(int i) const { return items_.at(static_cast<size_t>(i)); }

 private:
  std::deque<Trajectory> items_;
  int capacity_;
};

// Monte-Carlo policy gradient over every buffered trajectory: per step t,
//   theta(s_t, .) += alpha * gamma^t * (G_t - baseline) * dlog pi(a_t|s_t),
// with return-to-go G_t = sum_{u>=t} gamma^(u-t) reward(s_u, a_u), averaged
// per trajectory.  The optional baseline is the mean of every G_t in the
// buffer.  Throws on an empty buffer.
SoftmaxPolicy reinforce_update(const SoftmaxPolicy& policy,
                               const ReplayBuffer& buffer,
                               const RewardTable& reward, double gamma,
                               const LearnerConfig& cfg);

// One exact-expectation softmax policy-gradient step with depth-h planning:
//   theta(s,a) += alpha * mu(s) * pi(a|s) * A_h(s,a),
// the closed form of E_mu[dlog pi * Q_h] (mu = normalized discounted
// occupancy of the current policy under ctx.mdp).
SoftmaxPolicy simple_pg_update(const SoftmaxPolicy& policy,
                               const RewardTable& reward,
                               const InformativenessContext& ctx,
                               const LearnerConfig& cfg);

// Per-state reward argmax (the depth-1 greedy learner).  kRandom gives a
// one-hot policy with ties broken by rng; kUniform spreads uniformly over
// the argmax set (the worst-case trace mode).  Ties are equalities within
// 1e-9 * max(1, |row|_inf).
StochasticPolicy greedy_update(const RewardTable& reward, Rng& rng,
                               TieBreak ties = TieBreak::kRandom);

}  // namespace ard
