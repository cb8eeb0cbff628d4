#include "ard/mdp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ard {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

// S x S state chain under pi with terminal pairs contributing no continuation.
Eigen::MatrixXd policy_chain(const TabularMdp& mdp,
                             const StochasticPolicy& policy) {
  Eigen::MatrixXd chain = Eigen::MatrixXd::Zero(mdp.n_states, mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double p = policy(s, a);
      if (p == 0.0 || mdp.is_terminal(s, a)) continue;
      chain.row(s) += p * mdp.transition.row(mdp.sa_index(s, a));
    }
  }
  return chain;
}

Eigen::VectorXd policy_reward(const RewardTable& reward,
                              const StochasticPolicy& policy) {
  return (policy.array() * reward.array()).rowwise().sum();
}

// One q-backup of a state-value vector.
Eigen::MatrixXd q_from_v(const TabularMdp& mdp, const RewardTable& reward,
                         const Eigen::VectorXd& v) {
  Eigen::MatrixXd q(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      double continuation = 0.0;
      if (!mdp.is_terminal(s, a)) {
        continuation = mdp.transition.row(mdp.sa_index(s, a)).dot(v);
      }
      q(s, a) = reward(s, a) + mdp.gamma * continuation;
    }
  }
  return q;
}

ValueBundle bundle_from_q(const StochasticPolicy& policy,
                          const Eigen::MatrixXd& q) {
  ValueBundle out;
  out.q = q;
  out.v = (policy.array() * q.array()).rowwise().sum();
  out.adv = q.colwise() - out.v;
  return out;
}

double bellman_residual(const TabularMdp& mdp, const RewardTable& reward,
                        const StochasticPolicy& policy,
                        const Eigen::MatrixXd& q) {
  const Eigen::VectorXd v = (policy.array() * q.array()).rowwise().sum();
  return (q - q_from_v(mdp, reward, v)).cwiseAbs().maxCoeff();
}

}  // namespace

void TabularMdp::validate() const {
  require(n_states >= 1, "TabularMdp: n_states must be >= 1");
  require(n_actions >= 1, "TabularMdp: n_actions must be >= 1");
  require(gamma >= 0.0 && gamma < 1.0, "TabularMdp: gamma must be in [0,1)");
  require(horizon >= 1, "TabularMdp: horizon must be >= 1");
  require(transition.rows() == n_states * n_actions &&
              transition.cols() == n_states,
          "TabularMdp: transition must be (n_states*n_actions) x n_states");
  require(initial_dist.size() == n_states,
          "TabularMdp: initial_dist must have n_states entries");
  require(base_reward.rows() == n_states && base_reward.cols() == n_actions,
          "TabularMdp: base_reward must be n_states x n_actions");
  require(static_cast<int>(terminal.size()) == n_states * n_actions,
          "TabularMdp: terminal mask must have n_states*n_actions entries");
  require(base_reward.allFinite(), "TabularMdp: base_reward has non-finite entries");
  for (int i = 0; i < transition.rows(); ++i) {
    require(transition.row(i).minCoeff() >= 0.0,
            "TabularMdp: negative transition probability in row " + std::to_string(i));
    require(std::abs(transition.row(i).sum() - 1.0) <= 1e-12,
            "TabularMdp: transition row " + std::to_string(i) + " does not sum to 1");
  }
  require(initial_dist.minCoeff() >= 0.0, "TabularMdp: negative initial probability");
  require(std::abs(initial_dist.sum() - 1.0) <= 1e-12,
          "TabularMdp: initial_dist does not sum to 1");
}

StochasticPolicy uniform_policy(int n_states, int n_actions) {
  return StochasticPolicy::Constant(n_states, n_actions, 1.0 / n_actions);
}

void validate_policy(const TabularMdp& mdp, const StochasticPolicy& policy) {
  require(policy.rows() == mdp.n_states && policy.cols() == mdp.n_actions,
          "policy: must be n_states x n_actions");
  require(policy.allFinite(), "policy: non-finite entries");
  for (int s = 0; s < mdp.n_states; ++s) {
    require(policy.row(s).minCoeff() >= 0.0,
            "policy: negative probability at state " + std::to_string(s));
    require(std::abs(policy.row(s).sum() - 1.0) <= 1e-12,
            "policy: row " + std::to_string(s) + " does not sum to 1");
  }
}

void validate_reward(const TabularMdp& mdp, const RewardTable& reward) {
  require(reward.rows() == mdp.n_states && reward.cols() == mdp.n_actions,
          "reward: must be n_states x n_actions");
  require(reward.allFinite(), "reward: non-finite entries");
}

ValueBundle policy_eval(const TabularMdp& mdp, const RewardTable& reward,
                        const StochasticPolicy& policy, double tol) {
  require(tol > 0.0, "policy_eval: tol must be positive");
  validate_reward(mdp, reward);
  validate_policy(mdp, policy);

  const Eigen::MatrixXd chain = policy_chain(mdp, policy);
  const Eigen::VectorXd r_pi = policy_reward(reward, policy);
  Eigen::VectorXd v;
  if (mdp.n_states * mdp.n_actions <= 4096) {
    Eigen::MatrixXd system =
        Eigen::MatrixXd::Identity(mdp.n_states, mdp.n_states) - mdp.gamma * chain;
    v = system.partialPivLu().solve(r_pi);
  } else {
    // Gauss-Seidel sweeps; contraction with modulus gamma guarantees progress.
    v = Eigen::VectorXd::Zero(mdp.n_states);
    const double sweep_tol = tol * (1.0 - mdp.gamma) / 2.0;
    for (int iter = 0; iter < 1000000; ++iter) {
      double delta = 0.0;
      for (int s = 0; s < mdp.n_states; ++s) {
        const double updated = r_pi(s) + mdp.gamma * chain.row(s).dot(v);
        delta = std::max(delta, std::abs(updated - v(s)));
        v(s) = updated;
      }
      if (delta <= sweep_tol) break;
    }
  }

  ValueBundle out = bundle_from_q(policy, q_from_v(mdp, reward, v));
  out.residual = bellman_residual(mdp, reward, policy, out.q);
  return out;
}

ValueBundle optimal_values(const TabularMdp& mdp, const RewardTable& reward,
                           double tol) {
  require(tol > 0.0, "optimal_values: tol must be positive");
  validate_reward(mdp, reward);

  Eigen::VectorXd v = Eigen::VectorXd::Zero(mdp.n_states);
  const double gamma = mdp.gamma;
  const double sweep_tol =
      gamma > 0.0 ? tol * (1.0 - gamma) / (2.0 * gamma) : tol;
  Eigen::MatrixXd q;
  for (int iter = 0; iter < 2000000; ++iter) {
    q = q_from_v(mdp, reward, v);
    const Eigen::VectorXd updated = q.rowwise().maxCoeff();
    const double delta = (updated - v).cwiseAbs().maxCoeff();
    v = updated;
    if (delta <= sweep_tol) break;
  }
  q = q_from_v(mdp, reward, v);

  ValueBundle out;
  out.q = q;
  out.v = q.rowwise().maxCoeff();
  out.adv = q.colwise() - out.v;
  out.residual = (q - q_from_v(mdp, reward, out.v)).cwiseAbs().maxCoeff();
  return out;
}

StochasticPolicy greedy_table_policy(const Eigen::MatrixXd& scores,
                                     double tie_tol, TieBreak mode, Rng* rng) {
  if (!scores.allFinite())
    throw std::invalid_argument("greedy_table_policy: non-finite scores");
  if (mode == TieBreak::kRandom && rng == nullptr)
    throw std::invalid_argument("greedy_table_policy: random tie mode needs an rng");

  const int n_states = static_cast<int>(scores.rows());
  const int n_actions = static_cast<int>(scores.cols());
  StochasticPolicy policy = StochasticPolicy::Zero(n_states, n_actions);
  std::vector<int> ties;
  for (int s = 0; s < n_states; ++s) {
    const double best = scores.row(s).maxCoeff();
    ties.clear();
    for (int a = 0; a < n_actions; ++a) {
      if (scores(s, a) >= best - tie_tol) ties.push_back(a);
    }
    switch (mode) {
      case TieBreak::kRandom:
        policy(s, ties[rng->uniform_int(static_cast<int>(ties.size()))]) = 1.0;
        break;
      case TieBreak::kUniform:
        for (int a : ties) policy(s, a) = 1.0 / static_cast<double>(ties.size());
        break;
      case TieBreak::kLowestIndex:
        policy(s, ties.front()) = 1.0;
        break;
    }
  }
  return policy;
}

StochasticPolicy greedy_policy(const ValueBundle& values, Rng& rng,
                               double tie_tol) {
  return greedy_table_policy(values.q, tie_tol, TieBreak::kRandom, &rng);
}

StochasticPolicy optimal_policy(const TabularMdp& mdp,
                                const RewardTable& reward, double tie_tol) {
  return greedy_table_policy(optimal_values(mdp, reward).q, tie_tol,
                             TieBreak::kLowestIndex);
}

StochasticPolicy softmax_rows(const Eigen::MatrixXd& logits) {
  StochasticPolicy policy(logits.rows(), logits.cols());
  for (Eigen::Index s = 0; s < logits.rows(); ++s) {
    const double shift = logits.row(s).maxCoeff();
    require(std::isfinite(shift), "softmax row has no finite entry");
    const Eigen::ArrayXd weights = (logits.row(s).array() - shift).exp();
    policy.row(s) = weights / weights.sum();
  }
  return policy;
}

OccupancyMeasure occupancy(const TabularMdp& mdp,
                           const StochasticPolicy& policy) {
  validate_policy(mdp, policy);
  const Eigen::MatrixXd chain = policy_chain(mdp, policy);
  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(mdp.n_states, mdp.n_states) -
      mdp.gamma * chain.transpose();
  Eigen::VectorXd raw =
      system.partialPivLu().solve((1.0 - mdp.gamma) * mdp.initial_dist);
  raw = raw.cwiseMax(0.0);  // clear fp-level negatives

  OccupancyMeasure out;
  out.total_mass = raw.sum();
  out.state = raw / out.total_mass;
  out.state_action = policy.array().colwise() * out.state.array();
  return out;
}

ValueBundle h_step_q(const TabularMdp& mdp, const RewardTable& reward,
                     const StochasticPolicy& policy, int h) {
  require(h >= 0, "h_step_q: h must be >= 0");
  validate_reward(mdp, reward);
  validate_policy(mdp, policy);

  Eigen::MatrixXd q = reward;
  for (int step = 0; step < h; ++step) {
    const Eigen::VectorXd v = (policy.array() * q.array()).rowwise().sum();
    q = q_from_v(mdp, reward, v);
  }
  return bundle_from_q(policy, q);
}

Trajectory rollout(const TabularMdp& mdp, const StochasticPolicy& policy,
                   Rng& rng, int max_steps) {
  validate_policy(mdp, policy);
  if (max_steps < 0) max_steps = mdp.horizon;

  Trajectory traj;
  traj.seed_tag = rng.seed();
  std::vector<double> row(static_cast<size_t>(
      std::max(mdp.n_states, mdp.n_actions)));

  auto sample_row = [&](const auto& matrix, int r, int n) {
    for (int i = 0; i < n; ++i) row[static_cast<size_t>(i)] = matrix(r, i);
    return rng.sample_weights(row.data(), n);
  };

  int s = sample_row(Eigen::RowVectorXd(mdp.initial_dist.transpose()), 0,
                     mdp.n_states);
  for (int t = 0; t < max_steps; ++t) {
    const int a = sample_row(policy, s, mdp.n_actions);
    const int next =
        sample_row(mdp.transition, mdp.sa_index(s, a), mdp.n_states);
    traj.steps.push_back({s, a, next});
    if (mdp.is_terminal(s, a)) {
      traj.terminated = true;
      break;
    }
    s = next;
  }
  return traj;
}

double trajectory_return(const Trajectory& traj, const RewardTable& reward,
                         double gamma) {
  double value = 0.0;
  double discount = 1.0;
  for (const Step& step : traj.steps) {
    value += discount * reward(step.state, step.action);
    discount *= gamma;
  }
  return value;
}

double policy_value(const TabularMdp& mdp, const RewardTable& reward,
                    const StochasticPolicy& policy) {
  return mdp.initial_dist.dot(policy_eval(mdp, reward, policy).v);
}

double policy_value_finite(const TabularMdp& mdp, const RewardTable& reward,
                           const StochasticPolicy& policy, int steps) {
  require(steps >= 0, "policy_value_finite: steps must be >= 0");
  const Eigen::MatrixXd chain = policy_chain(mdp, policy);
  const Eigen::VectorXd r_pi = policy_reward(reward, policy);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(mdp.n_states);
  for (int t = 0; t < steps; ++t) v = r_pi + mdp.gamma * (chain * v);
  return mdp.initial_dist.dot(v);
}

TabularMdp make_random_mdp(Rng& rng, int n_states, int n_actions,
                           const RandomMdpOptions& opts) {
  TabularMdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.gamma = opts.gamma;
  mdp.horizon = 30;
  mdp.transition.resize(n_states * n_actions, n_states);
  for (int i = 0; i < n_states * n_actions; ++i) {
    double total = 0.0;
    for (int s = 0; s < n_states; ++s) {
      const double w = 0.05 + rng.uniform();
      mdp.transition(i, s) = w;
      total += w;
    }
    mdp.transition.row(i) /= total;
  }
  mdp.initial_dist.resize(n_states);
  {
    double total = 0.0;
    for (int s = 0; s < n_states; ++s) {
      const double w = 0.05 + rng.uniform();
      mdp.initial_dist(s) = w;
      total += w;
    }
    mdp.initial_dist /= total;
  }
  mdp.base_reward.resize(n_states, n_actions);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a)
      mdp.base_reward(s, a) = rng.uniform(opts.reward_low, opts.reward_high);
  mdp.terminal.assign(static_cast<size_t>(n_states * n_actions), 0);
  if (opts.with_terminals) {
    const int s = rng.uniform_int(n_states);
    const int a = rng.uniform_int(n_actions);
    mdp.terminal[static_cast<size_t>(mdp.sa_index(s, a))] = 1;
  }
  mdp.validate();
  return mdp;
}

StochasticPolicy make_random_policy(Rng& rng, int n_states, int n_actions) {
  StochasticPolicy policy(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    double total = 0.0;
    for (int a = 0; a < n_actions; ++a) {
      const double w = 0.05 + rng.uniform();
      policy(s, a) = w;
      total += w;
    }
    policy.row(s) /= total;
  }
  return policy;
}

}  // namespace ard
