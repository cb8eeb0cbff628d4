#include "ard/informativeness.hpp"

#include <cmath>
#include <stdexcept>

namespace ard {

namespace {

void require(bool condition, const char* message) {
  if (!condition) throw std::invalid_argument(message);
}

// dA(s,a) = A_target(s,a) - E_{pi_L(b|s)}[A_target(s,b)]
Eigen::MatrixXd delta_adv(const InformativenessContext& ctx) {
  const Eigen::VectorXd learner_mean =
      (ctx.learner.array() * ctx.target_adv.array()).rowwise().sum();
  return ctx.target_adv.array().colwise() - learner_mean.array();
}

// Depth-h advantage of `policy` under `reward`: h_step_q centered by its
// policy mean per state.
Eigen::MatrixXd h_advantage(const TabularMdp& mdp, const RewardTable& reward,
                            const StochasticPolicy& policy, int depth) {
  return h_step_q(mdp, reward, policy, depth).adv;
}

}  // namespace

InformativenessContext make_context(const TabularMdp& mdp,
                                    const RewardTable& base_reward,
                                    const StochasticPolicy& target,
                                    const StochasticPolicy& learner,
                                    int depth) {
  require(depth >= 1, "context depth must be >= 1");
  mdp.validate();
  validate_reward(mdp, base_reward);
  validate_policy(mdp, target);
  validate_policy(mdp, learner);

  InformativenessContext ctx;
  ctx.mdp = mdp;
  ctx.base_reward = base_reward;
  ctx.target = target;
  ctx.learner = learner;
  ctx.depth = depth;
  ctx.target_adv = policy_eval(mdp, base_reward, target).adv;
  ctx.target_state_occ = occupancy(mdp, target).state;
  ctx.learner_state_occ = occupancy(mdp, learner).state;

  const Eigen::VectorXd own_mean =
      (target.array() * ctx.target_adv.array()).rowwise().sum();
  require(own_mean.cwiseAbs().maxCoeff() <= 1e-9,
          "target advantages must have zero mean under the target policy");
  return ctx;
}

void set_learner(InformativenessContext& ctx, const StochasticPolicy& learner) {
  validate_policy(ctx.mdp, learner);
  ctx.learner = learner;
  ctx.learner_state_occ = occupancy(ctx.mdp, learner).state;
}

double performance_metric(const StochasticPolicy& policy,
                          const InformativenessContext& ctx) {
  validate_policy(ctx.mdp, policy);
  const Eigen::VectorXd expected_adv =
      (policy.array() * ctx.target_adv.array()).rowwise().sum();
  return ctx.target_state_occ.dot(expected_adv);
}

double informativeness_h(const RewardTable& reward,
                         const InformativenessContext& ctx) {
  require(ctx.depth >= 1, "informativeness_h needs depth >= 1");
  validate_reward(ctx.mdp, reward);
  const Eigen::MatrixXd gap = delta_adv(ctx);
  const Eigen::MatrixXd adv_h =
      h_advantage(ctx.mdp, reward, ctx.learner, ctx.depth);
  // E over the learner's (s,a) occupancy of mu_T(s)*pi_L(a|s)*dA*A_h; the
  // occupancy contributes the second pi_L(a|s) factor.
  const Eigen::ArrayXXd integrand = ctx.learner.array().square() *
                                    gap.array() * adv_h.array();
  const Eigen::VectorXd per_state = integrand.rowwise().sum();
  return (ctx.learner_state_occ.array() * ctx.target_state_occ.array() *
          per_state.array())
      .sum();
}

double informativeness_h1(const RewardTable& reward,
                          const InformativenessContext& ctx) {
  validate_reward(ctx.mdp, reward);
  const Eigen::MatrixXd gap = delta_adv(ctx);
  const Eigen::VectorXd reward_mean =
      (ctx.learner.array() * reward.array()).rowwise().sum();
  const Eigen::MatrixXd centered =
      reward.array().colwise() - reward_mean.array();
  const Eigen::ArrayXXd integrand =
      ctx.learner.array().square() * gap.array() * centered.array();
  return (ctx.learner_state_occ.array() * ctx.target_state_occ.array() *
          integrand.rowwise().sum().array())
      .sum();
}

double informativeness_h1_per_state(const RewardTable& reward,
                                    const InformativenessContext& ctx) {
  validate_reward(ctx.mdp, reward);
  double total = 0.0;
  for (int s = 0; s < ctx.mdp.n_states; ++s) {
    double adv_mean = 0.0, reward_mean = 0.0;
    for (int a = 0; a < ctx.mdp.n_actions; ++a) {
      adv_mean += ctx.learner(s, a) * ctx.target_adv(s, a);
      reward_mean += ctx.learner(s, a) * reward(s, a);
    }
    double inner = 0.0;
    for (int a = 0; a < ctx.mdp.n_actions; ++a) {
      const double p = ctx.learner(s, a);
      inner += p * p * (ctx.target_adv(s, a) - adv_mean) *
               (reward(s, a) - reward_mean);
    }
    total += ctx.target_state_occ(s) * ctx.learner_state_occ(s) * inner;
  }
  return total;
}

ZTable z_values(const InformativenessContext& ctx) {
  const Eigen::MatrixXd gap = delta_adv(ctx);
  ZTable table;
  table.z.resize(ctx.mdp.n_states, ctx.mdp.n_actions);
  for (int s = 0; s < ctx.mdp.n_states; ++s) {
    double weighted = 0.0;
    for (int a = 0; a < ctx.mdp.n_actions; ++a)
      weighted += ctx.learner(s, a) * ctx.learner(s, a) * gap(s, a);
    for (int a = 0; a < ctx.mdp.n_actions; ++a)
      table.z(s, a) = ctx.learner(s, a) * gap(s, a) - weighted;
  }
  return table;
}

RewardTable bangbang_design(const InformativenessContext& ctx, double r_max) {
  require(r_max > 0.0, "r_max must be positive");
  const ZTable table = z_values(ctx);
  RewardTable reward(ctx.mdp.n_states, ctx.mdp.n_actions);
  for (int s = 0; s < ctx.mdp.n_states; ++s)
    for (int a = 0; a < ctx.mdp.n_actions; ++a)
      reward(s, a) = table.z(s, a) >= 0.0 ? r_max : -r_max;
  return reward;
}

RewardTable bangbang_support_design(const InformativenessContext& ctx,
                                    double r_max) {
  require(r_max > 0.0, "r_max must be positive");
  const ZTable table = z_values(ctx);
  // Ties at Z = 0 arise (up to roundoff) on actions the learner no longer
  // plays; keep those at -r_max so eliminated actions never come back.
  const double tie_tol =
      1e-9 * std::max(1.0, table.z.cwiseAbs().maxCoeff());
  RewardTable reward(ctx.mdp.n_states, ctx.mdp.n_actions);
  for (int s = 0; s < ctx.mdp.n_states; ++s) {
    for (int a = 0; a < ctx.mdp.n_actions; ++a) {
      const double z = table.z(s, a);
      const bool up = z > tie_tol || (z >= -tie_tol && ctx.learner(s, a) > 0.0);
      reward(s, a) = up ? r_max : -r_max;
    }
  }
  return reward;
}

double bilevel_informativeness(const ParametricReward& pr,
                               const InformativenessContext& ctx,
                               const SimpleLearnerConfig& cfg) {
  require(cfg.depth >= 0, "learner depth must be >= 0");
  const RewardTable reward = reward_from_phi(pr);
  validate_reward(ctx.mdp, reward);
  const Eigen::MatrixXd adv_h =
      h_advantage(ctx.mdp, reward, ctx.learner, cfg.depth);
  // Exact-expectation softmax step on theta = log pi; zero-probability
  // actions carry zero gradient and stay at probability zero.
  Eigen::MatrixXd theta = ctx.learner.array().log().matrix();
  for (int s = 0; s < ctx.mdp.n_states; ++s)
    for (int a = 0; a < ctx.mdp.n_actions; ++a)
      theta(s, a) += cfg.alpha * ctx.learner_state_occ(s) *
                     ctx.learner(s, a) * adv_h(s, a);
  return performance_metric(softmax_rows(theta), ctx);
}

Prop1Terms prop1_terms(const ParametricReward& pr,
                       const InformativenessContext& ctx, double alpha) {
  const FeatureMap& map = pr.feature_map;
  map.validate();
  require(map.n_states == ctx.mdp.n_states &&
              map.n_actions == ctx.mdp.n_actions,
          "feature map shape does not match the context");
  const int n_sa = ctx.mdp.n_states * ctx.mdp.n_actions;

  Prop1Terms terms;
  terms.update_jacobian.resize(n_sa, map.dim);
  for (int j = 0; j < map.dim; ++j) {
    RewardTable feature(ctx.mdp.n_states, ctx.mdp.n_actions);
    for (int s = 0; s < ctx.mdp.n_states; ++s)
      for (int a = 0; a < ctx.mdp.n_actions; ++a)
        feature(s, a) = map.features(ctx.mdp.sa_index(s, a), j);
    const Eigen::MatrixXd adv_j =
        h_advantage(ctx.mdp, feature, ctx.learner, ctx.depth);
    for (int s = 0; s < ctx.mdp.n_states; ++s)
      for (int a = 0; a < ctx.mdp.n_actions; ++a)
        terms.update_jacobian(ctx.mdp.sa_index(s, a), j) =
            alpha * ctx.learner_state_occ(s) * ctx.learner(s, a) * adv_j(s, a);
  }

  const Eigen::MatrixXd gap = delta_adv(ctx);
  terms.metric_gradient.resize(n_sa);
  for (int s = 0; s < ctx.mdp.n_states; ++s)
    for (int a = 0; a < ctx.mdp.n_actions; ++a)
      terms.metric_gradient(ctx.mdp.sa_index(s, a)) =
          ctx.target_state_occ(s) * ctx.learner(s, a) * gap(s, a);
  return terms;
}

Eigen::VectorXd prop1_gradient(const ParametricReward& pr,
                               const InformativenessContext& ctx,
                               double alpha) {
  const Prop1Terms terms = prop1_terms(pr, ctx, alpha);
  return terms.update_jacobian.transpose() * terms.metric_gradient;
}

}  // namespace ard
