#pragma once

#include "ard/envs.hpp"
#include "ard/mdp.hpp"

namespace ard {

// Per-(s,a) linear coefficients of the depth-1 informativeness in the reward:
//   Z(s,a) = pi_L(a|s)*dA(s,a) - sum_a' pi_L(a'|s)^2 * dA(s,a'),
// where dA(s,a) = A_target(s,a) - E_{pi_L(b|s)}[A_target(s,b)].
// Each row satisfies sum_a pi_L(a|s)*Z(s,a) = 0.
struct ZTable {
  Eigen::MatrixXd z;  // S x A
};

// One exact-expectation softmax policy-gradient step: the "simple learner"
// used by the bi-level criterion.
struct SimpleLearnerConfig {
  double alpha = 0.05;
  int depth = 1;
};

// Frozen quantities every informativeness computation needs: the target
// policy's advantages under the base reward and both discounted state
// occupancies. depth is the lookahead h of the learner's value estimate.
struct InformativenessContext {
  TabularMdp mdp;
  RewardTable base_reward;
  StochasticPolicy target;
  StochasticPolicy learner;
  int depth = 1;

  Eigen::MatrixXd target_adv;         // A under (base_reward, target)
  Eigen::VectorXd target_state_occ;   // normalized discounted, target policy
  Eigen::VectorXd learner_state_occ;  // normalized discounted, learner policy
};

InformativenessContext make_context(const TabularMdp& mdp,
                                    const RewardTable& base_reward,
                                    const StochasticPolicy& target,
                                    const StochasticPolicy& learner,
                                    int depth = 1);

// Refreshes the learner policy (and its occupancy) without recomputing the
// target-side caches.
void set_learner(InformativenessContext& ctx, const StochasticPolicy& learner);

// E over the target's state occupancy of the policy's expected target
// advantage. Zero at the target policy, negative elsewhere when the target
// is optimal.
double performance_metric(const StochasticPolicy& policy,
                          const InformativenessContext& ctx);

// Depth-h criterion: sum over (s,a) of
//   mu_L(s)*pi_L(a|s) * mu_T(s)*pi_L(a|s) * dA(s,a) * A_h(s,a)
// with A_h the learner's depth-h advantage under `reward`. Note pi_L enters
// squared: once from the occupancy over (s,a), once as the inner weight.
double informativeness_h(const RewardTable& reward,
                         const InformativenessContext& ctx);

// Depth-1 specialization: A_h is replaced by the centered reward
// R(s,a) - E_{pi_L(b|s)}[R(s,b)].
double informativeness_h1(const RewardTable& reward,
                          const InformativenessContext& ctx);

// Same value, regrouped per state: sum_s mu_T(s)*mu_L(s) *
// sum_a pi_L(a|s)^2 * dA(s,a) * dR(s,a). Kept as an independent
// implementation for cross-checks.
double informativeness_h1_per_state(const RewardTable& reward,
                                    const InformativenessContext& ctx);

ZTable z_values(const InformativenessContext& ctx);

// Closed-form box maximizer of the depth-1 criterion:
// +r_max where Z(s,a) >= 0, else -r_max.
RewardTable bangbang_design(const InformativenessContext& ctx, double r_max);

// Variant for iterated greedy-learner rounds: ties at Z(s,a) = 0 keep
// +r_max only on actions the learner currently plays; actions outside the
// learner's support stay at -r_max so previously eliminated actions are
// never re-admitted.
RewardTable bangbang_support_design(const InformativenessContext& ctx,
                                    double r_max);

// Runs one simple-learner update from a copy of the learner parameters under
// R_phi, then scores the updated policy with performance_metric. Never
// mutates ctx.
double bilevel_informativeness(const ParametricReward& pr,
                               const InformativenessContext& ctx,
                               const SimpleLearnerConfig& cfg);

// Chain-rule factors behind prop1_gradient, exposed for cross-checks:
// update_jacobian(sa, j) = alpha * mu_L(s)*pi_L(a|s) * A_h(s,a; feature j),
// metric_gradient(sa)    = mu_T(s)*pi_L(a|s) * dA(s,a)
// (the exact d theta'/d phi of the simple update, and the exact d J/d theta
// at the current learner).
struct Prop1Terms {
  Eigen::MatrixXd update_jacobian;  // (S*A) x d
  Eigen::VectorXd metric_gradient;  // S*A
};

Prop1Terms prop1_terms(const ParametricReward& pr,
                       const InformativenessContext& ctx, double alpha);

// First-order meta-gradient of the bi-level criterion w.r.t. phi:
// update_jacobian^T * metric_gradient. Approximation error is O(alpha).
Eigen::VectorXd prop1_gradient(const ParametricReward& pr,
                               const InformativenessContext& ctx, double alpha);

}  // namespace ard
