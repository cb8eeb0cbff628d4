#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ard/envs.hpp"
#include "ard/informativeness.hpp"
#include "ard/mdp.hpp"
#include "ard/simplex.hpp"

namespace ard {

// Dense linear maps from a flattened reward table (row-major, entry s*A+a)
// to the values it induces under a fixed policy.  Policy evaluation is
// linear in the reward, so q, v and advantage are matrix applications;
// construction costs one LU factorization plus |S|*|A| right-hand sides.
struct LinearRewardOperator {
  int n_states = 0;
  int n_actions = 0;
  Eigen::MatrixXd v_map;    // S     x (S*A)
  Eigen::MatrixXd q_map;    // (S*A) x (S*A)
  Eigen::MatrixXd adv_map;  // (S*A) x (S*A)

  Eigen::MatrixXd q_of(const RewardTable& reward) const;
  Eigen::MatrixXd advantage_of(const RewardTable& reward) const;
};

LinearRewardOperator make_reward_operator(const TabularMdp& mdp,
                                          const StochasticPolicy& pi_t);

// Row-major flattening used by LinearRewardOperator and the constraint
// systems below: flat(s*A + a) = table(s, a).
Eigen::VectorXd flatten_table(const Eigen::MatrixXd& table);
Eigen::MatrixXd unflatten_table(const Eigen::VectorXd& flat, int rows, int cols);

// Linear inequality system over feature coefficients phi,
//   coeffs * phi <= rhs,
// expressing that the advantage of R_phi under pi_t never exceeds the
// advantage of the base reward at any (s,a) (rows in s*A+a order).  Every
// reward satisfying it keeps pi_t optimal and admits no new greedy behavior.
struct InvarianceConstraints {
  Eigen::MatrixXd coeffs;  // (S*A) x d
  Eigen::VectorXd rhs;     // (S*A), base-reward advantages under pi_t
};

InvarianceConstraints build_invariance_constraints(const TabularMdp& mdp,
                                                   const RewardTable& base_reward,
                                                   const StochasticPolicy& pi_t,
                                                   const FeatureMap& features);

enum class DesignObjective {
  kInformativenessH1,  // exact linear coefficients of the depth-1 criterion
  kInformativenessH,   // depth taken from the context
  kConstant,           // feasibility only; canonical (lex-min) vertex
  kExternal,           // caller-supplied coefficient vector
};

struct DesignProblem {
  DesignObjective objective = DesignObjective::kInformativenessH1;
  FeatureMap features;
  double r_max = 1.0;  // box |phi_i| <= r_max
  // Indices allowed to be nonzero; nullopt leaves every coefficient free.
  std::optional<std::vector<int>> support;
  bool include_invariance = true;
  // When > 0, rows for actions the target never plays are tightened to
  // rhs = -strict_epsilon, making the target strictly better than any
  // alternative.  Rows on the target's own support keep their base rhs
  // (their advantage is identically 0, so a negative rhs is unsatisfiable).
  double strict_epsilon = 0.0;
  Eigen::VectorXd external_coeffs;  // used when objective == kExternal
};

struct DesignSolution {
  LpStatus status = LpStatus::kInfeasible;
  Eigen::VectorXd phi;           // full d-vector, zeros off support
  double objective_value = 0.0;  // objective coefficients dotted with phi
  // Active constraints at the solution: row i < S*A is invariance row i
  // (s*A+a order); S*A + j is phi_j = +r_max; S*A + d + j is phi_j = -r_max.
  std::vector<int> active;
};

// Objective coefficients c with objective(R_phi) = c . phi (both
// informativeness criteria are linear in the reward, hence in phi).
Eigen::VectorXd design_objective_coeffs(const InformativenessContext& ctx,
                                        const DesignProblem& problem);

// Exact LP solution of: maximize the objective over phi subject to the box,
// the support restriction, and (optionally) the invariance rows.  Pass a
// prebuilt constraint system to amortize it across redesign rounds; it only
// depends on (mdp, base reward, target, features).  Deterministic; an
// all-zero objective returns the lexicographically smallest optimal vertex.
DesignSolution solve_design(const InformativenessContext& ctx,
                            const DesignProblem& problem,
                            const InvarianceConstraints* prebuilt = nullptr);

struct InvarianceReport {
  bool pass = false;
  std::vector<bool> state_ok;  // per-state verdicts
};

// Checks, by direct value iteration under both rewards, that every greedy
// action of `designed` (1e-9 tie band) is optimal under the base reward
// (1e-6 band) and that pi_t stays optimal under `designed`.
InvarianceReport verify_policy_invariance(const TabularMdp& mdp,
                                          const RewardTable& base_reward,
                                          const StochasticPolicy& pi_t,
                                          const RewardTable& designed);

// The LP handed to the simplex solver (shifted variables x = phi_free +
// r_max, normalized rows, box rows appended), exposed for fixtures.
LpProblem assemble_design_lp(const InformativenessContext& ctx,
                             const DesignProblem& problem,
                             const InvarianceConstraints* prebuilt = nullptr);

// Text round-trips for regression fixtures ("ard-lp v1" / "ard-design v1").
void write_lp(std::ostream& out, const LpProblem& problem);
LpProblem read_lp(std::istream& in);
void write_design_solution(std::ostream& out, const DesignSolution& solution);
DesignSolution read_design_solution(std::istream& in);

}  // namespace ard
