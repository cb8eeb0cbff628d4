#include "ard/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "ard/config.hpp"
#include "ard/designer.hpp"
#include "ard/harness.hpp"
#include "ard/informativeness.hpp"
#include "ard/learners.hpp"
#include "ard/simplex.hpp"

namespace ard {

namespace {

void ensure(bool ok, const std::string& message) {
  if (!ok) throw std::runtime_error(message);
}

std::string bound(const char* label, double value) {
  std::ostringstream out;
  out << label << " " << value;
  return out.str();
}

FeatureMap identity_features(int n_states, int n_actions) {
  FeatureMap map;
  map.n_states = n_states;
  map.n_actions = n_actions;
  map.dim = n_states * n_actions;
  map.features = Eigen::MatrixXd::Identity(map.dim, map.dim);
  return map;
}

struct Instance {
  TabularMdp mdp;
  StochasticPolicy target;
  StochasticPolicy learner;
};

Instance random_instance(Rng& rng, int n_states, int n_actions,
                         bool with_terminals = false) {
  Instance inst;
  inst.mdp = make_random_mdp(rng, n_states, n_actions,
                             {.gamma = 0.9, .with_terminals = with_terminals});
  inst.target = optimal_policy(inst.mdp, inst.mdp.base_reward);
  inst.learner = make_random_policy(rng, n_states, n_actions);
  return inst;
}

RewardTable random_reward(Rng& rng, int n_states, int n_actions, double scale) {
  RewardTable reward(n_states, n_actions);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a)
      reward(s, a) = rng.uniform(-scale, scale);
  return reward;
}

// Truncated discounted state-visitation series, mirroring the occupancy
// semantics: terminal pairs contribute no successor mass; the result is
// renormalized over live states.
Eigen::VectorXd occupancy_series(const TabularMdp& mdp,
                                 const StochasticPolicy& policy, int terms) {
  Eigen::VectorXd mass = mdp.initial_dist;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(mdp.n_states);
  double discount = 1.0;
  for (int t = 0; t < terms; ++t) {
    acc += discount * mass;
    Eigen::VectorXd next = Eigen::VectorXd::Zero(mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s)
      for (int a = 0; a < mdp.n_actions; ++a) {
        if (mdp.is_terminal(s, a)) continue;
        const double w = mass(s) * policy(s, a);
        if (w == 0.0) continue;
        next += w * mdp.transition.row(mdp.sa_index(s, a)).transpose();
      }
    mass = next;
    discount *= mdp.gamma;
  }
  return acc / acc.sum();
}

// Exhaustive best objective over vertices of {a x <= b, x >= 0}.
struct VertexBest {
  bool feasible = false;
  double objective = 0.0;
};

VertexBest best_vertex(const LpProblem& lp) {
  const int n = static_cast<int>(lp.c.size());
  const int m = static_cast<int>(lp.a.rows());
  Eigen::MatrixXd rows(m + n, n);
  rows.topRows(m) = lp.a;
  rows.bottomRows(n) = -Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd rhs(m + n);
  rhs.head(m) = lp.b;
  rhs.tail(n).setZero();

  VertexBest best;
  std::vector<int> subset;
  const std::function<void(int)> recurse = [&](int start) {
    if (static_cast<int>(subset.size()) == n) {
      Eigen::MatrixXd basis(n, n);
      Eigen::VectorXd target(n);
      for (int i = 0; i < n; ++i) {
        basis.row(i) = rows.row(subset[i]);
        target(i) = rhs(subset[i]);
      }
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(basis);
      if (!lu.isInvertible()) return;
      const Eigen::VectorXd x = lu.solve(target);
      if (((rows * x).array() <= rhs.array() + 1e-9).all()) {
        const double objective = lp.c.dot(x);
        if (!best.feasible || objective > best.objective)
          best.objective = objective;
        best.feasible = true;
      }
      return;
    }
    for (int i = start; i < m + n; ++i) {
      subset.push_back(i);
      recurse(i + 1);
      subset.pop_back();
    }
  };
  recurse(0);
  return best;
}

LpProblem random_lp(Rng& rng, int n, int m) {
  LpProblem lp;
  lp.c = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) lp.c(j) = rng.uniform(-1.0, 1.0);
  lp.a = Eigen::MatrixXd::Zero(m + n, n);
  lp.b = Eigen::VectorXd::Zero(m + n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) lp.a(i, j) = rng.uniform(-1.0, 1.0);
    lp.b(i) = rng.uniform(-0.5, 1.0);
  }
  for (int j = 0; j < n; ++j) {
    lp.a(m + j, j) = 1.0;
    lp.b(m + j) = rng.uniform(0.5, 2.0);
  }
  return lp;
}

}  // namespace

bool all_passed(const std::vector<VerifyCheck>& checks) {
  return std::all_of(checks.begin(), checks.end(),
                     [](const VerifyCheck& c) { return c.pass; });
}

std::vector<VerifyCheck> run_verification_suite(std::uint64_t seed) {
  std::vector<VerifyCheck> checks;
  const auto run = [&](const char* name, const std::function<std::string()>& body) {
    VerifyCheck check;
    check.name = name;
    try {
      check.detail = body();
      check.pass = true;
    } catch (const std::exception& e) {
      check.pass = false;
      check.detail = e.what();
    }
    checks.push_back(std::move(check));
  };

  // ---- mdp-core ----
  run("mdp.advantage-rows-centered", [&] {
    Rng rng(splitmix64(seed + 1));
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const Instance inst = random_instance(rng, 3 + rng.uniform_int(4),
                                            2 + rng.uniform_int(3), trial % 2);
      const StochasticPolicy policy = make_random_policy(
          rng, inst.mdp.n_states, inst.mdp.n_actions);
      const ValueBundle values =
          policy_eval(inst.mdp, inst.mdp.base_reward, policy);
      const Eigen::VectorXd mixed =
          (values.adv.array() * policy.array()).rowwise().sum().matrix();
      worst = std::max(worst, mixed.cwiseAbs().maxCoeff());
    }
    ensure(worst <= 1e-9, bound("advantage row mix residual", worst));
    return bound("max residual", worst);
  });

  run("mdp.occupancy-normalized-and-series", [&] {
    Rng rng(splitmix64(seed + 2));
    double worst_sum = 0.0;
    double worst_series = 0.0;
    for (int trial = 0; trial < 8; ++trial) {
      const int n_states = 2 + rng.uniform_int(9);  // up to 10
      const Instance inst =
          random_instance(rng, n_states, 2 + rng.uniform_int(2), trial % 2);
      const StochasticPolicy policy =
          make_random_policy(rng, inst.mdp.n_states, inst.mdp.n_actions);
      const OccupancyMeasure mu = occupancy(inst.mdp, policy);
      worst_sum = std::max(worst_sum, std::abs(mu.state.sum() - 1.0));
      const Eigen::VectorXd series = occupancy_series(inst.mdp, policy, 10000);
      worst_series =
          std::max(worst_series, (mu.state - series).cwiseAbs().maxCoeff());
    }
    ensure(worst_sum <= 1e-9, bound("state mass sum error", worst_sum));
    ensure(worst_series <= 1e-6, bound("series mismatch", worst_series));
    return bound("series mismatch", worst_series);
  });

  run("mdp.greedy-of-optimal-reproduces-v", [&] {
    Rng rng(splitmix64(seed + 3));
    double worst = 0.0;
    for (int trial = 0; trial < 6; ++trial) {
      const Instance inst =
          random_instance(rng, 3 + rng.uniform_int(3), 2 + rng.uniform_int(2));
      const ValueBundle star =
          optimal_values(inst.mdp, inst.mdp.base_reward, 1e-12);
      const StochasticPolicy greedy =
          greedy_table_policy(star.q, 1e-9, TieBreak::kLowestIndex);
      const ValueBundle check =
          policy_eval(inst.mdp, inst.mdp.base_reward, greedy, 1e-12);
      worst = std::max(worst, (check.v - star.v).cwiseAbs().maxCoeff());
    }
    ensure(worst <= 1e-8, bound("optimal value mismatch", worst));
    return bound("max |v - v*|", worst);
  });

  run("mdp.h-step-monotone-convergence", [&] {
    Rng rng(splitmix64(seed + 4));
    const Instance inst = random_instance(rng, 4, 3);
    const StochasticPolicy policy = make_random_policy(rng, 4, 3);
    const RewardTable nonneg =
        (inst.mdp.base_reward.array() - inst.mdp.base_reward.minCoeff())
            .matrix();
    const ValueBundle exact = policy_eval(inst.mdp, nonneg, policy, 1e-12);
    double previous = std::numeric_limits<double>::infinity();
    double last = previous;
    for (const int h : {0, 1, 2, 4, 8, 16, 32, 64, 128}) {
      const ValueBundle truncated = h_step_q(inst.mdp, nonneg, policy, h);
      const double err = (truncated.q - exact.q).cwiseAbs().maxCoeff();
      ensure(err <= previous + 1e-12,
             "sup-norm error grew from " + std::to_string(previous) + " to " +
                 std::to_string(err) + " at depth " + std::to_string(h));
      previous = err;
      last = err;
    }
    ensure(last <= 1e-2, bound("depth-64 error", last));
    return bound("depth-64 error", last);
  });

  run("mdp.rollout-return-unbiased", [&] {
    Rng rng(splitmix64(seed + 5));
    const Instance inst = random_instance(rng, 3, 2, true);
    const StochasticPolicy policy = make_random_policy(rng, 3, 2);
    const double exact = policy_value_finite(inst.mdp, inst.mdp.base_reward,
                                             policy, inst.mdp.horizon);
    const int n = 50000;
    double mean = 0.0;
    double m2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const Trajectory traj = rollout(inst.mdp, policy, rng);
      const double value =
          trajectory_return(traj, inst.mdp.base_reward, inst.mdp.gamma);
      const double delta = value - mean;
      mean += delta / (i + 1);
      m2 += delta * (value - mean);
    }
    const double stderr_mean = std::sqrt(m2 / (n - 1.0) / n);
    const double gap = std::abs(mean - exact);
    ensure(gap <= 3.0 * stderr_mean + 1e-12,
           "sampled return " + std::to_string(mean) + " vs exact " +
               std::to_string(exact) + " gap " + std::to_string(gap) +
               " > 3 x " + std::to_string(stderr_mean));
    return bound("|mean - exact| / stderr",
                 stderr_mean > 0 ? gap / stderr_mean : 0.0);
  });

  // ---- env-zoo ----
  run("envs.base-reward-expressible", [&] {
    const RoomEnv room = build_room({});
    const Eigen::VectorXd room_phi =
        recover_phi(room.features, room.mdp.base_reward);
    const RewardTable room_back = reward_from_phi({room_phi, room.features});
    ensure((room_back - room.mdp.base_reward).cwiseAbs().maxCoeff() == 0.0,
           "room base reward is not reproduced exactly");
    const LineKEnv linek = build_linek({});
    const Eigen::VectorXd linek_phi =
        recover_phi(linek.features, linek.mdp.base_reward);
    const RewardTable linek_back = reward_from_phi({linek_phi, linek.features});
    ensure((linek_back - linek.mdp.base_reward).cwiseAbs().maxCoeff() == 0.0,
           "linek base reward is not reproduced exactly");
    return std::string("phi recovered exactly for room and linek");
  });

  run("envs.room-goal-reachable", [&] {
    RoomConfig cfg;
    cfg.p_rand = 0.0;  // noiseless dynamics
    const RoomEnv room = build_room(cfg);
    const StochasticPolicy policy =
        optimal_policy(room.mdp, room.mdp.base_reward);
    int state = room.start_state;
    for (int t = 0; t < room.mdp.horizon; ++t) {
      int action = 0;
      policy.row(state).maxCoeff(&action);
      if (room.mdp.is_terminal(state, action)) {
        ensure(state == room.goal_state,
               "terminal taken away from the goal at state " +
                   std::to_string(state));
        return "goal reached in " + std::to_string(t + 1) + " steps";
      }
      int next = 0;
      room.mdp.transition.row(room.mdp.sa_index(state, action)).maxCoeff(&next);
      state = next;
    }
    throw std::runtime_error("optimal policy did not reach the goal within H");
  });

  run("envs.feature-one-hot-partition", [&] {
    const RoomEnv room = build_room({});
    const LineKEnv linek = build_linek({});
    for (const FeatureMap* map : {&room.features, &linek.features}) {
      const Eigen::VectorXd sums = map->features.rowwise().sum();
      ensure((sums.array() == 1.0).all(), "a feature row does not sum to 1");
    }
    return std::string("every (s,a) row is one-hot in both environments");
  });

  // ---- informativeness ----
  run("informativeness.linear-in-reward", [&] {
    Rng rng(splitmix64(seed + 9));
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const Instance inst =
          random_instance(rng, 2 + rng.uniform_int(3), 2 + rng.uniform_int(2));
      const InformativenessContext ctx = make_context(
          inst.mdp, inst.mdp.base_reward, inst.target, inst.learner);
      const RewardTable r1 =
          random_reward(rng, inst.mdp.n_states, inst.mdp.n_actions, 1.0);
      const RewardTable r2 =
          random_reward(rng, inst.mdp.n_states, inst.mdp.n_actions, 1.0);
      const double a = rng.uniform(-2.0, 2.0);
      const double b = rng.uniform(-2.0, 2.0);
      const double combined = informativeness_h1(a * r1 + b * r2, ctx);
      const double split =
          a * informativeness_h1(r1, ctx) + b * informativeness_h1(r2, ctx);
      worst = std::max(worst, std::abs(combined - split));
    }
    ensure(worst <= 1e-9, bound("linearity residual", worst));
    return bound("max linearity residual", worst);
  });

  run("informativeness.dual-form-identity", [&] {
    Rng rng(splitmix64(seed + 10));
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
      const Instance inst =
          random_instance(rng, 2 + rng.uniform_int(4), 2 + rng.uniform_int(3),
                          trial % 3 == 0);
      const InformativenessContext ctx = make_context(
          inst.mdp, inst.mdp.base_reward, inst.target, inst.learner);
      const RewardTable reward =
          random_reward(rng, inst.mdp.n_states, inst.mdp.n_actions, 2.0);
      worst = std::max(worst, std::abs(informativeness_h1(reward, ctx) -
                                       informativeness_h1_per_state(reward, ctx)));
    }
    ensure(worst <= 1e-10, bound("dual-form mismatch", worst));
    return bound("max mismatch over 200 instances", worst);
  });

  run("informativeness.z-consistency", [&] {
    Rng rng(splitmix64(seed + 11));
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const Instance inst =
          random_instance(rng, 2 + rng.uniform_int(3), 2 + rng.uniform_int(2));
      const InformativenessContext ctx = make_context(
          inst.mdp, inst.mdp.base_reward, inst.target, inst.learner);
      const ZTable z = z_values(ctx);
      RewardTable raw =
          random_reward(rng, inst.mdp.n_states, inst.mdp.n_actions, 1.5);
      RewardTable centered = raw;
      for (int s = 0; s < inst.mdp.n_states; ++s)
        centered.row(s).array() -= ctx.learner.row(s).dot(raw.row(s));
      for (const RewardTable* reward : {&raw, &centered}) {
        double from_z = 0.0;
        for (int s = 0; s < inst.mdp.n_states; ++s)
          for (int a = 0; a < inst.mdp.n_actions; ++a)
            from_z += ctx.target_state_occ(s) * ctx.learner_state_occ(s) *
                      ctx.learner(s, a) * z.z(s, a) * (*reward)(s, a);
        worst = std::max(worst,
                         std::abs(from_z - informativeness_h1(*reward, ctx)));
      }
    }
    ensure(worst <= 1e-10, bound("z-form mismatch", worst));
    return bound("max mismatch", worst);
  });

  run("informativeness.bangbang-box-optimal", [&] {
    Rng rng(splitmix64(seed + 12));
    double worst_gap = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      const int n_states = 2 + trial % 2;
      const int n_actions = 3 + (trial / 2) % 2;  // |S||A| in 6..12
      const Instance inst = random_instance(rng, n_states, n_actions);
      const InformativenessContext ctx = make_context(
          inst.mdp, inst.mdp.base_reward, inst.target, inst.learner);
      const double r_max = 1.0;
      const int cells = n_states * n_actions;
      double best = -std::numeric_limits<double>::infinity();
      for (int mask = 0; mask < (1 << cells); ++mask) {
        RewardTable candidate(n_states, n_actions);
        for (int i = 0; i < cells; ++i)
          candidate(i / n_actions, i % n_actions) =
              (mask >> i) & 1 ? r_max : -r_max;
        best = std::max(best, informativeness_h1(candidate, ctx));
      }
      const double attained =
          informativeness_h1(bangbang_design(ctx, r_max), ctx);
      worst_gap = std::max(worst_gap, best - attained);
    }
    ensure(worst_gap <= 1e-9, bound("optimality gap", worst_gap));
    return bound("max enumeration gap", worst_gap);
  });

  run("informativeness.prop1-gradient-agreement", [&] {
    Rng rng(splitmix64(seed + 13));
    double worst_err = 0.0;
    for (int trial = 0; trial < 2; ++trial) {
      const Instance inst = random_instance(rng, 3, 2);
      const int depth = 1 + trial;
      const InformativenessContext ctx =
          make_context(inst.mdp, inst.mdp.base_reward, inst.target,
                       inst.learner, depth);
      const FeatureMap features = identity_features(3, 2);
      ParametricReward pr{Eigen::VectorXd(features.dim), features};
      for (int j = 0; j < features.dim; ++j) pr.phi(j) = rng.uniform(-0.5, 0.5);
      double previous = std::numeric_limits<double>::infinity();
      for (const double alpha : {1e-2, 1e-3, 1e-4}) {
        const SimpleLearnerConfig learner_cfg{alpha, depth};
        const Eigen::VectorXd closed = prop1_gradient(pr, ctx, alpha);
        Eigen::VectorXd fd(features.dim);
        // Richardson-extrapolated central stencil: the gradient itself is
        // O(alpha), so a plain quotient's roundoff floor would mask the
        // O(alpha) model error this check is measuring.
        const double eps = 1e-3;
        for (int j = 0; j < features.dim; ++j) {
          const auto at = [&](double shift) {
            ParametricReward moved = pr;
            moved.phi(j) += shift;
            return bilevel_informativeness(moved, ctx, learner_cfg);
          };
          fd(j) = (at(-2 * eps) - 8 * at(-eps) + 8 * at(eps) - at(2 * eps)) /
                  (12 * eps);
        }
        const double err = (closed - fd).norm() / fd.norm();
        ensure(err <= previous + 1e-12,
               "gradient error grew while shrinking alpha");
        previous = err;
        if (alpha == 1e-3) {
          ensure(err <= 1e-3, bound("relative error at alpha 1e-3", err));
          worst_err = std::max(worst_err, err);
        }
      }
    }
    return bound("max relative error at alpha 1e-3", worst_err);
  });

  run("informativeness.bangbang-sign-invariance", [&] {
    Rng rng(splitmix64(seed + 14));
    for (int trial = 0; trial < 5; ++trial) {
      const Instance inst =
          random_instance(rng, 2 + rng.uniform_int(3), 2 + rng.uniform_int(2));
      const InformativenessContext ctx = make_context(
          inst.mdp, inst.mdp.base_reward, inst.target, inst.learner);
      const RewardTable design = bangbang_design(ctx, 1.0);
      for (const double scale : {2.0, 7.5}) {
        const InformativenessContext scaled =
            make_context(inst.mdp, scale * inst.mdp.base_reward, inst.target,
                         inst.learner);
        ensure((bangbang_design(scaled, 1.0) - design).cwiseAbs().maxCoeff() ==
                   0.0,
               "bang-bang table changed under advantage scaling");
      }
    }
    return std::string("tables identical under positive advantage scaling");
  });

  // ---- reward-designer ----
  run("designer.base-reward-feasible", [&] {
    Rng rng(splitmix64(seed + 15));
    for (int trial = 0; trial < 10; ++trial) {
      const Instance inst =
          random_instance(rng, 2 + rng.uniform_int(3), 2 + rng.uniform_int(2));
      const InformativenessContext ctx = make_context(
          inst.mdp, inst.mdp.base_reward, inst.target, inst.learner);
      DesignProblem problem;
      problem.features =
          identity_features(inst.mdp.n_states, inst.mdp.n_actions);
      problem.r_max = 1.0;
      ensure(solve_design(ctx, problem).status == LpStatus::kOptimal,
             "random instance became infeasible");
    }
    for (const char* kind : {"room", "linek"}) {
      EnvironmentSpec spec;
      spec.kind = kind;
      const BuiltEnvironment env = build_environment(spec);
      const InformativenessContext ctx =
          make_context(env.mdp, env.mdp.base_reward, env.target,
                       uniform_policy(env.mdp.n_states, env.mdp.n_actions));
      DesignProblem problem;
      problem.features = env.features;
      problem.r_max = 10.0;
      ensure(solve_design(ctx, problem).status == LpStatus::kOptimal,
             std::string(kind) + " design is infeasible");
    }
    return std::string("all designs with invariance on are feasible");
  });

  run("designer.objective-dominance", [&] {
    Rng rng(splitmix64(seed + 16));
    double worst = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 10; ++trial) {
      const Instance inst =
          random_instance(rng, 2 + rng.uniform_int(3), 2 + rng.uniform_int(2));
      const InformativenessContext ctx = make_context(
          inst.mdp, inst.mdp.base_reward, inst.target, inst.learner);
      DesignProblem problem;
      problem.features =
          identity_features(inst.mdp.n_states, inst.mdp.n_actions);
      const DesignSolution adaptive = solve_design(ctx, problem);
      DesignProblem feasibility = problem;
      feasibility.objective = DesignObjective::kConstant;
      const DesignSolution invar = solve_design(ctx, feasibility);
      ensure(adaptive.status == LpStatus::kOptimal &&
                 invar.status == LpStatus::kOptimal,
             "design did not solve");
      const double designed = informativeness_h1(
          reward_from_phi({adaptive.phi, problem.features}), ctx);
      const double base = informativeness_h1(inst.mdp.base_reward, ctx);
      const double constant = informativeness_h1(
          reward_from_phi({invar.phi, problem.features}), ctx);
      ensure(designed >= base - 1e-9, "optimum below the base reward");
      ensure(designed >= constant - 1e-9, "optimum below the feasibility point");
      worst = std::min(worst, designed - std::max(base, constant));
    }
    return bound("min dominance margin", worst);
  });

  run("designer.lp-vertex-exactness", [&] {
    Rng rng(splitmix64(seed + 17));
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const LpProblem lp =
          random_lp(rng, 2 + rng.uniform_int(3), 2 + rng.uniform_int(7));
      const VertexBest oracle = best_vertex(lp);
      const LpOutcome outcome = solve_lp(lp);
      if (oracle.feasible) {
        ensure(outcome.status == LpStatus::kOptimal,
               "simplex missed a feasible problem");
        worst = std::max(worst, std::abs(outcome.objective - oracle.objective));
      } else {
        ensure(outcome.status == LpStatus::kInfeasible,
               "simplex 'solved' an infeasible problem");
      }
    }
    ensure(worst <= 1e-7, bound("objective mismatch", worst));
    return bound("max objective mismatch", worst);
  });

  run("designer.deterministic-solutions", [&] {
    Rng rng(splitmix64(seed + 18));
    const Instance inst = random_instance(rng, 3, 3);
    const InformativenessContext ctx = make_context(
        inst.mdp, inst.mdp.base_reward, inst.target, inst.learner);
    DesignProblem problem;
    problem.features = identity_features(3, 3);
    const DesignSolution first = solve_design(ctx, problem);
    const DesignSolution second = solve_design(ctx, problem);
    ensure((first.phi.array() == second.phi.array()).all() &&
               first.objective_value == second.objective_value &&
               first.active == second.active,
           "repeated design solves differ");
    const LpProblem lp = random_lp(rng, 3, 5);
    const LpOutcome a = solve_lp(lp);
    const LpOutcome b = solve_lp(lp);
    ensure(a.status == b.status && a.objective == b.objective &&
               (a.status != LpStatus::kOptimal ||
                (a.x.array() == b.x.array()).all()),
           "repeated lp solves differ");
    return std::string("bit-identical resolves");
  });

  // ---- learners ----
  run("learners.softmax-shift-invariance", [&] {
    Rng rng(splitmix64(seed + 19));
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      SoftmaxPolicy policy{Eigen::MatrixXd(4, 3)};
      for (int s = 0; s < 4; ++s)
        for (int a = 0; a < 3; ++a) policy.theta(s, a) = rng.uniform(-3.0, 3.0);
      SoftmaxPolicy shifted = policy;
      for (int s = 0; s < 4; ++s)
        shifted.theta.row(s).array() += rng.uniform(-10.0, 10.0);
      worst = std::max(worst, (policy.probabilities() - shifted.probabilities())
                                  .cwiseAbs()
                                  .maxCoeff());
    }
    ensure(worst <= 1e-12, bound("probability shift residual", worst));
    return bound("max probability change", worst);
  });

  run("learners.reinforce-unbiased", [&] {
    Rng rng(splitmix64(seed + 20));
    RewardTable reward(1, 2);
    reward << 0.7, -0.3;
    SoftmaxPolicy policy{Eigen::MatrixXd(1, 2)};
    policy.theta << std::log(0.6), std::log(0.4);
    const StochasticPolicy probs = policy.probabilities();
    const double mean_r = probs.row(0).dot(reward.row(0));
    Eigen::RowVectorXd exact(2);
    for (int b = 0; b < 2; ++b)
      exact(b) = probs(0, b) * (reward(0, b) - mean_r);
    LearnerConfig cfg;
    cfg.alpha = 1.0;
    const int n = 100000;
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(2);
    Eigen::RowVectorXd m2 = Eigen::RowVectorXd::Zero(2);
    for (int i = 0; i < n; ++i) {
      const double w[2] = {probs(0, 0), probs(0, 1)};
      Trajectory traj;
      traj.steps = {Step{0, rng.sample_weights(w, 2), 0}};
      ReplayBuffer buffer(1);
      buffer.push(traj);
      const Eigen::RowVectorXd direction =
          reinforce_update(policy, buffer, reward, 0.9, cfg).theta -
          policy.theta;
      const Eigen::RowVectorXd delta = direction - mean;
      mean += delta / (i + 1);
      m2 += delta.cwiseProduct(direction - mean);
    }
    double worst_sigma = 0.0;
    for (int b = 0; b < 2; ++b) {
      const double stderr_b = std::sqrt(m2(b) / (n - 1.0) / n);
      const double sigmas = std::abs(mean(b) - exact(b)) / stderr_b;
      ensure(sigmas <= 3.0,
             "estimator off by " + std::to_string(sigmas) + " standard errors");
      worst_sigma = std::max(worst_sigma, sigmas);
    }
    return bound("worst deviation (standard errors)", worst_sigma);
  });

  run("learners.simple-pg-constant-identity", [&] {
    Rng rng(splitmix64(seed + 21));
    const Instance inst = random_instance(rng, 4, 3);
    const InformativenessContext ctx = make_context(
        inst.mdp, inst.mdp.base_reward, inst.target, inst.learner);
    SoftmaxPolicy policy{Eigen::MatrixXd(4, 3)};
    for (int s = 0; s < 4; ++s)
      for (int a = 0; a < 3; ++a) policy.theta(s, a) = rng.uniform(-1.0, 1.0);
    LearnerConfig cfg;
    cfg.kind = LearnerKind::kSimplePg;
    cfg.alpha = 0.5;
    const SoftmaxPolicy updated =
        simple_pg_update(policy, RewardTable::Constant(4, 3, 3.25), ctx, cfg);
    const double worst = (updated.probabilities() - policy.probabilities())
                             .cwiseAbs()
                             .maxCoeff();
    ensure(worst <= 1e-12, bound("probability drift", worst));
    return bound("max probability drift", worst);
  });

  run("learners.greedy-scale-invariance", [&] {
    Rng rng(splitmix64(seed + 22));
    Rng tie_rng(0);
    for (int trial = 0; trial < 10; ++trial) {
      RewardTable reward = random_reward(rng, 3, 4, 2.0);
      if (trial % 2 == 0) reward(1, 2) = reward(1, 3);  // inject a tie
      const StochasticPolicy base =
          greedy_update(reward, tie_rng, TieBreak::kUniform);
      const StochasticPolicy scaled =
          greedy_update(3.0 * reward, tie_rng, TieBreak::kUniform);
      ensure((base - scaled).cwiseAbs().maxCoeff() == 0.0,
             "support changed under positive scaling");
    }
    return std::string("supports identical under positive scaling");
  });

  // ---- training-harness ----
  run("harness.run-determinism", [&] {
    Rng rng(splitmix64(seed + 23));
    const Instance inst = random_instance(rng, 3, 2);
    TrainingConfig cfg;
    cfg.total_episodes = 30;
    cfg.reward_period = 5;
    cfg.eval_period = 10;
    cfg.designer.features = identity_features(3, 2);
    cfg.master_seed = splitmix64(seed + 24);
    const RunRecord a = run_adaptive(inst.mdp, inst.target, cfg);
    const RunRecord b = run_adaptive(inst.mdp, inst.target, cfg);
    ensure(run_records_identical(a, b), "adaptive replay differed");
    cfg.rollout_eval = true;
    cfg.eval_episodes = 4;
    const RunRecord c = run_adaptive(inst.mdp, inst.target, cfg);
    const RunRecord d = run_adaptive(inst.mdp, inst.target, cfg);
    ensure(run_records_identical(c, d), "rollout-eval replay differed");
    return std::string("bit-identical replays (exact and rollout eval)");
  });

  run("harness.designed-rewards-invariant", [&] {
    Rng rng(splitmix64(seed + 25));
    const Instance inst = random_instance(rng, 4, 3);
    TrainingConfig cfg;
    cfg.total_episodes = 30;
    cfg.reward_period = 5;
    cfg.snapshot_period = 5;
    cfg.designer.features = identity_features(4, 3);
    cfg.master_seed = splitmix64(seed + 26);
    const RunRecord record = run_adaptive(inst.mdp, inst.target, cfg);
    ensure(record.designer_calls == 6, "unexpected designer call count");
    for (const Snapshot& snap : record.snapshots)
      ensure(verify_policy_invariance(inst.mdp, inst.mdp.base_reward,
                                      inst.target, snap.reward)
                 .pass,
             "a designed reward failed the invariance check at episode " +
                 std::to_string(snap.episode));
    return std::string("all designed rewards preserve target optimality");
  });

  run("harness.buffer-fifo-capacity", [&] {
    ReplayBuffer buffer(3);
    for (int i = 0; i < 5; ++i) {
      Trajectory traj;
      traj.seed_tag = static_cast<std::uint64_t>(i);
      traj.steps = {Step{0, 0, 0}};
      buffer.push(traj);
      ensure(buffer.size() <= 3, "buffer exceeded its capacity");
    }
    ensure(buffer.at(0).seed_tag == 2 && buffer.at(1).seed_tag == 3 &&
               buffer.at(2).seed_tag == 4,
           "eviction is not strictly FIFO");
    return std::string("capacity respected, strictly FIFO eviction");
  });

  run("harness.theorem1-bound", [&] {
    Rng rng(splitmix64(seed + 27));
    int converged = 0;
    const int total = 100;
    for (int trial = 0; trial < total; ++trial) {
      const int n_states = 2 + rng.uniform_int(5);
      const int n_actions = 2 + rng.uniform_int(4);
      StochasticPolicy target;
      const TabularMdp mdp =
          random_distinct_advantage_mdp(rng, n_states, n_actions, &target);
      const Theorem1Report report =
          theorem1_experiment(mdp, target, 1.0, n_actions);
      if (report.converged && report.within_action_bound) ++converged;
    }
    ensure(converged == total,
           std::to_string(converged) + "/" + std::to_string(total) +
               " converged within |A| rounds");
    return std::to_string(converged) + "/" + std::to_string(total) +
           " converged within |A| rounds";
  });

  // ---- cli ----
  run("cli.manifest-round-trip", [&] {
    RunManifest manifest;
    manifest.technique = "adaptive";
    manifest.master_seed = splitmix64(seed + 28);
    manifest.run_index = 4;
    manifest.config_text = "{\n  \"training\": {\"total_episodes\": 7}\n}\n";
    std::ostringstream out;
    write_manifest(out, manifest);
    std::istringstream in(out.str());
    const RunManifest parsed = read_manifest(in);
    ensure(parsed.technique == manifest.technique &&
               parsed.master_seed == manifest.master_seed &&
               parsed.run_index == manifest.run_index &&
               parsed.config_text == manifest.config_text,
           "manifest fields changed across a round-trip");
    RunRecord record;
    record.rows.push_back({0, 0.5, 0.0, 0.25, "cafe12"});
    std::ostringstream csv;
    write_convergence_csv(csv, record);
    std::istringstream csv_in(csv.str());
    const std::vector<EvalRow> rows = read_convergence_csv(csv_in);
    ensure(rows.size() == 1 && rows[0].mean_j == 0.5 &&
               rows[0].reward_hash == "cafe12",
           "convergence rows changed across a round-trip");
    return std::string("manifest and convergence files round-trip");
  });

  return checks;
}

}  // namespace ard
