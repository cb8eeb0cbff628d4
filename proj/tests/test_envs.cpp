#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ard/envs.hpp"
#include "ard/mdp.hpp"

using namespace ard;

namespace {

// Expected transition rows as explicit (state, action, destination, prob)
// entries; everything not listed is zero.
struct KernelEntry {
  int s, a, dest;
  double p;
};

Eigen::MatrixXd kernel_from_entries(int n_states, int n_actions,
                                    const std::vector<KernelEntry>& entries) {
  Eigen::MatrixXd kernel =
      Eigen::MatrixXd::Zero(n_states * n_actions, n_states);
  for (const auto& e : entries) kernel(e.s * n_actions + e.a, e.dest) += e.p;
  return kernel;
}

}  // namespace

TEST_CASE("room: defaults, feature dimension, stochastic rows") {
  const RoomEnv env = build_room(RoomConfig{});
  CHECK(env.rows == 9);
  CHECK(env.cols == 9);
  CHECK(env.mdp.n_states == 81);
  CHECK(env.mdp.n_actions == 4);
  CHECK(env.features.dim == 40);  // 10 regions x 4 actions
  CHECK(env.start_state == env.state(7, 1));
  CHECK(env.goal_state == env.state(0, 8));

  for (int row = 0; row < env.mdp.transition.rows(); ++row) {
    CHECK(std::abs(env.mdp.transition.row(row).sum() - 1.0) <= 1e-12);
    CHECK(env.features.features.row(row).sum() == 1.0);  // one-hot partition
  }
}

TEST_CASE("room: exact kernel entries under action noise") {
  const RoomConfig cfg;
  const RoomEnv env = build_room(cfg);
  const auto& T = env.mdp.transition;
  const double stay = 1.0 - cfg.p_rand;
  const double slip = cfg.p_rand / 3.0;

  // interior cell with all four segments open
  const int s = env.state(3, 2);
  const int row = env.mdp.sa_index(s, kRight);
  CHECK(T(row, env.state(3, 3)) == stay);
  CHECK(T(row, env.state(2, 2)) == slip);
  CHECK(T(row, env.state(4, 2)) == slip);
  CHECK(T(row, env.state(3, 1)) == slip);
  CHECK(T(row, s) == 0.0);

  // cell below the top border and left of the room wall: up and right blocked
  const int s2 = env.state(0, 5);
  const int row2 = env.mdp.sa_index(s2, kLeft);
  CHECK(T(row2, env.state(0, 4)) == stay);
  CHECK(T(row2, s2) == 2 * slip);  // up border + right wall fold into staying
  CHECK(T(row2, env.state(1, 5)) == slip);

  // at the goal, noise towards the terminal segment acts as a wall
  const int row3 = env.mdp.sa_index(env.goal_state, kUp);
  CHECK_FALSE(env.mdp.is_terminal(env.goal_state, kUp));
  CHECK(T(row3, env.goal_state) == stay + slip);
  CHECK(T(row3, env.state(0, 7)) == slip);
  CHECK(T(row3, env.state(1, 8)) == slip);
}

TEST_CASE("room: terminal pairs, reward placement, gate states") {
  const RoomConfig cfg;
  const RoomEnv env = build_room(cfg);
  const int trap = env.state(8, 0);

  int n_terminal = 0;
  for (int s = 0; s < env.mdp.n_states; ++s)
    for (int a = 0; a < env.mdp.n_actions; ++a)
      if (env.mdp.is_terminal(s, a)) ++n_terminal;
  CHECK(n_terminal == 3);
  CHECK(env.mdp.is_terminal(env.goal_state, kRight));
  CHECK(env.mdp.is_terminal(trap, kLeft));
  CHECK(env.mdp.is_terminal(trap, kDown));

  CHECK(env.mdp.base_reward(env.goal_state, kRight) == cfg.r_max);
  CHECK(env.mdp.base_reward.sum() == cfg.r_max);  // zero everywhere else
  CHECK(env.mdp.base_reward(trap, kLeft) == 0.0);

  const std::vector<int> expected = {
      env.state(1, 5), env.state(1, 6), env.state(5, 2), env.state(5, 7),
      env.state(6, 2), env.state(6, 7), env.state(7, 5), env.state(7, 6)};
  CHECK(env.gate_states == expected);
}

TEST_CASE("room: goal reachable from start within the horizon, noiselessly") {
  RoomConfig cfg;
  cfg.p_rand = 0.0;
  const RoomEnv env = build_room(cfg);
  const StochasticPolicy pi = optimal_policy(env.mdp, env.mdp.base_reward);

  int s = env.start_state;
  double earned = 0.0;
  bool done = false;
  for (int t = 0; t < cfg.horizon && !done; ++t) {
    Eigen::Index a = 0;
    pi.row(s).maxCoeff(&a);
    if (env.mdp.is_terminal(s, static_cast<int>(a))) {
      earned = env.mdp.base_reward(s, static_cast<int>(a));
      done = true;
    } else {
      Eigen::Index next = 0;
      env.mdp.transition.row(env.mdp.sa_index(s, static_cast<int>(a)))
          .maxCoeff(&next);
      s = static_cast<int>(next);
    }
  }
  CHECK(done);
  CHECK(earned == cfg.r_max);
}

TEST_CASE("room: malformed maps are rejected with line/column") {
  RoomConfig cfg;

  cfg.map_text = "###\n#.#\n##";
  CHECK_THROWS_WITH_AS(build_room(cfg), doctest::Contains("line 3"),
                       std::invalid_argument);

  cfg.map_text = "###\n#X#\n###";
  CHECK_THROWS_WITH_AS(build_room(cfg),
                       doctest::Contains("line 2, column 2"),
                       std::invalid_argument);

  cfg.map_text = "#.#\n#.#\n###";  // open border segment
  CHECK_THROWS_WITH_AS(build_room(cfg),
                       doctest::Contains("line 1, column 2"),
                       std::invalid_argument);

  cfg.map_text = "#####\n#S.G#\n#####\n#####";  // even line count
  CHECK_THROWS_WITH_AS(build_room(cfg), doctest::Contains("odd"),
                       std::invalid_argument);

  cfg.map_text = "#####\n#S.S#\n#####";
  CHECK_THROWS_WITH_AS(build_room(cfg), doctest::Contains("start"),
                       std::invalid_argument);

  cfg.map_text = "#####\n#S..#\n#####";
  CHECK_THROWS_WITH_AS(build_room(cfg), doctest::Contains("goal"),
                       std::invalid_argument);
}

TEST_CASE("linek: defaults and feature dimension") {
  const LineKEnv env = build_linek(LineKConfig{});
  CHECK(env.mdp.n_states == 20);
  CHECK(env.mdp.n_actions == 3);
  CHECK(env.features.dim == 15);  // 5 regions x 3 actions
  CHECK(env.start_state == env.state(5, false));
  CHECK(env.goal_state == env.state(9, true));

  for (int row = 0; row < env.mdp.transition.rows(); ++row) {
    CHECK(std::abs(env.mdp.transition.row(row).sum() - 1.0) <= 1e-12);
    CHECK(env.features.features.row(row).sum() == 1.0);
  }

  // picking with the key already held leaves the key block
  const LineKConfig cfg;
  const int held = env.state(cfg.key_node, true);
  const auto row = env.mdp.transition.row(env.mdp.sa_index(held, kPick));
  CHECK(row(held) == 1.0 - cfg.p_rand);
  CHECK(row.head(cfg.length).sum() == 0.0);  // key is never lost

  // rightmost node without the key: right is a wall and earns nothing
  const int no_key_end = env.state(9, false);
  CHECK_FALSE(env.mdp.is_terminal(no_key_end, kChainRight));
  CHECK(env.mdp.base_reward(no_key_end, kChainRight) == 0.0);
  const auto row2 =
      env.mdp.transition.row(env.mdp.sa_index(no_key_end, kChainRight));
  CHECK(row2(no_key_end) == (1.0 - cfg.p_rand) + cfg.p_rand / 2.0);
  CHECK(row2(env.state(8, false)) == cfg.p_rand / 2.0);

  const std::vector<int> gates = {env.state(2, false), env.state(3, false),
                                  env.state(4, false), env.state(5, false)};
  CHECK(env.gate_states == gates);
}

TEST_CASE("linek: hand-enumerated kernel for a length-4 chain") {
  LineKConfig cfg;
  cfg.length = 4;
  cfg.key_node = 1;
  cfg.start_node = 2;
  const LineKEnv env = build_linek(cfg);

  const double m = 1.0 - cfg.p_rand;  // 0.9
  const double e = cfg.p_rand / 2.0;  // 0.05
  // States: 0..3 = nodes without key, 4..7 = nodes with key; goal = 7.
  const std::vector<KernelEntry> entries = {
      {0, 0, 0, m + e}, {0, 0, 1, e},                    // left: stay, pick stays
      {0, 1, 1, m},     {0, 1, 0, 2 * e},                // right
      {0, 2, 0, m + e}, {0, 2, 1, e},                    // pick (not key node)
      {1, 0, 0, m},     {1, 0, 2, e},     {1, 0, 5, e},  // pick slips to key
      {1, 1, 2, m},     {1, 1, 0, e},     {1, 1, 5, e},
      {1, 2, 5, m},     {1, 2, 0, e},     {1, 2, 2, e},  // pick acquires key
      {2, 0, 1, m},     {2, 0, 3, e},     {2, 0, 2, e},
      {2, 1, 3, m},     {2, 1, 1, e},     {2, 1, 2, e},
      {2, 2, 2, m},     {2, 2, 1, e},     {2, 2, 3, e},
      {3, 0, 2, m},     {3, 0, 3, 2 * e},                // right wall + pick
      {3, 1, 3, m + e}, {3, 1, 2, e},
      {3, 2, 3, m + e}, {3, 2, 2, e},
      {4, 0, 4, m + e}, {4, 0, 5, e},
      {4, 1, 5, m},     {4, 1, 4, 2 * e},
      {4, 2, 4, m + e}, {4, 2, 5, e},
      {5, 0, 4, m},     {5, 0, 6, e},     {5, 0, 5, e},
      {5, 1, 6, m},     {5, 1, 4, e},     {5, 1, 5, e},
      {5, 2, 5, m},     {5, 2, 4, e},     {5, 2, 6, e},  // pick is inert
      {6, 0, 5, m},     {6, 0, 7, e},     {6, 0, 6, e},
      {6, 1, 7, m},     {6, 1, 5, e},     {6, 1, 6, e},
      {6, 2, 6, m},     {6, 2, 5, e},     {6, 2, 7, e},
      {7, 0, 6, m},     {7, 0, 7, 2 * e},                // noise right = wall
      {7, 1, 7, 1.0},                                    // terminal pair
      {7, 2, 7, m + e}, {7, 2, 6, e},
  };
  const Eigen::MatrixXd expected = kernel_from_entries(8, 3, entries);
  CHECK((env.mdp.transition - expected).cwiseAbs().maxCoeff() <= 1e-15);

  for (int s = 0; s < 8; ++s)
    for (int a = 0; a < 3; ++a)
      CHECK(env.mdp.is_terminal(s, a) == (s == 7 && a == kChainRight));
  CHECK(env.mdp.base_reward(7, kChainRight) == cfg.r_max);
  CHECK(env.mdp.base_reward.sum() == cfg.r_max);
}

TEST_CASE("linek: invalid geometry is rejected") {
  LineKConfig cfg;
  cfg.length = 2;
  CHECK_THROWS_AS(build_linek(cfg), std::invalid_argument);
  cfg.length = 10;
  cfg.key_node = 9;  // not strictly left of the goal
  CHECK_THROWS_AS(build_linek(cfg), std::invalid_argument);
  cfg.key_node = 2;
  cfg.start_node = 10;
  CHECK_THROWS_AS(build_linek(cfg), std::invalid_argument);
}

TEST_CASE("parametric rewards: reward_from_phi and exact recovery") {
  const RoomEnv room = build_room(RoomConfig{});
  ParametricReward pr;
  pr.feature_map = room.features;

  pr.phi = Eigen::VectorXd::Zero(40);
  CHECK(reward_from_phi(pr).cwiseAbs().maxCoeff() == 0.0);

  // basis vector: constant on one (region, action) block, zero elsewhere
  pr.phi(kLeft * 10 + 3) = 2.5;  // region 3 = rows 3..5, cols 0..2
  const RewardTable block = reward_from_phi(pr);
  CHECK(block.sum() == 9 * 2.5);
  CHECK(block(room.state(3, 0), kLeft) == 2.5);
  CHECK(block(room.state(3, 0), kUp) == 0.0);
  CHECK(block(room.state(2, 0), kLeft) == 0.0);

  Rng rng(11);
  pr.phi = Eigen::VectorXd::NullaryExpr(40, [&](Eigen::Index) {
    return rng.uniform(-1.0, 1.0);
  });
  const RewardTable table = reward_from_phi(pr);
  for (int s = 0; s < 81; ++s) {
    for (int a = 0; a < 4; ++a) {
      double dot = 0.0;  // entry-by-entry dot-product oracle
      for (int i = 0; i < 40; ++i)
        dot += pr.phi(i) * room.features.features(s * 4 + a, i);
      CHECK(table(s, a) == doctest::Approx(dot).epsilon(1e-12));
    }
  }

  pr.phi = Eigen::VectorXd::Zero(7);
  CHECK_THROWS_AS(reward_from_phi(pr), std::invalid_argument);

  // both shipped base rewards are exactly expressible in their own features
  const Eigen::VectorXd phi_room =
      recover_phi(room.features, room.mdp.base_reward);
  ParametricReward back{phi_room, room.features};
  CHECK((reward_from_phi(back) - room.mdp.base_reward).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK(phi_room(kRight * 10 + 9) == 10.0);  // goal singleton region, right
  CHECK(phi_room.cwiseAbs().sum() == 10.0);

  const LineKEnv line = build_linek(LineKConfig{});
  const Eigen::VectorXd phi_line =
      recover_phi(line.features, line.mdp.base_reward);
  ParametricReward back2{phi_line, line.features};
  CHECK((reward_from_phi(back2) - line.mdp.base_reward).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK(phi_line(kChainRight * 5 + 1) == 10.0);  // goal-loc & key, right

  RewardTable not_constant = room.mdp.base_reward;
  not_constant(room.state(4, 4), kUp) = 1.0;
  not_constant(room.state(4, 5), kUp) = 2.0;  // same region, different values
  CHECK_THROWS_AS(recover_phi(room.features, not_constant),
                  std::invalid_argument);
}

TEST_CASE("perturbed initial policies") {
  const RoomEnv room = build_room(RoomConfig{});
  const StochasticPolicy pi_t = optimal_policy(room.mdp, room.mdp.base_reward);

  const StochasticPolicy plain =
      perturbed_initial_policy(room.mdp, {}, 0.0, pi_t);
  CHECK((plain - uniform_policy(81, 4)).cwiseAbs().maxCoeff() == 0.0);

  const StochasticPolicy gated =
      perturbed_initial_policy(room.mdp, room.gate_states, 0.5, pi_t);
  validate_policy(room.mdp, gated);
  for (int s : room.gate_states) {
    Eigen::Index target = 0;
    pi_t.row(s).maxCoeff(&target);
    CHECK(1.0 - gated(s, target) >= 0.5);  // suboptimal mass at gate states
    CHECK(gated(s, target) == doctest::Approx(0.5 / 4.0));
  }
  CHECK((gated.row(room.start_state) -
         Eigen::RowVector4d::Constant(0.25)).cwiseAbs().maxCoeff() == 0.0);

  const LineKEnv line = build_linek(LineKConfig{});
  const StochasticPolicy pi_t2 = optimal_policy(line.mdp, line.mdp.base_reward);
  const StochasticPolicy gated2 =
      perturbed_initial_policy(line.mdp, line.gate_states, 0.7, pi_t2);
  validate_policy(line.mdp, gated2);
  for (int s : line.gate_states) {
    Eigen::Index target = 0;
    pi_t2.row(s).maxCoeff(&target);
    CHECK(1.0 - gated2(s, target) >= 0.7);
  }

  CHECK_THROWS_AS(
      perturbed_initial_policy(room.mdp, {0}, 0.5, uniform_policy(81, 4)),
      std::invalid_argument);
  CHECK_THROWS_AS(perturbed_initial_policy(room.mdp, {-1}, 0.5, pi_t),
                  std::invalid_argument);
  CHECK_THROWS_AS(perturbed_initial_policy(room.mdp, {}, 1.5, pi_t),
                  std::invalid_argument);
}
