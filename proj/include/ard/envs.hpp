#pragma once

#include <string>
#include <vector>

#include "ard/mdp.hpp"
#include "ard/rng.hpp"

namespace ard {

// Binary feature map f : S x A -> {0,1}^dim. The shipped maps are one-hot
// over an (abstract-region x action) partition: feature index
// a * n_regions + region, exactly one 1 per (s,a) row.
struct FeatureMap {
  int n_states = 0;
  int n_actions = 0;
  int dim = 0;
  Eigen::MatrixXd features;  // (S*A) x dim, rows indexed s*A + a

  void validate() const;  // throws std::invalid_argument on bad shape/entries
};

// Linearly parameterized reward R_phi(s,a) = <phi, f(s,a)>.
struct ParametricReward {
  Eigen::VectorXd phi;
  FeatureMap feature_map;
};

RewardTable reward_from_phi(const ParametricReward& pr);

// Inverse of reward_from_phi for one-hot maps: finds phi with
// reward_from_phi == table exactly. Throws if the table is not constant on
// some feature block (not expressible) or some feature is never active.
Eigen::VectorXd recover_phi(const FeatureMap& map, const RewardTable& table,
                            double tol = 1e-12);

// ---------------------------------------------------------------------------
// Room: a gridworld read from an ASCII lattice map of (2*rows+1) x (2*cols+1)
// characters. Odd-odd positions are cells: '.' floor, 'S' start (exactly
// one), 'G' goal (exactly one). Positions between two cells are wall
// segments: '#' blocked, '.' open, a digit marks a terminal segment (taking
// the action that crosses it ends the episode). Even-even positions are
// cosmetic junctions and are ignored. The outer border must be closed
// ('#' or digit). Malformed maps raise errors naming the line and column.
//
// Actions {up=0, left=1, down=2, right=3}. A move into a wall stays in
// place. The intended action executes with probability 1-p_rand, otherwise
// one of the other three executes (uniformly); a noise-executed move into a
// terminal segment acts as a wall — only the intended action terminates.
// Base reward: r_max for (goal cell, right), 0 elsewhere.
//
// Features: the grid is tiled by 3x3 regions (row-major), the goal cell is
// carved out into one extra singleton region appended last, and the one-hot
// map is (regions x actions).
// ---------------------------------------------------------------------------

struct RoomConfig {
  std::string map_text;  // empty -> default_room_map()
  double p_rand = 0.05;
  double r_max = 10.0;
  double gamma = 0.95;
  int horizon = 30;
};

struct RoomEnv {
  TabularMdp mdp;
  FeatureMap features;
  int rows = 0;
  int cols = 0;
  int start_state = -1;
  int goal_state = -1;
  std::vector<int> gate_states;  // cells flanking each doorway in a room wall

  int state(int r, int c) const { return r * cols + c; }
};

enum RoomAction { kUp = 0, kLeft = 1, kDown = 2, kRight = 3 };

// The shipped 9x9 four-room layout: goal top-right (terminal rightwards),
// trap corner bottom-left (terminal on left/down, zero reward), start in the
// bottom-left room, four doorways.
std::string default_room_map();

RoomEnv build_room(const RoomConfig& cfg);

// ---------------------------------------------------------------------------
// LineK: a chain of `length` nodes with a key. States are (node, has_key)
// pairs indexed has_key*length + node. Actions {left=0, right=1, pick=2}.
// pick acquires the key only at (key_node, no key); anywhere else — including
// when the key is already held — it changes nothing. Moving off either end
// is a wall, except (rightmost node, has key, right) which terminates with
// reward r_max; without the key that move is a wall and earns nothing.
// Action noise as in Room with p_rand.
//
// Features: one-hot over 5 abstract regions x 3 actions. Regions:
//   0 key-loc & no-key, 1 goal-loc & key, 2 other & no-key,
//   3 other & key, 4 key-loc & key        (goal-loc & no-key counts as
// other & no-key).
// ---------------------------------------------------------------------------

struct LineKConfig {
  int length = 10;
  int key_node = 2;
  int start_node = 5;
  double p_rand = 0.1;
  double r_max = 10.0;
  double gamma = 0.95;
  int horizon = 30;
};

struct LineKEnv {
  TabularMdp mdp;
  FeatureMap features;
  int length = 0;
  int key_node = -1;
  int start_state = -1;
  int goal_state = -1;           // (rightmost node, has key)
  std::vector<int> gate_states;  // no-key states between key node and start

  int state(int node, bool has_key) const {
    return (has_key ? length : 0) + node;
  }
};

enum LineKAction { kChainLeft = 0, kChainRight = 1, kPick = 2 };

LineKEnv build_linek(const LineKConfig& cfg);

// Uniform policy everywhere except `designated_states`, where probability
// mass `suboptimal_prob` is spread uniformly over the actions pi_t does not
// choose and the remainder uniformly over all actions. pi_t must be
// deterministic. Single-action MDPs fall back to uniform rows. The rng is
// reserved for callers that randomize designated subsets; this function
// itself is deterministic.
StochasticPolicy perturbed_initial_policy(const TabularMdp& mdp,
                                          const std::vector<int>& designated_states,
                                          double suboptimal_prob,
                                          const StochasticPolicy& pi_t,
                                          Rng* rng = nullptr);

}  // namespace ard
