#include "ard/envs.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>

namespace ard {

namespace {

[[noreturn]] void fail(const std::string& message) {
  throw std::invalid_argument(message);
}

std::string at(int lattice_row, int lattice_col) {
  return "line " + std::to_string(lattice_row + 1) + ", column " +
         std::to_string(lattice_col + 1);
}

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

struct Lattice {
  std::vector<std::string> lines;
  int height = 0;
  int width = 0;

  // Outside positions read as walls so the border logic has no special cases.
  char get(int lr, int lc) const {
    if (lr < 0 || lr >= height || lc < 0 || lc >= width) return '#';
    return lines[static_cast<size_t>(lr)][static_cast<size_t>(lc)];
  }
  bool blocked(int lr, int lc) const { return get(lr, lc) != '.'; }
  bool terminal(int lr, int lc) const { return is_digit(get(lr, lc)); }
};

Lattice parse_lattice(const std::string& text) {
  Lattice lat;
  std::string line;
  for (size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == '\n') {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lat.lines.push_back(line);
      line.clear();
    } else {
      line += text[i];
    }
  }
  while (!lat.lines.empty() && lat.lines.back().empty()) lat.lines.pop_back();

  lat.height = static_cast<int>(lat.lines.size());
  if (lat.height < 3) fail("room map: need at least 3 lines");
  lat.width = static_cast<int>(lat.lines[0].size());
  for (int lr = 0; lr < lat.height; ++lr)
    if (static_cast<int>(lat.lines[static_cast<size_t>(lr)].size()) != lat.width)
      fail("room map: line " + std::to_string(lr + 1) + " has length " +
           std::to_string(lat.lines[static_cast<size_t>(lr)].size()) +
           ", expected " + std::to_string(lat.width) + " (map must be rectangular)");
  if (lat.width < 3) fail("room map: need at least 3 columns");
  if (lat.height % 2 == 0 || lat.width % 2 == 0)
    fail("room map: lattice dimensions must be odd (cells at odd positions)");

  for (int lr = 0; lr < lat.height; ++lr) {
    for (int lc = 0; lc < lat.width; ++lc) {
      const char c = lat.get(lr, lc);
      const bool cell_pos = (lr % 2 == 1) && (lc % 2 == 1);
      const bool junction = (lr % 2 == 0) && (lc % 2 == 0);
      if (junction) continue;  // cosmetic
      if (cell_pos) {
        if (c != '.' && c != 'S' && c != 'G')
          fail("room map: invalid cell character '" + std::string(1, c) +
               "' at " + at(lr, lc));
      } else {  // segment position
        if (c != '.' && c != '#' && !is_digit(c))
          fail("room map: invalid wall segment '" + std::string(1, c) +
               "' at " + at(lr, lc));
        const bool border = lr == 0 || lr == lat.height - 1 || lc == 0 ||
                            lc == lat.width - 1;
        if (border && c == '.')
          fail("room map: border must be closed ('#' or digit) at " + at(lr, lc));
      }
    }
  }
  return lat;
}

// (row delta, col delta) for {up, left, down, right}.
constexpr int kDr[4] = {-1, 0, 1, 0};
constexpr int kDc[4] = {0, -1, 0, 1};

int tile_region(int r, int c, int tiles_per_row) {
  return (r / 3) * tiles_per_row + (c / 3);
}

}  // namespace

void FeatureMap::validate() const {
  if (n_states < 1 || n_actions < 1 || dim < 1)
    fail("feature map: shape fields must be >= 1");
  if (features.rows() != static_cast<Eigen::Index>(n_states) * n_actions ||
      features.cols() != dim)
    fail("feature map: matrix must be (states*actions) x dim");
  for (Eigen::Index i = 0; i < features.rows(); ++i)
    for (Eigen::Index j = 0; j < features.cols(); ++j)
      if (features(i, j) != 0.0 && features(i, j) != 1.0)
        fail("feature map: entries must be exactly 0 or 1");
}

RewardTable reward_from_phi(const ParametricReward& pr) {
  const FeatureMap& map = pr.feature_map;
  map.validate();
  if (pr.phi.size() != map.dim)
    fail("reward_from_phi: phi has length " + std::to_string(pr.phi.size()) +
         ", feature map has dim " + std::to_string(map.dim));
  const Eigen::VectorXd flat = map.features * pr.phi;
  RewardTable table(map.n_states, map.n_actions);
  for (int s = 0; s < map.n_states; ++s)
    for (int a = 0; a < map.n_actions; ++a)
      table(s, a) = flat(static_cast<Eigen::Index>(s) * map.n_actions + a);
  return table;
}

Eigen::VectorXd recover_phi(const FeatureMap& map, const RewardTable& table,
                            double tol) {
  map.validate();
  if (table.rows() != map.n_states || table.cols() != map.n_actions)
    fail("recover_phi: table shape does not match the feature map");
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(map.dim);
  std::vector<char> seen(static_cast<size_t>(map.dim), 0);
  for (int s = 0; s < map.n_states; ++s) {
    for (int a = 0; a < map.n_actions; ++a) {
      const Eigen::Index row = static_cast<Eigen::Index>(s) * map.n_actions + a;
      if (map.features.row(row).sum() != 1.0)
        fail("recover_phi: requires a one-hot feature map");
      Eigen::Index i = 0;
      map.features.row(row).maxCoeff(&i);
      const double value = table(s, a);
      if (!seen[static_cast<size_t>(i)]) {
        phi(i) = value;
        seen[static_cast<size_t>(i)] = 1;
      } else if (std::abs(phi(i) - value) > tol) {
        fail("recover_phi: table is not constant on feature block " +
             std::to_string(i));
      }
    }
  }
  for (int i = 0; i < map.dim; ++i)
    if (!seen[static_cast<size_t>(i)])
      fail("recover_phi: feature " + std::to_string(i) + " is never active");
  return phi;
}

// Room walls sit on the 3x3 abstraction-tile boundaries so that each tile's
// cells mostly agree on the useful direction; misaligned walls make every
// tile-level reward ambiguous.
std::string default_room_map() {
  return
      "###################\n"
      "#...........#....G1\n"
      "#.#.#.#.#.#.#.#.#.#\n"
      "#.................#\n"
      "#.#.#.#.#.#.#.#.#.#\n"
      "#...........#.....#\n"
      "#.#.#.#.#.#.#.#.#.#\n"
      "#...........#.....#\n"
      "#.#.#.#.#.#.#.#.#.#\n"
      "#...........#.....#\n"
      "#.#.#.#.#.#.#.#.#.#\n"
      "#...........#.....#\n"
      "#####.#########.###\n"
      "#...........#.....#\n"
      "#.#.#.#.#.#.#.#.#.#\n"
      "#..S..............#\n"
      "#.#.#.#.#.#.#.#.#.#\n"
      "2...........#.....#\n"
      "#2#################\n";
}

RoomEnv build_room(const RoomConfig& cfg) {
  if (cfg.p_rand < 0.0 || cfg.p_rand > 1.0)
    fail("build_room: p_rand must be in [0,1]");
  const Lattice lat =
      parse_lattice(cfg.map_text.empty() ? default_room_map() : cfg.map_text);

  RoomEnv env;
  env.rows = (lat.height - 1) / 2;
  env.cols = (lat.width - 1) / 2;
  const int n_states = env.rows * env.cols;
  const int n_actions = 4;

  for (int r = 0; r < env.rows; ++r) {
    for (int c = 0; c < env.cols; ++c) {
      const char cell = lat.get(2 * r + 1, 2 * c + 1);
      if (cell == 'S') {
        if (env.start_state >= 0) fail("room map: more than one start 'S'");
        env.start_state = env.state(r, c);
      } else if (cell == 'G') {
        if (env.goal_state >= 0) fail("room map: more than one goal 'G'");
        env.goal_state = env.state(r, c);
      }
    }
  }
  if (env.start_state < 0) fail("room map: missing start 'S'");
  if (env.goal_state < 0) fail("room map: missing goal 'G'");

  // Wall segment adjacent to cell (r,c) in direction d.
  const auto seg = [&](int r, int c, int d) {
    return std::pair<int, int>(2 * r + 1 + kDr[d], 2 * c + 1 + kDc[d]);
  };

  TabularMdp& mdp = env.mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.gamma = cfg.gamma;
  mdp.horizon = cfg.horizon;
  mdp.transition = Eigen::MatrixXd::Zero(n_states * n_actions, n_states);
  mdp.initial_dist = Eigen::VectorXd::Zero(n_states);
  mdp.initial_dist(env.start_state) = 1.0;
  mdp.base_reward = RewardTable::Zero(n_states, n_actions);
  mdp.terminal.assign(static_cast<size_t>(n_states * n_actions), 0);

  for (int r = 0; r < env.rows; ++r) {
    for (int c = 0; c < env.cols; ++c) {
      const int s = env.state(r, c);
      for (int a = 0; a < n_actions; ++a) {
        const int row = mdp.sa_index(s, a);
        const auto [lr, lc] = seg(r, c, a);
        if (lat.terminal(lr, lc)) {
          // Intending to cross a terminal segment ends the episode.
          mdp.terminal[static_cast<size_t>(row)] = 1;
          mdp.transition(row, s) = 1.0;
          continue;
        }
        for (int e = 0; e < n_actions; ++e) {
          const double p = (e == a) ? 1.0 - cfg.p_rand : cfg.p_rand / 3.0;
          const auto [elr, elc] = seg(r, c, e);
          // Noise-executed moves treat terminal segments as walls.
          const int dest = lat.blocked(elr, elc)
                               ? s
                               : env.state(r + kDr[e], c + kDc[e]);
          mdp.transition(row, dest) += p;
        }
      }
    }
  }
  mdp.base_reward(env.goal_state, kRight) = cfg.r_max;
  mdp.validate();

  // Doorways: open segments whose two colinear neighbors along the wall line
  // are blocked. Gate states are the cells flanking each doorway.
  std::set<int> gates;
  for (int r = 0; r < env.rows; ++r) {
    for (int c = 0; c + 1 < env.cols; ++c) {  // vertical segments
      const int lr = 2 * r + 1, lc = 2 * c + 2;
      if (!lat.blocked(lr, lc) && lat.blocked(lr - 2, lc) &&
          lat.blocked(lr + 2, lc)) {
        gates.insert(env.state(r, c));
        gates.insert(env.state(r, c + 1));
      }
    }
  }
  for (int r = 0; r + 1 < env.rows; ++r) {
    for (int c = 0; c < env.cols; ++c) {  // horizontal segments
      const int lr = 2 * r + 2, lc = 2 * c + 1;
      if (!lat.blocked(lr, lc) && lat.blocked(lr, lc - 2) &&
          lat.blocked(lr, lc + 2)) {
        gates.insert(env.state(r, c));
        gates.insert(env.state(r + 1, c));
      }
    }
  }
  env.gate_states.assign(gates.begin(), gates.end());

  // 3x3 tiling plus a singleton region for the goal cell, appended last.
  const int tiles_per_row = (env.cols + 2) / 3;
  const int tiles = ((env.rows + 2) / 3) * tiles_per_row;
  const int n_regions = tiles + 1;
  FeatureMap& map = env.features;
  map.n_states = n_states;
  map.n_actions = n_actions;
  map.dim = n_regions * n_actions;
  map.features = Eigen::MatrixXd::Zero(n_states * n_actions, map.dim);
  for (int r = 0; r < env.rows; ++r) {
    for (int c = 0; c < env.cols; ++c) {
      const int s = env.state(r, c);
      const int region =
          (s == env.goal_state) ? tiles : tile_region(r, c, tiles_per_row);
      for (int a = 0; a < n_actions; ++a)
        map.features(mdp.sa_index(s, a), a * n_regions + region) = 1.0;
    }
  }
  map.validate();
  return env;
}

LineKEnv build_linek(const LineKConfig& cfg) {
  if (cfg.length < 3) fail("build_linek: length must be >= 3");
  if (cfg.key_node < 0 || cfg.key_node >= cfg.length - 1)
    fail("build_linek: key node must lie strictly left of the goal node");
  if (cfg.start_node < 0 || cfg.start_node >= cfg.length)
    fail("build_linek: start node out of range");
  if (cfg.p_rand < 0.0 || cfg.p_rand > 1.0)
    fail("build_linek: p_rand must be in [0,1]");

  LineKEnv env;
  env.length = cfg.length;
  env.key_node = cfg.key_node;
  const int n_states = 2 * cfg.length;
  const int n_actions = 3;
  env.start_state = env.state(cfg.start_node, false);
  env.goal_state = env.state(cfg.length - 1, true);

  TabularMdp& mdp = env.mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.gamma = cfg.gamma;
  mdp.horizon = cfg.horizon;
  mdp.transition = Eigen::MatrixXd::Zero(n_states * n_actions, n_states);
  mdp.initial_dist = Eigen::VectorXd::Zero(n_states);
  mdp.initial_dist(env.start_state) = 1.0;
  mdp.base_reward = RewardTable::Zero(n_states, n_actions);
  mdp.terminal.assign(static_cast<size_t>(n_states * n_actions), 0);

  // Deterministic effect of an executed action; end-of-chain moves and
  // ineffective picks stay in place.
  const auto effect = [&](int s, int e) {
    const int node = s % cfg.length;
    const bool has_key = s >= cfg.length;
    switch (e) {
      case kChainLeft:
        return node > 0 ? env.state(node - 1, has_key) : s;
      case kChainRight:
        return node < cfg.length - 1 ? env.state(node + 1, has_key) : s;
      default:
        return (!has_key && node == cfg.key_node) ? env.state(node, true) : s;
    }
  };

  const int goal_row = mdp.sa_index(env.goal_state, kChainRight);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      const int row = mdp.sa_index(s, a);
      if (row == goal_row) {
        mdp.terminal[static_cast<size_t>(row)] = 1;
        mdp.transition(row, s) = 1.0;
        continue;
      }
      for (int e = 0; e < n_actions; ++e) {
        const double p = (e == a) ? 1.0 - cfg.p_rand : cfg.p_rand / 2.0;
        mdp.transition(row, effect(s, e)) += p;
      }
    }
  }
  mdp.base_reward(env.goal_state, kChainRight) = cfg.r_max;
  mdp.validate();

  for (int node = std::min(cfg.key_node, cfg.start_node);
       node <= std::max(cfg.key_node, cfg.start_node); ++node)
    env.gate_states.push_back(env.state(node, false));

  // Regions: 0 key-loc/no-key, 1 goal-loc/key, 2 other/no-key, 3 other/key,
  // 4 key-loc/key; goal-loc/no-key falls under other/no-key.
  const int n_regions = 5;
  const auto region = [&](int s) {
    const int node = s % cfg.length;
    const bool has_key = s >= cfg.length;
    if (node == cfg.key_node) return has_key ? 4 : 0;
    if (has_key && node == cfg.length - 1) return 1;
    return has_key ? 3 : 2;
  };
  FeatureMap& map = env.features;
  map.n_states = n_states;
  map.n_actions = n_actions;
  map.dim = n_regions * n_actions;
  map.features = Eigen::MatrixXd::Zero(n_states * n_actions, map.dim);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a)
      map.features(mdp.sa_index(s, a), a * n_regions + region(s)) = 1.0;
  map.validate();
  return env;
}

StochasticPolicy perturbed_initial_policy(const TabularMdp& mdp,
                                          const std::vector<int>& designated_states,
                                          double suboptimal_prob,
                                          const StochasticPolicy& pi_t,
                                          Rng* /*rng*/) {
  validate_policy(mdp, pi_t);
  if (suboptimal_prob < 0.0 || suboptimal_prob > 1.0)
    fail("perturbed_initial_policy: suboptimal_prob must be in [0,1]");
  const int n = mdp.n_actions;
  StochasticPolicy policy = uniform_policy(mdp.n_states, n);
  if (n < 2) return policy;  // no suboptimal actions exist; stay uniform
  for (int s : designated_states) {
    if (s < 0 || s >= mdp.n_states)
      fail("perturbed_initial_policy: designated state out of range");
    Eigen::Index target = 0;
    if (pi_t.row(s).maxCoeff(&target) != 1.0)
      fail("perturbed_initial_policy: pi_t must be deterministic");
    for (int a = 0; a < n; ++a)
      policy(s, a) = (1.0 - suboptimal_prob) / n +
                     (a == target ? 0.0 : suboptimal_prob / (n - 1));
  }
  return policy;
}

}  // namespace ard
