#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ard/envs.hpp"
#include "ard/harness.hpp"

namespace ard {

// Which MDP to run on.  "room" and "linek" build the shipped environments
// (numeric fields override their defaults); "custom" loads an ard-mdp file
// plus optional feature/target tables.
struct EnvironmentSpec {
  std::string kind = "room";  // room | linek | custom
  RoomConfig room;
  LineKConfig linek;
  std::string map_file;            // room: ASCII lattice map override
  std::string mdp_file;            // custom: required
  std::string features_file;       // custom: (S*A) x d table; identity if empty
  std::string target_policy_file;  // custom: S x A table; optimal if empty
};

struct RunSpec {
  int n_seeds = 1;
  std::vector<std::string> techniques{"adaptive", "orig", "invar"};
  double threshold_fraction = 0.9;
  bool diverse_learners = false;
  double suboptimal_prob = -1.0;  // < 0: use the environment default
  std::string external_reward_file;
};

struct Theorem1Spec {
  int n_mdps = 100;
  int n_states = 4;
  int n_actions = 4;
  double r_max = 1.0;
  std::uint64_t seed = 0;
  int max_rounds = 0;  // 0: n_actions (the bound under test)
};

struct ExperimentConfig {
  EnvironmentSpec environment;
  TrainingConfig training;  // schedule + designer + learner + master_seed
  RunSpec run;
  Theorem1Spec theorem1;
  std::string external_coeffs_file;  // designer external-objective vector
};

// Strict JSON parse: unknown keys are rejected with the dotted key path in
// the message; type mismatches name the key.  Throws std::invalid_argument.
ExperimentConfig parse_experiment_config(const std::string& json_text);

struct BuiltEnvironment {
  std::string name;
  TabularMdp mdp;
  FeatureMap features;
  StochasticPolicy target;
  std::vector<int> gate_states;          // diverse-learner perturbation sites
  double default_suboptimal_prob = 0.5;  // per-environment paper setting
};

BuiltEnvironment build_environment(const EnvironmentSpec& spec);

// Copies the environment's feature map into the designer template and loads
// any file-referenced vectors (external objective, external baseline reward).
void finalize_config(ExperimentConfig& cfg, const BuiltEnvironment& env);

}  // namespace ard
