#include "ard/config.hpp"

#include <json.hpp>

#include "ard/designer.hpp"
#include "ard/io.hpp"

namespace ard {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& message) {
  throw std::invalid_argument(message);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail("config section '" + path + "' must be an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known) fail("unknown config key '" + path + "." + item.key() + "'");
  }
}

template <typename T>
T get_or(const json& obj, const std::string& path, const char* key,
         const T& fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail("config key '" + path + "." + key + "' has the wrong type");
  }
}

void parse_environment(const json& obj, EnvironmentSpec& env) {
  check_keys(obj, "environment",
             {"kind", "p_rand", "r_max", "gamma", "horizon", "map_file",
              "length", "key_node", "start_node", "mdp_file", "features_file",
              "target_policy_file"});
  env.kind = get_or<std::string>(obj, "environment", "kind", env.kind);
  if (env.kind != "room" && env.kind != "linek" && env.kind != "custom")
    fail("config key 'environment.kind' must be room, linek, or custom, got '" +
         env.kind + "'");
  const double p_rand = get_or<double>(
      obj, "environment", "p_rand",
      env.kind == "linek" ? env.linek.p_rand : env.room.p_rand);
  const double r_max =
      get_or<double>(obj, "environment", "r_max", env.room.r_max);
  const double gamma =
      get_or<double>(obj, "environment", "gamma", env.room.gamma);
  const int horizon =
      get_or<int>(obj, "environment", "horizon", env.room.horizon);
  env.room.p_rand = env.linek.p_rand = p_rand;
  env.room.r_max = env.linek.r_max = r_max;
  env.room.gamma = env.linek.gamma = gamma;
  env.room.horizon = env.linek.horizon = horizon;
  env.linek.length = get_or<int>(obj, "environment", "length", env.linek.length);
  env.linek.key_node =
      get_or<int>(obj, "environment", "key_node", env.linek.key_node);
  env.linek.start_node =
      get_or<int>(obj, "environment", "start_node", env.linek.start_node);
  env.map_file = get_or<std::string>(obj, "environment", "map_file", "");
  env.mdp_file = get_or<std::string>(obj, "environment", "mdp_file", "");
  env.features_file =
      get_or<std::string>(obj, "environment", "features_file", "");
  env.target_policy_file =
      get_or<std::string>(obj, "environment", "target_policy_file", "");
  if (env.kind == "custom" && env.mdp_file.empty())
    fail("config key 'environment.mdp_file' is required when kind is custom");
}

void parse_designer(const json& obj, ExperimentConfig& cfg) {
  check_keys(obj, "designer",
             {"objective", "r_max", "support", "include_invariance",
              "strict_epsilon", "external_coeffs_file"});
  DesignProblem& designer = cfg.training.designer;
  const std::string objective =
      get_or<std::string>(obj, "designer", "objective", "informativeness_h1");
  if (objective == "informativeness_h1")
    designer.objective = DesignObjective::kInformativenessH1;
  else if (objective == "informativeness_h")
    designer.objective = DesignObjective::kInformativenessH;
  else if (objective == "constant")
    designer.objective = DesignObjective::kConstant;
  else if (objective == "external")
    designer.objective = DesignObjective::kExternal;
  else
    fail("config key 'designer.objective' must be informativeness_h1, "
         "informativeness_h, constant, or external, got '" + objective + "'");
  designer.r_max = get_or<double>(obj, "designer", "r_max", designer.r_max);
  if (obj.contains("support"))
    designer.support =
        get_or<std::vector<int>>(obj, "designer", "support", {});
  designer.include_invariance = get_or<bool>(obj, "designer",
                                             "include_invariance",
                                             designer.include_invariance);
  designer.strict_epsilon =
      get_or<double>(obj, "designer", "strict_epsilon", designer.strict_epsilon);
  cfg.external_coeffs_file =
      get_or<std::string>(obj, "designer", "external_coeffs_file", "");
}

void parse_learner(const json& obj, LearnerConfig& learner) {
  check_keys(obj, "learner", {"kind", "alpha", "depth", "baseline"});
  const std::string kind =
      get_or<std::string>(obj, "learner", "kind", "reinforce");
  if (kind == "reinforce")
    learner.kind = LearnerKind::kReinforce;
  else if (kind == "simple_pg")
    learner.kind = LearnerKind::kSimplePg;
  else if (kind == "greedy")
    learner.kind = LearnerKind::kGreedy;
  else
    fail("config key 'learner.kind' must be reinforce, simple_pg, or greedy, "
         "got '" + kind + "'");
  learner.alpha = get_or<double>(obj, "learner", "alpha", learner.alpha);
  if (learner.alpha <= 0.0)
    fail("config key 'learner.alpha' must be positive");
  learner.depth = get_or<int>(obj, "learner", "depth", learner.depth);
  learner.baseline = get_or<bool>(obj, "learner", "baseline", learner.baseline);
}

void parse_training(const json& obj, TrainingConfig& training) {
  check_keys(obj, "training",
             {"total_episodes", "reward_period", "policy_period",
              "buffer_capacity", "eval_period", "eval_episodes", "rollout_eval",
              "weak_target", "snapshot_period", "master_seed"});
  training.total_episodes =
      get_or<int>(obj, "training", "total_episodes", training.total_episodes);
  training.reward_period =
      get_or<int>(obj, "training", "reward_period", training.reward_period);
  training.policy_period =
      get_or<int>(obj, "training", "policy_period", training.policy_period);
  training.buffer_capacity =
      get_or<int>(obj, "training", "buffer_capacity", training.buffer_capacity);
  training.eval_period =
      get_or<int>(obj, "training", "eval_period", training.eval_period);
  training.eval_episodes =
      get_or<int>(obj, "training", "eval_episodes", training.eval_episodes);
  training.rollout_eval =
      get_or<bool>(obj, "training", "rollout_eval", training.rollout_eval);
  training.weak_target =
      get_or<bool>(obj, "training", "weak_target", training.weak_target);
  training.snapshot_period =
      get_or<int>(obj, "training", "snapshot_period", training.snapshot_period);
  training.master_seed = get_or<std::uint64_t>(obj, "training", "master_seed",
                                               training.master_seed);
}

void parse_run(const json& obj, RunSpec& run) {
  check_keys(obj, "run",
             {"n_seeds", "techniques", "threshold_fraction", "diverse_learners",
              "suboptimal_prob", "external_reward_file"});
  run.n_seeds = get_or<int>(obj, "run", "n_seeds", run.n_seeds);
  run.techniques = get_or<std::vector<std::string>>(obj, "run", "techniques",
                                                    run.techniques);
  for (const std::string& technique : run.techniques)
    if (technique != "adaptive" && technique != "orig" && technique != "invar" &&
        technique != "external")
      fail("config key 'run.techniques' allows adaptive, orig, invar, "
           "external; got '" + technique + "'");
  run.threshold_fraction =
      get_or<double>(obj, "run", "threshold_fraction", run.threshold_fraction);
  run.diverse_learners =
      get_or<bool>(obj, "run", "diverse_learners", run.diverse_learners);
  run.suboptimal_prob =
      get_or<double>(obj, "run", "suboptimal_prob", run.suboptimal_prob);
  run.external_reward_file =
      get_or<std::string>(obj, "run", "external_reward_file", "");
}

void parse_theorem1(const json& obj, Theorem1Spec& spec) {
  check_keys(obj, "theorem1",
             {"n_mdps", "n_states", "n_actions", "r_max", "seed", "max_rounds"});
  spec.n_mdps = get_or<int>(obj, "theorem1", "n_mdps", spec.n_mdps);
  spec.n_states = get_or<int>(obj, "theorem1", "n_states", spec.n_states);
  spec.n_actions = get_or<int>(obj, "theorem1", "n_actions", spec.n_actions);
  spec.r_max = get_or<double>(obj, "theorem1", "r_max", spec.r_max);
  spec.seed = get_or<std::uint64_t>(obj, "theorem1", "seed", spec.seed);
  spec.max_rounds = get_or<int>(obj, "theorem1", "max_rounds", spec.max_rounds);
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, "config",
             {"environment", "designer", "learner", "training", "run",
              "theorem1"});
  ExperimentConfig cfg;
  if (root.contains("environment"))
    parse_environment(root.at("environment"), cfg.environment);
  if (root.contains("designer")) parse_designer(root.at("designer"), cfg);
  if (root.contains("learner"))
    parse_learner(root.at("learner"), cfg.training.learner);
  if (root.contains("training")) parse_training(root.at("training"), cfg.training);
  if (root.contains("run")) parse_run(root.at("run"), cfg.run);
  if (root.contains("theorem1")) parse_theorem1(root.at("theorem1"), cfg.theorem1);
  return cfg;
}

BuiltEnvironment build_environment(const EnvironmentSpec& spec) {
  BuiltEnvironment built;
  if (spec.kind == "room") {
    RoomConfig room = spec.room;
    if (!spec.map_file.empty()) room.map_text = read_text_file(spec.map_file);
    RoomEnv env = build_room(room);
    built.name = "room";
    built.mdp = std::move(env.mdp);
    built.features = std::move(env.features);
    built.gate_states = std::move(env.gate_states);
    built.default_suboptimal_prob = 0.5;
  } else if (spec.kind == "linek") {
    LineKEnv env = build_linek(spec.linek);
    built.name = "linek";
    built.mdp = std::move(env.mdp);
    built.features = std::move(env.features);
    built.gate_states = std::move(env.gate_states);
    built.default_suboptimal_prob = 0.7;
  } else if (spec.kind == "custom") {
    built.name = "custom";
    built.mdp = load_mdp(spec.mdp_file);
    if (spec.features_file.empty()) {
      built.features.n_states = built.mdp.n_states;
      built.features.n_actions = built.mdp.n_actions;
      built.features.dim = built.mdp.n_states * built.mdp.n_actions;
      built.features.features =
          Eigen::MatrixXd::Identity(built.features.dim, built.features.dim);
    } else {
      built.features.n_states = built.mdp.n_states;
      built.features.n_actions = built.mdp.n_actions;
      built.features.features = load_table(spec.features_file);
      built.features.dim = static_cast<int>(built.features.features.cols());
    }
    built.features.validate();
    built.default_suboptimal_prob = 0.5;
  } else {
    throw std::invalid_argument("unknown environment kind '" + spec.kind + "'");
  }
  if (spec.kind == "custom" && !spec.target_policy_file.empty()) {
    built.target = load_table(spec.target_policy_file);
    validate_policy(built.mdp, built.target);
  } else {
    built.target = optimal_policy(built.mdp, built.mdp.base_reward);
  }
  return built;
}

void finalize_config(ExperimentConfig& cfg, const BuiltEnvironment& env) {
  cfg.training.designer.features = env.features;
  if (!cfg.external_coeffs_file.empty()) {
    const Eigen::MatrixXd table = load_table(cfg.external_coeffs_file);
    if (table.cols() != 1 && table.rows() != 1)
      throw std::invalid_argument(
          "external_coeffs_file must hold a single row or column");
    cfg.training.designer.external_coeffs =
        table.cols() == 1 ? Eigen::VectorXd(table.col(0))
                          : Eigen::VectorXd(table.row(0).transpose());
  }
  if (!cfg.run.external_reward_file.empty())
    cfg.training.external_reward = load_table(cfg.run.external_reward_file);
  if (cfg.run.suboptimal_prob < 0.0)
    cfg.run.suboptimal_prob = env.default_suboptimal_prob;
}

}  // namespace ard
