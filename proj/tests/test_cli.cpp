#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ard/io.hpp"
#include "ard/mdp.hpp"
#include "ard/rng.hpp"

using namespace ard;

namespace {

struct TempDir {
  std::filesystem::path path;

  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("ard_cli_test_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }

  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

CliResult run_cli(const TempDir& dir, const std::string& args) {
  const std::string capture = dir.file("cli_output.txt");
  const std::string command =
      std::string(ARD_CLI_PATH) + " " + args + " > " + capture + " 2>&1";
  const int status = std::system(command.c_str());
  CliResult result;
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  result.exit_code = WEXITSTATUS(status);
  result.output = read_text_file(capture);
  return result;
}

// 2-state, 2-action deterministic chain whose base reward already makes the
// design problem easy; written to disk so configs can load it as a custom
// environment.
std::string write_tiny_mdp(const TempDir& dir) {
  TabularMdp mdp;
  mdp.n_states = 2;
  mdp.n_actions = 2;
  mdp.gamma = 0.9;
  mdp.horizon = 10;
  mdp.transition = Eigen::MatrixXd(4, 2);
  mdp.transition << 0, 1,   // s0,a0 -> s1
                    1, 0,   // s0,a1 -> s0
                    0, 1,   // s1,a0 -> s1
                    1, 0;   // s1,a1 -> s0
  mdp.initial_dist = Eigen::VectorXd(2);
  mdp.initial_dist << 1, 0;
  mdp.base_reward = Eigen::MatrixXd(2, 2);
  mdp.base_reward << 1.0, 0.0,
                     0.5, -0.5;
  mdp.terminal.assign(4, 0);
  mdp.validate();
  const std::string path = dir.file("tiny_mdp.txt");
  save_mdp(path, mdp);
  return path;
}

std::string tiny_config(const TempDir& dir, const std::string& extra_blocks) {
  const std::string mdp_path = write_tiny_mdp(dir);
  std::ostringstream config;
  config << "{\n"
         << "  \"environment\": {\"kind\": \"custom\", \"mdp_file\": \""
         << mdp_path << "\"},\n"
         << "  \"training\": {\"total_episodes\": 20, \"reward_period\": 5,\n"
         << "                 \"policy_period\": 2, \"eval_period\": 10,\n"
         << "                 \"master_seed\": 99},\n"
         << "  \"learner\": {\"kind\": \"reinforce\", \"alpha\": 0.05},\n"
         << "  \"designer\": {\"objective\": \"informativeness_h1\", "
            "\"r_max\": 2.0}"
         << (extra_blocks.empty() ? "" : ",\n  " + extra_blocks) << "\n}\n";
  return config.str();
}

std::string write_config(const TempDir& dir, const std::string& name,
                         const std::string& text) {
  const std::string path = dir.file(name);
  write_text_file(path, text);
  return path;
}

}  // namespace

TEST_CASE("help exits 0 and lists every subcommand") {
  TempDir dir;
  const CliResult result = run_cli(dir, "--help");
  CHECK(result.exit_code == 0);
  for (const char* name : {"design", "train", "compare", "theorem1", "verify"})
    CHECK(result.output.find(name) != std::string::npos);
}

TEST_CASE("bogus subcommand and missing subcommand exit 1") {
  TempDir dir;
  CHECK(run_cli(dir, "frobnicate").exit_code == 1);
  CHECK(run_cli(dir, "").exit_code == 1);
}

TEST_CASE("design writes phi, reward, and a passing invariance report") {
  TempDir dir;
  const std::string config = write_config(dir, "design.json", tiny_config(dir, ""));
  const std::string out = dir.file("design_out");
  const CliResult result = run_cli(dir, "design --config " + config + " --out " + out);
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("invariance PASS") != std::string::npos);
  for (const char* artifact :
       {"manifest.txt", "phi.txt", "reward.txt", "design.txt", "invariance.txt"})
    CHECK(std::filesystem::exists(out + "/" + std::string(artifact)));
  // the reward artifact parses back as a table of the environment's shape
  const Eigen::MatrixXd reward = load_table(out + "/reward.txt");
  CHECK(reward.rows() == 2);
  CHECK(reward.cols() == 2);
  const std::string invariance = read_text_file(out + "/invariance.txt");
  CHECK(invariance.find("invariance: PASS") != std::string::npos);
}

TEST_CASE("malformed config key exits 1 and names the key") {
  TempDir dir;
  const std::string config = write_config(
      dir, "bad.json", "{\"environment\": {\"kind\": \"room\", \"flavor\": 3}}\n");
  const CliResult result =
      run_cli(dir, "design --config " + config + " --out " + dir.file("out"));
  CHECK(result.exit_code == 1);
  CHECK(result.output.find("environment.flavor") != std::string::npos);
}

TEST_CASE("infeasible design exits 2 and writes a diagnostic") {
  TempDir dir;
  // an empty support pins phi = 0, whose advantages (all zero) exceed the
  // strictly negative base advantages off the target's actions
  std::string text = tiny_config(dir, "");
  const std::string needle = "\"r_max\": 2.0";
  text.replace(text.find(needle), needle.size(), "\"r_max\": 2.0, \"support\": []");
  const std::string path = write_config(dir, "infeasible.json", text);
  const std::string out = dir.file("infeasible_out");
  const CliResult result = run_cli(dir, "design --config " + path + " --out " + out);
  CHECK(result.exit_code == 2);
  CHECK(result.output.find("infeasible") != std::string::npos);
  CHECK(std::filesystem::exists(out + "/diagnostic.txt"));
  const std::string diagnostic = read_text_file(out + "/diagnostic.txt");
  CHECK(diagnostic.find("assembled lp:") != std::string::npos);
}

TEST_CASE("train emits artifacts and --replay reproduces them byte for byte") {
  TempDir dir;
  const std::string config = write_config(dir, "train.json", tiny_config(dir, ""));
  const std::string out = dir.file("train_out");
  const CliResult result = run_cli(
      dir, "train --config " + config + " --technique adaptive --out " + out);
  CHECK(result.exit_code == 0);
  for (const char* artifact : {"manifest.txt", "convergence.csv",
                               "reward_final.txt", "policy_final.txt"})
    CHECK(std::filesystem::exists(out + "/" + std::string(artifact)));

  const std::string replay_out = dir.file("train_replay");
  const CliResult replay = run_cli(
      dir, "train --replay " + out + "/manifest.txt --out " + replay_out);
  CHECK(replay.exit_code == 0);
  CHECK(read_text_file(out + "/convergence.csv") ==
        read_text_file(replay_out + "/convergence.csv"));
  CHECK(read_text_file(out + "/manifest.txt") ==
        read_text_file(replay_out + "/manifest.txt"));
  CHECK(read_text_file(out + "/reward_final.txt") ==
        read_text_file(replay_out + "/reward_final.txt"));
}

TEST_CASE("train validates the technique name") {
  TempDir dir;
  const std::string config = write_config(dir, "tech.json", tiny_config(dir, ""));
  const CliResult result = run_cli(
      dir, "train --config " + config + " --technique sorcery --out " +
               dir.file("out"));
  CHECK(result.exit_code == 1);
  CHECK(result.output.find("sorcery") != std::string::npos);
}

TEST_CASE("compare runs techniques x seeds and writes the summary") {
  TempDir dir;
  const std::string config = write_config(
      dir, "compare.json",
      tiny_config(dir,
                  "\"run\": {\"n_seeds\": 2, \"techniques\": [\"adaptive\", "
                  "\"orig\"], \"threshold_fraction\": 0.9}"));
  const std::string out = dir.file("compare_out");
  const CliResult result =
      run_cli(dir, "compare --config " + config + " --out " + out);
  CHECK(result.exit_code == 0);
  CHECK(std::filesystem::exists(out + "/compare_summary.txt"));
  const std::string summary = read_text_file(out + "/compare_summary.txt");
  CHECK(summary.find("technique adaptive runs 2") != std::string::npos);
  CHECK(summary.find("technique orig runs 2") != std::string::npos);
  for (const char* child :
       {"adaptive_00", "adaptive_01", "orig_00", "orig_01"})
    CHECK(std::filesystem::exists(out + "/" + std::string(child) +
                                  "/convergence.csv"));
}

TEST_CASE("compare refuses fewer than two techniques") {
  TempDir dir;
  const std::string config = write_config(
      dir, "one.json",
      tiny_config(dir, "\"run\": {\"techniques\": [\"adaptive\"]}"));
  const CliResult result =
      run_cli(dir, "compare --config " + config + " --out " + dir.file("out"));
  CHECK(result.exit_code == 1);
  CHECK(result.output.find("at least 2 techniques") != std::string::npos);
}

TEST_CASE("theorem1 reports full convergence on a small suite") {
  TempDir dir;
  const std::string config = write_config(
      dir, "thm.json",
      "{\"theorem1\": {\"n_mdps\": 5, \"n_states\": 3, \"n_actions\": 3, "
      "\"seed\": 3}}\n");
  const std::string out = dir.file("thm_out");
  const CliResult result =
      run_cli(dir, "theorem1 --config " + config + " --out " + out);
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("converged <= 3 rounds: 5/5") != std::string::npos);
  CHECK(std::filesystem::exists(out + "/theorem1_report.txt"));
  CHECK(std::filesystem::exists(out + "/manifest.txt"));
}

TEST_CASE("verify passes on a clean build and prints every invariant") {
  TempDir dir;
  const std::string out = dir.file("verify_out");
  const CliResult result = run_cli(dir, "verify --seed 5 --out " + out);
  CHECK(result.exit_code == 0);
  for (const char* name :
       {"mdp.advantage-rows-centered", "informativeness.dual-form-identity",
        "designer.base-reward-feasible", "learners.reinforce-unbiased",
        "harness.run-determinism", "cli.manifest-round-trip"})
    CHECK(result.output.find(name) != std::string::npos);
  CHECK(result.output.find("FAIL") == std::string::npos);
  CHECK(std::filesystem::exists(out + "/verify_report.txt"));
}

TEST_CASE("train requires a config or a manifest, not both") {
  TempDir dir;
  const std::string config = write_config(dir, "both.json", tiny_config(dir, ""));
  const CliResult neither = run_cli(dir, "train --out " + dir.file("o1"));
  CHECK(neither.exit_code == 1);
  const std::string out = dir.file("train_src");
  REQUIRE(run_cli(dir, "train --config " + config + " --out " + out).exit_code == 0);
  const CliResult both = run_cli(
      dir, "train --config " + config + " --replay " + out +
               "/manifest.txt --out " + dir.file("o2"));
  CHECK(both.exit_code == 1);
  CHECK(both.output.find("not both") != std::string::npos);
}
