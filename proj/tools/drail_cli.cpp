// drail command-line front end. Talks to the library only through drail.h.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "drail/drail.h"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

int exit_code(drail_status st) {
  switch (st) {
    case DRAIL_OK:
      return 0;
    case DRAIL_ERR_NUMERIC:
      return kExitNumeric;
    case DRAIL_ERR_INVALID:
    case DRAIL_ERR_FORMAT:
    case DRAIL_ERR_IO:
      return kExitUsage;
    default:
      return 1;
  }
}

// Prints the library error and returns the process exit code.
int report(drail_status st) {
  if (st != DRAIL_OK) std::cerr << "error: " << drail_last_error() << "\n";
  return exit_code(st);
}

int threads_from_env() {
  const char* v = std::getenv("DRAIL_THREADS");
  if (v == nullptr || *v == '\0') return 1;
  const int n = std::atoi(v);
  return n < 1 ? 1 : n;
}

bool read_text(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

struct GenExpertArgs {
  std::string env;
  size_t n = 100;
  uint64_t seed = 0;
  double noise_scale = 1.0;
  std::string out;
  std::string policy_out;
};

int cmd_gen_expert(const GenExpertArgs& a) {
  drail_dataset* ds = nullptr;
  drail_status st = drail_dataset_generate(a.env.c_str(), a.n, a.seed, a.noise_scale, &ds);
  if (st != DRAIL_OK) return report(st);
  st = drail_dataset_save(ds, a.out.c_str());
  if (st == DRAIL_OK) {
    std::cout << "wrote " << drail_dataset_transitions(ds) << " transitions ("
              << drail_dataset_trajectories(ds) << " trajectories) to " << a.out << "\n";
  }
  drail_dataset_free(ds);
  if (st != DRAIL_OK || a.policy_out.empty()) return report(st);
  drail_policy* p = nullptr;
  st = drail_policy_scripted_expert(&p);
  if (st == DRAIL_OK) st = drail_policy_save(p, a.policy_out.c_str());
  drail_policy_free(p);
  return report(st);
}

struct TrainArgs {
  std::string config;
  std::vector<std::string> sets;
  std::string run_dir;
  bool verbose = false;
};

int cmd_train(const TrainArgs& a) {
  std::string text;
  if (!read_text(a.config, text)) {
    std::cerr << "error: cannot read config " << a.config << "\n";
    return kExitUsage;
  }
  drail_config* cfg = nullptr;
  drail_status st = drail_config_from_json(text.c_str(), &cfg);
  for (size_t i = 0; st == DRAIL_OK && i < a.sets.size(); ++i) {
    st = drail_config_set(cfg, a.sets[i].c_str());
  }
  if (st == DRAIL_OK) st = drail_train(cfg, a.run_dir.c_str(), threads_from_env(), a.verbose);
  drail_config_free(cfg);
  if (st == DRAIL_OK) std::cout << "run written to " << a.run_dir << "\n";
  return report(st);
}

struct EvalArgs {
  std::string checkpoint;
  std::string env = "point_reach";
  double noise_scale = 1.0;
  int episodes = 100;
  uint64_t seed = 0;
  bool stochastic = false;
};

int cmd_eval(const EvalArgs& a) {
  drail_policy* p = nullptr;
  drail_status st = drail_policy_load(a.checkpoint.c_str(), &p);
  char* json = nullptr;
  if (st == DRAIL_OK) {
    st = drail_evaluate(p, a.env.c_str(), a.noise_scale, a.episodes, a.seed,
                        a.stochastic ? 1 : 0, &json);
  }
  if (st == DRAIL_OK) std::cout << json << "\n";
  drail_string_free(json);
  drail_policy_free(p);
  return report(st);
}

struct RewardMapArgs {
  std::string checkpoint;
  std::string resolution = "101x121";
  int samples = 16;
  uint64_t seed = 0;
  std::string value = "prob";
  std::string out;
};

int cmd_reward_map(const RewardMapArgs& a) {
  int s_res = 0;
  int a_res = 0;
  char tail = 0;
  if (std::sscanf(a.resolution.c_str(), "%dx%d%c", &s_res, &a_res, &tail) != 2) {
    std::cerr << "error: resolution must look like 101x121\n";
    return kExitUsage;
  }
  const drail_grid_value value =
      a.value == "logit" ? DRAIL_GRID_LOGIT : DRAIL_GRID_PROBABILITY;
  const drail_status st = drail_reward_map(a.checkpoint.c_str(), s_res, a_res, a.samples,
                                           a.seed, value, a.out.c_str());
  return report(st);
}

int cmd_inspect(const std::string& path) {
  char* json = nullptr;
  const drail_status st = drail_inspect(path.c_str(), &json);
  if (st == DRAIL_OK) std::cout << json << "\n";
  drail_string_free(json);
  return report(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"drail: diffusion-reward adversarial imitation learning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(drail_version()));

  GenExpertArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-expert", "generate an expert dataset");
  gen_cmd->add_option("--env", gen.env, "sine or point_reach")->required();
  gen_cmd->add_option("--n", gen.n, "trajectories (point_reach) or pairs (sine)");
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--noise-scale", gen.noise_scale, "point_reach reset spread");
  gen_cmd->add_option("-o,--output", gen.out)->required();
  gen_cmd->add_option("--policy-out", gen.policy_out,
                      "also save the scripted expert as a policy checkpoint");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "run a training job");
  train_cmd->add_option("--config", tr.config)->required();
  train_cmd->add_option("--set", tr.sets, "override, e.g. --set ppo.lr=1e-4");
  train_cmd->add_option("run_dir", tr.run_dir)->required();
  train_cmd->add_flag("-v,--verbose", tr.verbose);

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a policy checkpoint");
  eval_cmd->add_option("checkpoint", ev.checkpoint)->required();
  eval_cmd->add_option("--env", ev.env);
  eval_cmd->add_option("--noise-scale", ev.noise_scale);
  eval_cmd->add_option("--episodes", ev.episodes);
  eval_cmd->add_option("--seed", ev.seed);
  eval_cmd->add_flag("--stochastic", ev.stochastic);

  RewardMapArgs rm;
  auto* rm_cmd = app.add_subcommand("reward-map", "export a discriminator grid");
  rm_cmd->add_option("checkpoint", rm.checkpoint)->required();
  rm_cmd->add_option("--resolution", rm.resolution, "SxA cells");
  rm_cmd->add_option("--samples", rm.samples, "draws per cell");
  rm_cmd->add_option("--seed", rm.seed);
  rm_cmd->add_option("--value", rm.value, "prob or logit")
      ->check(CLI::IsMember({"prob", "logit"}));
  rm_cmd->add_option("-o,--output", rm.out)->required();

  std::string inspect_path;
  auto* inspect_cmd = app.add_subcommand("inspect", "print a file header");
  inspect_cmd->add_option("path", inspect_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  if (*gen_cmd) return cmd_gen_expert(gen);
  if (*train_cmd) return cmd_train(tr);
  if (*eval_cmd) return cmd_eval(ev);
  if (*rm_cmd) return cmd_reward_map(rm);
  if (*inspect_cmd) return cmd_inspect(inspect_path);
  return kExitUsage;
}
