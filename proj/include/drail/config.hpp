#ifndef DRAIL_CONFIG_HPP_
#define DRAIL_CONFIG_HPP_

// TrainConfig and its JSON form. Unknown keys are rejected by name; every
// default is materialized when a config is serialized back (run manifests).

#include <cstdint>
#include <string>
#include <vector>

#include "drail/diffusion.hpp"
#include "drail/envs.hpp"
#include "drail/policy.hpp"

namespace drail {

inline constexpr const char* kConfigFormat = "drail-config/1";
inline constexpr const char* kManifestFormat = "drail-manifest/1";

enum class Method : uint8_t { kDrail, kGail, kDiffail, kBc };

const char* method_name(Method method);
Method parse_method(const std::string& name);

struct DiscConfig {
  double lr = 1e-3;
  int minibatch = 128;
  int epochs = 1;
  // diffusion discriminators (DRAIL, DiffAIL)
  int hidden_dim = 128;
  int n_hidden = 3;
  int T = 1000;
  double s_offset = 0.008;
  int sample_count = 1;
  int label_dim = 10;
  int time_embed_dim = 16;
  diffusion::TimeMode time_mode = diffusion::TimeMode::kSinusoidal;
  // GAIL discriminator
  int gail_hidden_dim = 64;
  int gail_n_hidden = 2;
};

struct PolicyConfig {
  int hidden_dim = 64;
  int n_hidden = 2;
  double init_log_std = -0.5;
  int critic_hidden_dim = 64;
  int critic_n_hidden = 2;
};

struct BcConfig {
  int epochs = 200;
  double lr = 1e-3;
  int minibatch = 128;
};

struct TrainConfig {
  Method method = Method::kDrail;
  env::EnvConfig env;
  std::string expert_path;
  int64_t total_env_steps = 300000;
  uint64_t seed = 0;
  int64_t expert_limit = 0;  // trajectories kept from the expert file; 0 = all
  int64_t eval_interval = 20480;
  int eval_episodes = 100;
  bool eval_stochastic = false;
  rl::PpoConfig ppo;
  DiscConfig disc;
  PolicyConfig policy;
  BcConfig bc;

  void validate() const;
  diffusion::DenoiserConfig denoiser_config() const;
};

// Parses a config document (or a run manifest, using its "config" entry).
TrainConfig config_from_json(const std::string& text);
std::string config_to_json(const TrainConfig& config);

// Applies "dotted.key=value" to a config document; value is parsed as JSON
// when possible, otherwise taken as a string.
std::string apply_override(const std::string& config_json,
                           const std::string& assignment);

struct RunManifest {
  TrainConfig config;
  std::vector<std::pair<std::string, std::string>> artifacts;
};

std::string manifest_to_json(const RunManifest& manifest);

}  // namespace drail

#endif  // DRAIL_CONFIG_HPP_
