#include "drail/drail.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "json.hpp"

#include "bytes.hpp"
#include "drail/checkpoint.hpp"
#include "drail/config.hpp"
#include "drail/envs.hpp"
#include "drail/error.hpp"
#include "drail/trainer.hpp"

struct drail_dataset {
  drail::env::ExpertDataset value;
};

struct drail_config {
  std::string json;
};

struct drail_policy {
  drail::rl::GaussianPolicy value;
};

namespace {

thread_local std::string g_last_error;

drail_status fail(drail_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
drail_status guard(Fn&& fn) {
  try {
    fn();
    return DRAIL_OK;
  } catch (const drail::Error& e) {
    switch (e.code()) {
      case drail::ErrorCode::kInvalidArgument:
        return fail(DRAIL_ERR_INVALID, e.what());
      case drail::ErrorCode::kNumeric:
        return fail(DRAIL_ERR_NUMERIC, e.what());
      case drail::ErrorCode::kFormat:
        return fail(DRAIL_ERR_FORMAT, e.what());
      case drail::ErrorCode::kIo:
        return fail(DRAIL_ERR_IO, e.what());
    }
    return fail(DRAIL_ERR_INTERNAL, e.what());
  } catch (const std::bad_alloc&) {
    return fail(DRAIL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(DRAIL_ERR_INTERNAL, e.what());
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) drail::throw_invalid(std::string(what) + " is null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

drail::env::EnvConfig env_config(const char* env, double noise_scale) {
  require(env, "env");
  drail::env::EnvConfig cfg;
  cfg.kind = drail::env::parse_env(env);
  cfg.noise_scale = noise_scale;
  return cfg;
}

}  // namespace

extern "C" {

const char* drail_version(void) { return "0.1.0"; }

const char* drail_last_error(void) { return g_last_error.c_str(); }

void drail_string_free(char* s) { std::free(s); }

drail_status drail_dataset_generate(const char* env, size_t n, uint64_t seed,
                                    double noise_scale, drail_dataset** out) {
  return guard([&] {
    require(out, "out");
    *out = nullptr;
    const drail::env::EnvConfig cfg = env_config(env, noise_scale);
    drail::Rng rng(seed, drail::Stream::kExpert);
    auto ds = std::make_unique<drail_dataset>();
    ds->value = drail::env::gen_expert_dataset(cfg, n, rng);
    *out = ds.release();
  });
}

drail_status drail_dataset_load(const char* path, drail_dataset** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    auto ds = std::make_unique<drail_dataset>();
    ds->value = drail::env::dataset_load(path);
    *out = ds.release();
  });
}

drail_status drail_dataset_save(const drail_dataset* ds, const char* path) {
  return guard([&] {
    require(ds, "dataset");
    require(path, "path");
    drail::env::dataset_save(ds->value, path);
  });
}

size_t drail_dataset_transitions(const drail_dataset* ds) {
  return ds ? ds->value.size() : 0;
}

size_t drail_dataset_trajectories(const drail_dataset* ds) {
  return ds ? ds->value.num_trajectories() : 0;
}

void drail_dataset_free(drail_dataset* ds) { delete ds; }

drail_status drail_config_from_json(const char* json, drail_config** out) {
  return guard([&] {
    require(json, "json");
    require(out, "out");
    *out = nullptr;
    if (!nlohmann::json::accept(json)) drail::throw_invalid("config is not valid JSON");
    *out = new drail_config{json};
  });
}

drail_status drail_config_set(drail_config* cfg, const char* assignment) {
  return guard([&] {
    require(cfg, "config");
    require(assignment, "assignment");
    cfg->json = drail::apply_override(cfg->json, assignment);
  });
}

drail_status drail_config_resolve(const drail_config* cfg, char** json_out) {
  return guard([&] {
    require(cfg, "config");
    require(json_out, "json_out");
    *json_out = dup_string(drail::config_to_json(drail::config_from_json(cfg->json)));
  });
}

void drail_config_free(drail_config* cfg) { delete cfg; }

drail_status drail_train(const drail_config* cfg, const char* run_dir, int threads,
                         int verbose) {
  return guard([&] {
    require(cfg, "config");
    require(run_dir, "run_dir");
    const drail::TrainConfig config = drail::config_from_json(cfg->json);
    // Fail on a missing or malformed expert file before any compute.
    const drail::env::ExpertDataset expert = drail::env::dataset_load(config.expert_path);
    drail::train::TrainOptions options;
    options.threads = threads < 1 ? 1 : threads;
    options.verbose = verbose != 0;
    const drail::train::TrainResult result =
        drail::train::train_with_dataset(config, expert, options);
    drail::train::write_run(config, result, run_dir);
  });
}

drail_status drail_policy_load(const char* path, drail_policy** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    auto p = std::make_unique<drail_policy>();
    p->value = drail::ckpt::load_policy(path);
    *out = p.release();
  });
}

drail_status drail_policy_scripted_expert(drail_policy** out) {
  return guard([&] {
    require(out, "out");
    *out = new drail_policy{drail::train::scripted_expert_policy()};
  });
}

drail_status drail_policy_save(const drail_policy* p, const char* path) {
  return guard([&] {
    require(p, "policy");
    require(path, "path");
    drail::ckpt::save_policy(p->value, path);
  });
}

void drail_policy_free(drail_policy* p) { delete p; }

drail_status drail_evaluate(const drail_policy* p, const char* env,
                            double noise_scale, int episodes, uint64_t seed,
                            int stochastic, char** json_out) {
  return guard([&] {
    require(p, "policy");
    require(json_out, "json_out");
    const drail::env::EnvConfig cfg = env_config(env, noise_scale);
    if (p->value.state_dim != cfg.state_dim() || p->value.action_dim != cfg.action_dim()) {
      drail::throw_invalid("policy dims do not match env " + std::string(env));
    }
    const drail::train::EvalReport r =
        drail::train::evaluate(p->value, cfg, episodes, seed, stochastic != 0);
    nlohmann::json j{{"success_rate", r.success_rate},
                     {"mean_return", r.mean_return},
                     {"episodes", r.episodes},
                     {"successes", r.successes}};
    nlohmann::json per_seed = nlohmann::json::array();
    for (const auto& s : r.per_seed) {
      per_seed.push_back({{"seed", s.seed},
                          {"episodes", s.episodes},
                          {"successes", s.successes},
                          {"success_rate", s.success_rate},
                          {"mean_return", s.mean_return}});
    }
    j["per_seed"] = per_seed;
    *json_out = dup_string(j.dump(2));
  });
}

drail_status drail_reward_map(const char* checkpoint, int s_resolution,
                              int a_resolution, int samples, uint64_t seed,
                              drail_grid_value value, const char* out_path) {
  return guard([&] {
    require(checkpoint, "checkpoint");
    require(out_path, "out_path");
    if (s_resolution < 2 || a_resolution < 2) {
      drail::throw_invalid("grid resolution must be at least 2x2");
    }
    const std::string bytes = drail::detail::read_file(checkpoint);
    const drail::ckpt::Kind kind = drail::ckpt::peek_kind(bytes);
    if (kind != drail::ckpt::Kind::kDrail && kind != drail::ckpt::Kind::kGail &&
        kind != drail::ckpt::Kind::kDiffail) {
      drail::throw_invalid(std::string("reward maps need a discriminator checkpoint, got ") +
                           drail::ckpt::kind_name(kind));
    }
    const drail::disc::Discriminator d = drail::ckpt::decode_discriminator(bytes);
    const drail::env::GridAxes axes = drail::env::sine_grid_axes(s_resolution, a_resolution);
    drail::Rng rng(seed, drail::Stream::kDraws);
    const drail::train::RewardGrid grid = drail::train::reward_map(
        d, axes, rng, samples,
        value == DRAIL_GRID_LOGIT ? drail::train::GridValue::kLogit
                                  : drail::train::GridValue::kProbability);
    drail::detail::write_file(out_path, drail::train::reward_grid_csv(grid));
  });
}

drail_status drail_inspect(const char* path, char** json_out) {
  return guard([&] {
    require(path, "path");
    require(json_out, "json_out");
    *json_out = dup_string(drail::ckpt::describe_file(path));
  });
}

}  // extern "C"
