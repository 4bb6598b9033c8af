#include <string>

#include "doctest.h"
#include "drail/config.hpp"
#include "drail/error.hpp"
#include "json.hpp"

using nlohmann::json;

namespace {

const char* kMinimal = R"({"expert_path": "expert.drld"})";

}  // namespace

TEST_SUITE("config") {

TEST_CASE("defaults fill every unspecified key") {
  const drail::TrainConfig c = drail::config_from_json(kMinimal);
  CHECK(c.method == drail::Method::kDrail);
  CHECK(c.env.kind == drail::env::EnvKind::kPointReach);
  CHECK(c.total_env_steps == 300000);
  CHECK(c.ppo.rollout_length == 2048);
  CHECK(c.ppo.clip == 0.2);
  CHECK(c.disc.T == 1000);
  CHECK(c.disc.label_dim == 10);
  CHECK(c.disc.time_embed_dim == 16);
  CHECK(c.expert_limit == 0);
}

TEST_CASE("serialization round trips and materializes defaults") {
  drail::TrainConfig c = drail::config_from_json(kMinimal);
  c.method = drail::Method::kDiffail;
  c.seed = 18446744073709551615ULL;
  c.disc.time_mode = drail::diffusion::TimeMode::kScalar;
  c.env.sine.support = {{0.1, 0.2}};
  const std::string text = drail::config_to_json(c);
  const json j = json::parse(text);
  CHECK(j["format_version"] == drail::kConfigFormat);
  CHECK(j["method"] == "diffail");
  CHECK(j["ppo"]["gae_lambda"] == 0.95);
  CHECK(j["disc"]["time_mode"] == "scalar");
  const drail::TrainConfig back = drail::config_from_json(text);
  CHECK(drail::config_to_json(back) == text);
  CHECK(back.seed == c.seed);
}

TEST_CASE("unknown keys are rejected by their dotted name") {
  CHECK_THROWS_WITH_AS(
      drail::config_from_json(R"({"expert_path": "x", "ppo": {"clip": 0.2, "clipp": 1}})"),
      "unknown config key 'ppo.clipp'", drail::Error);
  CHECK_THROWS_WITH_AS(drail::config_from_json(R"({"expert_path": "x", "lr": 1})"),
                       "unknown config key 'lr'", drail::Error);
}

TEST_CASE("type and value errors") {
  CHECK_THROWS_WITH(drail::config_from_json(R"({"expert_path": "x", "seed": "one"})"),
                    "config key 'seed' has the wrong type");
  CHECK_THROWS_WITH(drail::config_from_json(R"({"expert_path": "x", "disc": {"T": 1.5}})"),
                    "config key 'disc.T' has the wrong type");
  CHECK_THROWS_WITH(drail::config_from_json(R"({"expert_path": "x", "method": "sac"})"),
                    doctest::Contains("unknown method 'sac'"));
  CHECK_THROWS_WITH(drail::config_from_json(R"({"expert_path": "x", "env": "nosuch"})"),
                    doctest::Contains("valid envs: sine, point_reach"));
  CHECK_THROWS_WITH(drail::config_from_json("{}"), doctest::Contains("expert_path"));
  CHECK_THROWS_WITH(drail::config_from_json("{not json"),
                    doctest::Contains("not valid JSON"));
  CHECK_THROWS_WITH(
      drail::config_from_json(R"({"expert_path": "x", "total_env_steps": 100})"),
      doctest::Contains("total_env_steps"));
  CHECK_THROWS_WITH(
      drail::config_from_json(R"({"expert_path": "x", "format_version": "drail-config/9"})"),
      doctest::Contains("format_version"));
  CHECK_THROWS_WITH(
      drail::config_from_json(R"({"expert_path": "x", "disc": {"time_embed_dim": 7}})"),
      doctest::Contains("time_embed_dim"));
  // Behavior cloning has no rollouts, so the step budget is not checked.
  CHECK_NOTHROW(drail::config_from_json(
      R"({"expert_path": "x", "method": "bc", "total_env_steps": 0})"));
}

TEST_CASE("dotted overrides") {
  std::string text = kMinimal;
  text = drail::apply_override(text, "ppo.lr=1e-4");
  text = drail::apply_override(text, "method=gail");
  text = drail::apply_override(text, "disc.time_mode=scalar");
  text = drail::apply_override(text, "eval_stochastic=true");
  const drail::TrainConfig c = drail::config_from_json(text);
  CHECK(c.ppo.lr == 1e-4);
  CHECK(c.method == drail::Method::kGail);
  CHECK(c.disc.time_mode == drail::diffusion::TimeMode::kScalar);
  CHECK(c.eval_stochastic);
  CHECK_THROWS_AS(drail::apply_override(text, "novalue"), drail::Error);
  CHECK_THROWS_AS(drail::apply_override(text, "ppo..lr=1"), drail::Error);
  CHECK_THROWS_AS(drail::apply_override(text, "ppo.lr.x=1"), drail::Error);
  // A misspelled key lands in the document and fails validation by name.
  CHECK_THROWS_WITH(drail::config_from_json(drail::apply_override(text, "ppo.lrr=1")),
                    "unknown config key 'ppo.lrr'");
}

TEST_CASE("manifests are accepted as configs") {
  drail::RunManifest m{drail::config_from_json(kMinimal), {{"policy", "policy.drlp"}}};
  m.config.seed = 7;
  const std::string text = drail::manifest_to_json(m);
  const json j = json::parse(text);
  CHECK(j["format_version"] == drail::kManifestFormat);
  CHECK(j["seed"] == 7);
  CHECK(j["artifacts"]["policy"] == "policy.drlp");
  const drail::TrainConfig back = drail::config_from_json(text);
  CHECK(drail::config_to_json(back) == drail::config_to_json(m.config));
  const drail::TrainConfig over =
      drail::config_from_json(drail::apply_override(text, "seed=9"));
  CHECK(over.seed == 9);
}

TEST_CASE("denoiser config follows the discriminator settings") {
  const drail::TrainConfig c = drail::config_from_json(
      R"({"expert_path": "x", "env": "sine", "disc": {"T": 50, "hidden_dim": 32}})");
  const drail::diffusion::DenoiserConfig d = c.denoiser_config();
  CHECK(d.state_dim == 1);
  CHECK(d.action_dim == 1);
  CHECK(d.T == 50);
  CHECK(d.hidden_dim == 32);
}

}  // TEST_SUITE
