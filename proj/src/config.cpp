#include "drail/config.hpp"

#include <set>

#include "drail/error.hpp"
#include "json.hpp"

namespace drail {

using nlohmann::json;

const char* method_name(Method method) {
  switch (method) {
    case Method::kDrail:
      return "drail";
    case Method::kGail:
      return "gail";
    case Method::kDiffail:
      return "diffail";
    case Method::kBc:
      return "bc";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "drail") return Method::kDrail;
  if (name == "gail") return Method::kGail;
  if (name == "diffail") return Method::kDiffail;
  if (name == "bc") return Method::kBc;
  throw_invalid("unknown method '" + name + "' (valid: drail, gail, diffail, bc)");
}

void TrainConfig::validate() const {
  ppo.validate();
  if (method != Method::kBc && total_env_steps < ppo.rollout_length) {
    throw_invalid("total_env_steps must be >= ppo.rollout_length");
  }
  if (expert_path.empty()) throw_invalid("expert_path is required");
  if (expert_limit < 0) throw_invalid("expert_limit must be >= 0");
  if (eval_interval < 1) throw_invalid("eval_interval must be >= 1");
  if (eval_episodes < 1) throw_invalid("eval_episodes must be >= 1");
  if (!(env.noise_scale >= 0.0)) throw_invalid("noise_scale must be >= 0");
  env.sine.validate();
  if (disc.lr < 0.0) throw_invalid("disc.lr must be >= 0");
  if (disc.minibatch < 2) throw_invalid("disc.minibatch must be >= 2");
  if (disc.epochs < 0) throw_invalid("disc.epochs must be >= 0");
  if (disc.hidden_dim < 1 || disc.n_hidden < 0) throw_invalid("disc network shape is invalid");
  if (disc.T < 1) throw_invalid("disc.T must be >= 1");
  if (!(disc.s_offset > 0.0 && disc.s_offset < 1.0)) throw_invalid("disc.s_offset must lie in (0, 1)");
  if (disc.sample_count < 1) throw_invalid("disc.sample_count must be >= 1");
  if (disc.label_dim < 1) throw_invalid("disc.label_dim must be >= 1");
  if (disc.time_mode == diffusion::TimeMode::kSinusoidal &&
      (disc.time_embed_dim < 2 || disc.time_embed_dim % 2 != 0)) {
    throw_invalid("disc.time_embed_dim must be even and >= 2");
  }
  if (disc.gail_hidden_dim < 1 || disc.gail_n_hidden < 0) {
    throw_invalid("gail network shape is invalid");
  }
  if (policy.hidden_dim < 1 || policy.n_hidden < 0 || policy.critic_hidden_dim < 1 ||
      policy.critic_n_hidden < 0) {
    throw_invalid("policy network shape is invalid");
  }
  if (bc.epochs < 0 || bc.minibatch < 1 || bc.lr < 0.0) throw_invalid("bc settings are invalid");
}

diffusion::DenoiserConfig TrainConfig::denoiser_config() const {
  diffusion::DenoiserConfig c;
  c.state_dim = env.state_dim();
  c.action_dim = env.action_dim();
  c.label_dim = disc.label_dim;
  c.time_embed_dim = disc.time_embed_dim;
  c.time_mode = disc.time_mode;
  c.hidden_dim = disc.hidden_dim;
  c.n_hidden = disc.n_hidden;
  c.T = disc.T;
  c.s_offset = disc.s_offset;
  return c;
}

namespace {

// Strict reader over one JSON object: every key must be consumed.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw_invalid("config " + where() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw 0;
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw 0;
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw 0;
      } else {
        if (!it->is_string()) throw 0;
      }
      out = it->get<T>();
    } catch (...) {
      throw_invalid("config key '" + qualified(key) + "' has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::string qualified(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw_invalid("unknown config key '" + qualified(it.key()) + "'");
      }
    }
  }

 private:
  std::string where() const { return path_.empty() ? "root" : "'" + path_ + "'"; }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

TrainConfig parse_config(const json& root) {
  TrainConfig c;
  Section top(root, "");
  std::string format = kConfigFormat;
  top.get("format_version", format);
  if (format != kConfigFormat) {
    throw_invalid("config format_version '" + format + "' is not " + kConfigFormat);
  }
  std::string method = method_name(c.method);
  top.get("method", method);
  c.method = parse_method(method);
  std::string env_name = env::env_name(c.env.kind);
  top.get("env", env_name);
  c.env.kind = env::parse_env(env_name);
  top.get("expert_path", c.expert_path);
  top.get("total_env_steps", c.total_env_steps);
  top.get("seed", c.seed);
  top.get("noise_scale", c.env.noise_scale);
  top.get("expert_limit", c.expert_limit);
  top.get("eval_interval", c.eval_interval);
  top.get("eval_episodes", c.eval_episodes);
  top.get("eval_stochastic", c.eval_stochastic);

  if (const json* j = top.child("sine")) {
    Section s(*j, "sine");
    s.get("noise_std", c.env.sine.noise_std);
    if (const json* sup = s.child("support")) {
      if (!sup->is_array()) throw_invalid("config key 'sine.support' must be an array");
      c.env.sine.support.clear();
      for (const json& iv : *sup) {
        if (!iv.is_array() || iv.size() != 2 || !iv[0].is_number() || !iv[1].is_number()) {
          throw_invalid("config key 'sine.support' entries must be [lo, hi] pairs");
        }
        c.env.sine.support.push_back({iv[0].get<double>(), iv[1].get<double>()});
      }
    }
    s.finish();
  }
  if (const json* j = top.child("ppo")) {
    Section s(*j, "ppo");
    s.get("clip", c.ppo.clip);
    s.get("gamma", c.ppo.gamma);
    s.get("gae_lambda", c.ppo.gae_lambda);
    s.get("value_coef", c.ppo.value_coef);
    s.get("entropy_coef", c.ppo.entropy_coef);
    s.get("epochs", c.ppo.epochs);
    s.get("minibatch", c.ppo.minibatch);
    s.get("rollout_length", c.ppo.rollout_length);
    s.get("lr", c.ppo.lr);
    s.get("max_grad_norm", c.ppo.max_grad_norm);
    s.get("normalize_advantages", c.ppo.normalize_advantages);
    s.finish();
  }
  if (const json* j = top.child("disc")) {
    Section s(*j, "disc");
    s.get("lr", c.disc.lr);
    s.get("minibatch", c.disc.minibatch);
    s.get("epochs", c.disc.epochs);
    s.get("hidden_dim", c.disc.hidden_dim);
    s.get("n_hidden", c.disc.n_hidden);
    s.get("T", c.disc.T);
    s.get("s_offset", c.disc.s_offset);
    s.get("sample_count", c.disc.sample_count);
    s.get("label_dim", c.disc.label_dim);
    s.get("time_embed_dim", c.disc.time_embed_dim);
    std::string mode =
        c.disc.time_mode == diffusion::TimeMode::kScalar ? "scalar" : "sinusoidal";
    s.get("time_mode", mode);
    if (mode == "scalar") {
      c.disc.time_mode = diffusion::TimeMode::kScalar;
    } else if (mode == "sinusoidal") {
      c.disc.time_mode = diffusion::TimeMode::kSinusoidal;
    } else {
      throw_invalid("config key 'disc.time_mode' must be 'sinusoidal' or 'scalar'");
    }
    s.get("gail_hidden_dim", c.disc.gail_hidden_dim);
    s.get("gail_n_hidden", c.disc.gail_n_hidden);
    s.finish();
  }
  if (const json* j = top.child("policy")) {
    Section s(*j, "policy");
    s.get("hidden_dim", c.policy.hidden_dim);
    s.get("n_hidden", c.policy.n_hidden);
    s.get("init_log_std", c.policy.init_log_std);
    s.get("critic_hidden_dim", c.policy.critic_hidden_dim);
    s.get("critic_n_hidden", c.policy.critic_n_hidden);
    s.finish();
  }
  if (const json* j = top.child("bc")) {
    Section s(*j, "bc");
    s.get("epochs", c.bc.epochs);
    s.get("lr", c.bc.lr);
    s.get("minibatch", c.bc.minibatch);
    s.finish();
  }
  top.finish();
  c.validate();
  return c;
}

json config_json(const TrainConfig& c) {
  json support = json::array();
  for (const env::Interval& iv : c.env.sine.support) support.push_back({iv.lo, iv.hi});
  return json{
      {"format_version", kConfigFormat},
      {"method", method_name(c.method)},
      {"env", env::env_name(c.env.kind)},
      {"expert_path", c.expert_path},
      {"total_env_steps", c.total_env_steps},
      {"seed", c.seed},
      {"noise_scale", c.env.noise_scale},
      {"expert_limit", c.expert_limit},
      {"eval_interval", c.eval_interval},
      {"eval_episodes", c.eval_episodes},
      {"eval_stochastic", c.eval_stochastic},
      {"sine", {{"noise_std", c.env.sine.noise_std}, {"support", support}}},
      {"ppo",
       {{"clip", c.ppo.clip},
        {"gamma", c.ppo.gamma},
        {"gae_lambda", c.ppo.gae_lambda},
        {"value_coef", c.ppo.value_coef},
        {"entropy_coef", c.ppo.entropy_coef},
        {"epochs", c.ppo.epochs},
        {"minibatch", c.ppo.minibatch},
        {"rollout_length", c.ppo.rollout_length},
        {"lr", c.ppo.lr},
        {"max_grad_norm", c.ppo.max_grad_norm},
        {"normalize_advantages", c.ppo.normalize_advantages}}},
      {"disc",
       {{"lr", c.disc.lr},
        {"minibatch", c.disc.minibatch},
        {"epochs", c.disc.epochs},
        {"hidden_dim", c.disc.hidden_dim},
        {"n_hidden", c.disc.n_hidden},
        {"T", c.disc.T},
        {"s_offset", c.disc.s_offset},
        {"sample_count", c.disc.sample_count},
        {"label_dim", c.disc.label_dim},
        {"time_embed_dim", c.disc.time_embed_dim},
        {"time_mode", c.disc.time_mode == diffusion::TimeMode::kScalar ? "scalar"
                                                                       : "sinusoidal"},
        {"gail_hidden_dim", c.disc.gail_hidden_dim},
        {"gail_n_hidden", c.disc.gail_n_hidden}}},
      {"policy",
       {{"hidden_dim", c.policy.hidden_dim},
        {"n_hidden", c.policy.n_hidden},
        {"init_log_std", c.policy.init_log_std},
        {"critic_hidden_dim", c.policy.critic_hidden_dim},
        {"critic_n_hidden", c.policy.critic_n_hidden}}},
      {"bc", {{"epochs", c.bc.epochs}, {"lr", c.bc.lr}, {"minibatch", c.bc.minibatch}}},
  };
}

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw_invalid(std::string("config is not valid JSON: ") + e.what());
  }
}

}  // namespace

TrainConfig config_from_json(const std::string& text) {
  const json root = parse_text(text);
  if (root.is_object() && root.value("format_version", "") == kManifestFormat) {
    if (!root.contains("config")) throw_invalid("manifest has no 'config' entry");
    return parse_config(root["config"]);
  }
  return parse_config(root);
}

std::string config_to_json(const TrainConfig& config) {
  return config_json(config).dump(2);
}

std::string apply_override(const std::string& config_json_text,
                           const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw_invalid("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json root = parse_text(config_json_text);
  if (root.is_object() && root.value("format_version", "") == kManifestFormat) {
    root = root["config"];
  }
  json* node = &root;
  size_t start = 0;
  for (;;) {
    const size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw_invalid("override key '" + key + "' is malformed");
    if (!node->is_object()) throw_invalid("override key '" + key + "' does not name an object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
  return root.dump(2);
}

std::string manifest_to_json(const RunManifest& manifest) {
  json artifacts = json::object();
  for (const auto& [name, path] : manifest.artifacts) artifacts[name] = path;
  const json j{{"format_version", kManifestFormat},
               {"seed", manifest.config.seed},
               {"config", config_json(manifest.config)},
               {"artifacts", artifacts}};
  return j.dump(2);
}

}  // namespace drail
