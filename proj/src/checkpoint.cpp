#include "drail/checkpoint.hpp"

#include <cstring>

#include "json.hpp"

#include "bytes.hpp"
#include "drail/envs.hpp"
#include "drail/error.hpp"

namespace drail::ckpt {

namespace {

using detail::ByteReader;
using detail::ByteWriter;

[[noreturn]] void format_error(const std::string& what) {
  throw Error(ErrorCode::kFormat, "checkpoint: " + what);
}

void write_header(ByteWriter& w, Kind kind) {
  w.raw(kMagic, 4);
  w.u32(kVersion);
  w.u8(static_cast<uint8_t>(kind));
}

Kind read_header(ByteReader& r) {
  r.magic(kMagic);
  const uint32_t version = r.u32();
  if (version != kVersion) format_error("unsupported version " + std::to_string(version));
  const uint8_t kind = r.u8();
  switch (kind) {
    case 0:
    case 1:
    case 2:
    case 16:
    case 255:
      return static_cast<Kind>(kind);
    default:
      format_error("unknown kind tag " + std::to_string(kind));
  }
}

void write_net(ByteWriter& w, const nn::Mlp& net) {
  w.u32(static_cast<uint32_t>(net.specs.size()));
  for (size_t k = 0; k < net.specs.size(); ++k) {
    w.str(net.params.layout[k].name);
    w.u32(static_cast<uint32_t>(net.specs[k].in_dim));
    w.u32(static_cast<uint32_t>(net.specs[k].out_dim));
    w.u8(static_cast<uint8_t>(net.specs[k].activation));
  }
  for (double v : net.params.values) w.f64(v);
}

nn::Mlp read_net(ByteReader& r) {
  const uint32_t layers = r.u32();
  if (layers == 0 || layers > 1024) format_error("implausible layer count");
  nn::Mlp net;
  std::vector<std::string> names;
  for (uint32_t k = 0; k < layers; ++k) {
    names.push_back(r.str());
    nn::LayerSpec spec;
    spec.in_dim = static_cast<int>(r.u32());
    spec.out_dim = static_cast<int>(r.u32());
    const uint8_t act = r.u8();
    if (act > 2) format_error("unknown activation tag " + std::to_string(act));
    spec.activation = static_cast<nn::Activation>(act);
    net.specs.push_back(spec);
  }
  try {
    net.params = nn::zero_params(net.specs);
  } catch (const Error& e) {
    format_error(e.what());
  }
  for (size_t k = 0; k < names.size(); ++k) net.params.layout[k].name = names[k];
  r.need(net.params.size() * 8);
  for (double& v : net.params.values) v = r.f64();
  return net;
}

void expect_end(const ByteReader& r) {
  if (!r.at_end()) {
    format_error(std::to_string(r.size() - r.pos()) + " trailing bytes");
  }
}

void write_denoiser_trailer(ByteWriter& w, const diffusion::Denoiser& d,
                            int sample_count, double lr) {
  w.u32(static_cast<uint32_t>(d.state_dim));
  w.u32(static_cast<uint32_t>(d.action_dim));
  w.u32(static_cast<uint32_t>(d.label_dim));
  w.u32(static_cast<uint32_t>(d.time_embed_dim));
  w.u8(static_cast<uint8_t>(d.time_mode));
  w.u32(static_cast<uint32_t>(d.schedule.T));
  w.f64(d.schedule.s_offset);
  w.u32(static_cast<uint32_t>(sample_count));
  w.f64(lr);
}

struct DenoiserTrailer {
  diffusion::Denoiser denoiser;
  int sample_count = 1;
  double lr = 0.0;
};

DenoiserTrailer read_denoiser(ByteReader& r, nn::Mlp net) {
  DenoiserTrailer out;
  diffusion::Denoiser& d = out.denoiser;
  d.state_dim = static_cast<int>(r.u32());
  d.action_dim = static_cast<int>(r.u32());
  d.label_dim = static_cast<int>(r.u32());
  d.time_embed_dim = static_cast<int>(r.u32());
  const uint8_t mode = r.u8();
  if (mode > 1) format_error("unknown time mode");
  d.time_mode = static_cast<diffusion::TimeMode>(mode);
  const int T = static_cast<int>(r.u32());
  const double s = r.f64();
  out.sample_count = static_cast<int>(r.u32());
  out.lr = r.f64();
  try {
    d.schedule = diffusion::build_cosine_schedule(T, s);
    d.net = std::move(net);
    diffusion::validate_denoiser(d);
  } catch (const Error& e) {
    format_error(e.what());
  }
  if (out.sample_count < 1) format_error("sample count must be >= 1");
  return out;
}

}  // namespace

const char* kind_name(Kind kind) {
  switch (kind) {
    case Kind::kGail:
      return "gail";
    case Kind::kDiffail:
      return "diffail";
    case Kind::kDrail:
      return "drail";
    case Kind::kPolicy:
      return "policy";
    case Kind::kNetwork:
      return "network";
  }
  return "unknown";
}

std::string encode_network(const nn::Mlp& net) {
  ByteWriter w;
  write_header(w, Kind::kNetwork);
  write_net(w, net);
  return w.bytes();
}

nn::Mlp decode_network(const std::string& bytes) {
  ByteReader r(bytes, "checkpoint");
  if (read_header(r) != Kind::kNetwork) format_error("not a bare network");
  nn::Mlp net = read_net(r);
  expect_end(r);
  return net;
}

std::string encode_policy(const rl::GaussianPolicy& policy) {
  ByteWriter w;
  write_header(w, Kind::kPolicy);
  write_net(w, policy.mean_net);
  w.u32(static_cast<uint32_t>(policy.state_dim));
  w.u32(static_cast<uint32_t>(policy.action_dim));
  for (double v : policy.log_std) w.f64(v);
  return w.bytes();
}

rl::GaussianPolicy decode_policy(const std::string& bytes) {
  ByteReader r(bytes, "checkpoint");
  const Kind kind = read_header(r);
  if (kind != Kind::kPolicy) {
    format_error(std::string("expected a policy, found ") + kind_name(kind));
  }
  rl::GaussianPolicy policy;
  policy.mean_net = read_net(r);
  policy.state_dim = static_cast<int>(r.u32());
  policy.action_dim = static_cast<int>(r.u32());
  if (policy.state_dim != policy.mean_net.in_dim() ||
      policy.action_dim != policy.mean_net.out_dim()) {
    format_error("policy dims do not match its network");
  }
  policy.log_std.resize(policy.action_dim);
  for (double& v : policy.log_std) v = r.f64();
  expect_end(r);
  return policy;
}

std::string encode_discriminator(const disc::Discriminator& d) {
  ByteWriter w;
  std::visit(
      [&](const auto& impl) {
        using T = std::decay_t<decltype(impl)>;
        if constexpr (std::is_same_v<T, disc::GailDiscriminator>) {
          write_header(w, Kind::kGail);
          write_net(w, impl.net);
          w.u32(static_cast<uint32_t>(impl.state_dim));
          w.u32(static_cast<uint32_t>(impl.action_dim));
          w.f64(impl.optimizer.lr);
        } else {
          constexpr bool is_drail = std::is_same_v<T, disc::DrailClassifier>;
          write_header(w, is_drail ? Kind::kDrail : Kind::kDiffail);
          write_net(w, impl.denoiser.net);
          write_denoiser_trailer(w, impl.denoiser, impl.sample_count,
                                 impl.optimizer.lr);
        }
      },
      d.impl());
  return w.bytes();
}

disc::Discriminator decode_discriminator(const std::string& bytes) {
  ByteReader r(bytes, "checkpoint");
  const Kind kind = read_header(r);
  if (kind == Kind::kGail) {
    disc::GailDiscriminator g;
    g.net = read_net(r);
    g.state_dim = static_cast<int>(r.u32());
    g.action_dim = static_cast<int>(r.u32());
    const double lr = r.f64();
    expect_end(r);
    if (g.net.in_dim() != g.state_dim + g.action_dim || g.net.out_dim() != 1) {
      format_error("gail dims do not match its network");
    }
    g.optimizer = nn::AdamState::for_size(g.net.params.size(), lr);
    return disc::Discriminator(std::move(g));
  }
  if (kind == Kind::kDrail || kind == Kind::kDiffail) {
    nn::Mlp net = read_net(r);
    DenoiserTrailer t = read_denoiser(r, std::move(net));
    expect_end(r);
    if (kind == Kind::kDrail) {
      disc::DrailClassifier c;
      c.optimizer = nn::AdamState::for_size(t.denoiser.net.params.size(), t.lr);
      c.denoiser = std::move(t.denoiser);
      c.sample_count = t.sample_count;
      return disc::Discriminator(std::move(c));
    }
    disc::DiffailDiscriminator f;
    f.optimizer = nn::AdamState::for_size(t.denoiser.net.params.size(), t.lr);
    f.denoiser = std::move(t.denoiser);
    f.sample_count = t.sample_count;
    return disc::Discriminator(std::move(f));
  }
  format_error(std::string("expected a discriminator, found ") + kind_name(kind));
}

Kind peek_kind(const std::string& bytes) {
  ByteReader r(bytes, "checkpoint");
  return read_header(r);
}

void save_policy(const rl::GaussianPolicy& policy, const std::filesystem::path& path) {
  detail::write_file(path, encode_policy(policy));
}
rl::GaussianPolicy load_policy(const std::filesystem::path& path) {
  return decode_policy(detail::read_file(path));
}
void save_discriminator(const disc::Discriminator& d,
                        const std::filesystem::path& path) {
  detail::write_file(path, encode_discriminator(d));
}
disc::Discriminator load_discriminator(const std::filesystem::path& path) {
  return decode_discriminator(detail::read_file(path));
}

std::string describe_file(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  nlohmann::json j;
  j["path"] = path.string();
  j["bytes"] = bytes.size();
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), env::kDatasetMagic, 4) == 0) {
    const env::ExpertDataset ds = env::decode_dataset(bytes);
    j["type"] = "dataset";
    j["state_dim"] = ds.state_dim;
    j["action_dim"] = ds.action_dim;
    j["transitions"] = ds.size();
    j["trajectories"] = ds.num_trajectories();
    return j.dump(2);
  }
  const Kind kind = peek_kind(bytes);
  j["type"] = "checkpoint";
  j["kind"] = kind_name(kind);
  auto layers = [](const nn::Mlp& net) {
    nlohmann::json arr = nlohmann::json::array();
    for (size_t k = 0; k < net.specs.size(); ++k) {
      arr.push_back({{"name", net.params.layout[k].name},
                     {"in", net.specs[k].in_dim},
                     {"out", net.specs[k].out_dim},
                     {"activation", static_cast<int>(net.specs[k].activation)}});
    }
    return arr;
  };
  if (kind == Kind::kPolicy) {
    const rl::GaussianPolicy p = decode_policy(bytes);
    j["state_dim"] = p.state_dim;
    j["action_dim"] = p.action_dim;
    j["log_std"] = p.log_std;
    j["layers"] = layers(p.mean_net);
  } else if (kind == Kind::kNetwork) {
    j["layers"] = layers(decode_network(bytes));
  } else {
    const disc::Discriminator d = decode_discriminator(bytes);
    j["state_dim"] = d.state_dim();
    j["action_dim"] = d.action_dim();
    std::visit(
        [&](const auto& impl) {
          using T = std::decay_t<decltype(impl)>;
          if constexpr (std::is_same_v<T, disc::GailDiscriminator>) {
            j["layers"] = layers(impl.net);
          } else {
            j["layers"] = layers(impl.denoiser.net);
            j["T"] = impl.denoiser.schedule.T;
            j["s_offset"] = impl.denoiser.schedule.s_offset;
            j["label_dim"] = impl.denoiser.label_dim;
            j["sample_count"] = impl.sample_count;
          }
        },
        d.impl());
  }
  return j.dump(2);
}

}  // namespace drail::ckpt
