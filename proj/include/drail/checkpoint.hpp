#ifndef DRAIL_CHECKPOINT_HPP_
#define DRAIL_CHECKPOINT_HPP_

// Parameter checkpoint format (all integers little-endian):
//
//   "DRLP" | version u32 | kind u8 |
//   layer count u32 | per layer: name (u32 length + UTF-8), in u32, out u32,
//                                activation u8 |
//   f64 values (count implied by the layer table) | kind-specific trailer
//
// Kinds 0/1/2 are discriminators (GAIL, DiffAIL, DRAIL), 16 is a Gaussian
// policy (trailer: dims + log_std), 255 a bare network.

#include <cstdint>
#include <filesystem>
#include <string>

#include "drail/discriminators.hpp"
#include "drail/nn.hpp"
#include "drail/policy.hpp"

namespace drail::ckpt {

inline constexpr char kMagic[4] = {'D', 'R', 'L', 'P'};
inline constexpr uint32_t kVersion = 1;

enum class Kind : uint8_t {
  kGail = 0,
  kDiffail = 1,
  kDrail = 2,
  kPolicy = 16,
  kNetwork = 255,
};

const char* kind_name(Kind kind);

std::string encode_network(const nn::Mlp& net);
nn::Mlp decode_network(const std::string& bytes);

std::string encode_policy(const rl::GaussianPolicy& policy);
rl::GaussianPolicy decode_policy(const std::string& bytes);

std::string encode_discriminator(const disc::Discriminator& d);
disc::Discriminator decode_discriminator(const std::string& bytes);

// Reads the header only.
Kind peek_kind(const std::string& bytes);

void save_policy(const rl::GaussianPolicy& policy, const std::filesystem::path& path);
rl::GaussianPolicy load_policy(const std::filesystem::path& path);
void save_discriminator(const disc::Discriminator& d, const std::filesystem::path& path);
disc::Discriminator load_discriminator(const std::filesystem::path& path);

// JSON summary of a checkpoint or dataset file header.
std::string describe_file(const std::filesystem::path& path);

}  // namespace drail::ckpt

#endif  // DRAIL_CHECKPOINT_HPP_
