#ifndef DRAIL_ENVS_HPP_
#define DRAIL_ENVS_HPP_

// Toy environments and expert data.
//
// Sine:        1-D state s in [0, 1], 1-D action; experts follow
//              a = sin(20 pi s) + N(0, noise_std^2) on a broken support.
// PointReach:  2-D point mass in [-1, 1]^2 with state
//              (px, py, vx, vy, gx, gy) and acceleration actions.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "drail/rng.hpp"

namespace drail::env {

struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  bool done = false;
};

struct ExpertDataset {
  int state_dim = 0;
  int action_dim = 0;
  std::vector<Transition> transitions;

  size_t size() const { return transitions.size(); }
  size_t num_trajectories() const;
};

// Non-empty, consistent dims, finite values, last transition done.
void validate_dataset(const ExpertDataset& dataset);

// First k transitions, rounded down to the last trajectory boundary.
ExpertDataset truncate_transitions(const ExpertDataset& dataset, size_t k);
// First k trajectories.
ExpertDataset truncate_trajectories(const ExpertDataset& dataset, size_t k);

// ------------------------------------------------------------------ sine ---

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct SineWorldSpec {
  double frequency = 20.0 * 3.14159265358979323846;
  double noise_std = 0.05;
  std::vector<Interval> support{{0.0, 0.2}, {0.3, 0.5}, {0.6, 0.8}};

  void validate() const;
  double expert_mean(double s) const;
  double sample_state(Rng& rng) const;
};

ExpertDataset sine_expert_sample(const SineWorldSpec& spec, size_t n, Rng& rng);

struct GridPoint {
  double s = 0.0;
  double a = 0.0;
};

struct GridAxes {
  std::vector<double> s_axis;
  std::vector<double> a_axis;
};

GridAxes sine_grid_axes(int s_resolution, int a_resolution, double s_lo = 0.0,
                        double s_hi = 1.0, double a_lo = -1.5, double a_hi = 1.5);

// Row-major lattice (s outer, a inner) with inclusive endpoints.
std::vector<GridPoint> sine_grid(int s_resolution, int a_resolution,
                                 double s_lo = 0.0, double s_hi = 1.0,
                                 double a_lo = -1.5, double a_hi = 1.5);

// A sine episode is a single step: success iff |a - mean(s)| < tolerance.
inline constexpr double kSineSuccessTolerance = 0.1;

// ----------------------------------------------------------- point reach ---

inline constexpr int kPointStateDim = 6;
inline constexpr int kPointActionDim = 2;
inline constexpr double kPointAccelGain = 0.05;
inline constexpr double kPointMaxSpeed = 0.2;
inline constexpr double kPointGoalRadius = 0.1;
inline constexpr int kPointHorizon = 200;

struct PointReachState {
  double position[2] = {0.0, 0.0};
  double velocity[2] = {0.0, 0.0};
  double goal[2] = {0.0, 0.0};
  int steps = 0;

  std::vector<double> observation() const;
};

struct PointStep {
  PointReachState state;
  double reward = 0.0;  // placeholder, rewards come from the discriminator
  bool done = false;
  bool success = false;
};

// Start uniform in -0.7 +- 0.2 * noise_scale, goal in 0.7 +- 0.2 * noise_scale,
// per axis, clamped to the arena; velocity zero.
PointReachState point_reset(double noise_scale, Rng& rng);

PointStep point_step(const PointReachState& state, std::span<const double> action);

// PD controller clamp(4 (goal - p) - 6 v) into [-1, 1]^2.
std::vector<double> scripted_expert(const PointReachState& state);
std::vector<double> scripted_expert(std::span<const double> observation);

// ----------------------------------------------------------- env facade ---

enum class EnvKind : uint8_t { kSine = 0, kPointReach = 1 };

const char* env_name(EnvKind kind);
EnvKind parse_env(const std::string& name);  // throws listing valid names

struct EnvConfig {
  EnvKind kind = EnvKind::kPointReach;
  double noise_scale = 1.0;
  SineWorldSpec sine;

  int state_dim() const;
  int action_dim() const;
};

struct EnvStep {
  std::vector<double> observation;  // next observation
  std::vector<double> env_action;   // action after clamping
  double task_reward = 0.0;
  bool done = false;
  bool success = false;
};

// Uniform stepping interface over both worlds.
class Environment {
 public:
  explicit Environment(EnvConfig config) : config_(std::move(config)) {}

  const EnvConfig& config() const { return config_; }
  std::vector<double> reset(Rng& rng);
  EnvStep step(std::span<const double> action);
  const std::vector<double>& observation() const { return observation_; }
  // True before the first reset and after an episode ends.
  bool needs_reset() const { return needs_reset_; }

 private:
  EnvConfig config_;
  PointReachState point_;
  std::vector<double> observation_;
  bool needs_reset_ = true;
};

// Rolls the scripted expert and keeps only successful episodes (point reach),
// or samples n single-step pairs (sine).
ExpertDataset gen_expert_dataset(const EnvConfig& config, size_t n, Rng& rng);

// ------------------------------------------------------------- file I/O ---

inline constexpr char kDatasetMagic[4] = {'D', 'R', 'L', 'D'};
inline constexpr uint32_t kDatasetVersion = 1;
inline constexpr size_t kDatasetHeaderBytes = 24;

void dataset_save(const ExpertDataset& dataset, const std::filesystem::path& path);
ExpertDataset dataset_load(const std::filesystem::path& path);
std::string encode_dataset(const ExpertDataset& dataset);
ExpertDataset decode_dataset(const std::string& bytes);

}  // namespace drail::env

#endif  // DRAIL_ENVS_HPP_
