#include "drail/envs.hpp"

#include <algorithm>
#include <cmath>

#include "bytes.hpp"
#include "drail/error.hpp"

namespace drail::env {

size_t ExpertDataset::num_trajectories() const {
  return static_cast<size_t>(std::count_if(
      transitions.begin(), transitions.end(),
      [](const Transition& t) { return t.done; }));
}

void validate_dataset(const ExpertDataset& dataset) {
  if (dataset.transitions.empty()) throw_invalid("expert dataset is empty");
  if (dataset.state_dim < 1 || dataset.action_dim < 1) {
    throw_invalid("expert dataset dims must be positive");
  }
  for (size_t i = 0; i < dataset.transitions.size(); ++i) {
    const Transition& t = dataset.transitions[i];
    if (static_cast<int>(t.state.size()) != dataset.state_dim ||
        static_cast<int>(t.action.size()) != dataset.action_dim) {
      throw_invalid("transition " + std::to_string(i) + " has inconsistent dims");
    }
    for (double v : t.state) {
      if (!std::isfinite(v)) throw_invalid("non-finite state in transition " + std::to_string(i));
    }
    for (double v : t.action) {
      if (!std::isfinite(v)) throw_invalid("non-finite action in transition " + std::to_string(i));
    }
  }
  if (!dataset.transitions.back().done) {
    throw_invalid("last transition of the dataset is not a trajectory end");
  }
}

ExpertDataset truncate_transitions(const ExpertDataset& dataset, size_t k) {
  ExpertDataset out{dataset.state_dim, dataset.action_dim, {}};
  size_t end = 0;
  for (size_t i = 0; i < std::min(k, dataset.size()); ++i) {
    if (dataset.transitions[i].done) end = i + 1;
  }
  out.transitions.assign(dataset.transitions.begin(),
                         dataset.transitions.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

ExpertDataset truncate_trajectories(const ExpertDataset& dataset, size_t k) {
  ExpertDataset out{dataset.state_dim, dataset.action_dim, {}};
  size_t seen = 0;
  for (const Transition& t : dataset.transitions) {
    if (seen >= k) break;
    out.transitions.push_back(t);
    if (t.done) ++seen;
  }
  return out;
}

// ------------------------------------------------------------------ sine ---

void SineWorldSpec::validate() const {
  if (support.empty()) throw_invalid("sine support is empty");
  double total = 0.0;
  std::vector<Interval> sorted = support;
  std::sort(sorted.begin(), sorted.end(),
            [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  for (size_t i = 0; i < sorted.size(); ++i) {
    if (!(sorted[i].lo >= 0.0 && sorted[i].hi <= 1.0 && sorted[i].lo < sorted[i].hi)) {
      throw_invalid("sine support intervals must be non-empty sub-intervals of [0, 1]");
    }
    if (i > 0 && sorted[i].lo < sorted[i - 1].hi) {
      throw_invalid("sine support intervals overlap");
    }
    total += sorted[i].hi - sorted[i].lo;
  }
  if (!(total > 0.0 && total <= 1.0)) throw_invalid("sine support measure out of range");
  if (!(noise_std >= 0.0)) throw_invalid("sine noise_std must be >= 0");
}

double SineWorldSpec::expert_mean(double s) const { return std::sin(frequency * s); }

double SineWorldSpec::sample_state(Rng& rng) const {
  double total = 0.0;
  for (const Interval& iv : support) total += iv.hi - iv.lo;
  // Inverse-CDF over the concatenated intervals.
  double u = rng.uniform() * total;
  for (const Interval& iv : support) {
    const double len = iv.hi - iv.lo;
    if (u < len) return iv.lo + u;
    u -= len;
  }
  return support.back().hi;
}

ExpertDataset sine_expert_sample(const SineWorldSpec& spec, size_t n, Rng& rng) {
  spec.validate();
  if (n < 1) throw_invalid("need at least one sine expert pair");
  ExpertDataset out{1, 1, {}};
  out.transitions.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const double s = spec.sample_state(rng);
    const double a = spec.expert_mean(s) + spec.noise_std * rng.normal();
    out.transitions.push_back({{s}, {a}, true});
  }
  return out;
}

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    out[i] = i == n - 1 ? hi : lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  }
  return out;
}

}  // namespace

GridAxes sine_grid_axes(int s_resolution, int a_resolution, double s_lo,
                        double s_hi, double a_lo, double a_hi) {
  if (s_resolution < 2 || a_resolution < 2) {
    throw_invalid("grid resolution must be >= 2 per axis");
  }
  return {linspace(s_lo, s_hi, s_resolution), linspace(a_lo, a_hi, a_resolution)};
}

std::vector<GridPoint> sine_grid(int s_resolution, int a_resolution, double s_lo,
                                 double s_hi, double a_lo, double a_hi) {
  const GridAxes axes =
      sine_grid_axes(s_resolution, a_resolution, s_lo, s_hi, a_lo, a_hi);
  std::vector<GridPoint> out;
  out.reserve(axes.s_axis.size() * axes.a_axis.size());
  for (double s : axes.s_axis) {
    for (double a : axes.a_axis) out.push_back({s, a});
  }
  return out;
}

// ----------------------------------------------------------- point reach ---

std::vector<double> PointReachState::observation() const {
  return {position[0], position[1], velocity[0], velocity[1], goal[0], goal[1]};
}

PointReachState point_reset(double noise_scale, Rng& rng) {
  if (!(noise_scale >= 0.0)) throw_invalid("noise_scale must be >= 0");
  PointReachState st;
  for (int i = 0; i < 2; ++i) {
    st.position[i] = std::clamp(-0.7 + noise_scale * rng.uniform(-0.2, 0.2), -1.0, 1.0);
  }
  for (int i = 0; i < 2; ++i) {
    st.goal[i] = std::clamp(0.7 + noise_scale * rng.uniform(-0.2, 0.2), -1.0, 1.0);
  }
  return st;
}

PointStep point_step(const PointReachState& state, std::span<const double> action) {
  if (action.size() != 2) throw_invalid("point reach actions are 2-D");
  if (!std::isfinite(action[0]) || !std::isfinite(action[1])) {
    throw_numeric("point reach received a non-finite action");
  }
  PointStep out;
  out.state = state;
  double dist2 = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double a = std::clamp(action[i], -1.0, 1.0);
    out.state.velocity[i] = std::clamp(state.velocity[i] + kPointAccelGain * a,
                                       -kPointMaxSpeed, kPointMaxSpeed);
    out.state.position[i] =
        std::clamp(state.position[i] + out.state.velocity[i], -1.0, 1.0);
    const double d = out.state.position[i] - state.goal[i];
    dist2 += d * d;
  }
  out.state.steps = state.steps + 1;
  out.success = std::sqrt(dist2) < kPointGoalRadius;
  out.done = out.success || out.state.steps >= kPointHorizon;
  return out;
}

std::vector<double> scripted_expert(const PointReachState& state) {
  return scripted_expert(state.observation());
}

std::vector<double> scripted_expert(std::span<const double> obs) {
  if (obs.size() != kPointStateDim) throw_invalid("point reach observations are 6-D");
  constexpr double kp = 4.0;
  constexpr double kd = 6.0;
  std::vector<double> a(2);
  for (int i = 0; i < 2; ++i) {
    a[i] = std::clamp(kp * (obs[4 + i] - obs[i]) - kd * obs[2 + i], -1.0, 1.0);
  }
  return a;
}

// ----------------------------------------------------------- env facade ---

const char* env_name(EnvKind kind) {
  return kind == EnvKind::kSine ? "sine" : "point_reach";
}

EnvKind parse_env(const std::string& name) {
  if (name == "sine") return EnvKind::kSine;
  if (name == "point_reach") return EnvKind::kPointReach;
  throw_invalid("unknown env '" + name + "' (valid envs: sine, point_reach)");
}

int EnvConfig::state_dim() const {
  return kind == EnvKind::kSine ? 1 : kPointStateDim;
}
int EnvConfig::action_dim() const {
  return kind == EnvKind::kSine ? 1 : kPointActionDim;
}

std::vector<double> Environment::reset(Rng& rng) {
  if (config_.kind == EnvKind::kSine) {
    observation_ = {config_.sine.sample_state(rng)};
  } else {
    point_ = point_reset(config_.noise_scale, rng);
    observation_ = point_.observation();
  }
  needs_reset_ = false;
  return observation_;
}

EnvStep Environment::step(std::span<const double> action) {
  if (needs_reset_) throw_invalid("step called on a finished episode; reset first");
  EnvStep out;
  if (config_.kind == EnvKind::kSine) {
    if (action.size() != 1) throw_invalid("sine actions are 1-D");
    if (!std::isfinite(action[0])) throw_numeric("sine received a non-finite action");
    const double a = std::clamp(action[0], -2.0, 2.0);
    const double err = a - config_.sine.expert_mean(observation_[0]);
    out.env_action = {a};
    out.task_reward = -err * err;
    out.success = std::abs(err) < kSineSuccessTolerance;
    out.done = true;
    out.observation = observation_;
    needs_reset_ = true;
    return out;
  }
  const PointStep st = point_step(point_, action);
  point_ = st.state;
  observation_ = point_.observation();
  out.env_action = {std::clamp(action[0], -1.0, 1.0), std::clamp(action[1], -1.0, 1.0)};
  out.task_reward = st.success ? 1.0 : 0.0;
  out.success = st.success;
  out.done = st.done;
  out.observation = observation_;
  needs_reset_ = st.done;
  return out;
}

ExpertDataset gen_expert_dataset(const EnvConfig& config, size_t n, Rng& rng) {
  if (n < 1) throw_invalid("need at least one expert trajectory");
  if (config.kind == EnvKind::kSine) return sine_expert_sample(config.sine, n, rng);

  ExpertDataset out{kPointStateDim, kPointActionDim, {}};
  size_t successes = 0;
  size_t attempts = 0;
  while (successes < n && attempts < 10 * n) {
    ++attempts;
    PointReachState st = point_reset(config.noise_scale, rng);
    std::vector<Transition> episode;
    bool success = false;
    for (;;) {
      const std::vector<double> obs = st.observation();
      const std::vector<double> a = scripted_expert(st);
      const PointStep next = point_step(st, a);
      episode.push_back({obs, a, next.done});
      st = next.state;
      if (next.done) {
        success = next.success;
        break;
      }
    }
    if (success) {
      ++successes;
      out.transitions.insert(out.transitions.end(), episode.begin(), episode.end());
    }
  }
  if (successes < n || 2 * successes < attempts) {
    throw_invalid("scripted expert succeeded in only " + std::to_string(successes) +
                  " of " + std::to_string(attempts) +
                  " episodes; controller misconfigured");
  }
  return out;
}

// ------------------------------------------------------------- file I/O ---

std::string encode_dataset(const ExpertDataset& dataset) {
  validate_dataset(dataset);
  detail::ByteWriter w;
  w.raw(kDatasetMagic, 4);
  w.u32(kDatasetVersion);
  w.u32(static_cast<uint32_t>(dataset.state_dim));
  w.u32(static_cast<uint32_t>(dataset.action_dim));
  w.u64(dataset.transitions.size());
  for (const Transition& t : dataset.transitions) {
    for (double v : t.state) w.f64(v);
    for (double v : t.action) w.f64(v);
    w.u8(t.done ? 1 : 0);
  }
  return w.bytes();
}

ExpertDataset decode_dataset(const std::string& bytes) {
  detail::ByteReader r(bytes, "dataset");
  r.magic(kDatasetMagic);
  const uint32_t version = r.u32();
  if (version != kDatasetVersion) {
    throw Error(ErrorCode::kFormat,
                "dataset: unsupported version " + std::to_string(version));
  }
  ExpertDataset out;
  out.state_dim = static_cast<int>(r.u32());
  out.action_dim = static_cast<int>(r.u32());
  const uint64_t n = r.u64();
  if (out.state_dim < 1 || out.action_dim < 1) {
    throw Error(ErrorCode::kFormat, "dataset: zero state or action dim");
  }
  const uint64_t record = static_cast<uint64_t>(out.state_dim + out.action_dim) * 8 + 1;
  if (n > bytes.size()) {
    throw Error(ErrorCode::kFormat, "dataset truncated: header claims " +
                                        std::to_string(n) + " transitions but file has " +
                                        std::to_string(bytes.size()) + " bytes");
  }
  r.expect_total(kDatasetHeaderBytes + n * record);
  out.transitions.resize(n);
  for (Transition& t : out.transitions) {
    t.state.resize(out.state_dim);
    t.action.resize(out.action_dim);
    for (double& v : t.state) v = r.f64();
    for (double& v : t.action) v = r.f64();
    const uint8_t done = r.u8();
    if (done > 1) throw Error(ErrorCode::kFormat, "dataset: done flag is not 0/1");
    t.done = done == 1;
  }
  try {
    validate_dataset(out);
  } catch (const Error& e) {
    throw Error(ErrorCode::kFormat, std::string("dataset: ") + e.what());
  }
  return out;
}

void dataset_save(const ExpertDataset& dataset, const std::filesystem::path& path) {
  detail::write_file(path, encode_dataset(dataset));
}

ExpertDataset dataset_load(const std::filesystem::path& path) {
  return decode_dataset(detail::read_file(path));
}

}  // namespace drail::env
