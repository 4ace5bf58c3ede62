#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "znav/flowfield.hpp"
#include "znav/navigator.hpp"
#include "znav/rl.hpp"

namespace znav::cli {

/// Config value out of range or malformed. `field()` is the dotted key path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

enum class FlowKind { Snapshot, Unsteady, Import, Quiescent, Uniform, TaylorGreen };

struct FlowSection {
  FlowKind kind = FlowKind::Snapshot;
  flow::SpectrumSpec spectrum{1, 10, -5.0 / 3.0, 0.1, 7};
  double decorrelation_time = 1.0;
  double horizon = 256.0;
  std::filesystem::path path;
  flow::Vec2 drift = flow::Vec2::Zero();
  double amplitude = 1.0;
  double period = flow::kTwoPi;
};

struct GeometrySection {
  flow::Vec2 start{3.0 * flow::kTwoPi / 2.0 - 2.5, 3.0 * flow::kTwoPi / 2.0};
  flow::Vec2 target{3.0 * flow::kTwoPi / 2.0 + 2.5, 3.0 * flow::kTwoPi / 2.0};
  double start_radius = 0.3;
  double target_radius = 0.3;
  /// Propulsion speed relative to u_max (used unless slip_speed is given).
  double slip_ratio = 0.8;
  /// Dimensional propulsion speed; required for flows with u_max = 0.
  std::optional<double> slip_speed;
  double max_time_factor = 20.0;
};

struct RlSection {
  rl::TileCoder coder;
  bool include_off = true;
  double lambda = 0.0;
  double decision_interval = 0.2;
  int substeps = 10;
  double actor_lr = 0.1;
  double critic_lr = 0.1;
  bool lr_decay = false;
  int episodes = 10000;
  std::uint64_t seed = 1;
};

struct EvalSection {
  int n_traj = 2000;
  rl::EvalMode mode = rl::EvalMode::Stochastic;
  std::uint64_t seed = 1000;
  bool fixed_start = false;
  bool dump_trajectories = false;
};

struct OnSection {
  int n_angles = 100;
  int n_starts = 200;
  std::uint64_t seed = 3;
  double dt = 0.02;
  bool fixed_start = false;
  /// Integration steps between stored samples of ON paths (used for occupancy).
  int record_stride = 50;
};

struct StatsSection {
  int bins = 50;
  double range = 5.0;
  double pixel = flow::kTwoPi / 20.0;
  /// Okubo-Weiss map samples per flow period.
  int ow_points_per_period = 64;
};

struct ExperimentConfig {
  FlowSection flow;
  GeometrySection geometry;
  RlSection rl;
  EvalSection evaluation;
  OnSection on;
  StatsSection stats;
  std::filesystem::path output_dir = "out";
  /// SHA-256 of the config file bytes (hex); empty for configs built in code.
  std::string hash;
};

/// Parses and validates a YAML experiment file. Relative paths resolve against
/// the file's directory. Throws ConfigError naming the offending field.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& yaml_text,
                              const std::filesystem::path& base_dir = ".");

/// Range checks shared by the loader and code-built configs.
void validate(const ExperimentConfig& config);

std::string sha256_hex(const std::string& bytes);

}  // namespace znav::cli
