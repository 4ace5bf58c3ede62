#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "znav/navigator.hpp"

namespace znav::rl {

using flow::Vec2;
using nav::Trajectory;

/// Square tiles of side tile_size covering [origin, origin + (nx, ny) * tile_size).
/// Each tile is one discrete state, numbered row-major (i + nx * j).
struct TileCoder {
  Vec2 origin = Vec2::Zero();
  double tile_size = flow::kTwoPi / 10.0;
  int nx = 30;
  int ny = 30;

  void validate() const;
  int n_states() const { return nx * ny; }
  bool contains(const Vec2& x) const;
  /// Tile id of x; positions outside the arena map to the nearest boundary tile.
  int state_of(const Vec2& x) const;
};

/// Steering headings plus an optional engine-off action appended last.
struct ActionSet {
  std::vector<double> angles;
  bool include_off = false;

  /// Eight headings (j - 1) * pi / 4, j = 1..8.
  static ActionSet compass(bool include_off);

  void validate() const;
  int size() const { return static_cast<int>(angles.size()) + (include_off ? 1 : 0); }
  /// Id of the engine-off action, or -1.
  int off_action() const { return include_off ? static_cast<int>(angles.size()) : -1; }
  std::vector<nav::Control> controls() const;
};

/// Softmax preferences H (n_states x n_actions, row-major) and critic values V.
struct PolicyParams {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> preferences;
  std::vector<double> values;

  PolicyParams() = default;
  PolicyParams(int states, int actions);

  std::span<double> row(int s);
  std::span<const double> row(int s) const;

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;
};

/// p_a = exp(H_a) / sum_b exp(H_b), evaluated after subtracting max(H).
void policy_probs(std::span<const double> preferences, std::span<double> out);
std::vector<double> policy_probs(std::span<const double> preferences);

/// argmax with ties broken by the lowest id.
int greedy_action(std::span<const double> preferences);

struct RewardConfig {
  /// Energy weight lambda; 0 gives the pure minimum-time reward.
  double energy_weight = 0.0;
  /// Speed in the free-flight shaping terms; fixed even when the engine is off.
  double nominal_speed = 1.0;
  double decision_interval = 0.2;
  Vec2 target = Vec2::Zero();

  void validate() const;
};

/// -(dt + lambda dt_pow) + |x_B - prev| / V - |x_B - next| / V, with dt_pow = dt when
/// the engine was on during the step.
double reward_step(const Vec2& prev, const Vec2& next, double dt, bool engine_was_on,
                   const RewardConfig& cfg);

/// One-step actor-critic update (discount 1). Only row s of H and entry s of V change.
/// Returns the TD error.
double actor_critic_update(PolicyParams& params, int s, int a, double reward, int s_next,
                           bool terminal, double actor_lr, double critic_lr);

struct TrainConfig {
  double actor_lr = 0.1;
  double critic_lr = 0.1;
  /// Scale both rates by 1 / sqrt(episode + 1).
  bool lr_decay = false;
  int n_episodes = 10000;
  std::uint64_t seed = 0;
  /// RK4 steps per decision interval.
  int substeps = 10;

  void validate() const;
};

struct EpisodeRecord {
  int episode = 0;
  double total_reward = 0.0;
  double arrival_time = 0.0;
  double power_on_time = 0.0;
  nav::Outcome outcome = nav::Outcome::Failed;
  /// Decision epochs taken from outside the tiled arena.
  int clamped_decisions = 0;
};

struct TrainLog {
  std::vector<EpisodeRecord> episodes;
};

struct TrainResult {
  PolicyParams params;
  TrainLog log;
};

/// Trains a policy from H = 0, V = 0. Episodes start uniformly in the start disc;
/// on time-dependent flows each episode also starts at a random flow time.
TrainResult train(const flow::FlowField& flow, const nav::EpisodeGeometry& geometry,
                  const TileCoder& coder, const ActionSet& actions,
                  const RewardConfig& reward_cfg, const TrainConfig& train_cfg);

enum class EvalMode { Stochastic, Greedy };

struct EvalConfig {
  int n_traj = 1000;
  EvalMode mode = EvalMode::Stochastic;
  /// Trajectory i draws its start, flow time and actions from seed + i.
  std::uint64_t seed = 0;
  bool fixed_start = false;
  int substeps = 10;
  int record_stride = 1;
};

/// Read-only rollouts of a trained policy.
std::vector<Trajectory> evaluate(const flow::FlowField& flow, const PolicyParams& params,
                                 const nav::EpisodeGeometry& geometry, const TileCoder& coder,
                                 const ActionSet& actions, const RewardConfig& reward_cfg,
                                 const EvalConfig& eval_cfg);

struct PolicyFile {
  PolicyParams params;
  TileCoder coder;
  ActionSet actions;
};

void save_policy(const PolicyParams& params, const TileCoder& coder, const ActionSet& actions,
                 const std::filesystem::path& path);
PolicyFile load_policy(const std::filesystem::path& path);
/// Loads and checks the stored shape against the declared coder and action set.
PolicyFile load_policy(const std::filesystem::path& path, const TileCoder& coder,
                       const ActionSet& actions);

void write_train_log_csv(const TrainLog& log, std::ostream& out);

}  // namespace znav::rl
