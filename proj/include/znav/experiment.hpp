#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "znav/config.hpp"
#include "znav/rl.hpp"
#include "znav/stats.hpp"

namespace znav::cli {

/// Everything a command needs once the config has been resolved against its flow.
struct Setup {
  flow::FlowField flow;
  double u_max = 0.0;
  nav::EpisodeGeometry geometry;
  double free_flight_time = 0.0;
  rl::TileCoder coder;
  rl::ActionSet actions;
  rl::RewardConfig reward;
  rl::TrainConfig train;
  rl::EvalConfig eval;
  nav::ShootingConfig shooting;
  stats::Bounds arena;
};

flow::FlowField build_flow(const ExperimentConfig& config);

/// Dimensional slip speed is slip_ratio * u_max(flow, 0) unless given explicitly;
/// max_time is max_time_factor * T_free.
Setup resolve(const ExperimentConfig& config);
Setup resolve(const ExperimentConfig& config, flow::FlowField flow);

struct CommandResult {
  std::vector<std::filesystem::path> files;
  nlohmann::json report;
};

CommandResult cmd_gen_flow(const ExperimentConfig& config,
                           const std::optional<std::filesystem::path>& out_path,
                           std::ostream& log);
CommandResult cmd_train(const ExperimentConfig& config, std::ostream& log);
CommandResult cmd_eval(const ExperimentConfig& config,
                       const std::optional<std::filesystem::path>& policy_path,
                       std::ostream& log);
CommandResult cmd_on(const ExperimentConfig& config, std::ostream& log);
CommandResult cmd_compare(const ExperimentConfig& config,
                          const std::optional<std::filesystem::path>& policy_path,
                          std::ostream& log);
CommandResult cmd_ow_map(const ExperimentConfig& config, std::ostream& log);

/// Merges the command's file list into <output_dir>/manifest.json.
void write_manifest(const ExperimentConfig& config, const std::string& command,
                    const std::vector<std::filesystem::path>& files);

/// Columns: trajectory_id,t,x,y,theta,engine_on,action_id,reward.
void write_trajectories_csv(std::span<const nav::Trajectory> trajectories, std::ostream& out);
/// Columns: trajectory_id,outcome,T,T_pow,start_x,start_y.
void write_outcomes_csv(std::span<const nav::Trajectory> trajectories, std::ostream& out);

}  // namespace znav::cli
