#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

#include "znav/navigator.hpp"

namespace znav::stats {

using flow::Vec2;
using nav::Trajectory;

/// Fixed-width histogram over [lo, hi). `mass[i]` is count[i] / n_total of the
/// ensemble it was built from, so the masses of a PDF that excludes failures
/// add up to the reached fraction.
struct Histogram {
  double lo = 0.0;
  double hi = 5.0;
  std::vector<std::size_t> counts;
  std::vector<double> mass;

  std::size_t n_bins() const { return counts.size(); }
  double width() const { return (hi - lo) / static_cast<double>(counts.size()); }
  std::vector<double> edges() const;
  /// mass / bin width.
  std::vector<double> density() const;
};

struct EnsembleSummary {
  std::size_t n_total = 0;
  std::size_t n_failed = 0;
  double free_flight_time = 0.0;
  /// T / T_free and T_pow / T_free over reached trajectories.
  Histogram arrival_pdf;
  Histogram power_pdf;
  /// Reached trajectories whose normalized times fell outside [lo, hi) and were
  /// folded into the nearest edge bin.
  std::size_t n_clipped = 0;
  /// Medians over reached trajectories, in time units.
  std::optional<double> median_arrival;
  std::optional<double> median_power;

  double failure_rate() const {
    return n_total == 0 ? 0.0 : static_cast<double>(n_failed) / static_cast<double>(n_total);
  }
};

/// Histograms of T / T_free and T_pow / T_free over reached trajectories;
/// failures are counted separately.
EnsembleSummary summarize(std::span<const Trajectory> trajectories, double free_flight_time,
                          int n_bins = 50, double range_hi = 5.0);

nlohmann::json to_json(const EnsembleSummary& summary);

/// Median of a sample (mean of the middle pair for even sizes). Empty -> nullopt.
std::optional<double> median(std::vector<double> values);

struct Bounds {
  Vec2 lo = Vec2::Zero();
  Vec2 hi = Vec2::Zero();
};

/// Residence time per square pixel. Time spent outside the bounds is kept in
/// `outside_time` so that total() always equals the summed durations.
struct OccupancyGrid {
  Vec2 origin = Vec2::Zero();
  double pixel = 1.0;
  int nx = 0;
  int ny = 0;
  std::vector<double> time;
  double outside_time = 0.0;

  OccupancyGrid() = default;
  OccupancyGrid(const Bounds& bounds, double pixel);

  double& at(int i, int j) { return time[static_cast<std::size_t>(j) * nx + i]; }
  double at(int i, int j) const { return time[static_cast<std::size_t>(j) * nx + i]; }
  double total() const;

  /// Adds one trajectory, assuming straight constant-speed motion between samples.
  void accumulate(const Trajectory& trajectory);
  OccupancyGrid& operator+=(const OccupancyGrid& other);
};

OccupancyGrid occupancy(std::span<const Trajectory> trajectories, double pixel,
                        const Bounds& bounds);

void write_occupancy_csv(const OccupancyGrid& grid, std::ostream& out);
nlohmann::json occupancy_sidecar(const OccupancyGrid& grid);

struct SensitivityCurve {
  std::vector<double> times;
  std::vector<double> separation;
  double threshold = 0.0;
  /// First time the separation exceeds the threshold.
  std::optional<double> crossing_time;
  /// Least-squares slope of log separation against time over the second half of the run.
  double growth_rate = 0.0;
};

struct SensitivityConfig {
  double dt = 0.02;
  double horizon = 100.0;
  /// Length scale converting the heading perturbation into a position-like scale.
  double length_scale = flow::kTwoPi / 10.0;
  double threshold_factor = 100.0;
  double t0 = 0.0;
};

/// Runs two optimal-navigation trajectories from the same start with headings
/// theta0 and theta0 + epsilon, ignoring the target, and tracks |X1 - X2|.
SensitivityCurve sensitivity(const flow::FlowField& flow, const nav::EpisodeGeometry& geometry,
                             const Vec2& start, double theta0, double epsilon,
                             const SensitivityConfig& config);

}  // namespace znav::stats
