#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "znav/flowfield.hpp"

namespace znav::nav {

using flow::FlowField;
using flow::Mat2;
using flow::Vec2;

/// Wraps an angle into [0, 2*pi).
double normalize_angle(double theta);

struct VesselState {
  Vec2 position = Vec2::Zero();
  double heading = 0.0;
  bool engine_on = true;
};

/// Start/target discs, failure cutoff and propulsion speed of one navigation problem.
struct EpisodeGeometry {
  Vec2 start = Vec2::Zero();
  Vec2 target = Vec2::Zero();
  double start_radius = 0.0;
  double target_radius = 0.1;
  double max_time = 1.0;
  double slip_speed = 1.0;

  void validate() const;
  bool inside_target(const Vec2& x) const { return (x - target).norm() <= target_radius; }
};

/// |target - start| / slip_speed.
double free_flight_time(const EpisodeGeometry& geometry);

enum class Outcome { Reached, Failed };

struct TrajectorySample {
  double t = 0.0;
  VesselState state;
  int action = -1;
  double reward = 0.0;
};

/// Recorded path of one episode. `samples` holds at least the initial and final
/// states; intermediate samples depend on the recording stride. Time is measured
/// from the episode start (the flow may have been sampled from a later clock).
struct Trajectory {
  std::vector<TrajectorySample> samples;
  Outcome outcome = Outcome::Failed;
  /// Arrival time when Reached, elapsed time at the cutoff when Failed.
  double duration = 0.0;
  double power_on_time = 0.0;
  /// Number of decision epochs, and how many selected the engine-off control.
  int decisions = 0;
  int off_decisions = 0;

  bool reached() const { return outcome == Outcome::Reached; }
  const Vec2& start() const { return samples.front().state.position; }
  const Vec2& end() const { return samples.back().state.position; }
};

/// One RK4 step of dX/dt = u(X, t) + V_s n(theta) (propulsion term dropped when
/// the engine is off). The heading is held fixed over the step.
VesselState step_vessel(const FlowField& flow, const VesselState& state, double slip_speed,
                        double t, double dt);

/// Heading rate of the time-optimal steering law for gradient A(i, j) = du_i/dx_j:
/// A21 sin^2 - A12 cos^2 + (A11 - A22) cos sin.
double on_rhs(const Mat2& gradient, double theta);

struct OnOptions {
  double dt = 0.02;
  /// Flow clock at the start of the integration.
  double t0 = 0.0;
  /// Keep every stride-th integration step (0 keeps only endpoints).
  int record_stride = 1;
  /// Stop on target entry. When false the ODE runs to max_time regardless.
  bool stop_at_target = true;
};

/// Integrates the coupled position/heading system with the engine always on.
Trajectory integrate_on(const FlowField& flow, const Vec2& x0, double theta0,
                        const EpisodeGeometry& geometry, const OnOptions& options = {});

struct ShootingConfig {
  int n_angles = 100;
  int n_starts = 200;
  std::uint64_t seed = 0;
  /// When true (or start_radius == 0) every start is exactly at geometry.start.
  bool fixed_start = false;
  OnOptions on;
};

struct ShootingResult {
  std::vector<Trajectory> trajectories;
  std::optional<std::size_t> best;
  bool all_failed() const { return !best.has_value(); }
};

/// Uniform point in the disc of given radius around center.
template <typename Rng>
Vec2 sample_disc(Rng& rng, const Vec2& center, double radius);

/// n_starts disc starts (row-major outer loop) times n_angles headings 2*pi*j/n_angles.
ShootingResult on_shooting(const FlowField& flow, const EpisodeGeometry& geometry,
                           const ShootingConfig& config);

/// A discrete control: steer at `heading` with the engine on, or drift with the engine off.
struct Control {
  bool engine_on = true;
  double heading = 0.0;
};

struct Transition {
  VesselState from;
  VesselState to;
  int action = -1;
  /// Episode time at the start of the transition and its length (the last one may be partial).
  double t = 0.0;
  double dt = 0.0;
  double reward = 0.0;
  bool reached = false;
  /// Episode hit the time cutoff at the end of this transition.
  bool truncated = false;
};

/// Decision-maker queried every decision interval. `observe` sees every transition
/// including the terminal one.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual int act(const VesselState& state, double t) = 0;
  virtual void observe(const Transition&) {}
};

/// Reward for moving from `from` to `to` over `dt` with the engine on or off.
using RewardFn = std::function<double(const Vec2& from, const Vec2& to, double dt, bool engine_on)>;

struct EpisodeTiming {
  double decision_interval = 0.2;
  /// Integration steps per decision interval.
  int substeps = 10;
  double t0 = 0.0;
  /// Keep a sample every stride-th decision (0 keeps only endpoints).
  int record_stride = 1;
};

/// Runs one controlled episode from `start` until target entry or geometry.max_time.
/// Throws ContractViolation if the controller returns an id outside `controls`.
Trajectory run_episode(const FlowField& flow, Controller& controller,
                       std::span<const Control> controls, const EpisodeGeometry& geometry,
                       const EpisodeTiming& timing, const Vec2& start,
                       const RewardFn& reward = {});

// ---------------------------------------------------------------------------

template <typename Rng>
Vec2 sample_disc(Rng& rng, const Vec2& center, double radius) {
  if (radius <= 0.0) return center;
  // 53-bit uniforms from raw engine output, independent of distribution implementations.
  auto uniform = [&rng]() {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  };
  const double r = radius * std::sqrt(uniform());
  const double phi = flow::kTwoPi * uniform();
  return center + Vec2(r * std::cos(phi), r * std::sin(phi));
}

}  // namespace znav::nav
