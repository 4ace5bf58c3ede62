#include "znav/navigator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "znav/errors.hpp"

namespace znav::nav {

double normalize_angle(double theta) {
  double r = std::fmod(theta, flow::kTwoPi);
  if (r < 0.0) r += flow::kTwoPi;
  if (r >= flow::kTwoPi) r = 0.0;
  return r;
}

void EpisodeGeometry::validate() const {
  if (!(start_radius >= 0.0)) throw ParameterError("geometry: start_radius must be >= 0");
  if (!(target_radius > 0.0)) throw ParameterError("geometry: target_radius must be > 0");
  if (!(max_time > 0.0)) throw ParameterError("geometry: max_time must be > 0");
  if (!(slip_speed > 0.0)) throw ParameterError("geometry: slip_speed must be > 0");
  if (!((target - start).norm() > start_radius + target_radius))
    throw ParameterError("geometry: start and target discs overlap");
}

double free_flight_time(const EpisodeGeometry& geometry) {
  if (!(geometry.slip_speed > 0.0)) throw ParameterError("free flight time needs slip_speed > 0");
  return (geometry.target - geometry.start).norm() / geometry.slip_speed;
}

VesselState step_vessel(const FlowField& flow, const VesselState& state, double slip_speed,
                        double t, double dt) {
  const Vec2 drive = state.engine_on
                         ? Vec2(slip_speed * std::cos(state.heading),
                                slip_speed * std::sin(state.heading))
                         : Vec2::Zero();
  const auto rhs = [&](const Vec2& x, double time) { return Vec2(flow.velocity(x, time) + drive); };

  const Vec2& x = state.position;
  const Vec2 k1 = rhs(x, t);
  const Vec2 k2 = rhs(x + 0.5 * dt * k1, t + 0.5 * dt);
  const Vec2 k3 = rhs(x + 0.5 * dt * k2, t + 0.5 * dt);
  const Vec2 k4 = rhs(x + dt * k3, t + dt);

  VesselState next = state;
  next.position = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  return next;
}

double on_rhs(const Mat2& a, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return a(1, 0) * s * s - a(0, 1) * c * c + (a(0, 0) - a(1, 1)) * c * s;
}

namespace {

// Fraction along a step at which the distance to the target crosses the radius,
// assuming the distance varies linearly over the step.
double crossing_fraction(double d_prev, double d_next, double radius) {
  if (d_prev <= d_next) return 1.0;
  return std::clamp((d_prev - radius) / (d_prev - d_next), 0.0, 1.0);
}

}  // namespace

Trajectory integrate_on(const FlowField& flow, const Vec2& x0, double theta0,
                        const EpisodeGeometry& geometry, const OnOptions& options) {
  if (!(options.dt > 0.0)) throw ParameterError("integrate_on: dt must be positive");
  const double vs = geometry.slip_speed;

  struct Deriv {
    Vec2 dx;
    double dtheta;
  };
  const auto rhs = [&](const Vec2& x, double theta, double t) {
    const flow::FlowSample s = flow.sample(x, options.t0 + t);
    return Deriv{s.velocity + Vec2(vs * std::cos(theta), vs * std::sin(theta)),
                 on_rhs(s.gradient, theta)};
  };

  Trajectory traj;
  VesselState state{x0, normalize_angle(theta0), true};
  traj.samples.push_back({0.0, state, -1, 0.0});

  if (options.stop_at_target && geometry.inside_target(x0)) {
    traj.outcome = Outcome::Reached;
    return traj;
  }

  Vec2 x = x0;
  double theta = theta0;
  double t = 0.0;
  double dist = (x - geometry.target).norm();
  for (std::int64_t step = 1; t < geometry.max_time; ++step) {
    const double t_next = std::min(static_cast<double>(step) * options.dt, geometry.max_time);
    const double h = t_next - t;

    const Deriv k1 = rhs(x, theta, t);
    const Deriv k2 = rhs(x + 0.5 * h * k1.dx, theta + 0.5 * h * k1.dtheta, t + 0.5 * h);
    const Deriv k3 = rhs(x + 0.5 * h * k2.dx, theta + 0.5 * h * k2.dtheta, t + 0.5 * h);
    const Deriv k4 = rhs(x + h * k3.dx, theta + h * k3.dtheta, t + h);
    const Vec2 x_next = x + (h / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
    const double theta_next =
        theta + (h / 6.0) * (k1.dtheta + 2.0 * k2.dtheta + 2.0 * k3.dtheta + k4.dtheta);
    const double dist_next = (x_next - geometry.target).norm();

    if (options.stop_at_target && dist_next <= geometry.target_radius) {
      const double f = crossing_fraction(dist, dist_next, geometry.target_radius);
      const double t_arrival = t + f * h;
      state.position = x + f * (x_next - x);
      state.heading = normalize_angle(theta + f * (theta_next - theta));
      if (t_arrival > traj.samples.back().t) {
        traj.samples.push_back({t_arrival, state, -1, 0.0});
      } else {
        traj.samples.back().state = state;
      }
      traj.outcome = Outcome::Reached;
      traj.duration = t_arrival;
      traj.power_on_time = t_arrival;
      return traj;
    }

    x = x_next;
    theta = theta_next;
    t = t_next;
    dist = dist_next;
    const bool last = t >= geometry.max_time;
    if (last || (options.record_stride > 0 && step % options.record_stride == 0)) {
      traj.samples.push_back({t, VesselState{x, normalize_angle(theta), true}, -1, 0.0});
    }
  }

  traj.outcome = Outcome::Failed;
  traj.duration = t;
  traj.power_on_time = t;
  return traj;
}

ShootingResult on_shooting(const FlowField& flow, const EpisodeGeometry& geometry,
                           const ShootingConfig& config) {
  if (config.n_angles < 1 || config.n_starts < 1)
    throw ParameterError("on_shooting: n_angles and n_starts must be >= 1");

  std::mt19937_64 rng(config.seed);
  ShootingResult result;
  result.trajectories.reserve(static_cast<std::size_t>(config.n_angles) * config.n_starts);
  for (int s = 0; s < config.n_starts; ++s) {
    const Vec2 start = config.fixed_start
                           ? geometry.start
                           : sample_disc(rng, geometry.start, geometry.start_radius);
    for (int j = 0; j < config.n_angles; ++j) {
      const double theta = flow::kTwoPi * j / config.n_angles;
      result.trajectories.push_back(integrate_on(flow, start, theta, geometry, config.on));
      const auto idx = result.trajectories.size() - 1;
      const auto& tr = result.trajectories.back();
      if (tr.reached() &&
          (!result.best || tr.duration < result.trajectories[*result.best].duration)) {
        result.best = idx;
      }
    }
  }
  return result;
}

Trajectory run_episode(const FlowField& flow, Controller& controller,
                       std::span<const Control> controls, const EpisodeGeometry& geometry,
                       const EpisodeTiming& timing, const Vec2& start, const RewardFn& reward) {
  if (!(timing.decision_interval > 0.0) || timing.substeps < 1)
    throw ParameterError("run_episode: decision interval and substeps must be positive");
  const double h = timing.decision_interval / timing.substeps;
  const double vs = geometry.slip_speed;

  Trajectory traj;
  VesselState state{start, 0.0, true};
  traj.samples.push_back({0.0, state, -1, 0.0});
  if (geometry.inside_target(start)) {
    traj.outcome = Outcome::Reached;
    return traj;
  }

  double t = 0.0;
  for (std::int64_t k = 0; t < geometry.max_time; ++k) {
    const int action = controller.act(state, t);
    if (action < 0 || static_cast<std::size_t>(action) >= controls.size()) {
      throw ContractViolation("controller returned action id " + std::to_string(action) +
                              " outside [0, " + std::to_string(controls.size()) + ")");
    }
    const Control& ctl = controls[action];
    ++traj.decisions;
    if (!ctl.engine_on) ++traj.off_decisions;

    VesselState from = state;
    from.engine_on = ctl.engine_on;
    if (ctl.engine_on) from.heading = normalize_angle(ctl.heading);

    const double t_start = t;
    const double t_end =
        std::min(static_cast<double>(k + 1) * timing.decision_interval, geometry.max_time);
    VesselState cur = from;
    double tc = t_start;
    double dist = (cur.position - geometry.target).norm();
    bool reached = false;
    for (int i = 1; tc < t_end; ++i) {
      const double t_next = i == timing.substeps ? t_end : std::min(t_start + i * h, t_end);
      VesselState next = step_vessel(flow, cur, vs, timing.t0 + tc, t_next - tc);
      const double dist_next = (next.position - geometry.target).norm();
      if (dist_next <= geometry.target_radius) {
        const double f = crossing_fraction(dist, dist_next, geometry.target_radius);
        next.position = cur.position + f * (next.position - cur.position);
        tc = tc + f * (t_next - tc);
        cur = next;
        reached = true;
        break;
      }
      cur = next;
      tc = t_next;
      dist = dist_next;
    }

    Transition tr;
    tr.from = from;
    tr.to = cur;
    tr.action = action;
    tr.t = t_start;
    tr.dt = tc - t_start;
    tr.reached = reached;
    tr.truncated = !reached && tc >= geometry.max_time;
    tr.reward = reward ? reward(from.position, cur.position, tr.dt, ctl.engine_on) : 0.0;
    if (ctl.engine_on) traj.power_on_time += tr.dt;

    state = cur;
    t = tc;
    const bool done = tr.reached || tr.truncated;
    if (done || (timing.record_stride > 0 && (k + 1) % timing.record_stride == 0)) {
      if (tr.dt > 0.0) {
        traj.samples.push_back({t, state, action, tr.reward});
      } else {
        // Arrival exactly at the previous epoch: fold into the last sample.
        traj.samples.back().state = state;
      }
    }
    controller.observe(tr);
    if (done) {
      traj.outcome = reached ? Outcome::Reached : Outcome::Failed;
      traj.duration = t;
      return traj;
    }
  }

  traj.outcome = Outcome::Failed;
  traj.duration = t;
  return traj;
}

}  // namespace znav::nav
