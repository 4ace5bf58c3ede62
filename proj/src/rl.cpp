#include "znav/rl.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "znav/binary_io.hpp"
#include "znav/errors.hpp"

namespace znav::rl {

void TileCoder::validate() const {
  if (!(tile_size > 0.0)) throw ParameterError("tile coder: tile_size must be > 0");
  if (nx < 1 || ny < 1) throw ParameterError("tile coder: tile counts must be >= 1");
}

bool TileCoder::contains(const Vec2& x) const {
  const Vec2 r = (x - origin) / tile_size;
  return r.x() >= 0.0 && r.y() >= 0.0 && r.x() < nx && r.y() < ny;
}

int TileCoder::state_of(const Vec2& x) const {
  const Vec2 r = (x - origin) / tile_size;
  const int i = std::clamp(static_cast<int>(std::floor(r.x())), 0, nx - 1);
  const int j = std::clamp(static_cast<int>(std::floor(r.y())), 0, ny - 1);
  return i + nx * j;
}

ActionSet ActionSet::compass(bool include_off) {
  ActionSet a;
  for (int j = 0; j < 8; ++j) a.angles.push_back(j * std::numbers::pi / 4.0);
  a.include_off = include_off;
  return a;
}

void ActionSet::validate() const {
  if (angles.empty()) throw ParameterError("action set needs at least one heading");
  for (std::size_t i = 0; i < angles.size(); ++i)
    for (std::size_t j = i + 1; j < angles.size(); ++j)
      if (nav::normalize_angle(angles[i]) == nav::normalize_angle(angles[j]))
        throw ParameterError("action set headings must be distinct");
}

std::vector<nav::Control> ActionSet::controls() const {
  std::vector<nav::Control> out;
  for (double a : angles) out.push_back({true, a});
  if (include_off) out.push_back({false, 0.0});
  return out;
}

PolicyParams::PolicyParams(int states, int actions)
    : n_states(states),
      n_actions(actions),
      preferences(static_cast<std::size_t>(states) * actions, 0.0),
      values(static_cast<std::size_t>(states), 0.0) {
  if (states < 1 || actions < 1) throw ParameterError("policy needs >= 1 state and action");
}

std::span<double> PolicyParams::row(int s) {
  return {preferences.data() + static_cast<std::size_t>(s) * n_actions,
          static_cast<std::size_t>(n_actions)};
}

std::span<const double> PolicyParams::row(int s) const {
  return {preferences.data() + static_cast<std::size_t>(s) * n_actions,
          static_cast<std::size_t>(n_actions)};
}

void policy_probs(std::span<const double> h, std::span<double> out) {
  const double top = *std::max_element(h.begin(), h.end());
  double sum = 0.0;
  for (std::size_t a = 0; a < h.size(); ++a) {
    out[a] = std::exp(h[a] - top);
    sum += out[a];
  }
  for (auto& p : out) p /= sum;
}

std::vector<double> policy_probs(std::span<const double> h) {
  std::vector<double> out(h.size());
  policy_probs(h, out);
  return out;
}

int greedy_action(std::span<const double> h) {
  return static_cast<int>(std::max_element(h.begin(), h.end()) - h.begin());
}

void RewardConfig::validate() const {
  if (!(energy_weight >= 0.0)) throw ParameterError("reward: lambda must be >= 0");
  if (!(nominal_speed > 0.0)) throw ParameterError("reward: nominal speed must be > 0");
  if (!(decision_interval > 0.0)) throw ParameterError("reward: decision interval must be > 0");
}

double reward_step(const Vec2& prev, const Vec2& next, double dt, bool engine_was_on,
                   const RewardConfig& cfg) {
  const double powered = engine_was_on ? dt : 0.0;
  return -(dt + cfg.energy_weight * powered) + (cfg.target - prev).norm() / cfg.nominal_speed -
         (cfg.target - next).norm() / cfg.nominal_speed;
}

double actor_critic_update(PolicyParams& params, int s, int a, double reward, int s_next,
                           bool terminal, double actor_lr, double critic_lr) {
  const double bootstrap = terminal ? 0.0 : params.values[s_next];
  const double td = reward + bootstrap - params.values[s];
  if (td == 0.0) return td;

  auto h = params.row(s);
  thread_local std::vector<double> probs;
  probs.resize(h.size());
  policy_probs(h, probs);
  params.values[s] += critic_lr * td;
  for (std::size_t b = 0; b < h.size(); ++b) {
    const double indicator = static_cast<int>(b) == a ? 1.0 : 0.0;
    h[b] += actor_lr * td * (indicator - probs[b]);
  }
  return td;
}

void TrainConfig::validate() const {
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0))
    throw ParameterError("train: learning rates must be > 0");
  if (n_episodes < 1) throw ParameterError("train: n_episodes must be >= 1");
  if (substeps < 1) throw ParameterError("train: substeps must be >= 1");
}

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double episode_start_time(const flow::FlowField& flow, std::mt19937_64& rng) {
  if (!flow.time_dependent()) return 0.0;
  const auto& ms = std::get<flow::ModeSum>(flow.representation());
  return uniform01(rng) * ms.temporal().horizon;
}

int sample_action(std::span<const double> h, std::mt19937_64& rng) {
  thread_local std::vector<double> probs;
  probs.resize(h.size());
  policy_probs(h, probs);
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t a = 0; a + 1 < probs.size(); ++a) {
    acc += probs[a];
    if (u < acc) return static_cast<int>(a);
  }
  return static_cast<int>(probs.size()) - 1;
}

class LearningController : public nav::Controller {
 public:
  LearningController(PolicyParams& params, const TileCoder& coder, std::mt19937_64& rng)
      : params_(params), coder_(coder), rng_(rng) {}

  void set_rates(double actor, double critic) {
    actor_lr_ = actor;
    critic_lr_ = critic;
  }

  int act(const nav::VesselState& state, double) override {
    state_ = coder_.state_of(state.position);
    if (!coder_.contains(state.position)) ++clamped_;
    action_ = sample_action(params_.row(state_), rng_);
    return action_;
  }

  void observe(const nav::Transition& tr) override {
    total_reward_ += tr.reward;
    const int next = coder_.state_of(tr.to.position);
    // Time-outs are truncations: bootstrap from the critic rather than treating them as terminal.
    actor_critic_update(params_, state_, action_, tr.reward, next, tr.reached, actor_lr_,
                        critic_lr_);
  }

  void reset() {
    total_reward_ = 0.0;
    clamped_ = 0;
  }
  double total_reward() const { return total_reward_; }
  int clamped() const { return clamped_; }

 private:
  PolicyParams& params_;
  const TileCoder& coder_;
  std::mt19937_64& rng_;
  double actor_lr_ = 0.0, critic_lr_ = 0.0;
  int state_ = 0, action_ = 0;
  double total_reward_ = 0.0;
  int clamped_ = 0;
};

class FixedPolicyController : public nav::Controller {
 public:
  FixedPolicyController(const PolicyParams& params, const TileCoder& coder, EvalMode mode,
                        std::mt19937_64& rng)
      : params_(params), coder_(coder), mode_(mode), rng_(rng) {}

  int act(const nav::VesselState& state, double) override {
    const auto row = params_.row(coder_.state_of(state.position));
    return mode_ == EvalMode::Greedy ? greedy_action(row) : sample_action(row, rng_);
  }

 private:
  const PolicyParams& params_;
  const TileCoder& coder_;
  EvalMode mode_;
  std::mt19937_64& rng_;
};

nav::RewardFn make_reward(const RewardConfig& cfg) {
  return [cfg](const Vec2& from, const Vec2& to, double dt, bool on) {
    return reward_step(from, to, dt, on, cfg);
  };
}

}  // namespace

TrainResult train(const flow::FlowField& flow, const nav::EpisodeGeometry& geometry,
                  const TileCoder& coder, const ActionSet& actions,
                  const RewardConfig& reward_cfg, const TrainConfig& train_cfg) {
  geometry.validate();
  coder.validate();
  actions.validate();
  reward_cfg.validate();
  train_cfg.validate();

  RewardConfig rcfg = reward_cfg;
  rcfg.target = geometry.target;
  const auto reward = make_reward(rcfg);
  const auto controls = actions.controls();

  TrainResult result{PolicyParams(coder.n_states(), actions.size()), {}};
  result.log.episodes.reserve(static_cast<std::size_t>(train_cfg.n_episodes));

  std::mt19937_64 rng(train_cfg.seed);
  LearningController controller(result.params, coder, rng);
  for (int ep = 0; ep < train_cfg.n_episodes; ++ep) {
    const double scale = train_cfg.lr_decay ? 1.0 / std::sqrt(ep + 1.0) : 1.0;
    controller.set_rates(train_cfg.actor_lr * scale, train_cfg.critic_lr * scale);
    controller.reset();

    const Vec2 start = nav::sample_disc(rng, geometry.start, geometry.start_radius);
    nav::EpisodeTiming timing;
    timing.decision_interval = rcfg.decision_interval;
    timing.substeps = train_cfg.substeps;
    timing.t0 = episode_start_time(flow, rng);
    timing.record_stride = 0;

    const auto traj = nav::run_episode(flow, controller, controls, geometry, timing, start, reward);
    result.log.episodes.push_back({ep, controller.total_reward(), traj.duration,
                                   traj.power_on_time, traj.outcome, controller.clamped()});
  }
  return result;
}

std::vector<Trajectory> evaluate(const flow::FlowField& flow, const PolicyParams& params,
                                 const nav::EpisodeGeometry& geometry, const TileCoder& coder,
                                 const ActionSet& actions, const RewardConfig& reward_cfg,
                                 const EvalConfig& eval_cfg) {
  geometry.validate();
  coder.validate();
  reward_cfg.validate();
  if (params.n_states != coder.n_states() || params.n_actions != actions.size())
    throw ParameterError("evaluate: policy shape does not match coder/action set");

  RewardConfig rcfg = reward_cfg;
  rcfg.target = geometry.target;
  const auto reward = make_reward(rcfg);
  const auto controls = actions.controls();

  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(std::max(eval_cfg.n_traj, 0)));
  for (int i = 0; i < eval_cfg.n_traj; ++i) {
    std::mt19937_64 rng(eval_cfg.seed + static_cast<std::uint64_t>(i));
    const Vec2 start = eval_cfg.fixed_start
                           ? geometry.start
                           : nav::sample_disc(rng, geometry.start, geometry.start_radius);
    nav::EpisodeTiming timing;
    timing.decision_interval = rcfg.decision_interval;
    timing.substeps = eval_cfg.substeps;
    timing.t0 = episode_start_time(flow, rng);
    timing.record_stride = eval_cfg.record_stride;
    FixedPolicyController controller(params, coder, eval_cfg.mode, rng);
    out.push_back(nav::run_episode(flow, controller, controls, geometry, timing, start, reward));
  }
  return out;
}

void write_train_log_csv(const TrainLog& log, std::ostream& out) {
  out << "episode,total_reward,T,T_pow,outcome,clamped_decisions\n";
  for (const auto& e : log.episodes) {
    out << e.episode << ',' << io::fmt_double(e.total_reward) << ','
        << io::fmt_double(e.arrival_time) << ',' << io::fmt_double(e.power_on_time) << ','
        << (e.outcome == nav::Outcome::Reached ? "reached" : "failed") << ','
        << e.clamped_decisions << '\n';
  }
}

}  // namespace znav::rl
