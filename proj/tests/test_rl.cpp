#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "znav/binary_io.hpp"
#include "znav/errors.hpp"
#include "znav/rl.hpp"

using namespace znav;
using namespace znav::rl;
using flow::FlowField;

namespace {

constexpr double kPi = std::numbers::pi;

nav::EpisodeGeometry small_geometry() {
  nav::EpisodeGeometry g;
  g.start = Vec2(1.0, 2.0);
  g.target = Vec2(4.0, 2.0);
  g.start_radius = 0.2;
  g.target_radius = 0.2;
  g.slip_speed = 1.0;
  g.max_time = 20.0 * 3.0;
  return g;
}

TileCoder small_coder() {
  TileCoder c;
  c.origin = Vec2(0.0, 0.0);
  c.tile_size = 0.5;
  c.nx = 12;
  c.ny = 8;
  return c;
}

RewardConfig reward_for(const nav::EpisodeGeometry& g, double lambda) {
  RewardConfig r;
  r.energy_weight = lambda;
  r.nominal_speed = g.slip_speed;
  r.target = g.target;
  return r;
}

double total(std::span<const double> p) {
  double s = 0.0;
  for (double x : p) s += x;
  return s;
}

}  // namespace

TEST_CASE("tile coder examples") {
  TileCoder c;
  c.origin = Vec2(0, 0);
  c.tile_size = 1.0;
  c.nx = 30;
  c.ny = 30;
  CHECK(c.n_states() == 900);
  CHECK(c.state_of(Vec2(0.5, 0.5)) == 0);
  CHECK(c.state_of(Vec2(29.5, 0.5)) == 29);
  CHECK(c.state_of(Vec2(0.5, 1.5)) == 30);
  CHECK(c.contains(Vec2(0.5, 0.5)));
  CHECK_FALSE(c.contains(Vec2(-0.1, 0.5)));
  CHECK_FALSE(c.contains(Vec2(30.0, 0.5)));
  // Clamped to the boundary tiles.
  CHECK(c.state_of(Vec2(-3.0, 0.5)) == 0);
  CHECK(c.state_of(Vec2(45.0, 0.5)) == 29);
  CHECK(c.state_of(Vec2(45.0, 99.0)) == 899);
  CHECK(c.state_of(Vec2(0.5, -1.0)) == 0);

  // Every arena point maps to exactly one id in range.
  for (const auto& p : testing::random_points(2000, -5, 35, 3)) {
    const int s = c.state_of(p);
    CHECK(s >= 0);
    CHECK(s < c.n_states());
  }

  auto bad = c;
  bad.tile_size = 0.0;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad = c;
  bad.nx = 0;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
}

TEST_CASE("compass action set") {
  const auto a = ActionSet::compass(true);
  CHECK(a.size() == 9);
  CHECK(a.off_action() == 8);
  for (int j = 0; j < 8; ++j) CHECK(a.angles[j] == doctest::Approx(j * kPi / 4));
  const auto controls = a.controls();
  REQUIRE(controls.size() == 9);
  CHECK_FALSE(controls[8].engine_on);
  for (int j = 0; j < 8; ++j) CHECK(controls[j].engine_on);

  const auto b = ActionSet::compass(false);
  CHECK(b.size() == 8);
  CHECK(b.off_action() == -1);

  ActionSet dup;
  dup.angles = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 6.0};
  CHECK_THROWS_AS(dup.validate(), ParameterError);
}

TEST_CASE("softmax policy") {
  std::vector<double> zeros(9, 0.0);
  for (double p : policy_probs(zeros)) CHECK(p == doctest::Approx(1.0 / 9.0).epsilon(1e-15));

  const std::vector<double> two{std::log(2.0), 0.0};
  const auto p = policy_probs(two);
  CHECK(p[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd(0.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> h(9), shifted(9);
    const double c = nd(rng) * 100;
    for (int i = 0; i < 9; ++i) {
      h[i] = nd(rng);
      shifted[i] = h[i] + c;
    }
    const auto a = policy_probs(h);
    const auto b = policy_probs(shifted);
    CHECK(std::abs(total(a) - 1.0) < 1e-12);
    for (int i = 0; i < 9; ++i) {
      CHECK(a[i] > 0.0);
      CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-9));
    }
  }
  // Overflow safety.
  const std::vector<double> big{1000.0, 999.0, -1000.0};
  const auto q = policy_probs(big);
  CHECK(std::isfinite(q[0]));
  CHECK(std::abs(total(q) - 1.0) < 1e-12);
}

TEST_CASE("greedy ties go to the lowest id") {
  CHECK(greedy_action(std::vector<double>{0, 0, 0}) == 0);
  CHECK(greedy_action(std::vector<double>{0, 2, 2}) == 1);
  CHECK(greedy_action(std::vector<double>{-1, -3, -0.5}) == 2);
}

TEST_CASE("reward step cases") {
  RewardConfig cfg;
  cfg.nominal_speed = 1.0;
  cfg.target = Vec2(0, 0);
  cfg.energy_weight = 0.0;
  CHECK(reward_step(Vec2(5, 0), Vec2(3, 0), 1.0, true, cfg) == doctest::Approx(1.0));
  cfg.energy_weight = 2.0;
  CHECK(reward_step(Vec2(5, 0), Vec2(0, 5), 1.0, true, cfg) == doctest::Approx(-3.0));
  CHECK(reward_step(Vec2(5, 0), Vec2(4, 0), 1.0, false, cfg) == doctest::Approx(0.0));
}

TEST_CASE("actor-critic update") {
  SUBCASE("zero TD error changes nothing") {
    PolicyParams p(4, 3);
    p.values[1] = 2.0;
    p.values[2] = 1.5;
    const auto before = p;
    // r + V[s'] - V[s] = 0.5 + 1.5 - 2 = 0
    const double e = actor_critic_update(p, 1, 0, 0.5, 2, false, 0.1, 0.1);
    CHECK(e == 0.0);
    CHECK(p == before);
  }
  SUBCASE("positive TD error from the uniform policy raises a and lowers every other action") {
    PolicyParams p(3, 9);
    const auto before = policy_probs(p.row(1));
    const double e = actor_critic_update(p, 1, 4, 1.0, 2, false, 0.1, 0.1);
    CHECK(e > 0.0);
    const auto after = policy_probs(p.row(1));
    for (int b = 0; b < 9; ++b) {
      if (b == 4) CHECK(after[b] > before[b]);
      else CHECK(after[b] < before[b]);
    }
    CHECK(p.values[1] == doctest::Approx(0.1 * e));
  }
  SUBCASE("on arbitrary rows the chosen action gains and the rest lose in total") {
    // Individual pi(b) may rise when a third action dominates the row: to first
    // order d pi_b has the sign of sum_c pi_c^2 - pi_a - pi_b.
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd(0.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
      PolicyParams p(1, 9);
      for (auto& h : p.preferences) h = nd(rng);
      const int a = trial % 9;
      const auto before = policy_probs(p.row(0));
      const double sign = trial % 2 ? 1.0 : -1.0;
      const double e = actor_critic_update(p, 0, a, sign * 0.5, 0, true, 0.01, 0.1);
      const auto after = policy_probs(p.row(0));
      if (e > 0) CHECK(after[a] > before[a]);
      else CHECK(after[a] < before[a]);
    }
  }
  SUBCASE("terminal transitions do not bootstrap") {
    PolicyParams p(2, 2);
    p.values[1] = 100.0;
    const double e = actor_critic_update(p, 0, 0, -1.0, 1, true, 0.1, 0.1);
    CHECK(e == -1.0);
  }
  SUBCASE("updates are tabular and rows stay normalized") {
    PolicyParams p(6, 9);
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> st(0, 5), ac(0, 8);
    std::normal_distribution<double> nd(0.0, 5.0);
    for (int it = 0; it < 5000; ++it) {
      const auto before = p;
      const int s = st(rng);
      actor_critic_update(p, s, ac(rng), nd(rng), st(rng), it % 7 == 0, 0.3, 0.2);
      for (int other = 0; other < 6; ++other) {
        if (other == s) continue;
        const auto r0 = before.row(other);
        const auto r1 = p.row(other);
        CHECK(std::equal(r0.begin(), r0.end(), r1.begin()));
        CHECK(before.values[other] == p.values[other]);
      }
      CHECK(std::abs(total(policy_probs(p.row(s))) - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("training is deterministic and reward-dependent") {
  const auto g = small_geometry();
  const auto flow = FlowField::taylor_green(0.5);
  TrainConfig tc;
  tc.n_episodes = 30;
  tc.seed = 9;
  const auto actions = ActionSet::compass(true);
  const auto a = train(flow, g, small_coder(), actions, reward_for(g, 0.0), tc);
  const auto b = train(flow, g, small_coder(), actions, reward_for(g, 0.0), tc);
  CHECK(a.params == b.params);
  REQUIRE(a.log.episodes.size() == 30);
  for (std::size_t i = 0; i < 30; ++i) {
    CHECK(a.log.episodes[i].total_reward == b.log.episodes[i].total_reward);
    CHECK(a.log.episodes[i].arrival_time == b.log.episodes[i].arrival_time);
    CHECK(a.log.episodes[i].power_on_time <= a.log.episodes[i].arrival_time);
  }
  const auto c = train(flow, g, small_coder(), actions, reward_for(g, 6.0), tc);
  CHECK_FALSE(a.params == c.params);

  std::ostringstream csv;
  write_train_log_csv(a.log, csv);
  const auto text = csv.str();
  CHECK(text.rfind("episode,total_reward,T,T_pow,outcome", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 31);
}

TEST_CASE("total reward telescopes") {
  const auto g = small_geometry();
  const auto flow = FlowField::taylor_green(0.4);
  const auto actions = ActionSet::compass(true);
  for (double lambda : {0.0, 2.0, 6.0}) {
    PolicyParams params(small_coder().n_states(), actions.size());
    EvalConfig ec;
    ec.n_traj = 20;
    ec.seed = 77;
    const auto reward = reward_for(g, lambda);
    const auto trajs = evaluate(flow, params, g, small_coder(), actions, reward, ec);
    for (const auto& t : trajs) {
      double sum = 0.0;
      for (const auto& s : t.samples) sum += s.reward;
      const double expected = -(t.duration + lambda * t.power_on_time) +
                              ((g.target - t.start()).norm() - (g.target - t.end()).norm()) /
                                  g.slip_speed;
      CHECK(std::abs(sum - expected) <= 1e-9 * std::max(1.0, std::abs(expected)));
    }
  }
}

TEST_CASE("evaluation") {
  const auto g = small_geometry();
  const auto flow = FlowField::taylor_green(0.3);
  const auto actions = ActionSet::compass(true);
  TrainConfig tc;
  tc.n_episodes = 40;
  const auto trained = train(flow, g, small_coder(), actions, reward_for(g, 0.0), tc);
  const auto params_copy = trained.params;

  EvalConfig ec;
  ec.n_traj = 0;
  CHECK(evaluate(flow, trained.params, g, small_coder(), actions, reward_for(g, 0), ec).empty());

  ec.n_traj = 10;
  ec.mode = EvalMode::Greedy;
  ec.fixed_start = true;
  const auto greedy = evaluate(flow, trained.params, g, small_coder(), actions, reward_for(g, 0), ec);
  for (const auto& t : greedy) {
    CHECK(t.outcome == greedy[0].outcome);
    CHECK(t.duration == greedy[0].duration);
    CHECK(t.end() == greedy[0].end());
  }

  ec.mode = EvalMode::Stochastic;
  ec.fixed_start = false;
  ec.seed = 1;
  const auto s1 = evaluate(flow, trained.params, g, small_coder(), actions, reward_for(g, 0), ec);
  ec.seed = 1000;
  const auto s2 = evaluate(flow, trained.params, g, small_coder(), actions, reward_for(g, 0), ec);
  bool differ = false;
  for (std::size_t i = 0; i < s1.size(); ++i) differ = differ || s1[i].start() != s2[i].start();
  CHECK(differ);
  CHECK(trained.params == params_copy);

  PolicyParams wrong(5, 9);
  CHECK_THROWS_AS(evaluate(flow, wrong, g, small_coder(), actions, reward_for(g, 0), ec),
                  ParameterError);
}

TEST_CASE("policy files") {
  testing::TempDir dir;
  TileCoder coder;
  coder.nx = 30;
  coder.ny = 30;
  const auto actions = ActionSet::compass(true);
  PolicyParams p(coder.n_states(), actions.size());
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  for (auto& h : p.preferences) h = nd(rng);
  for (auto& v : p.values) v = nd(rng);
  const auto path = dir / "p.znp";
  save_policy(p, coder, actions, path);

  SUBCASE("round trip is bit-identical") {
    const auto f = load_policy(path, coder, actions);
    CHECK(f.params == p);
    CHECK(f.coder.nx == 30);
    CHECK(f.coder.tile_size == coder.tile_size);
    CHECK(f.actions.include_off);
    CHECK(f.actions.angles == actions.angles);
  }
  SUBCASE("shape mismatch against a 25-tile coder") {
    TileCoder small;
    small.nx = 5;
    small.ny = 5;
    CHECK_THROWS_AS(load_policy(path, small, actions), FormatError);
    CHECK_THROWS_AS(load_policy(path, coder, ActionSet::compass(false)), FormatError);
  }
  const std::string bytes = testing::slurp(path);
  SUBCASE("corrupted payload") {
    std::string b = bytes;
    b[b.size() - 100] ^= 0x5a;
    testing::spit(dir / "c.znp", b);
    CHECK_THROWS_AS(load_policy(dir / "c.znp"), FormatError);
  }
  SUBCASE("zeroed payload is not silently accepted") {
    std::string b = bytes;
    const auto head = b.find("end\n") + 4;
    std::fill(b.begin() + static_cast<std::ptrdiff_t>(head), b.end(), '\0');
    testing::spit(dir / "z.znp", b);
    CHECK_THROWS_AS(load_policy(dir / "z.znp"), FormatError);
  }
  SUBCASE("truncated") {
    testing::spit(dir / "t.znp", bytes.substr(0, bytes.size() - 8));
    CHECK_THROWS_AS(load_policy(dir / "t.znp"), FormatError);
  }
  SUBCASE("unknown version") {
    std::string b = bytes;
    b.replace(b.find("version 1"), 9, "version 3");
    testing::spit(dir / "v.znp", b);
    CHECK_THROWS_AS(load_policy(dir / "v.znp"), VersionError);
  }
}
