#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "znav/errors.hpp"
#include "znav/navigator.hpp"

using namespace znav;
using namespace znav::nav;
using flow::FlowField;
using flow::FourierMode;
using flow::kTwoPi;

namespace {

constexpr double kPi = std::numbers::pi;

class Fixed : public Controller {
 public:
  explicit Fixed(int id) : id_(id) {}
  int act(const VesselState&, double) override { return id_; }

 private:
  int id_;
};

EpisodeGeometry line_geometry(double distance, double vs, double radius = 0.1,
                              double tmax_factor = 20.0) {
  EpisodeGeometry g;
  g.start = Vec2(1.0, 2.0);
  g.target = g.start + Vec2(distance, 0.0);
  g.target_radius = radius;
  g.slip_speed = vs;
  g.max_time = tmax_factor * distance / vs;
  return g;
}

// First time the straight path x0 + v t enters the disc |x - c| <= r, if ever.
std::optional<double> first_entry(const Vec2& x0, const Vec2& v, const Vec2& c, double r) {
  const Vec2 d = x0 - c;
  const double a = v.squaredNorm();
  const double b = 2.0 * d.dot(v);
  const double cc = d.squaredNorm() - r * r;
  const double disc = b * b - 4 * a * cc;
  if (disc < 0) return std::nullopt;
  const double t = (-b - std::sqrt(disc)) / (2 * a);
  if (t < 0) return std::nullopt;
  return t;
}

std::vector<FourierMode> test_modes() {
  return {FourierMode{1, 0, 0.4, 0.3, 0.0}, FourierMode{1, 2, 0.15, 1.9, 0.0},
          FourierMode{-2, 1, 0.1, 4.0, 0.0}, FourierMode{3, -1, 0.05, 2.2, 0.0}};
}

Vec2 rot(const Vec2& x, double a) {
  return Vec2(std::cos(a) * x.x() - std::sin(a) * x.y(), std::sin(a) * x.x() + std::cos(a) * x.y());
}

}  // namespace

TEST_CASE("normalize_angle maps into [0, 2pi)") {
  CHECK(normalize_angle(0.0) == 0.0);
  CHECK(normalize_angle(kTwoPi) == doctest::Approx(0.0));
  CHECK(normalize_angle(-kPi / 2) == doctest::Approx(1.5 * kPi));
  CHECK(normalize_angle(7 * kPi) == doctest::Approx(kPi));
  for (double a : {-100.0, -1e-17, 3.0, 1e6}) {
    const double n = normalize_angle(a);
    CHECK(n >= 0.0);
    CHECK(n < kTwoPi);
  }
}

TEST_CASE("geometry validation and free-flight time") {
  EpisodeGeometry g = line_geometry(5.12, 0.8);
  CHECK_NOTHROW(g.validate());
  CHECK(free_flight_time(g) == doctest::Approx(6.4).epsilon(1e-12));
  g = line_geometry(1.0, 1.0);
  CHECK(free_flight_time(g) == doctest::Approx(1.0));
  auto g2 = g;
  g2.slip_speed *= 2;
  CHECK(free_flight_time(g2) == doctest::Approx(free_flight_time(g) / 2));

  auto bad = g;
  bad.target_radius = 0.0;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad = g;
  bad.start_radius = -0.1;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad = g;
  bad.max_time = 0.0;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad = g;
  bad.slip_speed = 0.0;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad = g;
  bad.start_radius = 0.5;
  bad.target_radius = 0.5;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
}

TEST_CASE("step_vessel elementary cases") {
  const auto still = FlowField::quiescent();
  VesselState s{Vec2(0.3, -0.2), 0.0, true};
  auto n = step_vessel(still, s, 1.0, 0.0, 0.5);
  CHECK((n.position - s.position - Vec2(0.5, 0.0)).norm() < 1e-15);

  s.engine_on = false;
  n = step_vessel(still, s, 1.0, 0.0, 0.5);
  CHECK(n.position == s.position);

  const auto drift = FlowField::uniform(Vec2(1.0, 0.0));
  n = step_vessel(drift, s, 1.0, 0.0, 1.0);
  CHECK(n.position - s.position == Vec2(1.0, 0.0));
}

TEST_CASE("on_rhs closed forms") {
  flow::Mat2 zero = flow::Mat2::Zero(), rotation, shear;
  const double w = 0.9, sh = 1.3;
  rotation << 0, -w, w, 0;
  shear << 0, sh, 0, 0;
  for (double th : {0.0, 0.4, 2.0, 5.5}) {
    CHECK(on_rhs(zero, th) == 0.0);
    CHECK(on_rhs(rotation, th) == doctest::Approx(w).epsilon(1e-14));
  }
  CHECK(on_rhs(shear, 0.0) == doctest::Approx(-sh));
}

TEST_CASE("integrate_on in quiescent flow is a straight line") {
  const auto g = line_geometry(4.0, 0.7);
  const auto tr = integrate_on(FlowField::quiescent(), g.start, 0.0, g);
  REQUIRE(tr.reached());
  const double expected = (4.0 - g.target_radius) / 0.7;
  CHECK(tr.duration == doctest::Approx(expected).epsilon(1e-3));
  CHECK(tr.duration == doctest::Approx(expected).epsilon(1e-12));
  CHECK(tr.power_on_time == tr.duration);
  CHECK((tr.end() - g.target).norm() <= g.target_radius + 1e-12);
  for (std::size_t i = 1; i < tr.samples.size(); ++i) CHECK(tr.samples[i].t > tr.samples[i - 1].t);
  CHECK(tr.samples.front().t == 0.0);
}

TEST_CASE("on_shooting in quiescent flow") {
  // Arrival is at the disc edge, so d_B / D must be well under 1 %.
  auto g = line_geometry(4.0, 1.0, 0.02);
  ShootingConfig cfg;
  cfg.n_angles = 360;
  cfg.n_starts = 1;
  cfg.fixed_start = true;
  auto res = on_shooting(FlowField::quiescent(), g, cfg);
  REQUIRE(res.best);
  CHECK(res.trajectories.size() == 360);
  CHECK(res.trajectories[*res.best].duration == doctest::Approx(4.0 / 1.0).epsilon(0.01));

  // One heading, pointing away, short cutoff: total failure.
  g.max_time = 2.0 * free_flight_time(g);
  cfg.n_angles = 1;
  auto away = g;
  std::swap(away.start, away.target);
  away.target = away.start + Vec2(-4.0, 0.0);
  res = on_shooting(FlowField::quiescent(), away, cfg);
  CHECK(res.all_failed());
  CHECK_FALSE(res.best.has_value());
  CHECK(res.trajectories[0].outcome == Outcome::Failed);
  CHECK(res.trajectories[0].duration == doctest::Approx(g.max_time));
}

TEST_CASE("disc starts are uniform and seeded") {
  std::mt19937_64 a(5), b(5);
  const Vec2 c(1, 1);
  int inner = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const Vec2 p = sample_disc(a, c, 0.3);
    CHECK((p - c).norm() <= 0.3 + 1e-15);
    CHECK(p == sample_disc(b, c, 0.3));
    if ((p - c).norm() < 0.3 / std::sqrt(2.0)) ++inner;
  }
  // Half the area lies within r / sqrt(2).
  CHECK(std::abs(static_cast<double>(inner) / n - 0.5) < 0.02);
}

TEST_CASE("uniform cross-flow: ON matches the brute-force constant-heading optimum") {
  const double vs = 1.0, w = 0.5, D = 5.0;
  const auto flow = FlowField::uniform(Vec2(0.0, w));
  auto g = line_geometry(D, vs, 0.2);

  // Oracle: straight paths at 10^4 constant headings.
  auto brute = [&](double radius) {
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < 10000; ++j) {
      const double th = kTwoPi * j / 10000;
      const Vec2 v(vs * std::cos(th), vs * std::sin(th) + w);
      if (auto t = first_entry(g.start, v, g.target, radius)) best = std::min(best, *t);
    }
    return best;
  };
  const double best = brute(g.target_radius);
  // Point-target closed form D / (V_s cos theta), sin theta = -w / V_s, checks the oracle.
  const double closed = D / (vs * std::cos(std::asin(-w / vs)));
  CHECK(best < closed);
  CHECK(brute(0.01) == doctest::Approx(closed).epsilon(3e-3));

  ShootingConfig cfg;
  cfg.n_starts = 1;
  cfg.fixed_start = true;
  const auto res = on_shooting(flow, g, cfg);
  REQUIRE(res.best);
  CHECK(std::abs(res.trajectories[*res.best].duration / best - 1.0) < 0.01);
}

TEST_CASE("ON trajectories are rotation covariant") {
  EpisodeGeometry g;
  g.start = Vec2(0.7, 0.4);
  g.target = Vec2(4.0, 2.5);
  g.target_radius = 0.2;
  g.slip_speed = 0.5;
  g.max_time = 12.0;
  OnOptions opt;
  opt.stop_at_target = false;
  opt.dt = 0.01;

  auto compare = [&](const FlowField& a, const FlowField& b, double angle) {
    auto gb = g;
    gb.start = rot(g.start, angle);
    gb.target = rot(g.target, angle);
    const double th = 0.3;
    const auto ta = integrate_on(a, g.start, th, g, opt);
    const auto tb = integrate_on(b, gb.start, th + angle, gb, opt);
    REQUIRE(ta.samples.size() == tb.samples.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < ta.samples.size(); ++i) {
      CHECK(ta.samples[i].t == tb.samples[i].t);
      worst = std::max(worst, (rot(ta.samples[i].state.position, angle) -
                               tb.samples[i].state.position).norm());
    }
    CHECK(worst < 1e-8);
  };

  SUBCASE("mode sum rotated by 90 degrees") {
    std::vector<FourierMode> rotated;
    for (auto m : test_modes()) rotated.push_back(FourierMode{-m.ky, m.kx, m.amplitude, m.phase, 0.0});
    compare(FlowField::from_modes(test_modes()), FlowField::from_modes(rotated), kPi / 2);
  }
  SUBCASE("Taylor-Green rotated by 180 degrees") {
    compare(FlowField::taylor_green(0.8), FlowField::taylor_green(0.8), kPi);
  }
  SUBCASE("uniform flow at an arbitrary angle") {
    const Vec2 u(0.2, -0.1);
    compare(FlowField::uniform(u), FlowField::uniform(rot(u, 0.77)), 0.77);
  }
}

TEST_CASE("RK4 step halving leaves quiescent arrival times unchanged") {
  const auto g = line_geometry(5.0, 0.8, 0.3);
  OnOptions a, b;
  a.dt = 0.02;
  b.dt = 0.01;
  const auto ta = integrate_on(FlowField::quiescent(), g.start, 0.0, g, a);
  const auto tb = integrate_on(FlowField::quiescent(), g.start, 0.0, g, b);
  CHECK(std::abs(ta.duration / tb.duration - 1.0) < 1e-6);

  const Control aim{true, 0.0};
  Fixed c(0);
  EpisodeTiming ea, eb;
  ea.substeps = 10;
  eb.substeps = 20;
  const auto ra = run_episode(FlowField::quiescent(), c, std::span(&aim, 1), g, ea, g.start);
  const auto rb = run_episode(FlowField::quiescent(), c, std::span(&aim, 1), g, eb, g.start);
  REQUIRE(ra.reached());
  CHECK(std::abs(ra.duration / rb.duration - 1.0) < 1e-6);
}

TEST_CASE("engine-off episodes coincide with passive tracers") {
  flow::SpectrumSpec spec;
  spec.seed = 4;
  const auto f = flow::generate_snapshot(spec);
  auto g = line_geometry(30.0, 0.5);
  g.max_time = 6.0;
  const std::vector<Control> controls{{true, 0.0}, {false, 0.0}};
  Fixed off(1);
  EpisodeTiming timing;
  const auto tr = run_episode(f, off, controls, g, timing, g.start);
  CHECK(tr.power_on_time == 0.0);
  CHECK(tr.off_decisions == tr.decisions);

  // Tracer: plain RK4 of dx/dt = u(x) on the same substep grid.
  Vec2 x = g.start;
  const double h = timing.decision_interval / timing.substeps;
  std::size_t next = 1;
  for (int k = 0; k < 30; ++k) {
    // Same substep clock as the episode runner.
    const double t_start = k * timing.decision_interval;
    double t = t_start;
    for (int i = 1; i <= timing.substeps; ++i) {
      const double t_next =
          i == timing.substeps ? (k + 1) * timing.decision_interval : t_start + i * h;
      const double dt = t_next - t;
      const Vec2 k1 = f.velocity(x, t);
      const Vec2 k2 = f.velocity(x + 0.5 * dt * k1, t + 0.5 * dt);
      const Vec2 k3 = f.velocity(x + 0.5 * dt * k2, t + 0.5 * dt);
      const Vec2 k4 = f.velocity(x + dt * k3, t + dt);
      x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t = t_next;
    }
    REQUIRE(next < tr.samples.size());
    CHECK(tr.samples[next].state.position == x);
    ++next;
  }
}

TEST_CASE("run_episode bookkeeping") {
  const auto g = line_geometry(3.0, 1.0, 0.1);
  const double tfree = free_flight_time(g);

  SUBCASE("aiming at the target arrives within one decision interval of T_free") {
    const Control aim{true, 0.0};
    Fixed c(0);
    EpisodeTiming timing;
    const auto tr = run_episode(FlowField::quiescent(), c, std::span(&aim, 1), g, timing, g.start);
    REQUIRE(tr.reached());
    CHECK(std::abs(tr.duration - tfree) <= timing.decision_interval);
    CHECK(tr.power_on_time == doctest::Approx(tr.duration).epsilon(1e-14));
    // Completed intervals plus the final partial one.
    const double completed = (tr.decisions - 1) * timing.decision_interval;
    CHECK(tr.duration > completed);
    CHECK(tr.duration <= completed + timing.decision_interval + 1e-12);
    CHECK((tr.end() - g.target).norm() <= g.target_radius + 1e-12);
  }
  SUBCASE("engine always off fails at T_max with no power time") {
    const std::vector<Control> controls{{true, 0.0}, {false, 0.0}};
    Fixed c(1);
    const auto tr = run_episode(FlowField::quiescent(), c, controls, g, {}, g.start);
    CHECK(tr.outcome == Outcome::Failed);
    CHECK(tr.duration == doctest::Approx(g.max_time));
    CHECK(tr.power_on_time == 0.0);
  }
  SUBCASE("engine always on but wrong way") {
    const Control back{true, kPi};
    Fixed c(0);
    const auto tr = run_episode(FlowField::quiescent(), c, std::span(&back, 1), g, {}, g.start);
    CHECK(tr.outcome == Outcome::Failed);
    CHECK(tr.power_on_time == doctest::Approx(tr.duration));
    CHECK(tr.power_on_time <= tr.duration);
  }
  SUBCASE("out-of-range action is a contract violation") {
    const Control aim{true, 0.0};
    Fixed bad(3), neg(-1);
    CHECK_THROWS_AS(run_episode(FlowField::quiescent(), bad, std::span(&aim, 1), g, {}, g.start),
                    ContractViolation);
    CHECK_THROWS_AS(run_episode(FlowField::quiescent(), neg, std::span(&aim, 1), g, {}, g.start),
                    ContractViolation);
  }
  SUBCASE("rewards are passed the actual step length") {
    const Control aim{true, 0.0};
    Fixed c(0);
    double sum_dt = 0.0;
    const auto tr = run_episode(FlowField::quiescent(), c, std::span(&aim, 1), g, {}, g.start,
                                [&](const Vec2&, const Vec2&, double dt, bool) {
                                  sum_dt += dt;
                                  return -dt;
                                });
    CHECK(sum_dt == doctest::Approx(tr.duration).epsilon(1e-14));
  }
}
