#include "znav/experiment.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "znav/binary_io.hpp"
#include "znav/errors.hpp"

namespace znav::cli {

namespace fs = std::filesystem;

flow::FlowField build_flow(const ExperimentConfig& c) {
  const auto& f = c.flow;
  switch (f.kind) {
    case FlowKind::Snapshot:
      return flow::generate_snapshot(f.spectrum, f.period);
    case FlowKind::Unsteady:
      return flow::generate_unsteady(f.spectrum, f.decorrelation_time, f.period, f.horizon);
    case FlowKind::Import:
      return flow::import_flow(f.path);
    case FlowKind::Quiescent:
      return flow::FlowField::quiescent(f.period);
    case FlowKind::Uniform:
      return flow::FlowField::uniform(f.drift, f.period);
    case FlowKind::TaylorGreen:
      return flow::FlowField::taylor_green(f.amplitude, f.period);
  }
  throw ConfigError("flow.kind", "unsupported");
}

Setup resolve(const ExperimentConfig& c) { return resolve(c, build_flow(c)); }

Setup resolve(const ExperimentConfig& c, flow::FlowField field) {
  validate(c);
  Setup s{std::move(field), 0.0, {}, 0.0, {}, {}, {}, {}, {}, {}, {}};
  s.u_max = flow::u_max(s.flow, 0.0);

  auto& g = s.geometry;
  g.start = c.geometry.start;
  g.target = c.geometry.target;
  g.start_radius = c.geometry.start_radius;
  g.target_radius = c.geometry.target_radius;
  if (c.geometry.slip_speed) {
    g.slip_speed = *c.geometry.slip_speed;
  } else {
    g.slip_speed = c.geometry.slip_ratio * s.u_max;
    if (!(g.slip_speed > 0.0))
      throw ConfigError("geometry.slip_ratio",
                        "flow has u_max = 0; set geometry.slip_speed instead");
  }
  s.free_flight_time = nav::free_flight_time(g);
  g.max_time = c.geometry.max_time_factor * s.free_flight_time;
  g.validate();

  s.coder = c.rl.coder;
  s.actions = rl::ActionSet::compass(c.rl.include_off);

  s.reward.energy_weight = c.rl.lambda;
  s.reward.nominal_speed = g.slip_speed;
  s.reward.decision_interval = c.rl.decision_interval;
  s.reward.target = g.target;

  s.train.actor_lr = c.rl.actor_lr;
  s.train.critic_lr = c.rl.critic_lr;
  s.train.lr_decay = c.rl.lr_decay;
  s.train.n_episodes = c.rl.episodes;
  s.train.seed = c.rl.seed;
  s.train.substeps = c.rl.substeps;

  s.eval.n_traj = c.evaluation.n_traj;
  s.eval.mode = c.evaluation.mode;
  s.eval.seed = c.evaluation.seed;
  s.eval.fixed_start = c.evaluation.fixed_start;
  s.eval.substeps = c.rl.substeps;
  s.eval.record_stride = 1;

  s.shooting.n_angles = c.on.n_angles;
  s.shooting.n_starts = c.on.n_starts;
  s.shooting.seed = c.on.seed;
  s.shooting.fixed_start = c.on.fixed_start;
  s.shooting.on.dt = c.on.dt;
  s.shooting.on.record_stride = 0;

  s.arena.lo = s.coder.origin;
  s.arena.hi = s.coder.origin + s.coder.tile_size * flow::Vec2(s.coder.nx, s.coder.ny);
  return s;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void ensure_dir(const fs::path& dir) { fs::create_directories(dir); }

nlohmann::json setup_json(const Setup& s) {
  return {{"u_max", s.u_max},
          {"slip_speed", s.geometry.slip_speed},
          {"free_flight_time", s.free_flight_time},
          {"max_time", s.geometry.max_time}};
}

// Mean T / T_free and T_pow / T_free over consecutive windows of the training log.
nlohmann::json training_curve(const rl::TrainLog& log, double t_free, int windows) {
  nlohmann::json out = nlohmann::json::array();
  const auto n = static_cast<int>(log.episodes.size());
  const int w = std::max(1, n / windows);
  for (int start = 0; start < n; start += w) {
    const int end = std::min(n, start + w);
    double t = 0.0, p = 0.0;
    int failed = 0;
    for (int i = start; i < end; ++i) {
      t += log.episodes[i].arrival_time;
      p += log.episodes[i].power_on_time;
      failed += log.episodes[i].outcome == nav::Outcome::Failed ? 1 : 0;
    }
    const double m = end - start;
    out.push_back({{"first_episode", start},
                   {"last_episode", end - 1},
                   {"mean_T_over_Tfree", t / m / t_free},
                   {"mean_Tpow_over_Tfree", p / m / t_free},
                   {"failed", failed}});
  }
  return out;
}

fs::path policy_or_default(const ExperimentConfig& c, const std::optional<fs::path>& p) {
  return p ? *p : c.output_dir / "policy.znp";
}

}  // namespace

void write_trajectories_csv(std::span<const nav::Trajectory> trajectories, std::ostream& out) {
  out << "trajectory_id,t,x,y,theta,engine_on,action_id,reward\n";
  for (std::size_t id = 0; id < trajectories.size(); ++id) {
    for (const auto& s : trajectories[id].samples) {
      out << id << ',' << io::fmt_double(s.t) << ',' << io::fmt_double(s.state.position.x())
          << ',' << io::fmt_double(s.state.position.y()) << ',' << io::fmt_double(s.state.heading)
          << ',' << (s.state.engine_on ? 1 : 0) << ',' << s.action << ','
          << io::fmt_double(s.reward) << '\n';
    }
  }
}

void write_outcomes_csv(std::span<const nav::Trajectory> trajectories, std::ostream& out) {
  out << "trajectory_id,outcome,T,T_pow,start_x,start_y\n";
  for (std::size_t id = 0; id < trajectories.size(); ++id) {
    const auto& t = trajectories[id];
    out << id << ',' << (t.reached() ? "reached" : "failed") << ',' << io::fmt_double(t.duration)
        << ',' << io::fmt_double(t.power_on_time) << ',' << io::fmt_double(t.start().x()) << ','
        << io::fmt_double(t.start().y()) << '\n';
  }
}

void write_manifest(const ExperimentConfig& c, const std::string& command,
                    const std::vector<fs::path>& files) {
  ensure_dir(c.output_dir);
  const fs::path path = c.output_dir / "manifest.json";
  nlohmann::json m;
  if (fs::exists(path)) {
    try {
      m = nlohmann::json::parse(io::read_file(path));
    } catch (const std::exception&) {
      m = nlohmann::json();
    }
    if (!m.is_object() || m.value("config_hash", std::string()) != c.hash) m = nlohmann::json();
  }
  m["config_hash"] = c.hash;
  nlohmann::json list = nlohmann::json::array();
  for (const auto& f : files) list.push_back(fs::relative(f, c.output_dir).generic_string());
  m["commands"][command] = list;
  write_json(path, m);
}

CommandResult cmd_gen_flow(const ExperimentConfig& c, const std::optional<fs::path>& out_path,
                           std::ostream& log) {
  validate(c);
  ensure_dir(c.output_dir);
  const auto field = build_flow(c);
  const fs::path path = out_path ? *out_path : c.output_dir / "flow.znf";
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  flow::export_flow(field, path);

  CommandResult r;
  r.files.push_back(path);
  r.report["u_max"] = flow::u_max(field, 0.0);
  if (const auto& spec = field.spectrum()) {
    const int n = std::max(64, 4 * spec->k_max + 4);
    const auto spectrum = flow::measure_spectrum(field, 0.0, n);
    const int lo = spec->k_max - spec->k_min >= 4 ? spec->k_min + 1 : spec->k_min;
    const int hi = spec->k_max - spec->k_min >= 4 ? spec->k_max - 1 : spec->k_max;
    const double slope = flow::fit_spectral_slope(spectrum, lo, hi);
    r.report["fitted_slope"] = slope;
    r.report["fit_range"] = {lo, hi};
    r.report["shell_energy"] = spectrum.energy;
  }
  const fs::path info = c.output_dir / "flow_info.json";
  write_json(info, r.report);
  r.files.push_back(info);

  log << "u_max " << io::fmt_double(r.report["u_max"].get<double>()) << '\n';
  if (r.report.contains("fitted_slope"))
    log << "fitted spectral slope " << io::fmt_double(r.report["fitted_slope"].get<double>())
        << '\n';
  write_manifest(c, "gen-flow", r.files);
  return r;
}

CommandResult cmd_train(const ExperimentConfig& c, std::ostream& log) {
  const Setup s = resolve(c);
  ensure_dir(c.output_dir);
  const auto result = rl::train(s.flow, s.geometry, s.coder, s.actions, s.reward, s.train);

  CommandResult r;
  const fs::path policy = c.output_dir / "policy.znp";
  rl::save_policy(result.params, s.coder, s.actions, policy);
  r.files.push_back(policy);

  const fs::path log_path = c.output_dir / "train_log.csv";
  {
    auto out = open_out(log_path);
    rl::write_train_log_csv(result.log, out);
  }
  r.files.push_back(log_path);

  r.report = setup_json(s);
  r.report["episodes"] = result.log.episodes.size();
  r.report["training_curve"] = training_curve(result.log, s.free_flight_time, 10);
  const fs::path summary = c.output_dir / "train_summary.json";
  write_json(summary, r.report);
  r.files.push_back(summary);

  const auto& last = r.report["training_curve"].back();
  log << "trained " << result.log.episodes.size() << " episodes; final window mean T/T_free "
      << io::fmt_double(last["mean_T_over_Tfree"].get<double>()) << ", T_pow/T_free "
      << io::fmt_double(last["mean_Tpow_over_Tfree"].get<double>()) << '\n';
  write_manifest(c, "train", r.files);
  return r;
}

namespace {

struct EvalRun {
  std::vector<nav::Trajectory> trajectories;
  stats::EnsembleSummary summary;
};

EvalRun run_eval(const ExperimentConfig& c, const Setup& s, const fs::path& policy_path,
                 int record_stride) {
  rl::PolicyFile policy;
  try {
    policy = rl::load_policy(policy_path, s.coder, s.actions);
  } catch (const FormatError& e) {
    throw ConfigError("policy", e.what());
  }
  rl::EvalConfig ec = s.eval;
  ec.record_stride = record_stride;
  EvalRun run;
  run.trajectories =
      rl::evaluate(s.flow, policy.params, s.geometry, s.coder, s.actions, s.reward, ec);
  run.summary = stats::summarize(run.trajectories, s.free_flight_time, c.stats.bins, c.stats.range);
  return run;
}

}  // namespace

CommandResult cmd_eval(const ExperimentConfig& c, const std::optional<fs::path>& policy_path,
                       std::ostream& log) {
  const Setup s = resolve(c);
  ensure_dir(c.output_dir);
  const bool dump = c.evaluation.dump_trajectories;
  const EvalRun run = run_eval(c, s, policy_or_default(c, policy_path), dump ? 1 : 0);

  CommandResult r;
  r.report = stats::to_json(run.summary);
  r.report["setup"] = setup_json(s);
  long decisions = 0, off = 0;
  for (const auto& t : run.trajectories) {
    decisions += t.decisions;
    off += t.off_decisions;
  }
  r.report["off_action_fraction"] = decisions > 0 ? static_cast<double>(off) / decisions : 0.0;

  const fs::path summary = c.output_dir / "eval_summary.json";
  write_json(summary, r.report);
  r.files.push_back(summary);
  const fs::path outcomes = c.output_dir / "eval_outcomes.csv";
  {
    auto out = open_out(outcomes);
    write_outcomes_csv(run.trajectories, out);
  }
  r.files.push_back(outcomes);
  if (dump) {
    const fs::path traj = c.output_dir / "eval_trajectories.csv";
    auto out = open_out(traj);
    write_trajectories_csv(run.trajectories, out);
    r.files.push_back(traj);
  }

  log << "evaluated " << run.summary.n_total << " trajectories; failure rate "
      << io::fmt_double(run.summary.failure_rate()) << '\n';
  write_manifest(c, "eval", r.files);
  return r;
}

namespace {

struct OnRun {
  nav::ShootingResult shooting;
  stats::EnsembleSummary summary;
};

OnRun run_on(const ExperimentConfig& c, const Setup& s, int record_stride) {
  nav::ShootingConfig sc = s.shooting;
  sc.on.record_stride = record_stride;
  OnRun run;
  run.shooting = nav::on_shooting(s.flow, s.geometry, sc);
  run.summary = stats::summarize(run.shooting.trajectories, s.free_flight_time, c.stats.bins,
                                 c.stats.range);
  return run;
}

}  // namespace

CommandResult cmd_on(const ExperimentConfig& c, std::ostream& log) {
  const Setup s = resolve(c);
  ensure_dir(c.output_dir);
  const OnRun run = run_on(c, s, 0);

  CommandResult r;
  r.report = stats::to_json(run.summary);
  r.report["setup"] = setup_json(s);
  r.report["n_trajectories"] = run.shooting.trajectories.size();
  if (run.shooting.best) {
    r.report["best_index"] = *run.shooting.best;
    r.report["best_T"] = run.shooting.trajectories[*run.shooting.best].duration;
  } else {
    r.report["best_index"] = nullptr;
    r.report["best_T"] = nullptr;
  }

  const fs::path outcomes = c.output_dir / "on_outcomes.csv";
  {
    auto out = open_out(outcomes);
    write_outcomes_csv(run.shooting.trajectories, out);
  }
  r.files.push_back(outcomes);

  const fs::path summary_csv = c.output_dir / "on_summary.csv";
  {
    auto out = open_out(summary_csv);
    out << "n_total,fail_count,failure_rate,best_index,best_T\n";
    out << run.summary.n_total << ',' << run.summary.n_failed << ','
        << io::fmt_double(run.summary.failure_rate()) << ',';
    if (run.shooting.best) {
      out << *run.shooting.best << ','
          << io::fmt_double(run.shooting.trajectories[*run.shooting.best].duration);
    } else {
      out << ',';
    }
    out << '\n';
  }
  r.files.push_back(summary_csv);

  if (run.shooting.best) {
    // Re-integrate the winner at full resolution.
    const auto& best = run.shooting.trajectories[*run.shooting.best];
    nav::OnOptions opts = s.shooting.on;
    opts.record_stride = 1;
    const auto full =
        nav::integrate_on(s.flow, best.start(), best.samples.front().state.heading, s.geometry, opts);
    const fs::path best_path = c.output_dir / "on_best_trajectory.csv";
    auto out = open_out(best_path);
    const std::vector<nav::Trajectory> one{full};
    write_trajectories_csv(one, out);
    r.files.push_back(best_path);
  }

  const fs::path summary = c.output_dir / "on_summary.json";
  write_json(summary, r.report);
  r.files.push_back(summary);

  log << "ON shooting: " << run.summary.n_total << " trajectories, " << run.summary.n_failed
      << " failed";
  if (run.shooting.best)
    log << ", best T/T_free "
        << io::fmt_double(run.shooting.trajectories[*run.shooting.best].duration /
                          s.free_flight_time);
  log << '\n';
  write_manifest(c, "on", r.files);
  return r;
}

CommandResult cmd_compare(const ExperimentConfig& c, const std::optional<fs::path>& policy_path,
                          std::ostream& log) {
  const Setup s = resolve(c);
  ensure_dir(c.output_dir);
  const OnRun on = run_on(c, s, c.on.record_stride);
  const EvalRun rl_run = run_eval(c, s, policy_or_default(c, policy_path), 1);

  const auto on_grid = stats::occupancy(on.shooting.trajectories, c.stats.pixel, s.arena);
  const auto rl_grid = stats::occupancy(rl_run.trajectories, c.stats.pixel, s.arena);

  CommandResult r;
  r.report["setup"] = setup_json(s);
  r.report["on"] = stats::to_json(on.summary);
  r.report["rl"] = stats::to_json(rl_run.summary);
  r.report["on_failure_rate"] = on.summary.failure_rate();
  r.report["rl_failure_rate"] = rl_run.summary.failure_rate();
  r.report["on_best_T"] = on.shooting.best
                              ? nlohmann::json(on.shooting.trajectories[*on.shooting.best].duration)
                              : nlohmann::json(nullptr);
  r.report["on_occupancy"] = stats::occupancy_sidecar(on_grid);
  r.report["on_occupancy"]["time"] = on_grid.time;
  r.report["rl_occupancy"] = stats::occupancy_sidecar(rl_grid);
  r.report["rl_occupancy"]["time"] = rl_grid.time;

  const fs::path report = c.output_dir / "compare_report.json";
  write_json(report, r.report);
  r.files.push_back(report);
  for (const auto& [name, grid] : {std::pair{"on", &on_grid}, std::pair{"rl", &rl_grid}}) {
    const fs::path csv = c.output_dir / (std::string("occupancy_") + name + ".csv");
    {
      auto out = open_out(csv);
      stats::write_occupancy_csv(*grid, out);
    }
    const fs::path side = c.output_dir / (std::string("occupancy_") + name + ".json");
    write_json(side, stats::occupancy_sidecar(*grid));
    r.files.push_back(csv);
    r.files.push_back(side);
  }

  log << "failure rate ON " << io::fmt_double(on.summary.failure_rate()) << ", RL "
      << io::fmt_double(rl_run.summary.failure_rate()) << '\n';
  write_manifest(c, "compare", r.files);
  return r;
}

CommandResult cmd_ow_map(const ExperimentConfig& c, std::ostream& log) {
  validate(c);
  ensure_dir(c.output_dir);
  const auto field = build_flow(c);
  const rl::TileCoder& coder = c.rl.coder;
  const double h = field.period() / c.stats.ow_points_per_period;
  const int nx = static_cast<int>(std::round(coder.nx * coder.tile_size / h));
  const int ny = static_cast<int>(std::round(coder.ny * coder.tile_size / h));

  const fs::path csv = c.output_dir / "ow_map.csv";
  double lo = 0.0, hi = 0.0;
  {
    auto out = open_out(csv);
    out << "x,y,okubo_weiss,speed\n";
    for (int j = 0; j <= ny; ++j) {
      for (int i = 0; i <= nx; ++i) {
        const flow::Vec2 x = coder.origin + flow::Vec2(i * h, j * h);
        const auto sample = field.sample(x, 0.0);
        const double ow = flow::okubo_weiss(sample.gradient);
        lo = std::min(lo, ow);
        hi = std::max(hi, ow);
        out << io::fmt_double(x.x()) << ',' << io::fmt_double(x.y()) << ',' << io::fmt_double(ow)
            << ',' << io::fmt_double(sample.velocity.norm()) << '\n';
      }
    }
  }
  CommandResult r;
  r.files.push_back(csv);
  r.report = {{"spacing", h}, {"nx", nx + 1}, {"ny", ny + 1}, {"min", lo}, {"max", hi}};
  const fs::path side = c.output_dir / "ow_map.json";
  write_json(side, r.report);
  r.files.push_back(side);
  log << "Okubo-Weiss map " << nx + 1 << "x" << ny + 1 << " written\n";
  write_manifest(c, "ow-map", r.files);
  return r;
}

}  // namespace znav::cli
