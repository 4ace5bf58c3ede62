#include "znav/config.hpp"

#include <openssl/evp.h>

#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "znav/binary_io.hpp"

namespace znav::cli {

namespace {

// Reads typed fields from one mapping and rejects keys nobody asked for.
class Section {
 public:
  Section(const YAML::Node& node, std::string name) : node_(node), name_(std::move(name)) {
    if (node_ && !node_.IsMap()) throw ConfigError(name_, "must be a mapping");
  }

  std::string key(const std::string& k) const { return name_.empty() ? k : name_ + "." + k; }

  template <typename T>
  void get(const std::string& k, T& out) {
    seen_.insert(k);
    if (!node_ || !node_[k]) return;
    try {
      out = node_[k].as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(key(k), "has the wrong type");
    }
  }

  void get(const std::string& k, flow::Vec2& out) {
    std::vector<double> v{out.x(), out.y()};
    get(k, v);
    if (v.size() != 2) throw ConfigError(key(k), "must be a two-element list");
    out = flow::Vec2(v[0], v[1]);
  }

  void get(const std::string& k, std::optional<double>& out) {
    seen_.insert(k);
    if (!node_ || !node_[k]) return;
    double v = 0.0;
    get(k, v);
    out = v;
  }

  Section child(const std::string& k) {
    seen_.insert(k);
    return Section(node_ ? node_[k] : YAML::Node(), key(k));
  }

  bool has(const std::string& k) const { return node_ && node_[k]; }

  void reject_unknown() const {
    if (!node_) return;
    for (const auto& kv : node_) {
      const auto k = kv.first.as<std::string>();
      if (!seen_.count(k)) throw ConfigError(key(k), "unknown key");
    }
  }

 private:
  YAML::Node node_;
  std::string name_;
  std::set<std::string> seen_;
};

FlowKind parse_flow_kind(const std::string& s) {
  if (s == "snapshot") return FlowKind::Snapshot;
  if (s == "unsteady") return FlowKind::Unsteady;
  if (s == "import") return FlowKind::Import;
  if (s == "quiescent") return FlowKind::Quiescent;
  if (s == "uniform") return FlowKind::Uniform;
  if (s == "taylor_green") return FlowKind::TaylorGreen;
  throw ConfigError("flow.kind",
                    "must be one of snapshot, unsteady, import, quiescent, uniform, taylor_green");
}

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream out;
  static const char* hex = "0123456789abcdef";
  for (unsigned int i = 0; i < len; ++i) out << hex[digest[i] >> 4] << hex[digest[i] & 0xf];
  return out.str();
}

void validate(const ExperimentConfig& c) {
  const auto& f = c.flow;
  require(f.period > 0.0, "flow.period", "must be > 0");
  if (f.kind == FlowKind::Snapshot || f.kind == FlowKind::Unsteady) {
    require(f.spectrum.k_min >= 1, "flow.k_min", "must be >= 1");
    require(f.spectrum.k_max > f.spectrum.k_min, "flow.k_max", "must exceed flow.k_min");
    require(f.spectrum.slope < 0.0, "flow.slope", "must be < 0");
    require(f.spectrum.energy_scale > 0.0, "flow.energy_scale", "must be > 0");
  }
  if (f.kind == FlowKind::Unsteady) {
    require(f.decorrelation_time > 0.0, "flow.decorrelation_time", "must be > 0");
    require(f.horizon > 0.0, "flow.horizon", "must be > 0");
  }
  if (f.kind == FlowKind::Import) {
    require(!f.path.empty(), "flow.path", "is required for kind import");
    require(std::filesystem::exists(f.path), "flow.path",
            "file '" + f.path.string() + "' does not exist");
  }

  const auto& g = c.geometry;
  require(g.start_radius >= 0.0, "geometry.start_radius", "must be >= 0");
  require(g.target_radius > 0.0, "geometry.target_radius", "must be > 0");
  require((g.target - g.start).norm() > g.start_radius + g.target_radius, "geometry.target",
          "target disc overlaps the start disc");
  if (g.slip_speed) {
    require(*g.slip_speed > 0.0, "geometry.slip_speed", "must be > 0");
  } else {
    require(g.slip_ratio > 0.0 && g.slip_ratio <= 1.0, "geometry.slip_ratio",
            "must be in (0, 1]");
  }
  require(g.max_time_factor > 0.0, "geometry.max_time_factor", "must be > 0");

  const auto& r = c.rl;
  require(r.coder.nx >= 1, "rl.tiles", "tile counts must be >= 1");
  require(r.coder.ny >= 1, "rl.tiles", "tile counts must be >= 1");
  require(r.coder.tile_size > 0.0, "rl.tile_size", "must be > 0");
  require(r.lambda >= 0.0, "rl.lambda", "must be >= 0");
  require(r.decision_interval > 0.0, "rl.decision_interval", "must be > 0");
  require(r.substeps >= 1, "rl.substeps", "must be >= 1");
  require(r.actor_lr > 0.0, "rl.actor_lr", "must be > 0");
  require(r.critic_lr > 0.0, "rl.critic_lr", "must be > 0");
  require(r.episodes >= 1, "rl.episodes", "must be >= 1");

  require(c.evaluation.n_traj >= 0, "evaluation.n_traj", "must be >= 0");

  require(c.on.n_angles >= 1, "on.n_angles", "must be >= 1");
  require(c.on.n_starts >= 1, "on.n_starts", "must be >= 1");
  require(c.on.dt > 0.0, "on.dt", "must be > 0");
  require(c.on.record_stride >= 0, "on.record_stride", "must be >= 0");

  require(c.stats.bins >= 1, "stats.bins", "must be >= 1");
  require(c.stats.range > 0.0, "stats.range", "must be > 0");
  require(c.stats.pixel > 0.0, "stats.pixel", "must be > 0");
  require(c.stats.ow_points_per_period >= 2, "stats.ow_points_per_period", "must be >= 2");
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("config", std::string("YAML parse error: ") + e.what());
  }
  if (root && !root.IsNull() && !root.IsMap()) throw ConfigError("config", "must be a mapping");

  ExperimentConfig c;
  Section top(root, "");

  std::string output_dir = c.output_dir.string();
  top.get("output_dir", output_dir);
  c.output_dir = base_dir / output_dir;

  {
    Section s = top.child("flow");
    std::string kind = "snapshot";
    s.get("kind", kind);
    c.flow.kind = parse_flow_kind(kind);
    s.get("k_min", c.flow.spectrum.k_min);
    s.get("k_max", c.flow.spectrum.k_max);
    s.get("slope", c.flow.spectrum.slope);
    s.get("energy_scale", c.flow.spectrum.energy_scale);
    s.get("seed", c.flow.spectrum.seed);
    s.get("decorrelation_time", c.flow.decorrelation_time);
    s.get("horizon", c.flow.horizon);
    std::string path;
    s.get("path", path);
    if (!path.empty()) c.flow.path = base_dir / path;
    s.get("drift", c.flow.drift);
    s.get("amplitude", c.flow.amplitude);
    s.get("period", c.flow.period);
    s.reject_unknown();
  }
  {
    Section s = top.child("geometry");
    s.get("start", c.geometry.start);
    s.get("target", c.geometry.target);
    s.get("start_radius", c.geometry.start_radius);
    s.get("target_radius", c.geometry.target_radius);
    s.get("slip_ratio", c.geometry.slip_ratio);
    s.get("slip_speed", c.geometry.slip_speed);
    s.get("max_time_factor", c.geometry.max_time_factor);
    s.reject_unknown();
  }
  {
    Section s = top.child("rl");
    std::vector<int> tiles{c.rl.coder.nx, c.rl.coder.ny};
    s.get("tiles", tiles);
    if (tiles.size() != 2) throw ConfigError("rl.tiles", "must be a two-element list");
    c.rl.coder.nx = tiles[0];
    c.rl.coder.ny = tiles[1];
    c.rl.coder.tile_size = c.flow.period / 10.0;
    s.get("tile_size", c.rl.coder.tile_size);
    s.get("origin", c.rl.coder.origin);
    s.get("include_off", c.rl.include_off);
    s.get("lambda", c.rl.lambda);
    s.get("decision_interval", c.rl.decision_interval);
    s.get("substeps", c.rl.substeps);
    s.get("actor_lr", c.rl.actor_lr);
    s.get("critic_lr", c.rl.critic_lr);
    s.get("lr_decay", c.rl.lr_decay);
    s.get("episodes", c.rl.episodes);
    s.get("seed", c.rl.seed);
    s.reject_unknown();
  }
  {
    Section s = top.child("evaluation");
    s.get("n_traj", c.evaluation.n_traj);
    std::string mode = "stochastic";
    s.get("mode", mode);
    if (mode == "stochastic") {
      c.evaluation.mode = rl::EvalMode::Stochastic;
    } else if (mode == "greedy") {
      c.evaluation.mode = rl::EvalMode::Greedy;
    } else {
      throw ConfigError("evaluation.mode", "must be 'stochastic' or 'greedy'");
    }
    s.get("seed", c.evaluation.seed);
    s.get("fixed_start", c.evaluation.fixed_start);
    s.get("dump_trajectories", c.evaluation.dump_trajectories);
    s.reject_unknown();
  }
  {
    Section s = top.child("on");
    s.get("n_angles", c.on.n_angles);
    s.get("n_starts", c.on.n_starts);
    s.get("seed", c.on.seed);
    s.get("dt", c.on.dt);
    s.get("fixed_start", c.on.fixed_start);
    s.get("record_stride", c.on.record_stride);
    s.reject_unknown();
  }
  {
    Section s = top.child("stats");
    s.get("bins", c.stats.bins);
    s.get("range", c.stats.range);
    c.stats.pixel = c.flow.period / 20.0;
    s.get("pixel", c.stats.pixel);
    s.get("ow_points_per_period", c.stats.ow_points_per_period);
    s.reject_unknown();
  }
  top.reject_unknown();

  c.hash = sha256_hex(text);
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("config", e.what());
  }
  return parse_config(text, path.parent_path().empty() ? "." : path.parent_path());
}

}  // namespace znav::cli
