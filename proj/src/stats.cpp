#include "znav/stats.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "znav/binary_io.hpp"
#include "znav/errors.hpp"

namespace znav::stats {

std::vector<double> Histogram::edges() const {
  std::vector<double> e(counts.size() + 1);
  for (std::size_t i = 0; i <= counts.size(); ++i) e[i] = lo + width() * static_cast<double>(i);
  return e;
}

std::vector<double> Histogram::density() const {
  std::vector<double> d(mass.size());
  for (std::size_t i = 0; i < mass.size(); ++i) d[i] = mass[i] / width();
  return d;
}

std::optional<double> median(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

EnsembleSummary summarize(std::span<const Trajectory> trajectories, double free_flight_time,
                          int n_bins, double range_hi) {
  if (n_bins < 1) throw ParameterError("summarize: n_bins must be >= 1");
  if (!(free_flight_time > 0.0)) throw ParameterError("summarize: T_free must be > 0");
  if (!(range_hi > 0.0)) throw ParameterError("summarize: histogram range must be > 0");

  EnsembleSummary s;
  s.free_flight_time = free_flight_time;
  s.n_total = trajectories.size();
  for (Histogram* h : {&s.arrival_pdf, &s.power_pdf}) {
    h->lo = 0.0;
    h->hi = range_hi;
    h->counts.assign(static_cast<std::size_t>(n_bins), 0);
    h->mass.assign(static_cast<std::size_t>(n_bins), 0.0);
  }

  const auto bin_of = [&](double x, bool& clipped) {
    const double pos = x / range_hi * n_bins;
    clipped = pos < 0.0 || pos >= n_bins;
    return static_cast<std::size_t>(std::clamp(static_cast<int>(std::floor(pos)), 0, n_bins - 1));
  };

  std::vector<double> arrivals, powers;
  for (const auto& tr : trajectories) {
    if (!tr.reached()) {
      ++s.n_failed;
      continue;
    }
    bool clip_t = false, clip_p = false;
    ++s.arrival_pdf.counts[bin_of(tr.duration / free_flight_time, clip_t)];
    ++s.power_pdf.counts[bin_of(tr.power_on_time / free_flight_time, clip_p)];
    if (clip_t || clip_p) ++s.n_clipped;
    arrivals.push_back(tr.duration);
    powers.push_back(tr.power_on_time);
  }
  if (s.n_total > 0) {
    const auto n = static_cast<double>(s.n_total);
    for (Histogram* h : {&s.arrival_pdf, &s.power_pdf})
      for (std::size_t i = 0; i < h->counts.size(); ++i)
        h->mass[i] = static_cast<double>(h->counts[i]) / n;
  }
  s.median_arrival = median(std::move(arrivals));
  s.median_power = median(std::move(powers));
  return s;
}

namespace {

nlohmann::json histogram_json(const Histogram& h) {
  return {{"edges", h.edges()}, {"counts", h.counts}, {"mass", h.mass}, {"density", h.density()}};
}

nlohmann::json optional_json(const std::optional<double>& x) {
  return x ? nlohmann::json(*x) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const EnsembleSummary& s) {
  return {
      {"n_total", s.n_total},
      {"n_failed", s.n_failed},
      {"failure_rate", s.failure_rate()},
      {"free_flight_time", s.free_flight_time},
      {"n_clipped", s.n_clipped},
      {"median_T", optional_json(s.median_arrival)},
      {"median_T_pow", optional_json(s.median_power)},
      {"arrival_pdf", histogram_json(s.arrival_pdf)},
      {"power_pdf", histogram_json(s.power_pdf)},
  };
}

// ---------------------------------------------------------------------------

OccupancyGrid::OccupancyGrid(const Bounds& bounds, double pixel_size)
    : origin(bounds.lo), pixel(pixel_size) {
  if (!(pixel > 0.0)) throw ParameterError("occupancy: pixel must be > 0");
  const Vec2 extent = bounds.hi - bounds.lo;
  if (!(extent.x() > 0.0 && extent.y() > 0.0))
    throw ParameterError("occupancy: bounds must have positive extent");
  nx = static_cast<int>(std::ceil(extent.x() / pixel - 1e-12));
  ny = static_cast<int>(std::ceil(extent.y() / pixel - 1e-12));
  time.assign(static_cast<std::size_t>(nx) * ny, 0.0);
}

double OccupancyGrid::total() const {
  double sum = outside_time;
  for (double t : time) sum += t;
  return sum;
}

void OccupancyGrid::accumulate(const Trajectory& traj) {
  const auto& samples = traj.samples;
  std::vector<double> cuts;
  for (std::size_t k = 1; k < samples.size(); ++k) {
    const Vec2 p0 = (samples[k - 1].state.position - origin) / pixel;
    const Vec2 p1 = (samples[k].state.position - origin) / pixel;
    const double dt = samples[k].t - samples[k - 1].t;
    if (!(dt > 0.0)) continue;

    // Parameters in (0, 1) where the segment crosses pixel boundaries.
    cuts.assign({0.0, 1.0});
    for (int axis = 0; axis < 2; ++axis) {
      const double a = p0[axis], b = p1[axis];
      if (a == b) continue;
      const double lo = std::min(a, b), hi = std::max(a, b);
      for (double line = std::floor(lo) + 1.0; line < hi; line += 1.0) {
        cuts.push_back((line - a) / (b - a));
      }
    }
    std::sort(cuts.begin(), cuts.end());

    for (std::size_t c = 1; c < cuts.size(); ++c) {
      const double frac = cuts[c] - cuts[c - 1];
      if (frac <= 0.0) continue;
      const double mid = 0.5 * (cuts[c] + cuts[c - 1]);
      const Vec2 q = p0 + mid * (p1 - p0);
      const int i = static_cast<int>(std::floor(q.x()));
      const int j = static_cast<int>(std::floor(q.y()));
      if (i >= 0 && j >= 0 && i < nx && j < ny) {
        at(i, j) += frac * dt;
      } else {
        outside_time += frac * dt;
      }
    }
  }
}

OccupancyGrid& OccupancyGrid::operator+=(const OccupancyGrid& other) {
  if (other.nx != nx || other.ny != ny || other.pixel != pixel || other.origin != origin)
    throw ParameterError("occupancy grids have different layouts");
  for (std::size_t i = 0; i < time.size(); ++i) time[i] += other.time[i];
  outside_time += other.outside_time;
  return *this;
}

OccupancyGrid occupancy(std::span<const Trajectory> trajectories, double pixel,
                        const Bounds& bounds) {
  OccupancyGrid grid(bounds, pixel);
  for (const auto& tr : trajectories) grid.accumulate(tr);
  return grid;
}

void write_occupancy_csv(const OccupancyGrid& grid, std::ostream& out) {
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      if (i > 0) out << ',';
      out << io::fmt_double(grid.at(i, j));
    }
    out << '\n';
  }
}

nlohmann::json occupancy_sidecar(const OccupancyGrid& grid) {
  return {{"origin", {grid.origin.x(), grid.origin.y()}},
          {"pixel", grid.pixel},
          {"nx", grid.nx},
          {"ny", grid.ny},
          {"row_order", "row j holds y in [origin_y + j*pixel, origin_y + (j+1)*pixel)"},
          {"outside_time", grid.outside_time},
          {"total_time", grid.total()}};
}

// ---------------------------------------------------------------------------

SensitivityCurve sensitivity(const flow::FlowField& flow, const nav::EpisodeGeometry& geometry,
                             const Vec2& start, double theta0, double epsilon,
                             const SensitivityConfig& config) {
  if (!(epsilon > 0.0)) throw ParameterError("sensitivity: epsilon must be > 0");
  if (!(config.horizon > 0.0)) throw ParameterError("sensitivity: horizon must be > 0");

  nav::EpisodeGeometry g = geometry;
  g.max_time = config.horizon;
  nav::OnOptions opts;
  opts.dt = config.dt;
  opts.t0 = config.t0;
  opts.record_stride = 1;
  opts.stop_at_target = false;

  const auto a = nav::integrate_on(flow, start, theta0, g, opts);
  const auto b = nav::integrate_on(flow, start, theta0 + epsilon, g, opts);

  SensitivityCurve curve;
  curve.threshold = config.threshold_factor * epsilon * config.length_scale;
  const std::size_t n = std::min(a.samples.size(), b.samples.size());
  for (std::size_t k = 0; k < n; ++k) {
    const double t = a.samples[k].t;
    const double sep = (a.samples[k].state.position - b.samples[k].state.position).norm();
    curve.times.push_back(t);
    curve.separation.push_back(sep);
    if (!curve.crossing_time && sep > curve.threshold) curve.crossing_time = t;
  }

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (curve.times[k] < 0.5 * config.horizon || !(curve.separation[k] > 0.0)) continue;
    const double x = curve.times[k], y = std::log(curve.separation[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count >= 2) curve.growth_rate = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  return curve;
}

}  // namespace znav::stats
