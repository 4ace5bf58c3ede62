#include "znav/flowfield.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "znav/errors.hpp"

namespace znav::flow {

namespace {

double wrap(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0.0) r += period;
  // fmod of a tiny negative value can round up to the period itself.
  if (r >= period) r = 0.0;
  return r;
}

}  // namespace

void SpectrumSpec::validate() const {
  if (k_min < 1) throw ParameterError("spectrum: k_min must be >= 1");
  if (k_max <= k_min) throw ParameterError("spectrum: k_max must exceed k_min");
  if (!(slope < 0.0)) throw ParameterError("spectrum: slope must be negative");
  if (!(energy_scale > 0.0) || !std::isfinite(energy_scale))
    throw ParameterError("spectrum: energy_scale must be positive");
}

// ---------------------------------------------------------------------------
// ModeSum

ModeSum::ModeSum(std::vector<FourierMode> modes, double period, TemporalSettings temporal)
    : modes_(std::move(modes)), period_(period), temporal_(temporal) {
  if (!(period_ > 0.0)) throw ParameterError("flow period must be positive");
  if (!(temporal_.horizon > 0.0)) throw ParameterError("temporal horizon must be positive");
  if (temporal_.points_per_decorrelation < 1)
    throw ParameterError("temporal points_per_decorrelation must be >= 1");

  coeffs_.reserve(modes_.size());
  paths_.resize(modes_.size());
  for (std::size_t m = 0; m < modes_.size(); ++m) {
    const auto& mode = modes_[m];
    if (mode.kx == 0 && mode.ky == 0) throw ParameterError("mode wavevector must be nonzero");
    if (!(mode.amplitude >= 0.0)) throw ParameterError("mode amplitude must be >= 0");
    if (!(mode.decorrelation_rate >= 0.0))
      throw ParameterError("mode decorrelation rate must be >= 0");
    max_k_ = std::max({max_k_, std::abs(mode.kx), std::abs(mode.ky)});
    // a sin(theta + phase) = Re(-i a e^{i phase} e^{i theta})
    coeffs_.push_back(std::complex<double>(0.0, -mode.amplitude) *
                      std::polar(1.0, mode.phase));

    c_re_.push_back(coeffs_.back().real());
    c_im_.push_back(coeffs_.back().imag());
    kx_.push_back(mode.kx);
    ky_.push_back(mode.ky);

    if (mode.decorrelation_rate > 0.0) {
      time_dependent_ = true;
      const double rate = mode.decorrelation_rate;
      double step = std::min(1.0 / (rate * temporal_.points_per_decorrelation),
                             temporal_.horizon / 64.0);
      const auto n = static_cast<std::size_t>(std::ceil(temporal_.horizon / step)) + 1;
      step = temporal_.horizon / static_cast<double>(n - 1);

      std::seed_seq seq{static_cast<std::uint32_t>(temporal_.seed),
                        static_cast<std::uint32_t>(temporal_.seed >> 32),
                        static_cast<std::uint32_t>(m), 0x5eedu};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> normal(0.0, 1.0);
      const double rho = std::exp(-rate * step);
      const double kick = std::sqrt((1.0 - rho * rho) / 2.0);

      Path& path = paths_[m];
      path.step = step;
      path.values.resize(n);
      path.values[0] = 1.0;
      for (std::size_t j = 1; j < n; ++j) {
        const double re = normal(rng);
        const double im = normal(rng);
        path.values[j] = rho * path.values[j - 1] + kick * std::complex<double>(re, im);
      }
    }
  }
  for (const auto& mode : modes_) {
    ix_.push_back(max_k_ + mode.kx);
    iy_.push_back(max_k_ + mode.ky);
  }
}

std::complex<double> ModeSum::temporal_factor(std::size_t mode, double t) const {
  const Path& path = paths_[mode];
  if (path.values.empty()) return 1.0;
  const double tau = wrap(t, temporal_.horizon);
  const double pos = tau / path.step;
  auto j = static_cast<std::size_t>(pos);
  if (j >= path.values.size() - 1) j = path.values.size() - 2;
  const double frac = pos - static_cast<double>(j);
  return (1.0 - frac) * path.values[j] + frac * path.values[j + 1];
}

FlowSample ModeSum::sample(const Vec2& x, double t) const {
  const double g = kTwoPi / period_;
  const double ax = g * wrap(x.x(), period_);
  const double ay = g * wrap(x.y(), period_);

  // Powers e^{i m ax}, e^{i m ay} for m in [-K, K], built by recurrence.
  const int K = max_k_;
  const auto width = static_cast<std::size_t>(2 * K + 1);
  thread_local std::vector<double> xr, xi, yr, yi;
  if (xr.size() < width) {
    xr.resize(width);
    xi.resize(width);
    yr.resize(width);
    yi.resize(width);
  }
  const double bxr = std::cos(ax), bxi = std::sin(ax);
  const double byr = std::cos(ay), byi = std::sin(ay);
  xr[K] = yr[K] = 1.0;
  xi[K] = yi[K] = 0.0;
  for (int m = 1; m <= K; ++m) {
    xr[K + m] = xr[K + m - 1] * bxr - xi[K + m - 1] * bxi;
    xi[K + m] = xr[K + m - 1] * bxi + xi[K + m - 1] * bxr;
    yr[K + m] = yr[K + m - 1] * byr - yi[K + m - 1] * byi;
    yi[K + m] = yr[K + m - 1] * byi + yi[K + m - 1] * byr;
    xr[K - m] = xr[K + m];
    xi[K - m] = -xi[K + m];
    yr[K - m] = yr[K + m];
    yi[K - m] = -yi[K + m];
  }

  double u = 0.0, v = 0.0, a11 = 0.0, a12 = 0.0, a21 = 0.0;
  const std::size_t n = c_re_.size();
  for (std::size_t m = 0; m < n; ++m) {
    const int jx = ix_[m], jy = iy_[m];
    const double pr = xr[jx] * yr[jy] - xi[jx] * yi[jy];
    const double pi = xr[jx] * yi[jy] + xi[jx] * yr[jy];
    double re = c_re_[m] * pr - c_im_[m] * pi;
    double im = c_re_[m] * pi + c_im_[m] * pr;
    if (time_dependent_) {
      const auto z = temporal_factor(m, t);
      const double r2 = re * z.real() - im * z.imag();
      im = re * z.imag() + im * z.real();
      re = r2;
    }
    const double kx = kx_[m], ky = ky_[m];
    u -= ky * im;
    v += kx * im;
    a11 -= kx * ky * re;
    a12 -= ky * ky * re;
    a21 += kx * kx * re;
  }

  FlowSample s;
  s.velocity = Vec2(g * u, g * v);
  const double g2 = g * g;
  // A22 = -A11 term by term, so the trace vanishes exactly.
  s.gradient << g2 * a11, g2 * a12, g2 * a21, -(g2 * a11);
  return s;
}

// ---------------------------------------------------------------------------
// GriddedFlow

GriddedFlow::GriddedFlow(int nx, int ny, std::vector<double> u, std::vector<double> v,
                         double period)
    : nx_(nx), ny_(ny), u_(std::move(u)), v_(std::move(v)), period_(period) {
  if (nx_ < 2 || ny_ < 2) throw ParameterError("gridded flow needs at least 2x2 nodes");
  if (!(period_ > 0.0)) throw ParameterError("flow period must be positive");
  const auto n = static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_);
  if (u_.size() != n || v_.size() != n)
    throw ParameterError("gridded flow arrays do not match declared dimensions");

  const double hx = period_ / nx_;
  const double hy = period_ / ny_;
  dudx_.resize(n);
  dudy_.resize(n);
  dvdx_.resize(n);
  dvdy_.resize(n);
  for (int j = 0; j < ny_; ++j) {
    const int jp = (j + 1) % ny_, jm = (j + ny_ - 1) % ny_;
    for (int i = 0; i < nx_; ++i) {
      const int ip = (i + 1) % nx_, im = (i + nx_ - 1) % nx_;
      const auto c = static_cast<std::size_t>(j) * nx_ + i;
      const auto e = static_cast<std::size_t>(j) * nx_ + ip;
      const auto w = static_cast<std::size_t>(j) * nx_ + im;
      const auto nn = static_cast<std::size_t>(jp) * nx_ + i;
      const auto s = static_cast<std::size_t>(jm) * nx_ + i;
      dudx_[c] = (u_[e] - u_[w]) / (2.0 * hx);
      dvdx_[c] = (v_[e] - v_[w]) / (2.0 * hx);
      dudy_[c] = (u_[nn] - u_[s]) / (2.0 * hy);
      dvdy_[c] = (v_[nn] - v_[s]) / (2.0 * hy);
    }
  }
}

FlowSample GriddedFlow::sample(const Vec2& x) const {
  const double fx = wrap(x.x(), period_) / period_ * nx_;
  const double fy = wrap(x.y(), period_) / period_ * ny_;
  const int i0 = std::min(static_cast<int>(fx), nx_ - 1);
  const int j0 = std::min(static_cast<int>(fy), ny_ - 1);
  const double sx = fx - i0, sy = fy - j0;
  const int i1 = (i0 + 1) % nx_, j1 = (j0 + 1) % ny_;
  const auto at = [this](int i, int j) { return static_cast<std::size_t>(j) * nx_ + i; };
  const std::size_t c00 = at(i0, j0), c10 = at(i1, j0), c01 = at(i0, j1), c11 = at(i1, j1);
  const double w00 = (1 - sx) * (1 - sy), w10 = sx * (1 - sy), w01 = (1 - sx) * sy,
               w11 = sx * sy;
  const auto lerp = [&](const std::vector<double>& f) {
    return w00 * f[c00] + w10 * f[c10] + w01 * f[c01] + w11 * f[c11];
  };

  FlowSample s;
  s.velocity = Vec2(lerp(u_), lerp(v_));
  s.gradient << lerp(dudx_), lerp(dudy_), lerp(dvdx_), lerp(dvdy_);
  return s;
}

// ---------------------------------------------------------------------------
// FlowField

FlowField::FlowField(Representation rep, double period, std::optional<SpectrumSpec> spec)
    : rep_(std::move(rep)), period_(period), spec_(spec) {
  if (!(period_ > 0.0)) throw ParameterError("flow period must be positive");
}

FlowField FlowField::quiescent(double period) {
  return FlowField(AnalyticFlow{AnalyticKind::Quiescent, 0.0, Vec2::Zero()}, period, {});
}

FlowField FlowField::uniform(const Vec2& drift, double period) {
  return FlowField(AnalyticFlow{AnalyticKind::Uniform, 0.0, drift}, period, {});
}

FlowField FlowField::taylor_green(double amplitude, double period) {
  return FlowField(AnalyticFlow{AnalyticKind::TaylorGreen, amplitude, Vec2::Zero()}, period,
                   {});
}

FlowField FlowField::from_modes(std::vector<FourierMode> modes, double period,
                                TemporalSettings temporal, std::optional<SpectrumSpec> spec) {
  return FlowField(ModeSum(std::move(modes), period, temporal), period, spec);
}

FlowField FlowField::gridded(int nx, int ny, std::vector<double> u, std::vector<double> v,
                             double period) {
  return FlowField(GriddedFlow(nx, ny, std::move(u), std::move(v), period), period, {});
}

bool FlowField::time_dependent() const {
  if (const auto* ms = std::get_if<ModeSum>(&rep_)) return ms->time_dependent();
  return false;
}

namespace {

FlowSample sample_analytic(const AnalyticFlow& f, const Vec2& x, double period) {
  FlowSample s;
  switch (f.kind) {
    case AnalyticKind::Quiescent:
      break;
    case AnalyticKind::Uniform:
      s.velocity = f.drift;
      break;
    case AnalyticKind::TaylorGreen: {
      const double g = kTwoPi / period;
      const double sx = std::sin(g * x.x()), cx = std::cos(g * x.x());
      const double sy = std::sin(g * x.y()), cy = std::cos(g * x.y());
      const double a = f.amplitude;
      s.velocity = Vec2(a * sx * cy, -a * cx * sy);
      s.gradient << a * g * cx * cy, -a * g * sx * sy, a * g * sx * sy, -(a * g * cx * cy);
      break;
    }
  }
  return s;
}

}  // namespace

FlowSample FlowField::sample(const Vec2& x, double t) const {
  return std::visit(
      [&](const auto& r) -> FlowSample {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, AnalyticFlow>) {
          return sample_analytic(r, x, period_);
        } else if constexpr (std::is_same_v<T, ModeSum>) {
          return r.sample(x, t);
        } else {
          return r.sample(x);
        }
      },
      rep_);
}

// ---------------------------------------------------------------------------
// Generators

namespace {

// Half-plane wavevectors (k and -k describe the same real mode) in the shell k <= |k| < k+1.
std::vector<std::pair<int, int>> shell_wavevectors(int shell) {
  std::vector<std::pair<int, int>> out;
  const int r = shell + 1;
  for (int kx = 0; kx <= r; ++kx) {
    for (int ky = -r; ky <= r; ++ky) {
      if (kx == 0 && ky <= 0) continue;
      const double mag = std::sqrt(static_cast<double>(kx * kx + ky * ky));
      if (static_cast<int>(std::floor(mag)) == shell) out.emplace_back(kx, ky);
    }
  }
  return out;
}

std::vector<FourierMode> snapshot_modes(const SpectrumSpec& spec, double period) {
  spec.validate();
  const double g = kTwoPi / period;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);

  std::vector<FourierMode> modes;
  for (int shell = spec.k_min; shell <= spec.k_max; ++shell) {
    const auto wavevectors = shell_wavevectors(shell);
    // Mean-square velocity of one mode is a^2 |k|^2 / 2; a common amplitude per
    // shell makes the shell sum hit E(k) exactly.
    double sum_k2 = 0.0;
    for (const auto& [kx, ky] : wavevectors) sum_k2 += g * g * (kx * kx + ky * ky);
    const double target = spec.energy_scale * std::pow(static_cast<double>(shell), spec.slope);
    const double amplitude = std::sqrt(2.0 * target / sum_k2);
    for (const auto& [kx, ky] : wavevectors) {
      modes.push_back(FourierMode{kx, ky, amplitude, phase(rng), 0.0});
    }
  }
  return modes;
}

}  // namespace

FlowField generate_snapshot(const SpectrumSpec& spec, double period) {
  return FlowField::from_modes(snapshot_modes(spec, period), period, {}, spec);
}

FlowField generate_unsteady(const SpectrumSpec& spec, double decorrelation_time_at_kmin,
                            double period, double horizon) {
  if (!(decorrelation_time_at_kmin > 0.0))
    throw ParameterError("decorrelation time must be positive");
  auto modes = snapshot_modes(spec, period);
  for (auto& m : modes) {
    const double k = std::sqrt(static_cast<double>(m.kx * m.kx + m.ky * m.ky));
    m.decorrelation_rate =
        std::pow(k / spec.k_min, 2.0 / 3.0) / decorrelation_time_at_kmin;
  }
  TemporalSettings temporal;
  temporal.seed = spec.seed;
  temporal.horizon = horizon;
  return FlowField::from_modes(std::move(modes), period, temporal, spec);
}

// ---------------------------------------------------------------------------
// Diagnostics

double u_max(const FlowField& flow, double t, int n) {
  n = std::max(n, 256);
  const double h = flow.period() / n;
  double best = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      best = std::max(best, flow.velocity(Vec2(i * h, j * h), t).norm());
    }
  }
  return best;
}

double okubo_weiss(const Mat2& a) {
  const double normal_strain = a(0, 0) - a(1, 1);
  const double shear_strain = a(1, 0) + a(0, 1);
  const double vorticity = a(1, 0) - a(0, 1);
  return normal_strain * normal_strain + shear_strain * shear_strain - vorticity * vorticity;
}

double okubo_weiss(const FlowField& flow, const Vec2& x, double t) {
  return okubo_weiss(flow.sample(x, t).gradient);
}

ShellSpectrum measure_spectrum(const FlowField& flow, double t, int n) {
  if (n < 4) throw ParameterError("spectrum grid needs n >= 4");
  const double h = flow.period() / n;
  const auto nn = static_cast<std::size_t>(n);
  std::vector<std::complex<double>> u(nn * nn), v(nn * nn);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Vec2 vel = flow.velocity(Vec2(i * h, j * h), t);
      u[j * nn + i] = vel.x();
      v[j * nn + i] = vel.y();
    }
  }

  std::vector<std::complex<double>> twiddle(nn);
  for (std::size_t m = 0; m < nn; ++m) twiddle[m] = std::polar(1.0, -kTwoPi * m / n);

  // Separable DFT: rows (x) then columns (y).
  auto transform = [&](std::vector<std::complex<double>>& f) {
    std::vector<std::complex<double>> tmp(nn * nn);
    for (std::size_t j = 0; j < nn; ++j)
      for (std::size_t m = 0; m < nn; ++m) {
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < nn; ++i) acc += f[j * nn + i] * twiddle[(m * i) % nn];
        tmp[j * nn + m] = acc;
      }
    for (std::size_t m = 0; m < nn; ++m)
      for (std::size_t l = 0; l < nn; ++l) {
        std::complex<double> acc = 0.0;
        for (std::size_t j = 0; j < nn; ++j) acc += tmp[j * nn + m] * twiddle[(l * j) % nn];
        f[l * nn + m] = acc / static_cast<double>(nn * nn);
      }
  };
  transform(u);
  transform(v);

  ShellSpectrum out;
  out.energy.assign(static_cast<std::size_t>(std::sqrt(2.0) * n / 2) + 2, 0.0);
  for (int l = 0; l < n; ++l) {
    const int ky = l < n / 2 ? l : l - n;
    for (int m = 0; m < n; ++m) {
      const int kx = m < n / 2 ? m : m - n;
      const auto shell = static_cast<std::size_t>(
          std::floor(std::sqrt(static_cast<double>(kx * kx + ky * ky))));
      out.energy[shell] += std::norm(u[l * nn + m]) + std::norm(v[l * nn + m]);
    }
  }
  return out;
}

double fit_spectral_slope(const ShellSpectrum& spectrum, int k_lo, int k_hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (int k = std::max(k_lo, 1); k <= k_hi && k < static_cast<int>(spectrum.energy.size());
       ++k) {
    if (!(spectrum.energy[k] > 0.0)) continue;
    const double lx = std::log(static_cast<double>(k));
    const double ly = std::log(spectrum.energy[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++count;
  }
  if (count < 2) throw ParameterError("spectral fit needs at least two populated shells");
  return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

}  // namespace znav::flow
