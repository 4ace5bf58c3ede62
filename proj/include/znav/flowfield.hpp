#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace znav::flow {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Power-law shell spectrum E(k) = energy_scale * k^slope over integer shells [k_min, k_max].
/// Wavenumbers are in units of 2*pi/L.
struct SpectrumSpec {
  int k_min = 1;
  int k_max = 10;
  double slope = -5.0 / 3.0;
  double energy_scale = 0.1;
  std::uint64_t seed = 0;

  /// Throws ParameterError on violated invariants.
  void validate() const;
};

/// One streamfunction term a * sin(k.x + phase) (times a unit-mean-square
/// stochastic factor when decorrelation_rate > 0).
struct FourierMode {
  int kx = 0;
  int ky = 0;
  double amplitude = 0.0;
  double phase = 0.0;
  double decorrelation_rate = 0.0;
};

/// Velocity and gradient A(i, j) = d u_i / d x_j at one point.
struct FlowSample {
  Vec2 velocity = Vec2::Zero();
  Mat2 gradient = Mat2::Zero();
};

enum class AnalyticKind { Quiescent, Uniform, TaylorGreen };

/// Closed-form test flows. Taylor-Green: psi = a sin(x) sin(y) in units of 2*pi/L,
/// u = (a sin x cos y, -a cos x sin y). Uniform: u = drift everywhere.
struct AnalyticFlow {
  AnalyticKind kind = AnalyticKind::Quiescent;
  double amplitude = 0.0;
  Vec2 drift = Vec2::Zero();
};

/// Settings for the stochastic time dependence of a mode sum. Each mode with a
/// nonzero decorrelation rate carries a complex Ornstein-Uhlenbeck factor z(t)
/// with z(0) = 1, E|z|^2 = 1, precomputed on a per-mode time grid over
/// [0, horizon) and linearly interpolated; times wrap modulo the horizon.
struct TemporalSettings {
  std::uint64_t seed = 0;
  double horizon = 256.0;
  int points_per_decorrelation = 16;
};

/// Divergence-free sum of Fourier streamfunction modes.
class ModeSum {
 public:
  ModeSum(std::vector<FourierMode> modes, double period, TemporalSettings temporal = {});

  const std::vector<FourierMode>& modes() const { return modes_; }
  const TemporalSettings& temporal() const { return temporal_; }
  double period() const { return period_; }
  bool time_dependent() const { return time_dependent_; }
  int max_wavenumber() const { return max_k_; }

  FlowSample sample(const Vec2& x, double t) const;

 private:
  struct Path {
    double step = 0.0;
    std::vector<std::complex<double>> values;
  };

  std::complex<double> temporal_factor(std::size_t mode, double t) const;

  std::vector<FourierMode> modes_;
  double period_;
  TemporalSettings temporal_;
  bool time_dependent_ = false;
  int max_k_ = 0;
  // Complex streamfunction coefficient c with psi_k = Re(c e^{i k.x}).
  std::vector<std::complex<double>> coeffs_;
  // Flat copies of the hot-loop inputs.
  std::vector<double> c_re_, c_im_, kx_, ky_;
  std::vector<int> ix_, iy_;
  std::vector<Path> paths_;
};

/// Velocity on a regular periodic nx * ny grid with spacing L/nx, L/ny.
/// Arrays are row-major: index = j * nx + i for node (i * L/nx, j * L/ny).
class GriddedFlow {
 public:
  GriddedFlow(int nx, int ny, std::vector<double> u, std::vector<double> v, double period);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  const std::vector<double>& u() const { return u_; }
  const std::vector<double>& v() const { return v_; }
  double period() const { return period_; }

  FlowSample sample(const Vec2& x) const;

 private:
  int nx_, ny_;
  std::vector<double> u_, v_;
  // Centered-difference gradients at the nodes.
  std::vector<double> dudx_, dudy_, dvdx_, dvdy_;
  double period_;
};

/// Immutable, periodic, divergence-free 2D velocity field.
class FlowField {
 public:
  using Representation = std::variant<AnalyticFlow, ModeSum, GriddedFlow>;

  static FlowField quiescent(double period = kTwoPi);
  static FlowField uniform(const Vec2& drift, double period = kTwoPi);
  static FlowField taylor_green(double amplitude = 1.0, double period = kTwoPi);
  static FlowField from_modes(std::vector<FourierMode> modes, double period = kTwoPi,
                              TemporalSettings temporal = {},
                              std::optional<SpectrumSpec> spec = std::nullopt);
  static FlowField gridded(int nx, int ny, std::vector<double> u, std::vector<double> v,
                           double period = kTwoPi);

  FlowSample sample(const Vec2& x, double t) const;
  Vec2 velocity(const Vec2& x, double t) const { return sample(x, t).velocity; }

  double period() const { return period_; }
  bool time_dependent() const;
  const Representation& representation() const { return rep_; }
  /// Spectrum the field was generated from, if any.
  const std::optional<SpectrumSpec>& spectrum() const { return spec_; }

 private:
  FlowField(Representation rep, double period, std::optional<SpectrumSpec> spec);

  Representation rep_;
  double period_;
  std::optional<SpectrumSpec> spec_;
};

/// Frozen random-phase mode sum whose shell spectrum follows the spec.
FlowField generate_snapshot(const SpectrumSpec& spec, double period = kTwoPi);

/// Snapshot modes with per-mode decorrelation rate
/// r(k) = (|k| / k_min)^(2/3) / decorrelation_time_at_kmin.
FlowField generate_unsteady(const SpectrumSpec& spec, double decorrelation_time_at_kmin,
                            double period = kTwoPi, double horizon = 256.0);

/// Largest |u| over an n * n grid covering one period (n >= 256 enforced).
double u_max(const FlowField& flow, double t, int n = 256);

/// (A11 - A22)^2 + (A21 + A12)^2 - (A21 - A12)^2. Positive in strain-dominated regions.
double okubo_weiss(const Mat2& gradient);
double okubo_weiss(const FlowField& flow, const Vec2& x, double t);

/// Shell-summed kinetic energy spectrum measured by a discrete Fourier transform
/// of the velocity sampled on an n * n grid. energy[k] sums |u_hat|^2 + |v_hat|^2
/// over k <= |k| < k + 1 (wavenumbers in units of 2*pi/L).
struct ShellSpectrum {
  std::vector<double> energy;
};

ShellSpectrum measure_spectrum(const FlowField& flow, double t, int n = 64);

/// Least-squares slope of log E(k) against log k for k in [k_lo, k_hi].
double fit_spectral_slope(const ShellSpectrum& spectrum, int k_lo, int k_hi);

void export_flow(const FlowField& flow, const std::filesystem::path& path);
FlowField import_flow(const std::filesystem::path& path);

}  // namespace znav::flow
