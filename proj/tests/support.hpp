#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "znav/flowfield.hpp"

namespace testing {

using znav::flow::Mat2;
using znav::flow::Vec2;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "znav") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

inline std::vector<Vec2> random_points(int n, double lo, double hi, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Vec2> pts;
  for (int i = 0; i < n; ++i) {
    const double x = u(rng);
    pts.emplace_back(x, u(rng));
  }
  return pts;
}

/// Central-difference velocity gradient, column j = d/dx_j.
inline Mat2 fd_gradient(const znav::flow::FlowField& f, const Vec2& x, double t, double h) {
  Mat2 a;
  for (int j = 0; j < 2; ++j) {
    Vec2 e = Vec2::Zero();
    e[j] = h;
    a.col(j) = (f.velocity(x + e, t) - f.velocity(x - e, t)) / (2.0 * h);
  }
  return a;
}

/// Fourth-order central-difference gradient.
inline Mat2 fd4_gradient(const znav::flow::FlowField& f, const Vec2& x, double t, double h) {
  Mat2 a;
  for (int j = 0; j < 2; ++j) {
    Vec2 e = Vec2::Zero();
    e[j] = h;
    a.col(j) = (-f.velocity(x + 2 * e, t) + 8.0 * f.velocity(x + e, t) -
                8.0 * f.velocity(x - e, t) + f.velocity(x - 2 * e, t)) /
               (12.0 * h);
  }
  return a;
}

/// Ordinary least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace testing
