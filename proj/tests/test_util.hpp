#pragma once

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "evasion/data.hpp"
#include "evasion/models.hpp"

namespace testutil {

/// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("evasion_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
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

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline evasion::Vector random_vector(std::mt19937_64& gen, std::size_t d, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  evasion::Vector v(d);
  for (auto& x : v) x = u(gen);
  return v;
}

/// Two Gaussian-ish blobs, labels by blob; separable when `gap` is large.
inline evasion::Dataset blobs(std::mt19937_64& gen, std::size_t n_per_class, std::size_t d, double gap) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<evasion::Sample> s;
  for (int c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < n_per_class; ++i) {
      evasion::Vector x(d);
      for (auto& v : x) v = nd(gen) + (c == 0 ? -gap / 2 : gap / 2);
      s.push_back({x, c == 0 ? evasion::Label::Legitimate : evasion::Label::Malicious});
    }
  return evasion::Dataset(d, std::move(s));
}

/// Central finite-difference gradient of f at x.
template <typename F>
evasion::Vector numeric_grad(F&& f, evasion::Vector x, double h) {
  evasion::Vector g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    x[i] = xi;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

/// Analytic vs central-difference gradient: ||a - n|| / ||n|| <= 1e-4 when
/// ||n|| > 1e-8, otherwise every component within 1e-8. `err` receives the
/// measured error.
inline bool gradients_match(const evasion::Vector& analytic, const evasion::Vector& numeric, double* err = nullptr) {
  double nn = 0.0, dd = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    nn += numeric[i] * numeric[i];
    dd += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]));
  }
  if (std::sqrt(nn) > 1e-8) {
    const double rel = std::sqrt(dd) / std::sqrt(nn);
    if (err) *err = rel;
    return rel <= 1e-4;
  }
  if (err) *err = worst;
  return worst <= 1e-8;
}

}  // namespace testutil
