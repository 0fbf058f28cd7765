#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "turblucky/events.hpp"
#include "turblucky/image.hpp"
#include "turblucky/tensor.hpp"

namespace testing {

namespace fs = std::filesystem;

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("turblucky_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

inline turblucky::Image random_image(std::mt19937_64& rng, int w, int h, int c) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  turblucky::Image img(w, h, c);
  for (float& v : img.data()) v = u(rng);
  return img;
}

template <class T>
turblucky::Tensor4<T> random_tensor(std::mt19937_64& rng, int n, int c, int h, int w, double lo = -1.0,
                                    double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  turblucky::Tensor4<T> t(n, c, h, w);
  for (T& v : t.data) v = T(u(rng));
  return t;
}

inline turblucky::EventStream random_stream(std::mt19937_64& rng, int w, int h, std::int64_t duration,
                                            std::size_t count) {
  turblucky::EventStream s;
  s.width = w;
  s.height = h;
  s.duration_us = duration;
  std::uniform_int_distribution<std::int64_t> t(0, duration - 1);
  std::uniform_int_distribution<int> x(0, w - 1), y(0, h - 1), p(0, 1);
  s.events.resize(count);
  for (auto& e : s.events) e = {t(rng), x(rng), y(rng), p(rng) ? 1 : -1};
  std::sort(s.events.begin(), s.events.end(), turblucky::event_before);
  return s;
}

inline double rel_err(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace testing
