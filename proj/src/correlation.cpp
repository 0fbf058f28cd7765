#include "turblucky/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "turblucky/error.hpp"
#include "turblucky/parallel.hpp"

namespace turblucky {

namespace {

// Event timestamps bucketed per pixel, each bucket sorted.
class PixelEventIndex {
 public:
  explicit PixelEventIndex(const EventStream& s) : width_(s.width), height_(s.height) {
    times_.resize(std::size_t(s.width) * s.height);
    for (const Event& e : s.events) times_[std::size_t(e.y) * s.width + e.x].push_back(e.t_us);
  }

  // Events with t in [t0, t1) inside columns [x0, x1) and rows [y0, y1), clipped to the sensor.
  std::int64_t count(int x0, int x1, int y0, int y1, std::int64_t t0, std::int64_t t1) const {
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, width_);
    y1 = std::min(y1, height_);
    std::int64_t n = 0;
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) {
        const auto& v = times_[std::size_t(y) * width_ + x];
        n += std::lower_bound(v.begin(), v.end(), t1) - std::lower_bound(v.begin(), v.end(), t0);
      }
    return n;
  }

 private:
  int width_, height_;
  std::vector<std::vector<std::int64_t>> times_;
};

struct Probe {
  int frame, x, y;
};

}  // namespace

CorrelationReport correlation_study(const std::vector<Sample>& dataset, const CorrelationConfig& cfg) {
  require(!dataset.empty(), "correlation study needs at least one sample");
  require(cfg.n_samples >= 1 && cfg.pixels_per_sample >= 1 && cfg.spatial_window_ms >= 1,
          "correlation config counts must be >= 1");
  for (int s : cfg.spatial_sizes) require(s >= 1, "spatial sizes must be >= 1");
  for (int t : cfg.temporal_windows_ms) require(t >= 1, "temporal windows must be >= 1");

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 pick(mix_seed(cfg.seed, 0xC0AA));
  std::shuffle(order.begin(), order.end(), pick);
  order.resize(std::min(order.size(), std::size_t(cfg.n_samples)));

  const std::size_t n_cfg = cfg.spatial_sizes.size() + cfg.temporal_windows_ms.size();
  const std::size_t per = std::size_t(cfg.pixels_per_sample);
  std::vector<double> errors(order.size() * per);
  std::vector<std::vector<double>> density(n_cfg, std::vector<double>(order.size() * per));

  parallel_for(order.size(), [&](std::size_t si) {
    const Sample& s = dataset[order[si]];
    const PixelEventIndex index(s.events);
    const int w = s.gt.width(), h = s.gt.height(), c = s.gt.channels();
    const std::int64_t total = s.events.duration_us;

    std::mt19937_64 rng(mix_seed(cfg.seed, 0x5A3B, order[si]));
    std::uniform_int_distribution<int> fx(0, w - 1), fy(0, h - 1), ff(0, s.turbulent.size() - 1);
    for (std::size_t k = 0; k < per; ++k) {
      const Probe pr{ff(rng), fx(rng), fy(rng)};
      const std::size_t slot = si * per + k;
      const Image& frame = s.turbulent.frames[std::size_t(pr.frame)];
      double err = 0.0;
      for (int ch = 0; ch < c; ++ch) err += std::abs(double(frame.at(pr.x, pr.y, ch)) - s.gt.at(pr.x, pr.y, ch));
      errors[slot] = err / c;

      const std::int64_t tf = s.turbulent.timestamps_us[std::size_t(pr.frame)];
      auto window = [&](int ms) {
        const std::int64_t half = std::int64_t(ms) * 1000 / 2;
        return std::pair{std::max<std::int64_t>(0, tf - half), std::min(total, tf - half + std::int64_t(ms) * 1000)};
      };
      std::size_t ci = 0;
      for (int size : cfg.spatial_sizes) {
        const auto [t0, t1] = window(cfg.spatial_window_ms);
        const int x0 = pr.x - size / 2, y0 = pr.y - size / 2;
        density[ci++][slot] = double(index.count(x0, x0 + size, y0, y0 + size, t0, t1));
      }
      for (int ms : cfg.temporal_windows_ms) {
        const auto [t0, t1] = window(ms);
        density[ci++][slot] = double(index.count(pr.x, pr.x + 1, pr.y, pr.y + 1, t0, t1));
      }
    }
  });

  CorrelationReport report;
  std::size_t ci = 0;
  for (int size : cfg.spatial_sizes)
    report.rows.push_back({"spatial", std::to_string(size) + "x" + std::to_string(size),
                           pearson(density[ci++], errors)});
  for (int ms : cfg.temporal_windows_ms)
    report.rows.push_back({"temporal", std::to_string(ms) + "ms", pearson(density[ci++], errors)});
  return report;
}

void write_correlation_csv(const std::filesystem::path& path, const CorrelationReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "kind,window,r,p,n\n";
  char buf[256];
  for (const auto& row : report.rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.6f,%.6g,%zu\n", row.kind.c_str(), row.window.c_str(), row.stats.r,
                  row.stats.p, row.stats.n);
    out << buf;
  }
}

}  // namespace turblucky
