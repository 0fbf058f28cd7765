#include "turblucky/event_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "turblucky/error.hpp"
#include "turblucky/parallel.hpp"

namespace turblucky {

namespace {
constexpr std::uint64_t kNoiseStream = 0x5E75;
}

void validate_event_sim_config(const EventSimConfig& cfg) {
  require(cfg.contrast_threshold > 0.0, "contrast threshold must be > 0");
  require(cfg.log_eps > 0.0, "log eps must be > 0");
  require(cfg.noise_rate >= 0.0, "noise rate must be >= 0");
}

EventStream simulate_events(std::span<const Image> trace, std::span<const std::int64_t> timestamps_us,
                            std::int64_t duration_us, const EventSimConfig& cfg) {
  validate_event_sim_config(cfg);
  require(trace.size() >= 2, "trace needs at least 2 images");
  require(trace.size() == timestamps_us.size(), "trace and timestamp lengths differ");
  for (std::size_t j = 1; j < timestamps_us.size(); ++j)
    require(timestamps_us[j] > timestamps_us[j - 1], "trace timestamps must be strictly increasing");
  require(timestamps_us.front() >= 0 && timestamps_us.back() < duration_us,
          "trace timestamps must lie inside [0, duration)");

  const int w = trace[0].width(), h = trace[0].height();
  std::vector<std::vector<double>> log_trace(trace.size());
  for (std::size_t j = 0; j < trace.size(); ++j) {
    require(trace[j].width() == w && trace[j].height() == h, "trace image dims differ");
    const Image lum = to_luminance(trace[j]);
    auto& l = log_trace[j];
    l.resize(lum.size());
    for (std::size_t p = 0; p < l.size(); ++p) l[p] = std::log(double(lum.data()[p]) + cfg.log_eps);
  }

  const double c = cfg.contrast_threshold;
  const double noise_mean = cfg.noise_rate * double(duration_us) * 1e-6;

  std::vector<std::vector<Event>> rows(static_cast<std::size_t>(h));
  parallel_for(std::size_t(h), [&](std::size_t row) {
    auto& out = rows[row];
    const int y = int(row);
    for (int x = 0; x < w; ++x) {
      const std::size_t p = std::size_t(y) * w + x;
      double ref = log_trace[0][p];
      double prev = ref;
      for (std::size_t j = 1; j < log_trace.size(); ++j) {
        const double cur = log_trace[j][p];
        const double delta = cur - ref;
        // the tolerance absorbs float32 rounding of intensities sitting exactly k*C apart
        const auto n = static_cast<long>(std::floor(std::abs(delta) / c + 1e-6));
        if (n > 0) {
          const int sign = delta > 0 ? 1 : -1;
          const double t0 = double(timestamps_us[j - 1]);
          const double span = double(timestamps_us[j] - timestamps_us[j - 1]);
          for (long m = 1; m <= n; ++m) {
            const double level = ref + double(sign) * double(m) * c;
            double frac = cur != prev ? (level - prev) / (cur - prev) : 1.0;
            frac = std::clamp(frac, 0.0, 1.0);
            const auto t = static_cast<std::int64_t>(std::llround(t0 + frac * span));
            out.push_back({std::min(t, timestamps_us[j]), x, y, sign});
          }
          ref += double(sign) * double(n) * c;
        }
        prev = cur;
      }
      if (noise_mean > 0.0) {
        std::mt19937_64 rng(mix_seed(cfg.seed, kNoiseStream, p));
        std::poisson_distribution<int> count(noise_mean);
        std::uniform_int_distribution<std::int64_t> when(0, duration_us - 1);
        std::bernoulli_distribution positive(0.5);
        const int k = count(rng);
        for (int i = 0; i < k; ++i) out.push_back({when(rng), x, y, positive(rng) ? 1 : -1});
      }
    }
  });

  EventStream stream;
  stream.width = w;
  stream.height = h;
  stream.duration_us = duration_us;
  for (auto& r : rows) stream.events.insert(stream.events.end(), r.begin(), r.end());
  std::sort(stream.events.begin(), stream.events.end(), event_before);
  return stream;
}

}  // namespace turblucky
