#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "turblucky/dataset.hpp"
#include "turblucky/metrics.hpp"

namespace turblucky {

struct CorrelationConfig {
  int n_samples = 100;
  int pixels_per_sample = 500;
  std::vector<int> spatial_sizes{2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<int> temporal_windows_ms{10, 20, 30, 40, 50};
  int spatial_window_ms = 100;
  std::uint64_t seed = 0;
};

struct CorrelationRow {
  std::string kind;    // "spatial" or "temporal"
  std::string window;  // "4x4" or "20ms"
  PearsonResult stats;
};

struct CorrelationReport {
  std::vector<CorrelationRow> rows;
};

// For each sampled (sample, frame, pixel): x = events inside the spatiotemporal window
// centred on the pixel and the frame timestamp (clipped to the sensor and [0, T]);
// y = mean over channels of |frame - gt|. One Pearson test per configured window,
// pooled over samples.
CorrelationReport correlation_study(const std::vector<Sample>& dataset, const CorrelationConfig& cfg);

void write_correlation_csv(const std::filesystem::path& path, const CorrelationReport& report);

}  // namespace turblucky
