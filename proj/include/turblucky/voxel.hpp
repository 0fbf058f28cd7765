#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "turblucky/events.hpp"

namespace turblucky {

// Dense bins x height x width grid, bin-major then row-major.
struct EventVoxel {
  int bins = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  EventVoxel() = default;
  EventVoxel(int b, int h, int w) : bins(b), height(h), width(w), data(std::size_t(b) * h * w, 0.0f) {}

  std::size_t plane() const { return std::size_t(height) * width; }
  float& at(int b, int y, int x) { return data[std::size_t(b) * plane() + std::size_t(y) * width + x]; }
  float at(int b, int y, int x) const { return data[std::size_t(b) * plane() + std::size_t(y) * width + x]; }
  std::span<const float> bin(int b) const { return std::span(data).subspan(std::size_t(b) * plane(), plane()); }
  double total() const;

  bool operator==(const EventVoxel&) const = default;
};

struct VoxelConfig {
  int bins = 44;
  std::int64_t duration_us = 0;  // bin width is duration / bins

  static VoxelConfig for_frames(int n_frames, std::int64_t duration_us, int bins_per_frame = 4) {
    return {n_frames * bins_per_frame, duration_us};
  }
};

// Bin index floor(t * B / T) in exact integer arithmetic; t == T lands in the last bin.
int bin_of(std::int64_t t_us, const VoxelConfig& cfg);

// Unsigned event counts per (bin, y, x); polarity is ignored.
EventVoxel voxelize(const EventStream& stream, const VoxelConfig& cfg);

// Sums consecutive groups of B/N bins: one density plane per frame interval.
EventVoxel frame_density(const EventVoxel& voxel, int n_frames);

// "EVXL" | u16 version=1 | u32 B, H, W | B*H*W float32, all little-endian.
void write_voxel(const std::filesystem::path& path, const EventVoxel& voxel);
EventVoxel read_voxel(const std::filesystem::path& path);

}  // namespace turblucky
