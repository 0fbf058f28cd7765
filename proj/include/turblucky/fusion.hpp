#pragma once

#include "turblucky/dataset.hpp"
#include "turblucky/network.hpp"
#include "turblucky/voxel.hpp"

namespace turblucky {

// N x H x W temporal weights, normalized per pixel.
struct WeightMap {
  int frames = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  WeightMap() = default;
  WeightMap(int n, int h, int w, float fill = 0.0f)
      : frames(n), height(h), width(w), data(std::size_t(n) * h * w, fill) {}

  std::size_t plane() const { return std::size_t(height) * width; }
  float& at(int i, int y, int x) { return data[std::size_t(i) * plane() + std::size_t(y) * width + x]; }
  float at(int i, int y, int x) const { return data[std::size_t(i) * plane() + std::size_t(y) * width + x]; }

  static WeightMap uniform(int n, int h, int w) { return WeightMap(n, h, w, 1.0f / float(n)); }
};

constexpr double kWeightSumTolerance = 1e-5;

// Throws ValidationError if any weight is negative/non-finite or a pixel's sum is off by
// more than kWeightSumTolerance.
void validate_weights(const WeightMap& w);

// I_fused(x, y, c) = sum_i W_i(x, y) I_i(x, y, c), clamped to [0, 1].
Image lucky_fuse(const FrameSequence& frames, const WeightMap& weights);

// Non-learned baseline: per-frame event density, box-smoothed over smooth x smooth pixels,
// weighted by (d_i + eps)^-1 and normalized across frames.
struct InverseVoxelConfig {
  int smooth = 5;
  double eps = 1.0;
};

WeightMap inverse_voxel_weights(const EventVoxel& voxel, int n_frames, const InverseVoxelConfig& cfg = {});

// Packing helpers between domain types and network tensors.
Tensor4<float> voxel_tensor(const EventVoxel& v);
Tensor4<float> frames_tensor(const FrameSequence& seq);
Image tensor_to_image(const Tensor4<float>& t, int batch_index = 0);
Tensor4<float> image_tensor(const Image& img);
WeightMap tensor_to_weights(const Tensor4<float>& t, int batch_index = 0);

struct RestoreResult {
  Image final_image;
  Image fused;
  WeightMap weights;
};

// voxelize -> SGEB -> TGEB -> lucky fusion -> + DEB residual, clamped to [0, 1].
RestoreResult egtm_restore_detailed(const FrameSequence& frames, const EventStream& events,
                                    const ModelParams& model);
Image egtm_restore(const FrameSequence& frames, const EventStream& events, const ModelParams& model);

}  // namespace turblucky
