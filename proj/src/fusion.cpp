#include "turblucky/fusion.hpp"

#include <cmath>
#include <string>

#include "turblucky/filters.hpp"

namespace turblucky {

void validate_weights(const WeightMap& w) {
  require(w.frames >= 1 && w.height >= 1 && w.width >= 1, "empty weight map");
  require(w.data.size() == std::size_t(w.frames) * w.plane(), "weight map buffer size mismatch");
  for (std::size_t p = 0; p < w.plane(); ++p) {
    double sum = 0.0;
    for (int i = 0; i < w.frames; ++i) {
      const float v = w.data[std::size_t(i) * w.plane() + p];
      if (!std::isfinite(v) || v < 0.0f) throw ValidationError("weight map has a negative or non-finite entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kWeightSumTolerance)
      throw ValidationError("weights at pixel " + std::to_string(p) + " sum to " + std::to_string(sum));
  }
}

Image lucky_fuse(const FrameSequence& frames, const WeightMap& weights) {
  require(!frames.frames.empty(), "no frames to fuse");
  const Image& first = frames.frames.front();
  require(weights.frames == frames.size() && weights.width == first.width() && weights.height == first.height(),
          "weight map dims do not match frame sequence");
  validate_weights(weights);

  const int c = first.channels();
  const std::size_t plane = first.pixel_count();
  // Same accumulation order as nn::weighted_sum so both paths agree bit for bit.
  std::vector<float> acc(first.size(), 0.0f);
  for (int i = 0; i < frames.size(); ++i) {
    const Image& f = frames.frames[std::size_t(i)];
    require(f.same_shape(first), "frame dims differ");
    const float* wp = weights.data.data() + std::size_t(i) * plane;
    auto fd = f.data();
    for (std::size_t p = 0; p < plane; ++p)
      for (int ch = 0; ch < c; ++ch) acc[p * c + ch] += wp[p] * fd[p * c + ch];
  }
  return clamp01(Image(first.width(), first.height(), c, std::move(acc)));
}

WeightMap inverse_voxel_weights(const EventVoxel& voxel, int n_frames, const InverseVoxelConfig& cfg) {
  require(cfg.smooth >= 1, "smoothing window must be >= 1");
  require(cfg.eps > 0.0, "eps must be > 0");
  const EventVoxel density = frame_density(voxel, n_frames);
  WeightMap w(n_frames, voxel.height, voxel.width);
  const std::size_t plane = w.plane();
  std::vector<std::vector<float>> smoothed(static_cast<std::size_t>(n_frames));
  for (int i = 0; i < n_frames; ++i)
    smoothed[std::size_t(i)] = box_filter(density.bin(i), voxel.width, voxel.height, cfg.smooth);
  for (std::size_t p = 0; p < plane; ++p) {
    double total = 0.0;
    for (int i = 0; i < n_frames; ++i) total += 1.0 / (double(smoothed[std::size_t(i)][p]) + cfg.eps);
    for (int i = 0; i < n_frames; ++i)
      w.data[std::size_t(i) * plane + p] = float((1.0 / (double(smoothed[std::size_t(i)][p]) + cfg.eps)) / total);
  }
  return w;
}

Tensor4<float> voxel_tensor(const EventVoxel& v) {
  Tensor4<float> t(1, v.bins, v.height, v.width);
  t.data = v.data;
  return t;
}

Tensor4<float> image_tensor(const Image& img) {
  Tensor4<float> t(1, img.channels(), img.height(), img.width());
  const std::size_t plane = img.pixel_count();
  for (std::size_t p = 0; p < plane; ++p)
    for (int c = 0; c < img.channels(); ++c) t.plane_ptr(0, c)[p] = img.data()[p * img.channels() + c];
  return t;
}

Tensor4<float> frames_tensor(const FrameSequence& seq) {
  require(!seq.frames.empty(), "empty frame sequence");
  const Image& first = seq.frames.front();
  const int c = first.channels();
  Tensor4<float> t(1, seq.size() * c, first.height(), first.width());
  const std::size_t plane = first.pixel_count();
  for (int i = 0; i < seq.size(); ++i) {
    const Image& f = seq.frames[std::size_t(i)];
    require(f.same_shape(first), "frame dims differ");
    for (std::size_t p = 0; p < plane; ++p)
      for (int ch = 0; ch < c; ++ch) t.plane_ptr(0, i * c + ch)[p] = f.data()[p * c + ch];
  }
  return t;
}

Image tensor_to_image(const Tensor4<float>& t, int batch_index) {
  Image img(t.w, t.h, t.c);
  for (std::size_t p = 0; p < t.plane(); ++p)
    for (int c = 0; c < t.c; ++c) img.data()[p * t.c + c] = t.plane_ptr(batch_index, c)[p];
  return img;
}

WeightMap tensor_to_weights(const Tensor4<float>& t, int batch_index) {
  WeightMap w(t.c, t.h, t.w);
  for (int i = 0; i < t.c; ++i)
    std::copy_n(t.plane_ptr(batch_index, i), t.plane(), w.data.begin() + std::ptrdiff_t(i * t.plane()));
  return w;
}

RestoreResult egtm_restore_detailed(const FrameSequence& frames, const EventStream& events,
                                    const ModelParams& model) {
  const NetShape shape = infer_shape(model);
  require(frames.size() == shape.frames, "model expects " + std::to_string(shape.frames) + " frames, got " +
                                             std::to_string(frames.size()));
  require(frames.frames.front().channels() == shape.channels, "model channel count differs from frames");
  const EventVoxel voxel = voxelize(events, {shape.bins, events.duration_us});
  EgtmNet<float> net(model, shape);
  net.forward(voxel_tensor(voxel), frames_tensor(frames));

  RestoreResult r;
  r.weights = tensor_to_weights(net.weights());
  r.fused = lucky_fuse(frames, r.weights);
  r.final_image = clamp01(tensor_to_image(net.output()));
  return r;
}

Image egtm_restore(const FrameSequence& frames, const EventStream& events, const ModelParams& model) {
  return egtm_restore_detailed(frames, events, model).final_image;
}

}  // namespace turblucky
