#include "turblucky/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "turblucky/error.hpp"

namespace turblucky {

Image::Image(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels),
      data_(std::size_t(width) * height * channels, fill) {
  require(width > 0 && height > 0 && channels > 0, "image dims must be positive");
}

Image::Image(int width, int height, int channels, std::vector<float> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  require(width > 0 && height > 0 && channels > 0, "image dims must be positive");
  require(data_.size() == std::size_t(width) * height * channels,
          "image buffer size does not match dims");
}

void validate_image(const Image& img) {
  require(img.width() >= 8 && img.height() >= 8,
          "image must be at least 8x8, got " + std::to_string(img.width()) + "x" +
              std::to_string(img.height()));
  require(img.channels() == 1 || img.channels() == 3, "image channels must be 1 or 3");
  for (float v : img.data()) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f)
      throw ValidationError("image value outside [0,1]: " + std::to_string(v));
  }
}

Image clamp01(Image img) {
  for (float& v : img.data()) v = std::isnan(v) ? 0.0f : std::clamp(v, 0.0f, 1.0f);
  return img;
}

Image to_luminance(const Image& img) {
  if (img.channels() == 1) return img;
  Image out(img.width(), img.height(), 1);
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    dst[p] = 0.299f * src[3 * p] + 0.587f * src[3 * p + 1] + 0.114f * src[3 * p + 2];
  }
  return out;
}

std::uint8_t to_u8(float v) {
  const double q = std::floor(double(std::clamp(v, 0.0f, 1.0f)) * 255.0 + 0.5);
  return std::uint8_t(q);
}

Image quantize8(Image img) {
  for (float& v : img.data()) v = float(to_u8(v)) / 255.0f;
  return img;
}

Image temporal_mean(std::span<const Image> frames) {
  require(!frames.empty(), "temporal_mean of empty sequence");
  const Image& first = frames.front();
  std::vector<double> acc(first.size(), 0.0);
  for (const Image& f : frames) {
    require(f.same_shape(first), "frame dims differ");
    auto d = f.data();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += d[i];
  }
  Image out(first.width(), first.height(), first.channels());
  auto o = out.data();
  const double inv = 1.0 / double(frames.size());
  for (std::size_t i = 0; i < acc.size(); ++i) o[i] = float(acc[i] * inv);
  return out;
}

FrameSequence FrameSequence::uniform(std::vector<Image> frames, std::int64_t frame_interval_us) {
  FrameSequence seq;
  seq.frame_interval_us = frame_interval_us;
  seq.timestamps_us.reserve(frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k)
    seq.timestamps_us.push_back(std::int64_t(k) * frame_interval_us);
  seq.frames = std::move(frames);
  return seq;
}

void validate_sequence(const FrameSequence& seq) {
  require(seq.frames.size() >= 2, "frame sequence needs at least 2 frames");
  require(seq.frame_interval_us > 0, "frame interval must be positive");
  require(seq.timestamps_us.size() == seq.frames.size(), "timestamp count differs from frame count");
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    require(seq.timestamps_us[k] == std::int64_t(k) * seq.frame_interval_us,
            "timestamp " + std::to_string(k) + " is not k * frame_interval");
    require(seq.frames[k].same_shape(seq.frames[0]), "frame dims differ");
    validate_image(seq.frames[k]);
  }
}

}  // namespace turblucky
