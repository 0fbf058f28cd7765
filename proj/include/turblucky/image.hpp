#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace turblucky {

// Row-major, channel-last raster of intensities in [0,1].
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, float fill = 0.0f);
  Image(int width, int height, int channels, std::vector<float> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return std::size_t(width_) * height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  float at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  bool same_shape(const Image& o) const {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }

  bool operator==(const Image& o) const = default;

  std::size_t index(int x, int y, int c) const {
    return (std::size_t(y) * width_ + x) * channels_ + c;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

// Throws ValidationError unless dims are >= 8, channels in {1,3} and all
// values are finite and inside [0,1].
void validate_image(const Image& img);

Image clamp01(Image img);

// 0.299 R + 0.587 G + 0.114 B; single-channel input is returned as is.
Image to_luminance(const Image& img);

// Snap every value onto the 8-bit grid used for storage.
Image quantize8(Image img);
std::uint8_t to_u8(float v);

Image temporal_mean(std::span<const Image> frames);

// A sequence of equally spaced frames; timestamps[k] = k * frame_interval_us.
struct FrameSequence {
  std::vector<Image> frames;
  std::vector<std::int64_t> timestamps_us;
  std::int64_t frame_interval_us = 0;

  int size() const { return int(frames.size()); }
  bool operator==(const FrameSequence&) const = default;

  static FrameSequence uniform(std::vector<Image> frames, std::int64_t frame_interval_us);
};

void validate_sequence(const FrameSequence& seq);

}  // namespace turblucky
