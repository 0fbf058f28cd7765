#pragma once

#include <cstdint>
#include <vector>

#include "turblucky/image.hpp"

namespace turblucky {

// Per-pixel displacement (pixels) for one instant.
struct TiltField {
  int width = 0;
  int height = 0;
  std::vector<float> u;  // x displacement
  std::vector<float> v;  // y displacement

  TiltField() = default;
  TiltField(int w, int h) : width(w), height(h), u(std::size_t(w) * h), v(std::size_t(w) * h) {}

  double rms() const;
  bool operator==(const TiltField&) const = default;
};

struct TurbulenceConfig {
  double tilt_sigma = 1.5;    // RMS displacement magnitude, pixels
  double corr_length = 8.0;   // spatial smoothing sigma, pixels
  double rho = 0.7;           // AR(1) coefficient between consecutive sub-steps
  double blur_sigma = 0.8;    // pixels
  int supersample = 4;        // sub-steps per frame interval
  // Log-amplitude std of a smooth multiplicative strength field; 0 disables modulation.
  double intermittency = 1.5;
  double intermittency_rho = 0.7;  // AR(1) coefficient of the strength field
  std::uint64_t seed = 0;
};

void validate_turbulence_config(const TurbulenceConfig& cfg);

// Latent state Z_0 = G_0, Z_{k+1} = rho Z_k + sqrt(1 - rho^2) G_{k+1}, each G Gaussian-smoothed
// white noise with unit RMS magnitude from substream (seed, k). With intermittency q > 0, Z_k is
// multiplied pointwise by exp(q M_k), M_k a unit-variance smoothed AR(1) strength plane.
// Every emitted field is rescaled so its RMS magnitude equals tilt_sigma exactly.
std::vector<TiltField> generate_tilt_fields(const TurbulenceConfig& cfg, int width, int height,
                                            int n_steps);

// Backward bilinear warp: out(x, y) = in(x - u, y - v), sample coordinates clamped to the border.
Image warp(const Image& img, const TiltField& field);

// Gaussian blur, radius ceil(3 sigma), reflect padding.
Image blur(const Image& img, double sigma);

// The N*K supersampled distorted images that events are simulated from.
struct IntensityTrace {
  std::vector<Image> images;
  std::vector<std::int64_t> timestamps_us;
};

struct RenderedSequence {
  FrameSequence frames;
  IntensityTrace trace;
};

// Frames are trace[0], trace[K], ..., trace[(N-1)K].
RenderedSequence render_sequence(const Image& gt, const TurbulenceConfig& cfg, int n_frames,
                                 std::int64_t frame_interval_us = 50000);

}  // namespace turblucky
