#include "turblucky/turbulence.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "turblucky/error.hpp"
#include "turblucky/filters.hpp"
#include "turblucky/parallel.hpp"

namespace turblucky {

namespace {

constexpr std::uint64_t kTiltStream = 0x7117;
constexpr std::uint64_t kStrengthStream = 0x5793;

TiltField smoothed_noise(std::uint64_t seed, int w, int h, double corr_length) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<float> nu(std::size_t(w) * h), nv(std::size_t(w) * h);
  for (auto& x : nu) x = float(normal(rng));
  for (auto& x : nv) x = float(normal(rng));
  const auto kernel = gaussian_kernel(corr_length);
  TiltField g(w, h);
  g.u = separable_filter(nu, w, h, kernel);
  g.v = separable_filter(nv, w, h, kernel);
  const double r = g.rms();
  if (r > 0.0) {
    const float inv = float(1.0 / r);
    for (auto& x : g.u) x *= inv;
    for (auto& x : g.v) x *= inv;
  }
  return g;
}

float sample_bilinear(const Image& img, double fx, double fy, int c) {
  const int w = img.width(), h = img.height();
  fx = std::clamp(fx, 0.0, double(w - 1));
  fy = std::clamp(fy, 0.0, double(h - 1));
  const int x0 = std::min(int(std::floor(fx)), w - 1);
  const int y0 = std::min(int(std::floor(fy)), h - 1);
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double ax = fx - x0, ay = fy - y0;
  const double top = (1.0 - ax) * img.at(x0, y0, c) + ax * img.at(x1, y0, c);
  const double bot = (1.0 - ax) * img.at(x0, y1, c) + ax * img.at(x1, y1, c);
  return float((1.0 - ay) * top + ay * bot);
}

// Unit-RMS Gaussian-smoothed scalar noise plane.
std::vector<double> smoothed_plane(std::uint64_t seed, int w, int h, double corr_length) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<float> n(std::size_t(w) * h);
  for (auto& x : n) x = float(normal(rng));
  const auto f = separable_filter(n, w, h, gaussian_kernel(corr_length));
  double ss = 0.0;
  for (float x : f) ss += double(x) * x;
  const double inv = ss > 0.0 ? std::sqrt(double(f.size()) / ss) : 0.0;
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i] * inv;
  return out;
}

}  // namespace

double TiltField::rms() const {
  if (u.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += double(u[i]) * u[i] + double(v[i]) * v[i];
  return std::sqrt(acc / double(u.size()));
}

void validate_turbulence_config(const TurbulenceConfig& cfg) {
  require(std::isfinite(cfg.tilt_sigma) && cfg.tilt_sigma >= 0.0, "tilt sigma must be >= 0");
  require(std::isfinite(cfg.corr_length) && cfg.corr_length >= 1.0, "correlation length must be >= 1");
  require(cfg.rho >= 0.0 && cfg.rho < 1.0, "rho must lie in [0, 1)");
  require(std::isfinite(cfg.blur_sigma) && cfg.blur_sigma >= 0.0, "blur sigma must be >= 0");
  require(cfg.supersample >= 1, "supersample must be >= 1");
  require(std::isfinite(cfg.intermittency) && cfg.intermittency >= 0.0, "intermittency must be >= 0");
  require(cfg.intermittency_rho >= 0.0 && cfg.intermittency_rho < 1.0, "intermittency rho must lie in [0, 1)");
}

std::vector<TiltField> generate_tilt_fields(const TurbulenceConfig& cfg, int width, int height,
                                            int n_steps) {
  validate_turbulence_config(cfg);
  require(n_steps >= 1, "n_steps must be >= 1");
  require(width > 0 && height > 0, "field dims must be positive");

  std::vector<TiltField> fields(std::size_t(n_steps), TiltField(width, height));
  if (cfg.tilt_sigma == 0.0) return fields;

  const auto count = static_cast<std::size_t>(n_steps);
  std::vector<TiltField> fresh(count);
  std::vector<std::vector<double>> strength(cfg.intermittency > 0.0 ? count : 0);
  parallel_for(count, [&](std::size_t k) {
    fresh[k] = smoothed_noise(mix_seed(cfg.seed, kTiltStream, k), width, height, cfg.corr_length);
    if (!strength.empty())
      strength[k] = smoothed_plane(mix_seed(cfg.seed, kStrengthStream, k), width, height,
                                   cfg.corr_length);
  });

  // Latent unit-scale AR(1) states; each emitted field is rescaled to RMS tilt_sigma.
  const double a = cfg.rho, b = std::sqrt(1.0 - cfg.rho * cfg.rho);
  const double ma = cfg.intermittency_rho, mb = std::sqrt(1.0 - ma * ma);
  const double q = cfg.intermittency;
  const std::size_t n = fresh[0].u.size();
  std::vector<double> su(n), sv(n), sm(n), ou(n), ov(n);
  for (std::size_t k = 0; k < count; ++k) {
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      su[i] = k == 0 ? fresh[k].u[i] : a * su[i] + b * fresh[k].u[i];
      sv[i] = k == 0 ? fresh[k].v[i] : a * sv[i] + b * fresh[k].v[i];
      double gain = 1.0;
      if (q > 0.0) {
        sm[i] = k == 0 ? strength[k][i] : ma * sm[i] + mb * strength[k][i];
        gain = std::exp(q * sm[i]);
      }
      ou[i] = gain * su[i];
      ov[i] = gain * sv[i];
      ss += ou[i] * ou[i] + ov[i] * ov[i];
    }
    const double scale = ss > 0.0 ? cfg.tilt_sigma * std::sqrt(double(n) / ss) : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      fields[k].u[i] = float(scale * ou[i]);
      fields[k].v[i] = float(scale * ov[i]);
    }
  }
  return fields;
}

Image warp(const Image& img, const TiltField& field) {
  require(field.width == img.width() && field.height == img.height(),
          "tilt field dims differ from image dims");
  Image out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const std::size_t p = std::size_t(y) * img.width() + x;
      const double sx = x - double(field.u[p]);
      const double sy = y - double(field.v[p]);
      for (int c = 0; c < img.channels(); ++c)
        out.at(x, y, c) = std::clamp(sample_bilinear(img, sx, sy, c), 0.0f, 1.0f);
    }
  }
  return out;
}

Image blur(const Image& img, double sigma) {
  require(sigma >= 0.0, "blur sigma must be >= 0");
  return clamp01(gaussian_blur(img, sigma));
}

RenderedSequence render_sequence(const Image& gt, const TurbulenceConfig& cfg, int n_frames,
                                 std::int64_t frame_interval_us) {
  validate_turbulence_config(cfg);
  require(n_frames >= 2, "need at least 2 frames");
  require(frame_interval_us > 0 && frame_interval_us % cfg.supersample == 0,
          "frame interval must be a positive multiple of the supersample factor");

  const int k = cfg.supersample;
  const int steps = n_frames * k;
  const auto fields = generate_tilt_fields(cfg, gt.width(), gt.height(), steps);

  RenderedSequence out;
  out.trace.images.resize(std::size_t(steps));
  parallel_for(std::size_t(steps), [&](std::size_t j) {
    out.trace.images[j] = blur(warp(gt, fields[j]), cfg.blur_sigma);
  });
  const std::int64_t step_us = frame_interval_us / k;
  for (int j = 0; j < steps; ++j) out.trace.timestamps_us.push_back(std::int64_t(j) * step_us);

  std::vector<Image> frames;
  for (int i = 0; i < n_frames; ++i) frames.push_back(out.trace.images[std::size_t(i * k)]);
  out.frames = FrameSequence::uniform(std::move(frames), frame_interval_us);
  return out;
}

}  // namespace turblucky
