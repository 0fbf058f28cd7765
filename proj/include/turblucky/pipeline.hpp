#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "turblucky/dataset.hpp"
#include "turblucky/event_sim.hpp"
#include "turblucky/fusion.hpp"
#include "turblucky/turbulence.hpp"

namespace turblucky {

struct SimulationConfig {
  int width = 64;
  int height = 64;
  int channels = 3;
  int n_frames = 11;
  std::int64_t frame_interval_us = 50000;  // 20 fps
  TurbulenceConfig turbulence;
  EventSimConfig events;
};

// Renders turbulent frames and events for one clean image. Frames and gt are snapped to
// the 8-bit storage grid so the in-memory sample equals its on-disk form.
Sample simulate_sample(const Image& gt, const SimulationConfig& cfg, std::uint64_t sample_seed, std::string id);

// Procedural source image from sample_seed, then simulate_sample.
Sample simulate_procedural_sample(const SimulationConfig& cfg, std::uint64_t sample_seed, std::string id);

// Sample k of a dataset generated with seed s uses sample seed mix_seed(s, k).
std::vector<Sample> simulate_dataset(const SimulationConfig& cfg, int count, std::uint64_t seed,
                                     int first_index = 0);
std::string sample_id(int index);

enum class FusionMethod { mean, inverse_voxel, egtm };

FusionMethod parse_method(const std::string& name);
std::string method_name(FusionMethod m);

struct RestoreOptions {
  InverseVoxelConfig inverse_voxel;
  int bins_per_frame = 4;
  const ModelParams* model = nullptr;  // required for egtm
};

Image restore(FusionMethod method, const Sample& sample, const RestoreOptions& opts);

struct SampleScore {
  std::string id;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct MethodScore {
  FusionMethod method;
  std::vector<SampleScore> samples;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

MethodScore evaluate(FusionMethod method, const std::vector<Sample>& dataset, const RestoreOptions& opts,
                     std::vector<Image>* restored = nullptr);

}  // namespace turblucky
