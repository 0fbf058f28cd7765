#include "turblucky/pipeline.hpp"

#include <cmath>
#include <numeric>

#include "turblucky/metrics.hpp"
#include "turblucky/parallel.hpp"
#include "turblucky/scene.hpp"

namespace turblucky {

Sample simulate_sample(const Image& gt, const SimulationConfig& cfg, std::uint64_t sample_seed, std::string id) {
  require(gt.width() == cfg.width && gt.height() == cfg.height && gt.channels() == cfg.channels,
          "clean image dims differ from the simulation config");
  TurbulenceConfig tc = cfg.turbulence;
  tc.seed = mix_seed(sample_seed, 1);
  EventSimConfig ec = cfg.events;
  ec.seed = mix_seed(sample_seed, 2);

  const Image clean = quantize8(gt);
  const auto rendered = render_sequence(clean, tc, cfg.n_frames, cfg.frame_interval_us);

  Sample s;
  s.id = std::move(id);
  s.seed = sample_seed;
  s.gt = clean;
  s.turbulent = rendered.frames;
  for (auto& f : s.turbulent.frames) f = quantize8(std::move(f));
  s.events = simulate_events(rendered.trace, std::int64_t(cfg.n_frames) * cfg.frame_interval_us, ec);
  validate_sample(s);
  return s;
}

Sample simulate_procedural_sample(const SimulationConfig& cfg, std::uint64_t sample_seed, std::string id) {
  const Image gt = procedural_scene(mix_seed(sample_seed, 3), cfg.width, cfg.height, cfg.channels);
  return simulate_sample(gt, cfg, sample_seed, std::move(id));
}

std::string sample_id(int index) {
  std::string s = std::to_string(index);
  return std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s;
}

std::vector<Sample> simulate_dataset(const SimulationConfig& cfg, int count, std::uint64_t seed, int first_index) {
  std::vector<Sample> out(std::size_t(std::max(count, 0)));
  parallel_for(out.size(), [&](std::size_t k) {
    const int index = first_index + int(k);
    out[k] = simulate_procedural_sample(cfg, mix_seed(seed, std::uint64_t(index)), sample_id(index));
  });
  return out;
}

FusionMethod parse_method(const std::string& name) {
  if (name == "mean") return FusionMethod::mean;
  if (name == "inverse-voxel") return FusionMethod::inverse_voxel;
  if (name == "egtm") return FusionMethod::egtm;
  throw ValidationError("unknown fusion method '" + name + "' (expected mean, inverse-voxel or egtm)");
}

std::string method_name(FusionMethod m) {
  switch (m) {
    case FusionMethod::mean: return "mean";
    case FusionMethod::inverse_voxel: return "inverse-voxel";
    case FusionMethod::egtm: break;
  }
  return "egtm";
}

Image restore(FusionMethod method, const Sample& sample, const RestoreOptions& opts) {
  const auto& seq = sample.turbulent;
  switch (method) {
    case FusionMethod::mean:
      return temporal_mean(seq.frames);
    case FusionMethod::inverse_voxel: {
      const auto voxel = voxelize(sample.events, {seq.size() * opts.bins_per_frame, sample.events.duration_us});
      return lucky_fuse(seq, inverse_voxel_weights(voxel, seq.size(), opts.inverse_voxel));
    }
    case FusionMethod::egtm: break;
  }
  if (!opts.model) throw ValidationError("egtm restoration needs a model");
  return egtm_restore(seq, sample.events, *opts.model);
}

MethodScore evaluate(FusionMethod method, const std::vector<Sample>& dataset, const RestoreOptions& opts,
                     std::vector<Image>* restored) {
  MethodScore score{method, std::vector<SampleScore>(dataset.size()), 0.0, 0.0};
  if (restored) restored->assign(dataset.size(), Image());
  parallel_for(dataset.size(), [&](std::size_t i) {
    const Image out = restore(method, dataset[i], opts);
    score.samples[i] = {dataset[i].id, psnr(out, dataset[i].gt), ssim(out, dataset[i].gt)};
    if (restored) (*restored)[i] = out;
  });
  for (const auto& s : score.samples) {
    score.mean_psnr += s.psnr;
    score.mean_ssim += s.ssim;
  }
  if (!dataset.empty()) {
    score.mean_psnr /= double(dataset.size());
    score.mean_ssim /= double(dataset.size());
  }
  return score;
}

}  // namespace turblucky
