#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "turblucky/dataset.hpp"
#include "turblucky/network.hpp"

namespace turblucky {

enum class PerceptualMode { gradient_surrogate, off };

struct LossConfig {
  double lambda = 0.3;
  PerceptualMode perceptual = PerceptualMode::gradient_surrogate;
};

template <class T>
struct LossResult {
  double value = 0.0;
  Tensor4<T> grad;  // d loss / d pred
};

// L = mean|pred - gt| + lambda * mean| |Sobel(pred)| - |Sobel(gt)| |, per channel, reflect
// padded. The second term stands in for a VGG-feature perceptual loss. Subgradients use
// sign(0) = 0 and a zero derivative of the gradient magnitude at 0.
template <class T>
LossResult<T> loss(const Tensor4<T>& pred, const Tensor4<T>& gt, const LossConfig& cfg);

LossResult<float> loss(const Image& pred, const Image& gt, const LossConfig& cfg);

struct TrainConfig {
  double lr0 = 5e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 20;
  int batch_size = 8;
  double val_fraction = 0.2;
  std::uint64_t seed = 0;
};

void validate_train_config(const TrainConfig& cfg);

// 0.5 lr0 (1 + cos(pi t / T)).
double cosine_lr(std::int64_t step, std::int64_t total_steps, double lr0);

struct AdamState {
  ModelParams m;
  ModelParams v;
  std::int64_t step = 0;  // number of updates applied so far

  static AdamState for_params(const ModelParams& p) { return {p.zeros_like(), p.zeros_like(), 0}; }
};

// One bias-corrected Adam update at step state.step + 1 with learning rate lr.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr, const TrainConfig& cfg);

struct EpochMetrics {
  int epoch = 0;
  double loss = 0.0;
  double val_psnr = 0.0;
  double val_ssim = 0.0;
  double lr = 0.0;

  bool operator==(const EpochMetrics&) const = default;
};

struct TrainResult {
  ModelParams model;
  std::vector<EpochMetrics> log;
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
};

// Shuffled mini-batch Adam with a cosine schedule over epochs * ceil(n_train / batch) steps.
// Without an explicit validation set, a val_fraction share of samples (at least one when
// there are two or more) is held out; the validation samples are scored every epoch and
// never trained on. Per-sample gradients are reduced in batch order, so results do not
// depend on the worker count.
TrainResult train(const std::vector<Sample>& dataset, const TrainConfig& train_cfg, const LossConfig& loss_cfg,
                  const NetShape& shape, std::optional<ModelParams> initial = std::nullopt,
                  const std::vector<Sample>* validation = nullptr);

void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpochMetrics>& log);

}  // namespace turblucky
