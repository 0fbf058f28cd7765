#include "turblucky/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

#include "turblucky/filters.hpp"
#include "turblucky/fusion.hpp"
#include "turblucky/metrics.hpp"
#include "turblucky/parallel.hpp"
#include "turblucky/voxel.hpp"

namespace turblucky {

namespace {

template <class T>
T sgn(T v) {
  return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0));
}

constexpr int kSobelX[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
constexpr int kSobelY[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};

template <class T>
void sobel(const T* in, int h, int w, std::vector<T>& gx, std::vector<T>& gy) {
  gx.assign(std::size_t(h) * w, T(0));
  gy.assign(std::size_t(h) * w, T(0));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      T sx = T(0), sy = T(0);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          const T v = in[std::size_t(reflect_index(y + i - 1, h)) * w + reflect_index(x + j - 1, w)];
          sx += T(kSobelX[i][j]) * v;
          sy += T(kSobelY[i][j]) * v;
        }
      gx[std::size_t(y) * w + x] = sx;
      gy[std::size_t(y) * w + x] = sy;
    }
}

struct PreparedSample {
  Tensor4<float> voxel;
  Tensor4<float> frames;
  Tensor4<float> gt;
  Image gt_image;
};

}  // namespace

template <class T>
LossResult<T> loss(const Tensor4<T>& pred, const Tensor4<T>& gt, const LossConfig& cfg) {
  require(pred.same_shape(gt), "loss: prediction and target shapes differ");
  require(cfg.lambda >= 0.0, "loss: lambda must be >= 0");
  LossResult<T> out{0.0, pred.zeros_like()};
  const double count = double(pred.size());

  double rec = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const T d = pred.data[i] - gt.data[i];
    rec += std::abs(double(d));
    out.grad.data[i] = sgn(d) / T(count);
  }
  out.value = rec / count;
  if (cfg.perceptual == PerceptualMode::off || cfg.lambda == 0.0) return out;

  const T lam = T(cfg.lambda);
  double perc = 0.0;
  std::vector<T> pgx, pgy, ggx, ggy;
  for (int n = 0; n < pred.n; ++n)
    for (int c = 0; c < pred.c; ++c) {
      sobel(pred.plane_ptr(n, c), pred.h, pred.w, pgx, pgy);
      sobel(gt.plane_ptr(n, c), gt.h, gt.w, ggx, ggy);
      T* g = out.grad.plane_ptr(n, c);
      for (int y = 0; y < pred.h; ++y)
        for (int x = 0; x < pred.w; ++x) {
          const std::size_t p = std::size_t(y) * pred.w + x;
          const T mp = std::sqrt(pgx[p] * pgx[p] + pgy[p] * pgy[p]);
          const T mg = std::sqrt(ggx[p] * ggx[p] + ggy[p] * ggy[p]);
          perc += std::abs(double(mp - mg));
          if (mp == T(0)) continue;
          const T s = lam * sgn(mp - mg) / T(count);
          const T dgx = s * pgx[p] / mp, dgy = s * pgy[p] / mp;
          // adjoint of the reflect-padded Sobel correlation
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
              const std::size_t q =
                  std::size_t(reflect_index(y + i - 1, pred.h)) * pred.w + reflect_index(x + j - 1, pred.w);
              g[q] += T(kSobelX[i][j]) * dgx + T(kSobelY[i][j]) * dgy;
            }
        }
    }
  out.value += cfg.lambda * perc / count;
  return out;
}

template LossResult<float> loss(const Tensor4<float>&, const Tensor4<float>&, const LossConfig&);
template LossResult<double> loss(const Tensor4<double>&, const Tensor4<double>&, const LossConfig&);

LossResult<float> loss(const Image& pred, const Image& gt, const LossConfig& cfg) {
  require(pred.same_shape(gt), "loss: prediction and target dims differ");
  return loss(image_tensor(pred), image_tensor(gt), cfg);
}

void validate_train_config(const TrainConfig& cfg) {
  require(cfg.lr0 >= 0.0 && std::isfinite(cfg.lr0), "learning rate must be finite and >= 0");
  require(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0, "Adam betas must lie in [0, 1)");
  require(cfg.adam_eps > 0.0, "Adam eps must be > 0");
  require(cfg.epochs >= 0, "epochs must be >= 0");
  require(cfg.batch_size >= 1, "batch size must be >= 1");
  require(cfg.val_fraction >= 0.0 && cfg.val_fraction < 1.0, "validation fraction must lie in [0, 1)");
}

double cosine_lr(std::int64_t step, std::int64_t total_steps, double lr0) {
  if (total_steps <= 0) return lr0;
  const std::int64_t t = std::clamp<std::int64_t>(step, 0, total_steps);
  return 0.5 * lr0 * (1.0 + std::cos(std::numbers::pi * double(t) / double(total_steps)));
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr, const TrainConfig& cfg) {
  require(params.tensors.size() == grads.tensors.size() && params.tensors.size() == state.m.tensors.size(),
          "adam: parameter/gradient/state tensor counts differ");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(state.step));
  for (std::size_t t = 0; t < params.tensors.size(); ++t) {
    auto& p = params.tensors[t].data;
    const auto& g = grads.tensors[t].data;
    auto& m = state.m.tensors[t].data;
    auto& v = state.v.tensors[t].data;
    require(p.size() == g.size() && p.size() == m.size() && p.size() == v.size(),
            "adam: shape mismatch for " + params.tensors[t].name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i];
      const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      m[i] = float(mi);
      v[i] = float(vi);
      const double update = lr * (mi / bc1) / (std::sqrt(vi / bc2) + cfg.adam_eps);
      p[i] = float(double(p[i]) - update);
    }
  }
}

TrainResult train(const std::vector<Sample>& dataset, const TrainConfig& cfg, const LossConfig& loss_cfg,
                  const NetShape& shape, std::optional<ModelParams> initial, const std::vector<Sample>* validation) {
  validate_train_config(cfg);
  require(!dataset.empty(), "training needs at least one sample");
  require(!validation || !validation->empty(), "an explicit validation set needs at least one sample");
  // all[i] for i < dataset.size() are training candidates, the rest explicit validation samples
  std::vector<const Sample*> all;
  for (const auto& s : dataset) all.push_back(&s);
  if (validation)
    for (const auto& s : *validation) all.push_back(&s);
  const Sample& ref = dataset.front();
  for (const Sample* s : all) {
    require(s->gt.same_shape(ref.gt), "sample " + s->id + " has different dims from " + ref.id);
    require(s->turbulent.size() == ref.turbulent.size(), "sample " + s->id + " has a different frame count");
  }
  require(shape.frames == ref.turbulent.size(), "network frame count differs from the dataset");
  require(shape.channels == ref.gt.channels(), "network channel count differs from the dataset");

  TrainResult result;
  result.model = initial ? *initial : init_params(shape, mix_seed(cfg.seed, 0x1417));
  require(infer_shape(result.model) == shape, "initial model shape differs from the requested shape");

  // scene-disjoint split: every sample is its own scene
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 split_rng(mix_seed(cfg.seed, 0x5917));
  std::shuffle(order.begin(), order.end(), split_rng);
  std::size_t n_val = 0;
  if (!validation && dataset.size() >= 2 && cfg.val_fraction > 0.0)
    n_val = std::clamp<std::size_t>(std::size_t(std::lround(cfg.val_fraction * double(dataset.size()))), 1,
                                    dataset.size() - 1);
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + std::ptrdiff_t(n_val));
  for (std::size_t i = dataset.size(); i < all.size(); ++i) val_idx.push_back(i);
  std::vector<std::size_t> train_idx(order.begin() + std::ptrdiff_t(n_val), order.end());
  std::sort(train_idx.begin(), train_idx.end());
  for (auto i : train_idx) result.train_ids.push_back(all[i]->id);
  for (auto i : val_idx) result.val_ids.push_back(all[i]->id);

  std::vector<PreparedSample> prepared(all.size());
  parallel_for(all.size(), [&](std::size_t i) {
    const Sample& s = *all[i];
    prepared[i] = {voxel_tensor(voxelize(s.events, {shape.bins, s.events.duration_us})),
                   frames_tensor(s.turbulent), image_tensor(s.gt), s.gt};
  });

  const std::int64_t per_epoch = std::int64_t((train_idx.size() + std::size_t(cfg.batch_size) - 1) / std::size_t(cfg.batch_size));
  const std::int64_t total_steps = per_epoch * cfg.epochs;
  AdamState adam = AdamState::for_params(result.model);
  std::int64_t step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<std::size_t> shuffled = train_idx;
    std::mt19937_64 rng(mix_seed(cfg.seed, 0xE90C, std::uint64_t(epoch)));
    std::shuffle(shuffled.begin(), shuffled.end(), rng);

    double epoch_loss = 0.0;
    double lr = cfg.lr0;
    for (std::size_t start = 0; start < shuffled.size(); start += std::size_t(cfg.batch_size)) {
      const std::size_t end = std::min(shuffled.size(), start + std::size_t(cfg.batch_size));
      const std::size_t bs = end - start;
      std::vector<ModelParams> grads(bs);
      std::vector<double> losses(bs);
      parallel_for(bs, [&](std::size_t j) {
        const PreparedSample& ps = prepared[shuffled[start + j]];
        EgtmNet<float> net(result.model, shape);
        const auto& out = net.forward(ps.voxel, ps.frames);
        const auto l = loss(out, ps.gt, loss_cfg);
        losses[j] = l.value;
        grads[j] = net.backward(l.grad).params;
      });
      ModelParams total = grads[0];
      for (std::size_t j = 1; j < bs; ++j)
        for (std::size_t t = 0; t < total.tensors.size(); ++t)
          for (std::size_t i = 0; i < total.tensors[t].data.size(); ++i)
            total.tensors[t].data[i] += grads[j].tensors[t].data[i];
      const float inv = 1.0f / float(bs);
      for (auto& t : total.tensors)
        for (float& g : t.data) g *= inv;
      for (double l : losses) epoch_loss += l;

      lr = cosine_lr(step, total_steps, cfg.lr0);
      adam_step(result.model, total, adam, lr, cfg);
      ++step;
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.loss = train_idx.empty() ? 0.0 : epoch_loss / double(train_idx.size());
    m.lr = lr;
    if (!val_idx.empty()) {
      std::vector<double> ps(val_idx.size()), ss(val_idx.size());
      parallel_for(val_idx.size(), [&](std::size_t j) {
        const PreparedSample& s = prepared[val_idx[j]];
        EgtmNet<float> net(result.model, shape);
        const Image out = clamp01(tensor_to_image(net.forward(s.voxel, s.frames)));
        ps[j] = psnr(out, s.gt_image);
        ss[j] = ssim(out, s.gt_image);
      });
      m.val_psnr = std::accumulate(ps.begin(), ps.end(), 0.0) / double(ps.size());
      m.val_ssim = std::accumulate(ss.begin(), ss.end(), 0.0) / double(ss.size());
    } else {
      m.val_psnr = m.val_ssim = std::nan("");
    }
    result.log.push_back(m);
  }
  return result;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpochMetrics>& log) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,loss,val_psnr,val_ssim,lr\n";
  char buf[256];
  for (const auto& m : log) {
    std::snprintf(buf, sizeof buf, "%d,%.8f,%.6f,%.6f,%.8g\n", m.epoch, m.loss, m.val_psnr, m.val_ssim, m.lr);
    out << buf;
  }
}

}  // namespace turblucky
