#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "turblucky/layers.hpp"
#include "turblucky/tensor.hpp"

namespace turblucky {

// B voxel bins, N frames, C colour channels.
struct NetShape {
  int bins = 44;
  int frames = 11;
  int channels = 3;
  int detail_width = 16;

  bool operator==(const NetShape&) const = default;
};

void validate_net_shape(const NetShape& s);

struct LayerSpec {
  std::string name;  // e.g. "sgeb.dw1"; tensors are <name>.weight and <name>.bias
  nn::ConvGeometry geometry;
};

// Layer table in execution order:
//   sgeb.{dw,pw}{1,2,3}: depthwise 3x3 B->B, pointwise B->B (x3, ReLU after each pointwise)
//   tgeb.c{1,2,3}:       1x1 B->B/2->B/4->N (ReLU, ReLU, softmax)
//   deb.c{1,2,3}:        3x3 C->16->16->C (ReLU, ReLU, tanh)
std::vector<LayerSpec> layer_specs(const NetShape& s);

template <class T>
struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<T> data;

  bool operator==(const NamedTensor&) const = default;
};

// Ordered, named tensor store; order is the layer table order (weight then bias).
template <class T>
struct ParamSet {
  std::vector<NamedTensor<T>> tensors;

  const NamedTensor<T>& get(std::string_view name) const;
  NamedTensor<T>& get(std::string_view name);
  const NamedTensor<T>* find(std::string_view name) const;
  std::size_t scalar_count() const;
  ParamSet zeros_like() const;

  template <class U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (const auto& t : tensors) out.tensors.push_back({t.name, t.shape, {t.data.begin(), t.data.end()}});
    return out;
  }

  bool operator==(const ParamSet&) const = default;
};

using ModelParams = ParamSet<float>;

template <class T>
ParamSet<T> zero_params(const NetShape& s);

// Kaiming-uniform (bound sqrt(6 / fan_in)) weights and zero biases, except that the final
// TGEB and DEB layers start at zero: an untrained network returns the temporal mean.
ModelParams init_params(const NetShape& s, std::uint64_t seed);

// Recovers (B, N, C) from tensor shapes and checks every tensor against the layer table.
NetShape infer_shape(const ModelParams& p);

template <class T>
Tensor4<T> sgeb_forward(const Tensor4<T>& voxel, const ParamSet<T>& p, const NetShape& s);
template <class T>
Tensor4<T> tgeb_forward(const Tensor4<T>& features, const ParamSet<T>& p, const NetShape& s);
template <class T>
Tensor4<T> deb_forward(const Tensor4<T>& fused, const ParamSet<T>& p, const NetShape& s);

// Full pipeline with a recorded forward pass for reverse-mode gradients.
//   features = SGEB(voxel); weights = TGEB(features); fused = sum_i weights_i * frame_i;
//   output = clamp(fused + DEB(fused), 0, 1)
// frames are packed as (n, N*C, H, W) with frame-major channel order.
template <class T>
class EgtmNet {
 public:
  struct Gradients {
    ParamSet<T> params;
    Tensor4<T> voxel;
  };

  EgtmNet(const ParamSet<T>& params, const NetShape& shape);

  const Tensor4<T>& forward(const Tensor4<T>& voxel, const Tensor4<T>& frames);
  Gradients backward(const Tensor4<T>& grad_output) const;

  // Intermediates of the last forward pass.
  const Tensor4<T>& weights() const { return weights_; }
  const Tensor4<T>& fused() const { return fused_; }
  const Tensor4<T>& residual() const { return residual_; }
  const Tensor4<T>& output() const { return output_; }

 private:
  struct Step {
    const LayerSpec* spec;
    Tensor4<T> input;
    Tensor4<T> output;  // post-activation when an activation follows
  };

  const ParamSet<T>& params_;
  NetShape shape_;
  std::vector<LayerSpec> specs_;
  bool recorded_ = false;
  Tensor4<T> voxel_, frames_;
  std::vector<Step> sgeb_, tgeb_, deb_;
  Tensor4<T> weights_, fused_, residual_, pre_clamp_, output_;
};

struct Complexity {
  std::int64_t params = 0;
  std::int64_t flops = 0;  // multiply and add counted separately
};

std::int64_t conv_param_count(const nn::ConvGeometry& g);
std::int64_t conv_flop_count(const nn::ConvGeometry& g, int height, int width);
Complexity count_params_flops(const NetShape& s, int height, int width);

}  // namespace turblucky
