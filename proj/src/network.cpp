#include "turblucky/network.hpp"

#include <cmath>
#include <random>

namespace turblucky {

namespace {

enum class Act { none, relu, tanh, softmax };

template <class T>
std::span<const T> span_of(const ParamSet<T>& p, const std::string& name) {
  return p.get(name).data;
}

template <class T>
Tensor4<T> apply(const LayerSpec& spec, const Tensor4<T>& x, const ParamSet<T>& p, Act act) {
  Tensor4<T> y = nn::conv_forward(x, spec.geometry, span_of(p, spec.name + ".weight"),
                                  span_of(p, spec.name + ".bias"));
  switch (act) {
    case Act::relu: return nn::relu(std::move(y));
    case Act::tanh: return nn::tanh(std::move(y));
    case Act::softmax: return nn::softmax_channels(y);
    case Act::none: break;
  }
  return y;
}

Act sgeb_act(std::size_t i) { return i % 2 == 1 ? Act::relu : Act::none; }
Act tgeb_act(std::size_t i) { return i == 2 ? Act::softmax : Act::relu; }
Act deb_act(std::size_t i) { return i == 2 ? Act::tanh : Act::relu; }

template <class T>
void check_input(const Tensor4<T>& x, int channels, const char* what) {
  require(x.c == channels, std::string(what) + " input has " + std::to_string(x.c) +
                               " channels, expected " + std::to_string(channels));
}

}  // namespace

void validate_net_shape(const NetShape& s) {
  require(s.bins >= 4 && s.bins % 4 == 0, "bin count must be a positive multiple of 4");
  require(s.frames >= 2, "frame count must be >= 2");
  require(s.channels == 1 || s.channels == 3, "channels must be 1 or 3");
  require(s.detail_width >= 1, "detail width must be >= 1");
}

std::vector<LayerSpec> layer_specs(const NetShape& s) {
  validate_net_shape(s);
  const int b = s.bins;
  std::vector<LayerSpec> v;
  for (int l = 1; l <= 3; ++l) {
    v.push_back({"sgeb.dw" + std::to_string(l), nn::depthwise3x3(b)});
    v.push_back({"sgeb.pw" + std::to_string(l), nn::pointwise(b, b)});
  }
  v.push_back({"tgeb.c1", nn::pointwise(b, b / 2)});
  v.push_back({"tgeb.c2", nn::pointwise(b / 2, b / 4)});
  v.push_back({"tgeb.c3", nn::pointwise(b / 4, s.frames)});
  v.push_back({"deb.c1", nn::conv3x3(s.channels, s.detail_width)});
  v.push_back({"deb.c2", nn::conv3x3(s.detail_width, s.detail_width)});
  v.push_back({"deb.c3", nn::conv3x3(s.detail_width, s.channels)});
  return v;
}

template <class T>
const NamedTensor<T>* ParamSet<T>::find(std::string_view name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

template <class T>
const NamedTensor<T>& ParamSet<T>::get(std::string_view name) const {
  if (const auto* t = find(name)) return *t;
  throw ValidationError("missing parameter tensor " + std::string(name));
}

template <class T>
NamedTensor<T>& ParamSet<T>::get(std::string_view name) {
  return const_cast<NamedTensor<T>&>(std::as_const(*this).get(name));
}

template <class T>
std::size_t ParamSet<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.data.size();
  return n;
}

template <class T>
ParamSet<T> ParamSet<T>::zeros_like() const {
  ParamSet out = *this;
  for (auto& t : out.tensors) std::fill(t.data.begin(), t.data.end(), T(0));
  return out;
}

template <class T>
ParamSet<T> zero_params(const NetShape& s) {
  ParamSet<T> p;
  for (const auto& spec : layer_specs(s)) {
    const auto& g = spec.geometry;
    p.tensors.push_back({spec.name + ".weight", {g.cout, g.cin_per_group(), g.k, g.k},
                         std::vector<T>(g.weight_count(), T(0))});
    p.tensors.push_back({spec.name + ".bias", {g.cout}, std::vector<T>(std::size_t(g.cout), T(0))});
  }
  return p;
}

ModelParams init_params(const NetShape& s, std::uint64_t seed) {
  ModelParams p = zero_params<float>(s);
  std::mt19937_64 rng(seed);
  for (const auto& spec : layer_specs(s)) {
    if (spec.name == "deb.c3" || spec.name == "tgeb.c3") continue;
    const auto& g = spec.geometry;
    const double bound = std::sqrt(6.0 / double(g.cin_per_group() * g.k * g.k));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (float& w : p.get(spec.name + ".weight").data) w = float(dist(rng));
  }
  return p;
}

NetShape infer_shape(const ModelParams& p) {
  NetShape s;
  const auto& dw = p.get("sgeb.dw1.weight");
  const auto& last = p.get("tgeb.c3.weight");
  const auto& deb = p.get("deb.c1.weight");
  require(dw.shape.size() == 4 && last.shape.size() == 4 && deb.shape.size() == 4,
          "weight tensors must be 4-d");
  s.bins = dw.shape[0];
  s.frames = last.shape[0];
  s.channels = deb.shape[1];
  s.detail_width = deb.shape[0];
  const ModelParams expected = zero_params<float>(s);
  require(expected.tensors.size() == p.tensors.size(), "unexpected parameter tensor count");
  for (std::size_t i = 0; i < p.tensors.size(); ++i) {
    require(p.tensors[i].name == expected.tensors[i].name,
            "unexpected parameter " + p.tensors[i].name + ", expected " + expected.tensors[i].name);
    require(p.tensors[i].shape == expected.tensors[i].shape, "shape mismatch for " + p.tensors[i].name);
    require(p.tensors[i].data.size() == expected.tensors[i].data.size(),
            "size mismatch for " + p.tensors[i].name);
  }
  return s;
}

template <class T>
Tensor4<T> sgeb_forward(const Tensor4<T>& voxel, const ParamSet<T>& p, const NetShape& s) {
  check_input(voxel, s.bins, "SGEB");
  const auto specs = layer_specs(s);
  Tensor4<T> x = voxel;
  for (std::size_t i = 0; i < 6; ++i) x = apply(specs[i], x, p, sgeb_act(i));
  return x;
}

template <class T>
Tensor4<T> tgeb_forward(const Tensor4<T>& features, const ParamSet<T>& p, const NetShape& s) {
  check_input(features, s.bins, "TGEB");
  const auto specs = layer_specs(s);
  Tensor4<T> x = features;
  for (std::size_t i = 0; i < 3; ++i) x = apply(specs[6 + i], x, p, tgeb_act(i));
  return x;
}

template <class T>
Tensor4<T> deb_forward(const Tensor4<T>& fused, const ParamSet<T>& p, const NetShape& s) {
  check_input(fused, s.channels, "DEB");
  const auto specs = layer_specs(s);
  Tensor4<T> x = fused;
  for (std::size_t i = 0; i < 3; ++i) x = apply(specs[9 + i], x, p, deb_act(i));
  return x;
}

template <class T>
EgtmNet<T>::EgtmNet(const ParamSet<T>& params, const NetShape& shape)
    : params_(params), shape_(shape), specs_(layer_specs(shape)) {
  const auto expected = zero_params<T>(shape);
  require(expected.tensors.size() == params.tensors.size(), "parameter set does not match network shape");
  for (std::size_t i = 0; i < expected.tensors.size(); ++i)
    require(params.tensors[i].name == expected.tensors[i].name &&
                params.tensors[i].shape == expected.tensors[i].shape,
            "parameter " + expected.tensors[i].name + " does not match network shape");
}

template <class T>
const Tensor4<T>& EgtmNet<T>::forward(const Tensor4<T>& voxel, const Tensor4<T>& frames) {
  check_input(voxel, shape_.bins, "SGEB");
  require(frames.c == shape_.frames * shape_.channels && frames.n == voxel.n && frames.h == voxel.h &&
              frames.w == voxel.w,
          "frame tensor does not match voxel/network shape");
  voxel_ = voxel;
  frames_ = frames;
  sgeb_.clear();
  tgeb_.clear();
  deb_.clear();

  Tensor4<T> x = voxel;
  for (std::size_t i = 0; i < 6; ++i) {
    Tensor4<T> y = apply(specs_[i], x, params_, sgeb_act(i));
    sgeb_.push_back({&specs_[i], std::move(x), y});
    x = std::move(y);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    Tensor4<T> y = apply(specs_[6 + i], x, params_, tgeb_act(i));
    tgeb_.push_back({&specs_[6 + i], std::move(x), y});
    x = std::move(y);
  }
  weights_ = x;
  fused_ = nn::weighted_sum(weights_, frames_, shape_.channels);
  x = fused_;
  for (std::size_t i = 0; i < 3; ++i) {
    Tensor4<T> y = apply(specs_[9 + i], x, params_, deb_act(i));
    deb_.push_back({&specs_[9 + i], std::move(x), y});
    x = std::move(y);
  }
  residual_ = x;
  pre_clamp_ = nn::add(fused_, residual_);
  output_ = pre_clamp_;
  for (T& v : output_.data) v = std::clamp(v, T(0), T(1));
  recorded_ = true;
  return output_;
}

template <class T>
typename EgtmNet<T>::Gradients EgtmNet<T>::backward(const Tensor4<T>& grad_output) const {
  if (!recorded_) throw StateError("backward() called before forward()");
  require(grad_output.same_shape(output_), "output gradient shape mismatch");

  Gradients g{params_.zeros_like(), voxel_.zeros_like()};

  auto back_through = [&](const Step& step, Tensor4<T> grad, Act act) {
    switch (act) {
      case Act::relu: grad = nn::relu_backward(step.output, std::move(grad)); break;
      case Act::tanh: grad = nn::tanh_backward(step.output, std::move(grad)); break;
      case Act::softmax: grad = nn::softmax_channels_backward(step.output, grad); break;
      case Act::none: break;
    }
    Tensor4<T> gx = step.input.zeros_like();
    const auto& name = step.spec->name;
    nn::conv_backward(step.input, step.spec->geometry, span_of(params_, name + ".weight"), grad,
                      std::span<T>(g.params.get(name + ".weight").data),
                      std::span<T>(g.params.get(name + ".bias").data), &gx);
    return gx;
  };

  // clamp passes gradient only where fused + residual was inside [0, 1]
  Tensor4<T> grad = grad_output;
  for (std::size_t i = 0; i < grad.data.size(); ++i) {
    const T v = pre_clamp_.data[i];
    if (v < T(0) || v > T(1)) grad.data[i] = T(0);
  }
  Tensor4<T> grad_fused = grad;
  Tensor4<T> gr = grad;
  for (std::size_t i = 3; i-- > 0;) gr = back_through(deb_[i], std::move(gr), deb_act(i));
  grad_fused = nn::add(std::move(grad_fused), gr);

  Tensor4<T> gx = nn::weighted_sum_backward_weights(frames_, grad_fused, shape_.frames);
  for (std::size_t i = 3; i-- > 0;) gx = back_through(tgeb_[i], std::move(gx), tgeb_act(i));
  for (std::size_t i = 6; i-- > 0;) gx = back_through(sgeb_[i], std::move(gx), sgeb_act(i));
  g.voxel = std::move(gx);
  return g;
}

std::int64_t conv_param_count(const nn::ConvGeometry& g) {
  return std::int64_t(g.k) * g.k * g.cin_per_group() * g.cout + g.cout;
}

std::int64_t conv_flop_count(const nn::ConvGeometry& g, int height, int width) {
  return 2ll * g.k * g.k * g.cin_per_group() * g.cout * height * width;
}

Complexity count_params_flops(const NetShape& s, int height, int width) {
  Complexity c;
  for (const auto& spec : layer_specs(s)) {
    c.params += conv_param_count(spec.geometry);
    c.flops += conv_flop_count(spec.geometry, height, width);
  }
  return c;
}

template struct ParamSet<float>;
template struct ParamSet<double>;
template ParamSet<float> zero_params<float>(const NetShape&);
template ParamSet<double> zero_params<double>(const NetShape&);
template Tensor4<float> sgeb_forward(const Tensor4<float>&, const ParamSet<float>&, const NetShape&);
template Tensor4<double> sgeb_forward(const Tensor4<double>&, const ParamSet<double>&, const NetShape&);
template Tensor4<float> tgeb_forward(const Tensor4<float>&, const ParamSet<float>&, const NetShape&);
template Tensor4<double> tgeb_forward(const Tensor4<double>&, const ParamSet<double>&, const NetShape&);
template Tensor4<float> deb_forward(const Tensor4<float>&, const ParamSet<float>&, const NetShape&);
template Tensor4<double> deb_forward(const Tensor4<double>&, const ParamSet<double>&, const NetShape&);
template class EgtmNet<float>;
template class EgtmNet<double>;

}  // namespace turblucky
