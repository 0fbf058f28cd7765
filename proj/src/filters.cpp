#include "turblucky/filters.hpp"

#include <cmath>

#include "turblucky/error.hpp"

namespace turblucky {

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) return {1.0};
  const int radius = int(std::ceil(3.0 * sigma));
  std::vector<double> k(std::size_t(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * double(i) * i / (sigma * sigma));
    k[std::size_t(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

std::vector<float> separable_filter(std::span<const float> plane, int w, int h,
                                    std::span<const double> kernel) {
  const int r = int(kernel.size() / 2);
  std::vector<double> tmp(std::size_t(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k)
        acc += kernel[std::size_t(k + r)] * plane[std::size_t(y) * w + reflect_index(x + k, w)];
      tmp[std::size_t(y) * w + x] = acc;
    }
  }
  std::vector<float> out(tmp.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k)
        acc += kernel[std::size_t(k + r)] * tmp[std::size_t(reflect_index(y + k, h)) * w + x];
      out[std::size_t(y) * w + x] = float(acc);
    }
  }
  return out;
}

std::vector<float> box_filter(std::span<const float> plane, int w, int h, int s) {
  require(s >= 1, "box window must be >= 1");
  if (s == 1) return {plane.begin(), plane.end()};
  // window is [c - s/2, c - s/2 + s), so even sizes lean top-left
  const int start = -(s / 2);
  std::vector<double> tmp(std::size_t(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < s; ++i) acc += plane[std::size_t(y) * w + reflect_index(x + start + i, w)];
      tmp[std::size_t(y) * w + x] = acc;
    }
  std::vector<float> out(std::size_t(w) * h);
  const double norm = 1.0 / (double(s) * s);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < s; ++i) acc += tmp[std::size_t(reflect_index(y + start + i, h)) * w + x];
      out[std::size_t(y) * w + x] = float(acc * norm);
    }
  return out;
}

Image gaussian_blur(const Image& img, double sigma) {
  if (!(sigma > 0.0)) return img;
  const auto kernel = gaussian_kernel(sigma);
  const int w = img.width(), h = img.height(), c = img.channels();
  Image out(w, h, c);
  std::vector<float> plane(img.pixel_count());
  for (int ch = 0; ch < c; ++ch) {
    for (std::size_t p = 0; p < plane.size(); ++p) plane[p] = img.data()[p * c + ch];
    const auto res = separable_filter(plane, w, h, kernel);
    for (std::size_t p = 0; p < plane.size(); ++p) out.data()[p * c + ch] = res[p];
  }
  return out;
}

}  // namespace turblucky
