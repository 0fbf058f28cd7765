#include "turblucky/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>

#include "turblucky/error.hpp"
#include "turblucky/filters.hpp"

namespace turblucky {

double psnr(const Image& pred, const Image& gt) {
  require(pred.same_shape(gt), "psnr: image dims differ");
  double acc = 0.0;
  auto a = pred.data(), b = gt.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = double(a[i]) - double(b[i]);
    acc += d * d;
  }
  const double mse = acc / double(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& pred, const Image& gt) {
  require(pred.same_shape(gt), "ssim: image dims differ");
  constexpr int kWin = 11;
  require(pred.width() >= kWin && pred.height() >= kWin, "ssim: image smaller than the 11x11 window");
  const Image a = to_luminance(pred), b = to_luminance(gt);
  const int w = a.width(), h = a.height();

  const auto g1 = gaussian_kernel(1.5);  // radius ceil(4.5) = 5 -> 11 taps
  double kernel[kWin][kWin];
  for (int i = 0; i < kWin; ++i)
    for (int j = 0; j < kWin; ++j) kernel[i][j] = g1[std::size_t(i)] * g1[std::size_t(j)];

  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0.0;
  std::size_t count = 0;
  for (int y0 = 0; y0 + kWin <= h; ++y0) {
    for (int x0 = 0; x0 + kWin <= w; ++x0) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int i = 0; i < kWin; ++i)
        for (int j = 0; j < kWin; ++j) {
          const double k = kernel[i][j];
          const double va = a.at(x0 + j, y0 + i), vb = b.at(x0 + j, y0 + i);
          ma += k * va;
          mb += k * vb;
          saa += k * va * va;
          sbb += k * vb * vb;
          sab += k * va * vb;
        }
      const double var_a = saa - ma * ma, var_b = sbb - mb * mb, cov = sab - ma * mb;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
      ++count;
    }
  }
  return total / double(count);
}

PearsonResult pearson(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size(), "pearson: input lengths differ");
  require(xs.size() >= 3, "pearson: need at least 3 points");
  const double n = double(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw NumericError("pearson: degenerate (zero) variance");

  PearsonResult res;
  res.n = xs.size();
  res.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double dof = n - 2.0;
  if (dof <= 0.0) return res;
  const double one_minus = 1.0 - res.r * res.r;
  if (one_minus <= 0.0) {
    res.p = 0.0;
    return res;
  }
  const double t = std::abs(res.r) * std::sqrt(dof / one_minus);
  boost::math::students_t dist(dof);
  res.p = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, t)), 0.0, 1.0);
  return res;
}

}  // namespace turblucky
