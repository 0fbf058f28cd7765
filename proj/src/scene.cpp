#include "turblucky/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "turblucky/filters.hpp"
#include "turblucky/parallel.hpp"

namespace turblucky {

namespace {

using Rgb = std::array<float, 3>;

Rgb random_colour(std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.05f, 0.95f);
  return {u(rng), u(rng), u(rng)};
}

float luma(const Rgb& c) { return 0.299f * c[0] + 0.587f * c[1] + 0.114f * c[2]; }

// Two colours whose luminance differs by at least 0.3.
std::pair<Rgb, Rgb> contrasting_pair(std::mt19937_64& rng) {
  for (;;) {
    Rgb a = random_colour(rng), b = random_colour(rng);
    if (std::abs(luma(a) - luma(b)) >= 0.3f) return {a, b};
  }
}

void put(Image& img, int x, int y, const Rgb& c) {
  if (img.channels() == 1) {
    img.at(x, y) = luma(c);
  } else {
    for (int ch = 0; ch < 3; ++ch) img.at(x, y, ch) = c[std::size_t(ch)];
  }
}

Image checkerboard(std::mt19937_64& rng, int w, int h, int channels) {
  std::uniform_real_distribution<double> cell(4.0, 12.0), angle(0.0, std::numbers::pi / 2), phase(0.0, 20.0);
  const auto [a, b] = contrasting_pair(rng);
  const double s = cell(rng), th = angle(rng), px = phase(rng), py = phase(rng);
  const double ct = std::cos(th), st = std::sin(th);
  Image img(w, h, channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double u = (ct * x + st * y + px) / s, v = (-st * x + ct * y + py) / s;
      const bool odd = (long(std::floor(u)) + long(std::floor(v))) & 1;
      put(img, x, y, odd ? a : b);
    }
  return img;
}

// 5x7 bitmaps, rows top to bottom, '#' set.
constexpr std::array<std::array<const char*, 7>, 10> kGlyphs{{
    {"#####", "#....", "#....", "####.", "#....", "#....", "#####"},  // E
    {"#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#", "#...#"},  // N
    {"#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."},  // T
    {".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".###."},  // G
    {"#...#", "##.##", "#.#.#", "#...#", "#...#", "#...#", "#...#"},  // M
    {"####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"},  // R
    {".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"},  // A
    {"#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."},  // Y
    {".###.", "#...#", "....#", "..##.", ".#...", "#....", "#####"},  // 2
    {"#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."},  // U
}};

Image glyphs(std::mt19937_64& rng, int w, int h, int channels) {
  const auto [bg, fg] = contrasting_pair(rng);
  Image img(w, h, channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) put(img, x, y, bg);
  std::uniform_int_distribution<int> scale_d(1, 2), glyph_d(0, int(kGlyphs.size()) - 1);
  const int scale = scale_d(rng);
  const int gw = 6 * scale, gh = 8 * scale;
  for (int row = 1; row + gh <= h; row += gh + scale) {
    for (int col = 1; col + gw <= w; col += gw) {
      const auto& g = kGlyphs[std::size_t(glyph_d(rng))];
      for (int gy = 0; gy < 7 * scale; ++gy)
        for (int gx = 0; gx < 5 * scale; ++gx)
          if (g[std::size_t(gy / scale)][gx / scale] == '#') put(img, col + gx, row + gy, fg);
    }
  }
  return img;
}

Image filtered_noise(std::mt19937_64& rng, int w, int h, int channels) {
  std::uniform_real_distribution<double> sigma_d(1.0, 3.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto kernel = gaussian_kernel(sigma_d(rng));
  Image img(w, h, channels);
  std::vector<float> plane(std::size_t(w) * h);
  for (int ch = 0; ch < channels; ++ch) {
    for (float& v : plane) v = float(normal(rng));
    auto sm = separable_filter(plane, w, h, kernel);
    const auto [lo, hi] = std::minmax_element(sm.begin(), sm.end());
    const float span = std::max(*hi - *lo, 1e-6f);
    for (std::size_t p = 0; p < sm.size(); ++p)
      img.data()[p * std::size_t(channels) + std::size_t(ch)] = 0.05f + 0.9f * (sm[p] - *lo) / span;
  }
  return img;
}

}  // namespace

Image procedural_scene(SceneKind kind, std::uint64_t seed, int width, int height, int channels) {
  std::mt19937_64 rng(mix_seed(seed, 0x5CE7E));
  switch (kind) {
    case SceneKind::checkerboard: return checkerboard(rng, width, height, channels);
    case SceneKind::glyphs: return glyphs(rng, width, height, channels);
    case SceneKind::noise: break;
  }
  return filtered_noise(rng, width, height, channels);
}

Image procedural_scene(std::uint64_t seed, int width, int height, int channels) {
  const auto kind = static_cast<SceneKind>(mix_seed(seed, 0xC1A55) % 3);
  return procedural_scene(kind, seed, width, height, channels);
}

Image fit_image(const Image& src, int width, int height, int channels) {
  Image img = src;
  if (channels == 1 && img.channels() == 3) img = to_luminance(img);
  Image out(width, height, channels);
  if (img.width() >= width && img.height() >= height) {
    const int x0 = (img.width() - width) / 2, y0 = (img.height() - height) / 2;
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        for (int c = 0; c < channels; ++c)
          out.at(x, y, c) = img.at(x0 + x, y0 + y, std::min(c, img.channels() - 1));
    return out;
  }
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c)
        out.at(x, y, c) = img.at(x * img.width() / width, y * img.height() / height, std::min(c, img.channels() - 1));
  return out;
}

}  // namespace turblucky
