#pragma once

#include <span>
#include <vector>

#include "turblucky/image.hpp"

namespace turblucky {

// Mirror index into [0, n) without repeating the edge sample (…2 1 | 0 1 2 … n-2 n-1 | n-2 …).
int reflect_index(int i, int n);

// Sampled Gaussian of radius ceil(3 sigma), L1-normalized. sigma <= 0 gives {1}.
std::vector<double> gaussian_kernel(double sigma);

// Separable correlation of a single-channel plane (row-major, w x h) with reflect padding.
std::vector<float> separable_filter(std::span<const float> plane, int w, int h,
                                    std::span<const double> kernel);

// Mean over an s x s window (reflect padded); even s is anchored top-left of center.
std::vector<float> box_filter(std::span<const float> plane, int w, int h, int s);

// Gaussian blur applied per channel.
Image gaussian_blur(const Image& img, double sigma);

}  // namespace turblucky
