#pragma once

#include <cstdint>

#include "turblucky/image.hpp"

namespace turblucky {

enum class SceneKind { checkerboard, glyphs, noise };

// Seed-reproducible clean images; the kind is drawn from the seed too.
Image procedural_scene(std::uint64_t seed, int width, int height, int channels);
Image procedural_scene(SceneKind kind, std::uint64_t seed, int width, int height, int channels);

// Centre crop (or reflect-free nearest resample when smaller) to width x height.
Image fit_image(const Image& src, int width, int height, int channels);

}  // namespace turblucky
