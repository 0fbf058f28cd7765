#pragma once

#include <filesystem>

#include "turblucky/network.hpp"

namespace turblucky {

// "EGTM" | u16 version=1 | u32 tensor count | per tensor:
//   u16 name length, UTF-8 name, u8 ndim, ndim x u32 dims, float32 data (little-endian)
void save_model(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace turblucky
