#include "turblucky/voxel.hpp"

#include <fstream>
#include <string>

#include "turblucky/binary_io.hpp"
#include "turblucky/error.hpp"

namespace turblucky {

double EventVoxel::total() const {
  double acc = 0.0;
  for (float v : data) acc += v;
  return acc;
}

int bin_of(std::int64_t t_us, const VoxelConfig& cfg) {
  const std::int64_t b = t_us * cfg.bins / cfg.duration_us;
  return int(std::min<std::int64_t>(b, cfg.bins - 1));
}

EventVoxel voxelize(const EventStream& stream, const VoxelConfig& cfg) {
  require(cfg.bins >= 1, "voxel needs at least one bin");
  require(cfg.duration_us > 0, "voxel duration must be positive");
  require(stream.duration_us <= cfg.duration_us, "stream longer than voxel time span");
  require(stream.width > 0 && stream.height > 0, "stream sensor dims must be positive");

  EventVoxel v(cfg.bins, stream.height, stream.width);
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const Event& e = stream.events[i];
    if (e.x < 0 || e.x >= stream.width || e.y < 0 || e.y >= stream.height)
      throw ValidationError("event " + std::to_string(i) + " outside sensor bounds");
    if (e.t_us < 0 || e.t_us > cfg.duration_us)
      throw ValidationError("event " + std::to_string(i) + " outside voxel time span");
    v.at(bin_of(e.t_us, cfg), e.y, e.x) += 1.0f;
  }
  return v;
}

EventVoxel frame_density(const EventVoxel& voxel, int n_frames) {
  require(n_frames >= 1 && voxel.bins % n_frames == 0,
          "bin count " + std::to_string(voxel.bins) + " not divisible by frame count " +
              std::to_string(n_frames));
  const int per = voxel.bins / n_frames;
  EventVoxel d(n_frames, voxel.height, voxel.width);
  const std::size_t plane = voxel.plane();
  for (int i = 0; i < n_frames; ++i) {
    float* dst = d.data.data() + std::size_t(i) * plane;
    for (int b = i * per; b < (i + 1) * per; ++b) {
      const float* src = voxel.data.data() + std::size_t(b) * plane;
      for (std::size_t p = 0; p < plane; ++p) dst[p] += src[p];
    }
  }
  return d;
}

void write_voxel(const std::filesystem::path& path, const EventVoxel& voxel) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write("EVXL", 4);
  le::put<std::uint16_t>(out, 1);
  le::put<std::uint32_t>(out, std::uint32_t(voxel.bins));
  le::put<std::uint32_t>(out, std::uint32_t(voxel.height));
  le::put<std::uint32_t>(out, std::uint32_t(voxel.width));
  for (float f : voxel.data) le::put_f32(out, f);
  if (!out) throw IoError("short write to " + path.string());
}

EventVoxel read_voxel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  le::expect_magic(in, "EVXL");
  const auto version = le::get<std::uint16_t>(in);
  require(version == 1, "unsupported EVXL version " + std::to_string(version));
  const auto b = le::get<std::uint32_t>(in);
  const auto h = le::get<std::uint32_t>(in);
  const auto w = le::get<std::uint32_t>(in);
  require(b >= 1 && h >= 1 && w >= 1 && std::uint64_t(b) * h * w <= (1ull << 30), "bad EVXL dims");
  EventVoxel v(static_cast<int>(b), static_cast<int>(h), static_cast<int>(w));
  for (float& f : v.data) f = le::get_f32(in);
  require(in.peek() == std::char_traits<char>::eof(), "trailing bytes after EVXL payload");
  return v;
}

}  // namespace turblucky
