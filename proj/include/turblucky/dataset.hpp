#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "turblucky/events.hpp"
#include "turblucky/image.hpp"

namespace turblucky {

struct Sample {
  std::string id;
  Image gt;
  FrameSequence turbulent;
  EventStream events;
  std::uint64_t seed = 0;

  bool operator==(const Sample&) const = default;
};

void validate_sample(const Sample& s);

// 8-bit PNG, gray or RGB. Values are quantized with round(v * 255).
void write_png(const std::filesystem::path& path, const Image& img);
Image read_png(const std::filesystem::path& path);

// events.csv: header "t_us,x,y,p", polarity stored as {0,1}.
void write_events_csv(const std::filesystem::path& path, const EventStream& stream);
std::vector<Event> read_events_csv(const std::filesystem::path& path);

// Directory layout:
//   gt.png, frames/frame_XX.png, frames/timestamps.txt, events.csv, meta.json
void save_sample(const Sample& sample, const std::filesystem::path& dir);
Sample load_sample(const std::filesystem::path& dir);

// All "sample_*" subdirectories of root, sorted by name.
std::vector<std::filesystem::path> list_sample_dirs(const std::filesystem::path& root);
std::vector<Sample> load_dataset(const std::filesystem::path& root);

}  // namespace turblucky
