#include "turblucky/dataset.hpp"

#include <png.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "turblucky/error.hpp"

namespace turblucky {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string frame_name(int k, int n) {
  const int digits = std::max<int>(2, int(std::to_string(n - 1).size()));
  std::string s = std::to_string(k);
  return "frame_" + std::string(std::size_t(std::max(0, digits - int(s.size()))), '0') + s + ".png";
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  return in;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

template <class Int>
Int parse_int(std::string_view field, const fs::path& file, std::size_t line) {
  Int v{};
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end || field.empty())
    throw ValidationError(file.string() + ":" + std::to_string(line) + ": bad integer '" +
                          std::string(field) + "'");
  return v;
}

}  // namespace

void validate_sample(const Sample& s) {
  validate_image(s.gt);
  validate_sequence(s.turbulent);
  require(s.turbulent.frames[0].same_shape(s.gt), "frame dims differ from ground truth");
  require(s.events.width == s.gt.width() && s.events.height == s.gt.height(),
          "event sensor dims differ from image dims");
  require(s.events.duration_us == s.turbulent.size() * s.turbulent.frame_interval_us,
          "event duration must equal n_frames * frame_interval");
  validate_events(s.events);
}

void write_png(const fs::path& path, const Image& img) {
  require(img.channels() == 1 || img.channels() == 3, "png needs 1 or 3 channels");
  std::vector<std::uint8_t> buf(img.size());
  auto d = img.data();
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = to_u8(d[i]);

  png_image pi{};
  pi.version = PNG_IMAGE_VERSION;
  pi.width = png_uint_32(img.width());
  pi.height = png_uint_32(img.height());
  pi.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&pi, path.string().c_str(), 0, buf.data(), 0, nullptr)) {
    std::string msg = pi.message;
    png_image_free(&pi);
    throw IoError("cannot write " + path.string() + ": " + msg);
  }
}

Image read_png(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("missing file " + path.string());
  png_image pi{};
  pi.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&pi, path.string().c_str())) {
    std::string msg = pi.message;
    png_image_free(&pi);
    throw ValidationError("cannot decode " + path.string() + ": " + msg);
  }
  const bool color = (pi.format & PNG_FORMAT_FLAG_COLOR) != 0;
  pi.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  if (pi.width == 0 || pi.height == 0 || pi.width > 1u << 15 || pi.height > 1u << 15) {
    png_image_free(&pi);
    throw ValidationError("unsupported png size in " + path.string());
  }
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(pi));
  if (!png_image_finish_read(&pi, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = pi.message;
    png_image_free(&pi);
    throw ValidationError("cannot decode " + path.string() + ": " + msg);
  }
  std::vector<float> data(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) data[i] = float(buf[i]) / 255.0f;
  return Image(int(pi.width), int(pi.height), channels, std::move(data));
}

void write_events_csv(const fs::path& path, const EventStream& stream) {
  std::string text = "t_us,x,y,p\n";
  text.reserve(text.size() + stream.events.size() * 16);
  char line[64];
  for (const Event& e : stream.events) {
    const int n = std::snprintf(line, sizeof line, "%lld,%d,%d,%d\n", static_cast<long long>(e.t_us),
                                e.x, e.y, e.polarity > 0 ? 1 : 0);
    text.append(line, std::size_t(n));
  }
  auto out = open_out(path);
  out.write(text.data(), std::streamsize(text.size()));
  if (!out) throw IoError("short write to " + path.string());
}

std::vector<Event> read_events_csv(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("missing file " + path.string());
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t_us,x,y,p") throw ValidationError(path.string() + ": bad header '" + line + "'");

  std::vector<Event> events;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view rest(line);
    std::string_view fields[4];
    for (int f = 0; f < 4; ++f) {
      const auto comma = rest.find(',');
      if (f < 3 && comma == std::string_view::npos)
        throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected 4 fields");
      fields[f] = f < 3 ? rest.substr(0, comma) : rest;
      if (f < 3) rest.remove_prefix(comma + 1);
    }
    Event e;
    e.t_us = parse_int<std::int64_t>(fields[0], path, lineno);
    e.x = parse_int<int>(fields[1], path, lineno);
    e.y = parse_int<int>(fields[2], path, lineno);
    const int p = parse_int<int>(fields[3], path, lineno);
    if (p != 0 && p != 1)
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": polarity must be 0 or 1");
    e.polarity = p == 1 ? 1 : -1;
    events.push_back(e);
  }
  return events;
}

void save_sample(const Sample& sample, const fs::path& dir) {
  validate_sample(sample);
  std::error_code ec;
  fs::create_directories(dir / "frames", ec);
  if (ec) throw IoError("cannot create " + (dir / "frames").string() + ": " + ec.message());

  write_png(dir / "gt.png", sample.gt);
  const int n = sample.turbulent.size();
  std::string stamps;
  for (int k = 0; k < n; ++k) {
    write_png(dir / "frames" / frame_name(k, n), sample.turbulent.frames[std::size_t(k)]);
    stamps += std::to_string(sample.turbulent.timestamps_us[std::size_t(k)]) + "\n";
  }
  {
    auto out = open_out(dir / "frames" / "timestamps.txt");
    out << stamps;
  }
  write_events_csv(dir / "events.csv", sample.events);

  json meta = {{"n_frames", n},
               {"frame_interval_us", sample.turbulent.frame_interval_us},
               {"width", sample.gt.width()},
               {"height", sample.gt.height()},
               {"channels", sample.gt.channels()},
               {"seed", sample.seed}};
  auto out = open_out(dir / "meta.json");
  out << meta.dump(2) << "\n";
}

Sample load_sample(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a sample directory: " + dir.string());
  Sample s;
  const std::string name = dir.filename().string();
  s.id = name.rfind("sample_", 0) == 0 ? name.substr(7) : name;

  const fs::path meta_path = dir / "meta.json";
  if (!fs::exists(meta_path)) throw IoError("missing file " + meta_path.string());
  json meta;
  try {
    auto in = open_in(meta_path);
    meta = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(meta_path.string() + ": " + e.what());
  }
  int n = 0, width = 0, height = 0, channels = 0;
  std::int64_t interval = 0;
  try {
    n = meta.at("n_frames").get<int>();
    interval = meta.at("frame_interval_us").get<std::int64_t>();
    width = meta.at("width").get<int>();
    height = meta.at("height").get<int>();
    channels = meta.at("channels").get<int>();
    s.seed = meta.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw ValidationError(meta_path.string() + ": " + e.what());
  }
  require(n >= 2 && n <= 100000, "meta.json: n_frames out of range");
  require(interval > 0, "meta.json: frame_interval_us must be positive");

  s.gt = read_png(dir / "gt.png");
  require(s.gt.width() == width && s.gt.height() == height && s.gt.channels() == channels,
          "gt.png dims disagree with meta.json");

  std::vector<Image> frames;
  for (int k = 0; k < n; ++k) frames.push_back(read_png(dir / "frames" / frame_name(k, n)));

  const fs::path stamp_path = dir / "frames" / "timestamps.txt";
  if (!fs::exists(stamp_path)) throw IoError("missing file " + stamp_path.string());
  std::vector<std::int64_t> stamps;
  {
    auto in = open_in(stamp_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      stamps.push_back(parse_int<std::int64_t>(line, stamp_path, lineno));
    }
  }
  s.turbulent.frames = std::move(frames);
  s.turbulent.timestamps_us = std::move(stamps);
  s.turbulent.frame_interval_us = interval;

  s.events.width = width;
  s.events.height = height;
  s.events.duration_us = std::int64_t(n) * interval;
  s.events.events = read_events_csv(dir / "events.csv");

  validate_sample(s);
  return s;
}

std::vector<fs::path> list_sample_dirs(const fs::path& root) {
  if (!fs::is_directory(root)) throw IoError("dataset directory not found: " + root.string());
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && entry.path().filename().string().rfind("sample_", 0) == 0)
      dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

std::vector<Sample> load_dataset(const fs::path& root) {
  std::vector<Sample> out;
  for (const auto& d : list_sample_dirs(root)) out.push_back(load_sample(d));
  if (out.empty()) throw IoError("no sample_* directories in " + root.string());
  return out;
}

}  // namespace turblucky
