#include <fstream>
#include <iterator>

#include "doctest.h"
#include "support.hpp"
#include "turblucky/dataset.hpp"
#include "turblucky/error.hpp"

using namespace turblucky;
using testing::TempDir;

namespace {

Sample small_sample(std::uint64_t seed, int n_frames = 3, int channels = 3) {
  std::mt19937_64 rng(seed);
  Sample s;
  s.id = "0007";
  s.seed = seed;
  s.gt = quantize8(testing::random_image(rng, 16, 12, channels));
  std::vector<Image> frames;
  for (int k = 0; k < n_frames; ++k) frames.push_back(quantize8(testing::random_image(rng, 16, 12, channels)));
  s.turbulent = FrameSequence::uniform(std::move(frames), 50000);
  s.events = testing::random_stream(rng, 16, 12, n_frames * 50000, 200);
  return s;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

}  // namespace

TEST_CASE("image validation rejects out-of-range, tiny and odd-channel images") {
  CHECK_NOTHROW(validate_image(Image(8, 8, 1, 0.5f)));
  CHECK_THROWS_AS(validate_image(Image(7, 8, 1)), ValidationError);
  CHECK_THROWS_AS(validate_image(Image(8, 8, 2)), ValidationError);
  Image bad(8, 8, 3, 0.5f);
  bad.at(3, 4, 1) = 1.5f;
  CHECK_THROWS_AS(validate_image(bad), ValidationError);
  bad.at(3, 4, 1) = std::nanf("");
  CHECK_THROWS_AS(validate_image(bad), ValidationError);
}

TEST_CASE("quantization rounds half up onto the 8-bit grid") {
  CHECK(to_u8(0.5f) == 128);
  CHECK(to_u8(0.0f) == 0);
  CHECK(to_u8(1.0f) == 255);
  for (int v = 0; v < 256; ++v) CHECK(to_u8(float(v) / 255.0f) == v);
}

TEST_CASE("luminance uses Rec.601 weights") {
  Image rgb(8, 8, 3);
  rgb.at(2, 2, 0) = 1.0f;
  rgb.at(3, 3, 1) = 1.0f;
  rgb.at(4, 4, 2) = 1.0f;
  const Image y = to_luminance(rgb);
  CHECK(y.channels() == 1);
  CHECK(y.at(2, 2) == doctest::Approx(0.299));
  CHECK(y.at(3, 3) == doctest::Approx(0.587));
  CHECK(y.at(4, 4) == doctest::Approx(0.114));
}

TEST_CASE("frame sequences need at least two evenly spaced frames") {
  std::vector<Image> one{Image(8, 8, 1)};
  CHECK_THROWS_AS(validate_sequence(FrameSequence::uniform(one, 100)), ValidationError);
  auto seq = FrameSequence::uniform({Image(8, 8, 1), Image(8, 8, 1), Image(8, 8, 1)}, 100);
  CHECK(seq.timestamps_us == std::vector<std::int64_t>{0, 100, 200});
  CHECK_NOTHROW(validate_sequence(seq));
  seq.timestamps_us[2] = 250;
  CHECK_THROWS_AS(validate_sequence(seq), ValidationError);
}

TEST_CASE("event validation") {
  EventStream s{{{0, 1, 1, 1}, {5, 2, 2, -1}}, 10, 4, 4};
  CHECK_NOTHROW(validate_events(s));
  s.events[1].t_us = -1;
  CHECK_THROWS_AS(validate_events(s), ValidationError);
  s.events[1] = {10, 2, 2, 1};  // t == duration
  CHECK_THROWS_AS(validate_events(s), ValidationError);
  s.events[1] = {5, 4, 2, 1};  // x out of bounds
  CHECK_THROWS_AS(validate_events(s), ValidationError);
  s.events[1] = {5, 2, 2, 0};
  CHECK_THROWS_AS(validate_events(s), ValidationError);
  s.events = {{5, 1, 1, 1}, {4, 1, 1, 1}};
  CHECK_THROWS_AS(validate_events(s), ValidationError);
}

TEST_CASE("png round trip is exact on the 8-bit grid") {
  TempDir dir("png");
  std::mt19937_64 rng(1);
  for (int c : {1, 3}) {
    const Image img = quantize8(testing::random_image(rng, 13, 9, c));
    write_png(dir / "a.png", img);
    CHECK(read_png(dir / "a.png") == img);
  }
  Image half(8, 8, 1, 0.5f);
  write_png(dir / "h.png", half);
  CHECK(read_png(dir / "h.png").at(0, 0) == doctest::Approx(128.0 / 255.0).epsilon(1e-7));
}

TEST_CASE("events.csv single line parses to one event") {
  TempDir dir("csv");
  spit(dir / "events.csv", "t_us,x,y,p\n500000,3,2,1\n");
  const auto ev = read_events_csv(dir / "events.csv");
  REQUIRE(ev.size() == 1);
  CHECK(ev[0] == Event{500000, 3, 2, 1});
}

TEST_CASE("sample round trip preserves every field") {
  TempDir dir("roundtrip");
  for (int channels : {1, 3}) {
    const Sample s = small_sample(11 + channels, 3, channels);
    save_sample(s, dir / "sample_0007");
    const Sample back = load_sample(dir / "sample_0007");
    CHECK(back.id == s.id);
    CHECK(back.seed == s.seed);
    CHECK(back.gt == s.gt);
    CHECK(back.turbulent == s.turbulent);
    CHECK(back.events == s.events);
    CHECK(back == s);
  }
}

TEST_CASE("empty events.csv loads as an empty stream") {
  TempDir dir("empty");
  Sample s = small_sample(3, 11, 3);
  s.events.events.clear();
  save_sample(s, dir / "sample_0007");
  CHECK(slurp(dir / "sample_0007/events.csv") == "t_us,x,y,p\n");
  const Sample back = load_sample(dir / "sample_0007");
  CHECK(back.events.events.empty());
  CHECK(back.turbulent.size() == 11);
  CHECK(back.events.duration_us == 11 * 50000);
}

TEST_CASE("saving twice gives byte-identical files") {
  TempDir dir("bytes");
  const Sample s = small_sample(5);
  save_sample(s, dir / "sample_a");
  save_sample(s, dir / "sample_b");
  for (const char* f : {"events.csv", "meta.json", "gt.png", "frames/frame_00.png", "frames/timestamps.txt"})
    CHECK(slurp(dir / "sample_a" / f) == slurp(dir / "sample_b" / f));
}

TEST_CASE("loading reports missing files as I/O errors naming the file") {
  TempDir dir("missing");
  const Sample s = small_sample(6);
  save_sample(s, dir / "sample_x");
  std::filesystem::remove(dir / "sample_x/frames/frame_01.png");
  try {
    load_sample(dir / "sample_x");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("frame_01.png") != std::string::npos);
  }
  CHECK_THROWS_AS(load_sample(dir / "nope"), IoError);
}

TEST_CASE("loading rejects corrupted samples") {
  TempDir dir("corrupt");
  const Sample s = small_sample(9);
  const auto fresh = [&](const std::string& name) {
    save_sample(s, dir / name);
    return dir / name;
  };

  SUBCASE("unsorted events") {
    auto d = fresh("s1");
    spit(d / "events.csv", "t_us,x,y,p\n20,1,1,1\n10,1,1,0\n");
    CHECK_THROWS_AS(load_sample(d), ValidationError);
  }
  SUBCASE("event out of bounds") {
    auto d = fresh("s2");
    spit(d / "events.csv", "t_us,x,y,p\n10,16,1,1\n");
    CHECK_THROWS_AS(load_sample(d), ValidationError);
  }
  SUBCASE("event after the sequence end") {
    auto d = fresh("s3");
    spit(d / "events.csv", "t_us,x,y,p\n150000,1,1,1\n");
    CHECK_THROWS_AS(load_sample(d), ValidationError);
  }
  SUBCASE("bad polarity, bad header, garbage fields") {
    for (const char* text : {"t_us,x,y,p\n10,1,1,2\n", "t,x,y,p\n10,1,1,1\n", "t_us,x,y,p\n1x,1,1,1\n",
                             "t_us,x,y,p\n10,1,1\n", "t_us,x,y,p\n10,-1,1,1\n"}) {
      auto d = fresh("s4");
      spit(d / "events.csv", text);
      CHECK_THROWS_AS(load_sample(d), ValidationError);
    }
  }
  SUBCASE("frame dims differ from gt") {
    auto d = fresh("s5");
    write_png(d / "frames/frame_01.png", Image(17, 12, 3));
    CHECK_THROWS_AS(load_sample(d), ValidationError);
  }
  SUBCASE("timestamps not a multiple of the interval") {
    auto d = fresh("s6");
    spit(d / "frames/timestamps.txt", "0\n50000\n100001\n");
    CHECK_THROWS_AS(load_sample(d), ValidationError);
  }
  SUBCASE("broken meta.json") {
    auto d = fresh("s7");
    spit(d / "meta.json", "{\"n_frames\": 3,");
    CHECK_THROWS_AS(load_sample(d), ValidationError);
    spit(d / "meta.json", "{\"n_frames\": 3}");
    CHECK_THROWS_AS(load_sample(d), ValidationError);
  }
  SUBCASE("truncated and random png bytes") {
    auto d = fresh("s8");
    const std::string png = slurp(d / "gt.png");
    spit(d / "gt.png", png.substr(0, png.size() / 2));
    CHECK_THROWS_AS(load_sample(d), ValidationError);
    std::mt19937_64 rng(4);
    std::string junk(200, '\0');
    for (char& c : junk) c = char(rng() & 0xff);
    spit(d / "gt.png", junk);
    CHECK_THROWS_AS(load_sample(d), ValidationError);
  }
}

TEST_CASE("random byte corruption of events.csv never loads an invalid sample") {
  TempDir dir("fuzz");
  const Sample s = small_sample(21);
  save_sample(s, dir / "sample_f");
  const std::string good = slurp(dir / "sample_f/events.csv");
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    std::string bad = good;
    const int flips = 1 + int(rng() % 4);
    for (int k = 0; k < flips; ++k) bad[rng() % bad.size()] = "0123456789,-\nx9"[rng() % 15];
    spit(dir / "sample_f/events.csv", bad);
    try {
      const Sample back = load_sample(dir / "sample_f");
      CHECK_NOTHROW(validate_sample(back));
    } catch (const ValidationError&) {
    }
  }
}

TEST_CASE("dataset listing is sorted and ignores other entries") {
  TempDir dir("list");
  const Sample s = small_sample(2);
  save_sample(s, dir / "sample_0002");
  save_sample(s, dir / "sample_0001");
  std::filesystem::create_directories(dir / "other");
  const auto dirs = list_sample_dirs(dir.path());
  REQUIRE(dirs.size() == 2);
  CHECK(dirs[0].filename() == "sample_0001");
  const auto ds = load_dataset(dir.path());
  CHECK(ds[0].id == "0001");
  CHECK(ds[1].id == "0002");
}
