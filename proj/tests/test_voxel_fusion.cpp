#include <fstream>
#include <iterator>
#include <map>
#include <tuple>

#include "doctest.h"
#include "support.hpp"
#include "turblucky/error.hpp"
#include "turblucky/filters.hpp"
#include "turblucky/fusion.hpp"
#include "turblucky/voxel.hpp"

using namespace turblucky;
using testing::TempDir;

namespace {

// Brute-force histogram keyed by (bin, y, x), bin from floating division.
std::map<std::tuple<int, int, int>, int> histogram(const EventStream& s, int bins) {
  std::map<std::tuple<int, int, int>, int> h;
  const double dt = double(s.duration_us) / bins;
  for (const auto& e : s.events) {
    int b = int(std::floor(double(e.t_us) / dt));
    if (b >= bins) b = bins - 1;
    // floating division can land one bin early on exact multiples; bins are [b dt, (b+1) dt)
    while (b + 1 < bins && double(e.t_us) * bins >= double(b + 1) * double(s.duration_us)) ++b;
    ++h[{b, e.y, e.x}];
  }
  return h;
}

FrameSequence random_frames(std::mt19937_64& rng, int n, int w, int h, int c) {
  std::vector<Image> frames;
  for (int i = 0; i < n; ++i) frames.push_back(testing::random_image(rng, w, h, c));
  return FrameSequence::uniform(std::move(frames), 1000);
}

WeightMap random_weights(std::mt19937_64& rng, int n, int h, int w) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  WeightMap wm(n, h, w);
  for (std::size_t p = 0; p < wm.plane(); ++p) {
    std::vector<double> v(static_cast<std::size_t>(n));
    double s = 0;
    for (auto& x : v) s += (x = u(rng));
    for (int i = 0; i < n; ++i) wm.data[std::size_t(i) * wm.plane() + p] = float(v[std::size_t(i)] / s);
  }
  return wm;
}

}  // namespace

TEST_CASE("voxelize: empty stream and single event") {
  EventStream s{{}, 400, 8, 6};
  const auto v0 = voxelize(s, {4, 400});
  CHECK(v0.total() == 0.0);
  s.events = {{50, 3, 2, -1}};
  const auto v = voxelize(s, {4, 400});
  CHECK(v.at(0, 2, 3) == 1.0f);
  CHECK(v.total() == 1.0);
}

TEST_CASE("voxelize: bin boundaries and the endpoint clamp") {
  const VoxelConfig cfg{4, 400};
  CHECK(bin_of(0, cfg) == 0);
  CHECK(bin_of(99, cfg) == 0);
  CHECK(bin_of(100, cfg) == 1);
  CHECK(bin_of(399, cfg) == 3);
  CHECK(bin_of(400, cfg) == 3);
  const VoxelConfig odd{3, 100};
  CHECK(bin_of(33, odd) == 0);
  CHECK(bin_of(34, odd) == 1);
  CHECK(bin_of(67, odd) == 2);
}

TEST_CASE("voxelize: random streams match a brute-force histogram") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const int bins = 1 + int(rng() % 50);
    const auto s = testing::random_stream(rng, 17, 11, 1 + std::int64_t(rng() % 1000000), 10000);
    const auto v = voxelize(s, {bins, s.duration_us});
    CHECK(v.total() == 10000.0);
    const auto h = histogram(s, bins);
    double matched = 0;
    for (const auto& [key, count] : h) {
      const auto [b, y, x] = key;
      CHECK(v.at(b, y, x) == float(count));
      matched += count;
    }
    CHECK(matched == v.total());
  }
}

TEST_CASE("voxelize: permutation invariance and refinement consistency") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    auto s = testing::random_stream(rng, 9, 7, 1 + std::int64_t(rng() % 100000), rng() % 2000);
    const int bins = 1 + int(rng() % 30);
    const auto v = voxelize(s, {bins, s.duration_us});
    CHECK(v.total() == double(s.events.size()));
    for (float x : v.data) CHECK(x >= 0.0f);

    auto shuffled = s;
    std::shuffle(shuffled.events.begin(), shuffled.events.end(), rng);
    CHECK(voxelize(shuffled, {bins, s.duration_us}) == v);

    const auto fine = voxelize(s, {2 * bins, s.duration_us});
    EventVoxel merged(bins, v.height, v.width);
    for (int b = 0; b < 2 * bins; ++b)
      for (int y = 0; y < v.height; ++y)
        for (int x = 0; x < v.width; ++x) merged.at(b / 2, y, x) += fine.at(b, y, x);
    CHECK(merged == v);
  }
}

TEST_CASE("voxelize: rejects out-of-bounds events") {
  EventStream s{{{5, 8, 0, 1}}, 10, 8, 8};
  CHECK_THROWS_AS(voxelize(s, {2, 10}), ValidationError);
  s.events = {{11, 1, 1, 1}};
  CHECK_THROWS_AS(voxelize(s, {2, 10}), ValidationError);
  s.events.clear();
  CHECK_THROWS_AS(voxelize(s, {2, 5}), ValidationError);
}

TEST_CASE("frame density sums bin groups") {
  EventVoxel v(8, 3, 3);
  v.at(0, 1, 1) = 5.0f;
  auto d = frame_density(v, 2);
  CHECK(d.at(0, 1, 1) == 5.0f);
  CHECK(d.total() == 5.0);

  EventVoxel flat(8, 3, 3);
  std::fill(flat.data.begin(), flat.data.end(), 1.0f);
  for (float x : frame_density(flat, 4).data) CHECK(x == 2.0f);

  std::mt19937_64 rng(3);
  EventVoxel r(12, 4, 5);
  for (float& x : r.data) x = float(rng() % 7);
  const auto g = frame_density(r, 3);
  for (int i = 0; i < 3; ++i)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 5; ++x) {
        float s = 0;
        for (int b = 4 * i; b < 4 * i + 4; ++b) s += r.at(b, y, x);
        CHECK(g.at(i, y, x) == s);
      }
  CHECK_THROWS_AS(frame_density(r, 5), ValidationError);
}

TEST_CASE("EVXL round trip and corrupted files") {
  TempDir dir("evxl");
  std::mt19937_64 rng(4);
  EventVoxel v(5, 3, 4);
  for (float& x : v.data) x = float(rng() % 9);
  write_voxel(dir / "v.evxl", v);
  CHECK(read_voxel(dir / "v.evxl") == v);
  CHECK(std::filesystem::file_size(dir / "v.evxl") == 4 + 2 + 12 + 4 * 60);

  std::ifstream in(dir / "v.evxl", std::ios::binary);
  const std::string bytes{std::istreambuf_iterator<char>(in), {}};
  CHECK(bytes.substr(0, 4) == "EVXL");
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  CHECK(bytes[6] == 5);

  const auto write = [&](const std::string& b) {
    std::ofstream out(dir / "bad.evxl", std::ios::binary | std::ios::trunc);
    out << b;
  };
  write(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_voxel(dir / "bad.evxl"), ValidationError);
  write("EVXM" + bytes.substr(4));
  CHECK_THROWS_AS(read_voxel(dir / "bad.evxl"), ValidationError);
  write(bytes + "x");
  CHECK_THROWS_AS(read_voxel(dir / "bad.evxl"), ValidationError);
  std::string big = bytes;
  big[9] = char(0x7f);
  write(big);
  CHECK_THROWS_AS(read_voxel(dir / "bad.evxl"), ValidationError);
  CHECK_THROWS_AS(read_voxel(dir / "missing.evxl"), IoError);
}

TEST_CASE("box filter: window anchoring and reflect padding") {
  std::vector<float> plane(5 * 4);
  for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = float(i);
  for (int s : {1, 2, 3, 4, 5}) {
    const auto out = box_filter(plane, 5, 4, s);
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 5; ++x) {
        double acc = 0;
        for (int dy = 0; dy < s; ++dy)
          for (int dx = 0; dx < s; ++dx)
            acc += plane[std::size_t(reflect_index(y - s / 2 + dy, 4)) * 5 + std::size_t(reflect_index(x - s / 2 + dx, 5))];
        CHECK(out[std::size_t(y) * 5 + x] == doctest::Approx(acc / (s * s)).epsilon(1e-6));
      }
  }
}

TEST_CASE("lucky fusion: uniform, one-hot and hand-evaluated weights") {
  std::mt19937_64 rng(5);
  const auto seq = random_frames(rng, 4, 9, 8, 3);
  const Image fused = lucky_fuse(seq, WeightMap::uniform(4, 8, 9));
  const Image mean = temporal_mean(seq.frames);
  for (std::size_t i = 0; i < fused.size(); ++i) CHECK(fused.data()[i] == doctest::Approx(mean.data()[i]).epsilon(1e-6));

  WeightMap onehot(4, 8, 9);
  for (std::size_t p = 0; p < onehot.plane(); ++p) onehot.data[2 * onehot.plane() + p] = 1.0f;
  CHECK(lucky_fuse(seq, onehot) == seq.frames[2]);

  auto two = FrameSequence::uniform({Image(8, 8, 1, 0.0f), Image(8, 8, 1, 1.0f)}, 10);
  WeightMap w(2, 8, 8);
  for (std::size_t p = 0; p < w.plane(); ++p) w.data[p] = 0.25f, w.data[w.plane() + p] = 0.75f;
  CHECK(lucky_fuse(two, w).at(3, 3) == 0.75f);
}

TEST_CASE("lucky fusion: convexity and identical frames") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto seq = random_frames(rng, 5, 8, 8, 3);
    const auto w = random_weights(rng, 5, 8, 8);
    const Image f = lucky_fuse(seq, w);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x)
        for (int c = 0; c < 3; ++c) {
          float lo = 1, hi = 0;
          for (const auto& fr : seq.frames) lo = std::min(lo, fr.at(x, y, c)), hi = std::max(hi, fr.at(x, y, c));
          CHECK(f.at(x, y, c) >= lo - 1e-6f);
          CHECK(f.at(x, y, c) <= hi + 1e-6f);
        }
    const Image same = testing::random_image(rng, 8, 8, 3);
    const auto rep = FrameSequence::uniform(std::vector<Image>(5, same), 10);
    const Image g = lucky_fuse(rep, w);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.data()[i] == doctest::Approx(same.data()[i]).epsilon(1e-6));
  }
}

TEST_CASE("lucky fusion: rejects bad weights and mismatched dims") {
  std::mt19937_64 rng(7);
  const auto seq = random_frames(rng, 3, 8, 8, 1);
  WeightMap w = WeightMap::uniform(3, 8, 8);
  w.data[5] += 1e-3f;
  CHECK_THROWS_AS(lucky_fuse(seq, w), ValidationError);
  w = WeightMap::uniform(3, 8, 8);
  w.data[0] = -0.1f;
  w.data[64] += 0.1f + 1.0f / 3.0f;
  w.data[128] = 0.0f;
  CHECK_THROWS_AS(lucky_fuse(seq, w), ValidationError);
  CHECK_THROWS_AS(lucky_fuse(seq, WeightMap::uniform(2, 8, 8)), ValidationError);
  CHECK_THROWS_AS(lucky_fuse(seq, WeightMap::uniform(3, 9, 8)), ValidationError);
  CHECK_NOTHROW(validate_weights(WeightMap::uniform(7, 8, 8)));
}

TEST_CASE("inverse voxel weights") {
  SUBCASE("zero voxel gives uniform weights") {
    const auto w = inverse_voxel_weights(EventVoxel(44, 8, 8), 11);
    for (float x : w.data) CHECK(x == doctest::Approx(1.0 / 11).epsilon(1e-6));
  }
  SUBCASE("hand-evaluated two-frame case") {
    EventVoxel v(2, 8, 8);
    v.at(0, 4, 4) = 10.0f;
    const auto w = inverse_voxel_weights(v, 2, {1, 1.0});
    CHECK(w.at(0, 4, 4) == doctest::Approx(1.0 / 12.0).epsilon(1e-6));
    CHECK(w.at(1, 4, 4) == doctest::Approx(11.0 / 12.0).epsilon(1e-6));
    CHECK(w.at(0, 0, 0) == doctest::Approx(0.5));
  }
  SUBCASE("normalized for random voxels and decreasing in own density") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
      EventVoxel v(12, 8, 9);
      for (float& x : v.data) x = float(rng() % 6);
      const auto w = inverse_voxel_weights(v, 3);
      CHECK_NOTHROW(validate_weights(w));
      for (float x : w.data) CHECK(x > 0.0f);

      const int i = int(rng() % 3), y = int(rng() % 8), x = int(rng() % 9);
      auto more = v;
      more.at(4 * i, y, x) += 3.0f;
      const auto w2 = inverse_voxel_weights(more, 3);
      CHECK(w2.at(i, y, x) < w.at(i, y, x));
      for (int j = 0; j < 3; ++j)
        if (j != i) CHECK(w2.at(j, y, x) > w.at(j, y, x));
    }
  }
}
