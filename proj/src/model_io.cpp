#include "turblucky/model_io.hpp"

#include <cmath>
#include <fstream>

#include "turblucky/binary_io.hpp"

namespace turblucky {

void save_model(const std::filesystem::path& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write("EGTM", 4);
  le::put<std::uint16_t>(out, 1);
  le::put<std::uint32_t>(out, std::uint32_t(params.tensors.size()));
  for (const auto& t : params.tensors) {
    require(t.name.size() < 65536 && t.shape.size() < 256, "tensor metadata too large: " + t.name);
    le::put<std::uint16_t>(out, std::uint16_t(t.name.size()));
    out.write(t.name.data(), std::streamsize(t.name.size()));
    out.put(char(t.shape.size()));
    for (int d : t.shape) le::put<std::uint32_t>(out, std::uint32_t(d));
    for (float f : t.data) le::put_f32(out, f);
  }
  if (!out) throw IoError("short write to " + path.string());
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model " + path.string());
  le::expect_magic(in, "EGTM");
  const auto version = le::get<std::uint16_t>(in);
  require(version == 1, "unsupported EGTM version " + std::to_string(version));
  const auto count = le::get<std::uint32_t>(in);
  require(count <= 4096, "implausible tensor count");
  ModelParams p;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor<float> t;
    t.name.resize(le::get<std::uint16_t>(in));
    if (!in.read(t.name.data(), std::streamsize(t.name.size()))) throw ValidationError("truncated tensor name");
    const int ndim = in.get();
    require(ndim >= 1 && ndim <= 8, "bad tensor rank for " + t.name);
    std::uint64_t n = 1;
    for (int d = 0; d < ndim; ++d) {
      const auto dim = le::get<std::uint32_t>(in);
      require(dim >= 1 && dim <= (1u << 20), "bad tensor dim for " + t.name);
      t.shape.push_back(int(dim));
      n *= dim;
      require(n <= (1ull << 28), "tensor too large: " + t.name);
    }
    t.data.resize(std::size_t(n));
    for (float& f : t.data) {
      f = le::get_f32(in);
      require(std::isfinite(f), "non-finite value in " + t.name);
    }
    p.tensors.push_back(std::move(t));
  }
  require(in.peek() == std::char_traits<char>::eof(), "trailing bytes after EGTM payload");
  infer_shape(p);
  return p;
}

}  // namespace turblucky
