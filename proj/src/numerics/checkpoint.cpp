#include "archbert/numerics/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "archbert/error.hpp"

namespace archbert {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

void put_f32(std::string& out, float v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

struct Reader {
  const std::string& s;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > s.size()) throw ParseError("checkpoint: truncated at byte " + std::to_string(pos));
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, s.data() + pos, 4);
    pos += 4;
    return v;
  }
  float f32() {
    need(4);
    float v;
    std::memcpy(&v, s.data() + pos, 4);
    pos += 4;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    auto out = s.substr(pos, n);
    pos += n;
    return out;
  }
};

}  // namespace

std::string checkpoint_bytes(const ParamStore& params) {
  std::string out = "ABKT";
  put_u32(out, kCheckpointVersion);
  for (const auto& [name, p] : params.items()) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(p.value.rank()));
    for (auto d : p.value.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (double x : p.value.data()) put_f32(out, static_cast<float>(x));
  }
  return out;
}

ParamStore checkpoint_from_bytes(const std::string& bytes) {
  Reader r{bytes};
  if (r.str(4) != "ABKT") throw ParseError("checkpoint: bad magic");
  const auto version = r.u32();
  if (version != kCheckpointVersion) throw ParseError("checkpoint: unsupported version " + std::to_string(version));
  ParamStore params;
  while (r.pos < bytes.size()) {
    const auto name = r.str(r.u32());
    const auto rank = r.u32();
    if (rank > 8) throw ParseError("checkpoint: implausible rank for '" + name + "'", 0, name);
    std::vector<std::size_t> shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = r.u32();
      n *= d;
    }
    r.need(4 * n);
    std::vector<double> data(n);
    for (auto& x : data) {
      x = r.f32();
      if (!std::isfinite(x)) throw ParseError("checkpoint: non-finite value in '" + name + "'", 0, name);
    }
    params.add(name, Tensor(std::move(shape), std::move(data)));
  }
  return params;
}

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path);
}

void save_checkpoint(const ParamStore& params, const std::string& path) {
  write_file_bytes(path, checkpoint_bytes(params));
}

ParamStore load_checkpoint(const std::string& path) { return checkpoint_from_bytes(read_file_bytes(path)); }

void round_to_f32(ParamStore& params) {
  for (auto& [_, p] : params.items())
    for (auto& x : p.value.data()) x = static_cast<double>(static_cast<float>(x));
}

}  // namespace archbert
