#include "tnig/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace tnig {

namespace {

constexpr char kMagic[4] = {'T', 'N', 'I', 'G'};

std::size_t checked_size(const std::vector<std::size_t>& dims) {
  std::size_t n = 1;
  for (std::size_t d : dims) {
    if (d == 0) throw ShapeError("tensor dimension must be positive");
    n *= d;
  }
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims, double fill)
    : dims_(std::move(dims)), data_(checked_size(dims_), fill) {}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::snap_to_f32() {
  for (double& v : data_) v = static_cast<double>(static_cast<float>(v));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

void write_tensor_file(const Tensor& t, const std::string& path) {
  if (t.rank() != 2) throw ShapeError("scan tensor files are 2-d");
  std::vector<std::uint8_t> buf;
  buf.insert(buf.end(), kMagic, kMagic + 4);
  put_u16(buf, 1);                 // version
  buf.push_back(1);                // dtype: float32 LE
  buf.push_back(static_cast<std::uint8_t>(t.rank()));
  for (std::size_t d : t.dims()) put_u64(buf, d);
  for (std::size_t i = 0; i < t.size(); ++i) put_f32(buf, static_cast<float>(t[i]));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for write: " + path);
  f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!f) throw IoError("write failed: " + path);
}

namespace {

struct ByteReader {
  const std::vector<std::uint8_t>& b;
  std::size_t pos = 0;
  explicit ByteReader(const std::vector<std::uint8_t>& bytes) : b(bytes) {}
  void need(std::size_t n) const {
    if (pos + n > b.size()) throw FormatError("truncated file");
  }
  std::uint8_t u8() {
    need(1);
    return b[pos++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(b[pos] | (b[pos + 1] << 8));
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  float f32() {
    std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
};

std::vector<std::uint8_t> read_all(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for read: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

}  // namespace

Tensor read_tensor_file(const std::string& path) {
  std::vector<std::uint8_t> bytes = read_all(path);
  ByteReader r(bytes);
  r.need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad magic: " + path);
  r.pos = 4;
  if (r.u16() != 1) throw FormatError("unsupported version: " + path);
  if (r.u8() != 1) throw FormatError("unsupported dtype: " + path);
  std::size_t ndim = r.u8();
  if (ndim != 2) throw FormatError("scan tensor files are 2-d: " + path);
  std::vector<std::size_t> dims(ndim);
  for (std::size_t i = 0; i < ndim; ++i) dims[i] = static_cast<std::size_t>(r.u64());
  Tensor t(dims);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(r.f32());
  if (r.pos != bytes.size()) throw FormatError("trailing bytes: " + path);
  return t;
}

void write_pgm(const Tensor& t, const std::string& path) {
  if (t.rank() != 2) throw ShapeError("pgm preview needs a 2-d tensor");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for write: " + path);
  f << "P5\n" << t.dim(1) << " " << t.dim(0) << "\n255\n";
  for (std::size_t i = 0; i < t.size(); ++i) {
    double v = std::clamp(t[i], 0.0, 1.0);
    f.put(static_cast<char>(std::lround(v * 255.0)));
  }
  if (!f) throw IoError("write failed: " + path);
}

}  // namespace tnig
