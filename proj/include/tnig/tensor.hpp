#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tnig/errors.hpp"

namespace tnig {

// Dense row-major tensor, double storage. Values written to disk are
// float32 little-endian, so persisted tensors hold float32-representable
// doubles and round-trip bitwise.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, double fill = 0.0);

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.dims_); }

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t dim(std::size_t i) const { return dims_.at(i); }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // 2-d and 3-d accessors (unchecked beyond debug builds).
  double& at2(std::size_t i, std::size_t j) { return data_[i * dims_[1] + j]; }
  double at2(std::size_t i, std::size_t j) const { return data_[i * dims_[1] + j]; }
  double& at3(std::size_t i, std::size_t j, std::size_t c) {
    return data_[(i * dims_[1] + j) * dims_[2] + c];
  }
  double at3(std::size_t i, std::size_t j, std::size_t c) const {
    return data_[(i * dims_[1] + j) * dims_[2] + c];
  }

  bool same_shape(const Tensor& other) const { return dims_ == other.dims_; }
  bool all_finite() const;
  void fill(double v);

  // Round every element to the nearest float32 value.
  void snap_to_f32();

  bool operator==(const Tensor& other) const = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<double> data_;
};

// Scan tensor file: "TNIG", u16 version=1, u8 dtype=1 (float32 LE),
// u8 ndim, ndim x u64 dims, row-major payload.
void write_tensor_file(const Tensor& t, const std::string& path);
Tensor read_tensor_file(const std::string& path);

// 8-bit PGM preview, values clamped to [0,1] then scaled to 0..255.
void write_pgm(const Tensor& t, const std::string& path);

// Byte helpers shared with the model container.
void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v);
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v);
void put_f32(std::vector<std::uint8_t>& out, float v);

}  // namespace tnig
