#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "tnig/errors.hpp"
#include "tnig/tensor.hpp"

namespace tnig {

// H x W grayscale image in [0,1] with an acquisition age in years.
class ImageTensor {
 public:
  ImageTensor(Tensor data, double age_years);

  const Tensor& data() const { return data_; }
  Tensor& data() { return data_; }
  double age_years() const { return age_years_; }
  std::size_t h() const { return data_.dim(0); }
  std::size_t w() const { return data_.dim(1); }

  bool operator==(const ImageTensor& other) const = default;

 private:
  Tensor data_;
  double age_years_;
};

struct NeighborhoodWindow {
  int n;     // odd window side, >= 3
  int chat;  // projected channel count

  NeighborhoodWindow(int n_, int chat_) : n(n_), chat(chat_) {
    if (n < 3 || n % 2 == 0) throw DomainError("window side must be odd and >= 3");
    if (chat < 1) throw DomainError("projected channels must be >= 1");
  }
};

struct ConvLayer {
  Tensor kernel;  // k x k x Cin x Cout
  Tensor bias;    // Cout
};

// Stride-1 zero-padded convolution, optional relu. Input is H x W
// (single channel) or H x W x Cin; output is H x W x Cout.
Tensor conv2d(const Tensor& in, const ConvLayer& layer, bool relu);
Tensor conv2d_relu(const Tensor& in, const ConvLayer& layer);

// Texture features at scale k in {1,2,3}: kernel side must be 2k-1.
Tensor extract_texture(const ImageTensor& img, int scale_k, const ConvLayer& layer);

struct Gathered {
  std::vector<double> rows;          // n^2 x C, row-major window offsets
  std::vector<std::uint8_t> valid;   // n^2 validity mask
};

// Rows enumerate the n x n window centered at (i,j) in row-major offset
// order; out-of-bounds cells are zero rows with valid=0.
Gathered neighborhood_gather(const Tensor& fm, std::size_t i, std::size_t j,
                             const NeighborhoodWindow& win);

// Masked softmax of q . k_row / sqrt(chat) over the window cells.
std::vector<double> attention_scores(const std::vector<double>& q,
                                     const std::vector<double>& k_rows,
                                     const std::vector<std::uint8_t>& valid, int chat);

// Attention-weighted value mixture (Ĉ-vector).
std::vector<double> texture_change(const std::vector<double>& s,
                                   const std::vector<double>& v_rows, int chat);

struct TtcnScaleParams {
  ConvLayer tex;  // texture extraction kernel for this scale
  Tensor wq;      // C x Ĉ
  Tensor wk;      // C x Ĉ
  Tensor wv;      // C x Ĉ
};

struct TdcnParams {
  ConvLayer tex;  // 3x3 feature kernel
  Tensor wq;      // C x Ĉ
  Tensor wk;      // C x Ĉ
};

// One TTCN scale: query from I0 features, key/value from I1 neighborhoods,
// masked attention, value mixture. Output H x W x Ĉ.
Tensor ttcn_forward_scale(const ImageTensor& i0, const ImageTensor& i1,
                          const NeighborhoodWindow& win, const TtcnScaleParams& params,
                          int scale_k);

std::array<Tensor, 3> ttcn_forward(const ImageTensor& i0, const ImageTensor& i1,
                                   const NeighborhoodWindow& win,
                                   const std::array<TtcnScaleParams, 3>& params);

Tensor coordinate_map(std::size_t h, std::size_t w);

// Attention-expected window offset: sum_m s_m * offset_m over valid cells.
std::array<double, 2> deformation_from_attention(const std::vector<double>& s,
                                                 const std::vector<std::uint8_t>& valid, int n);

// Attention-expected coordinate minus own coordinate; output H x W x 2.
Tensor tdcn_forward(const ImageTensor& i0, const ImageTensor& i1,
                    const NeighborhoodWindow& win, const TdcnParams& params);

}  // namespace tnig
