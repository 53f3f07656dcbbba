#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tnig/features.hpp"
#include "tnig/nig.hpp"
#include "tnig/tensor.hpp"

namespace tnig {

// Prediction-time placement relative to the two anchor scans.
// t_norm < 0 means the target lies before t1 (interpolation when > -1),
// t_norm > 0 means extrapolation beyond t1.
struct TimeSpec {
  double t0;
  double t1;
  double t_target;
  double t_norm;

  TimeSpec(double t0_, double t1_, double t_target_);
};

// Per-pixel NIG parameter fields over the image grid.
struct ParamMaps {
  Tensor delta;
  Tensor gamma;
  Tensor alpha;
  Tensor beta;

  void validate() const;
};

struct HeadParams {
  Tensor weight;  // (Cin + 1) x 4; last input row is the time channel
  Tensor bias;    // 4
};

struct ModelParams {
  int window_n = 3;
  int channels = 8;          // C
  int chat = 8;              // Ĉ
  int decoder_channels = 8;  // hidden width of the decoder
  MixtureMode mode = MixtureMode::symmetric;

  std::array<TtcnScaleParams, 3> ttcn;
  TdcnParams tdcn;
  std::array<HeadParams, 3> local_heads;  // one per texture scale
  HeadParams global_head;                 // fed by the 2-channel deformation field
  ConvLayer dec1;  // 3x3x3xCd
  ConvLayer dec2;  // 3x3xCdx1

  NeighborhoodWindow window() const { return NeighborhoodWindow(window_n, chat); }
};

// Ordered (name, tensor) view over every learnable array; the order fixes
// the model-file payload layout and the optimizer's parameter order.
std::vector<std::pair<std::string, Tensor*>> tensor_manifest(ModelParams& m);
std::vector<std::pair<std::string, const Tensor*>> tensor_manifest(const ModelParams& m);

// Fresh model with uniform(-s, s) init, s = sqrt(1/fan_in), values snapped
// to float32 so that persistence round-trips bitwise.
ModelParams make_model(int window_n, int channels, int chat, int decoder_channels,
                       MixtureMode mode, std::uint64_t seed);

// Same shapes as `like`, all learnable tensors zeroed.
ModelParams zeros_like(const ModelParams& like);

struct Prediction {
  ImageTensor image;
  Tensor d_map;
  Tensor al_map;
  Tensor ep_map;
  ParamMaps fused;
};

// Time-conditioned per-pixel affine head: raw 4-vector per pixel from the
// feature channels plus a constant t_norm channel, then activation floors
// gamma = softplus+1e-6, alpha = 1+softplus+1e-6, beta = softplus+1e-6.
ParamMaps param_head(const Tensor& feat, const TimeSpec& t, const HeadParams& head);

// Decode (d, AL, EP) maps into an image: two 3x3 convolutions with a relu
// between them, then a logistic squash into [0,1].
Tensor decode(const Tensor& d_map, const Tensor& al_map, const Tensor& ep_map,
              const ConvLayer& dec1, const ConvLayer& dec2);

Prediction tnig_forward(const ImageTensor& i0, const ImageTensor& i1, const TimeSpec& t,
                        const ModelParams& m);

// Model container: "TNIG", u16 version=1, u32 header length, JSON header
// {hyperparameters, tensor manifest}, float32 LE payloads in order.
void model_save(const ModelParams& m, const std::string& path);
ModelParams model_load(const std::string& path);

double softplus(double x);

}  // namespace tnig
