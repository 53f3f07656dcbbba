#pragma once

// Internal: single forward implementation with cached intermediates, plus
// the hand-written reverse pass. tnig_forward and the trainer both go
// through graph_forward so the analytic gradients match the public
// forward bit for bit.

#include <array>

#include "tnig/losses.hpp"
#include "tnig/predictor.hpp"

namespace tnig::detail {

struct HeadCache {
  Tensor raw;  // H x W x 4 pre-activation values
};

struct GraphCache {
  // TTCN, one entry per scale.
  std::array<Tensor, 3> f0, f1;        // H x W x C (post-relu)
  std::array<Tensor, 3> qf, kf, vf;    // H x W x Ĉ
  std::array<Tensor, 3> att;           // H x W x n^2
  std::array<Tensor, 3> tc;            // H x W x Ĉ
  std::array<HeadCache, 3> local_head;
  std::array<ParamMaps, 3> pm_local;

  // TDCN.
  Tensor g0, g1;    // H x W x C
  Tensor qg, kg;    // H x W x Ĉ
  Tensor attg;      // H x W x n^2
  Tensor deform;    // H x W x 2
  HeadCache global_head;
  ParamMaps pm_global;

  // Fusion chain.
  ParamMaps pm12, pm123, fused;

  // Decode.
  Tensor dec_in;   // H x W x 3 (d, al, ep)
  Tensor dec_mid;  // H x W x Cd (post-relu)
  Tensor dec_out;  // H x W x 1 (pre-sigmoid)
};

// Shared forward pieces (implemented in predictor.cpp).
ParamMaps head_forward(const Tensor& feat, double t_norm, const HeadParams& head,
                       Tensor* raw_out);
Tensor decode_cached(const Tensor& d_map, const Tensor& al_map, const Tensor& ep_map,
                     const ConvLayer& dec1, const ConvLayer& dec2, Tensor* in_out,
                     Tensor* mid_out, Tensor* pre_out);

Prediction graph_forward(const ImageTensor& i0, const ImageTensor& i1, const TimeSpec& t,
                         const ModelParams& m, GraphCache& cache);

// Forward + loss + reverse pass; gradients are accumulated into `grads`
// (a zeros_like-shaped ModelParams).
LossBreakdown graph_loss_and_grad(const ImageTensor& i0, const ImageTensor& i1,
                                  const TimeSpec& t, const ImageTensor& target,
                                  const ModelParams& m, const LossConfig& cfg,
                                  ModelParams& grads);

}  // namespace tnig::detail
