#pragma once

#include <string>
#include <vector>

#include "tnig/predictor.hpp"
#include "tnig/synth.hpp"

namespace tnig {

double mse(const ImageTensor& a, const ImageTensor& b);

// 10*log10(1/mse) with dynamic range 1; capped at 100 dB when mse < 1e-10.
double psnr(const ImageTensor& a, const ImageTensor& b);

// Mean local SSIM, 11x11 Gaussian window sigma=1.5, K1=0.01, K2=0.03, L=1,
// averaged over valid (fully interior) window positions.
double ssim(const ImageTensor& a, const ImageTensor& b);

struct EvalCell {
  std::string group;  // e.g. "horizon", "age_decade"
  std::string bucket;
  std::size_t count = 0;
  double ssim_mean = 0, ssim_std = 0;
  double psnr_mean = 0, psnr_std = 0;
  double mse_mean = 0, mse_std = 0;
};

struct EvalReport {
  double missing_ratio = 0.0;
  std::vector<EvalCell> cells;

  std::string to_json() const;
  std::string to_csv() const;
};

// Predicts every held-out scan of each sequence from its (first, second)
// anchors and aggregates metrics into horizon buckets (target minus second
// anchor, split at 5 years, closed-open) and age-decade groups. Sequences
// are processed in subject_id order; empty buckets are omitted.
EvalReport evaluate(const ModelParams& model, const std::vector<SubjectSequence>& dataset);

}  // namespace tnig
