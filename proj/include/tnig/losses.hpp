#pragma once

#include "tnig/predictor.hpp"
#include "tnig/tensor.hpp"

namespace tnig {

enum class RecKind { mae, mse };

struct LossConfig {
  double tau = 0.01;          // regularization strength on the residual term
  RecKind rec_kind = RecKind::mae;
  double rec_weight = 1.0;

  void validate() const {
    if (!(tau > 0.0)) throw DomainError("tau must be > 0");
    if (!(rec_weight >= 0.0)) throw DomainError("rec_weight must be >= 0");
  }
};

struct LossBreakdown {
  double rec;          // rec_weight * pixel reconstruction loss
  double nll;          // mean evidential negative-log term
  double reg;          // mean evidence-scaled residual
  double uncertainty;  // mean(nll_i + tau * reg_i)
  double total;        // rec + uncertainty
};

// Mean per-pixel |pred-truth| (mae) or squared difference (mse).
double loss_rec(const ImageTensor& pred, const ImageTensor& truth, const LossConfig& cfg);

// Per pixel: 0.5*ln(pi/gamma) - alpha*ln(Omega) + ln(Gamma(alpha)/Gamma(alpha+1/2)),
// Omega = 2*gamma + alpha.
Tensor loss_nll_map(const ParamMaps& pm);
double loss_nll(const ParamMaps& pm);

// Per pixel: |d - delta| * (2*gamma + alpha).
Tensor loss_reg_map(const Tensor& d_truth, const ParamMaps& pm);
double loss_reg(const Tensor& d_truth, const ParamMaps& pm);

double loss_uncertainty(const Tensor& d_truth, const ParamMaps& pm, const LossConfig& cfg);

LossBreakdown loss_total(const ImageTensor& pred, const ImageTensor& truth,
                         const Tensor& d_truth, const ParamMaps& pm, const LossConfig& cfg);

// Analytic gradients of the mean losses.

// d(mean rec)/d(pred), pixel map; the |.| kink takes subgradient 0.
Tensor loss_rec_adjoint(const ImageTensor& pred, const ImageTensor& truth,
                        const LossConfig& cfg);

struct NllAdjoint {
  Tensor dgamma;
  Tensor dalpha;
};
NllAdjoint loss_nll_adjoint(const ParamMaps& pm);

struct RegAdjoint {
  Tensor ddelta;
  Tensor dgamma;
  Tensor dalpha;
};
RegAdjoint loss_reg_adjoint(const Tensor& d_truth, const ParamMaps& pm);

// Digamma, accurate to ~1e-12 for x > 0.
double digamma(double x);

}  // namespace tnig
