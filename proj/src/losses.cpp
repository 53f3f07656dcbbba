#include "tnig/losses.hpp"

#include <cmath>

namespace tnig {

namespace {

void check_map(const Tensor& t, const char* what) {
  if (t.rank() != 2) throw ShapeError(std::string(what) + " must be a 2-d map");
}

void check_same(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) throw ShapeError(std::string("shape mismatch in ") + what);
}

double mean_of(const Tensor& t) {
  double acc = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) acc += t[i];
  return acc / static_cast<double>(t.size());
}

}  // namespace

double digamma(double x) {
  if (!(x > 0.0)) throw DomainError("digamma: x must be > 0");
  double result = 0.0;
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  double inv = 1.0 / x;
  double inv2 = inv * inv;
  // Asymptotic series.
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 / 240.0)));
  return result;
}

double loss_rec(const ImageTensor& pred, const ImageTensor& truth, const LossConfig& cfg) {
  cfg.validate();
  check_same(pred.data(), truth.data(), "loss_rec");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.data().size(); ++i) {
    double d = pred.data()[i] - truth.data()[i];
    acc += cfg.rec_kind == RecKind::mae ? std::fabs(d) : d * d;
  }
  return acc / static_cast<double>(pred.data().size());
}

Tensor loss_nll_map(const ParamMaps& pm) {
  pm.validate();
  Tensor out = Tensor::zeros_like(pm.gamma);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double g = pm.gamma[i], a = pm.alpha[i];
    double omega = 2.0 * g + a;
    out[i] = 0.5 * std::log(M_PI / g) - a * std::log(omega) + std::lgamma(a) -
             std::lgamma(a + 0.5);
  }
  return out;
}

double loss_nll(const ParamMaps& pm) { return mean_of(loss_nll_map(pm)); }

Tensor loss_reg_map(const Tensor& d_truth, const ParamMaps& pm) {
  pm.validate();
  check_map(d_truth, "d_truth");
  check_same(d_truth, pm.delta, "loss_reg");
  Tensor out = Tensor::zeros_like(d_truth);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::fabs(d_truth[i] - pm.delta[i]) * (2.0 * pm.gamma[i] + pm.alpha[i]);
  return out;
}

double loss_reg(const Tensor& d_truth, const ParamMaps& pm) {
  return mean_of(loss_reg_map(d_truth, pm));
}

double loss_uncertainty(const Tensor& d_truth, const ParamMaps& pm, const LossConfig& cfg) {
  cfg.validate();
  Tensor nll = loss_nll_map(pm);
  Tensor reg = loss_reg_map(d_truth, pm);
  double acc = 0.0;
  for (std::size_t i = 0; i < nll.size(); ++i) acc += nll[i] + cfg.tau * reg[i];
  return acc / static_cast<double>(nll.size());
}

LossBreakdown loss_total(const ImageTensor& pred, const ImageTensor& truth,
                         const Tensor& d_truth, const ParamMaps& pm, const LossConfig& cfg) {
  LossBreakdown b{};
  b.rec = cfg.rec_weight * loss_rec(pred, truth, cfg);
  b.nll = loss_nll(pm);
  b.reg = loss_reg(d_truth, pm);
  b.uncertainty = loss_uncertainty(d_truth, pm, cfg);
  b.total = b.rec + b.uncertainty;
  return b;
}

Tensor loss_rec_adjoint(const ImageTensor& pred, const ImageTensor& truth,
                        const LossConfig& cfg) {
  cfg.validate();
  check_same(pred.data(), truth.data(), "loss_rec_adjoint");
  Tensor out = Tensor::zeros_like(pred.data());
  double n = static_cast<double>(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double d = pred.data()[i] - truth.data()[i];
    if (cfg.rec_kind == RecKind::mae)
      out[i] = d > 0.0 ? 1.0 / n : (d < 0.0 ? -1.0 / n : 0.0);
    else
      out[i] = 2.0 * d / n;
  }
  return out;
}

NllAdjoint loss_nll_adjoint(const ParamMaps& pm) {
  pm.validate();
  NllAdjoint adj{Tensor::zeros_like(pm.gamma), Tensor::zeros_like(pm.alpha)};
  double n = static_cast<double>(pm.gamma.size());
  for (std::size_t i = 0; i < pm.gamma.size(); ++i) {
    double g = pm.gamma[i], a = pm.alpha[i];
    double omega = 2.0 * g + a;
    adj.dgamma[i] = (-0.5 / g - 2.0 * a / omega) / n;
    adj.dalpha[i] = (-std::log(omega) - a / omega + digamma(a) - digamma(a + 0.5)) / n;
  }
  return adj;
}

RegAdjoint loss_reg_adjoint(const Tensor& d_truth, const ParamMaps& pm) {
  pm.validate();
  check_same(d_truth, pm.delta, "loss_reg_adjoint");
  RegAdjoint adj{Tensor::zeros_like(pm.delta), Tensor::zeros_like(pm.gamma),
                 Tensor::zeros_like(pm.alpha)};
  double n = static_cast<double>(pm.delta.size());
  for (std::size_t i = 0; i < pm.delta.size(); ++i) {
    double r = d_truth[i] - pm.delta[i];
    double sgn = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
    double evidence = 2.0 * pm.gamma[i] + pm.alpha[i];
    adj.ddelta[i] = -sgn * evidence / n;
    adj.dgamma[i] = 2.0 * std::fabs(r) / n;
    adj.dalpha[i] = std::fabs(r) / n;
  }
  return adj;
}

}  // namespace tnig
