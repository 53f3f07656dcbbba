#include "tnig/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "graph.hpp"
#include "tnig/rng.hpp"

namespace tnig {

namespace {

double rel_err(double a, double f) {
  double scale = std::max({std::fabs(a), std::fabs(f), 1e-4});
  return std::fabs(a - f) / scale;
}

Tensor random_map(Rng& rng, std::size_t h, std::size_t w, double lo, double hi) {
  Tensor t({h, w});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

ParamMaps random_pm(Rng& rng, std::size_t h, std::size_t w) {
  return ParamMaps{random_map(rng, h, w, -0.5, 0.5), random_map(rng, h, w, 0.3, 2.0),
                   random_map(rng, h, w, 1.3, 3.0), random_map(rng, h, w, 0.3, 2.0)};
}

// Central FD of scalar(map) at every entry of `x`, compared to `analytic`.
double fd_check_map(Tensor& x, const Tensor& analytic, double eps,
                    const std::function<double()>& scalar) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double keep = x[i];
    x[i] = keep + eps;
    double up = scalar();
    x[i] = keep - eps;
    double dn = scalar();
    x[i] = keep;
    worst = std::max(worst, rel_err(analytic[i], (up - dn) / (2.0 * eps)));
  }
  return worst;
}

}  // namespace

std::vector<GradCheckResult> gradcheck_all(double eps, double tol, std::uint64_t seed) {
  if (!(eps > 0.0)) throw DomainError("gradcheck eps must be > 0");
  if (!(tol >= 0.0)) throw DomainError("gradcheck tol must be >= 0");
  std::vector<GradCheckResult> results;
  auto add = [&](const std::string& name, double err) {
    results.push_back({name, err, err <= tol});
  };
  constexpr std::size_t H = 8, W = 8;
  Rng rng(seed);
  LossConfig cfg;

  {  // reconstruction loss, both kinds; keep residuals away from the mae kink
    Tensor p = random_map(rng, H, W, 0.1, 0.9);
    Tensor q = random_map(rng, H, W, 0.1, 0.9);
    for (std::size_t i = 0; i < p.size(); ++i)
      if (std::fabs(p[i] - q[i]) < 10.0 * eps) p[i] += 20.0 * eps;
    double age = 60.0;
    for (RecKind kind : {RecKind::mae, RecKind::mse}) {
      LossConfig c = cfg;
      c.rec_kind = kind;
      Tensor adj = loss_rec_adjoint(ImageTensor(p, age), ImageTensor(q, age), c);
      double err = fd_check_map(p, adj, eps, [&] {
        return c.rec_weight * loss_rec(ImageTensor(p, age), ImageTensor(q, age), c);
      });
      add(kind == RecKind::mae ? "loss_rec/mae d_pred" : "loss_rec/mse d_pred", err);
    }
  }

  {  // evidential NLL term
    ParamMaps pm = random_pm(rng, H, W);
    NllAdjoint adj = loss_nll_adjoint(pm);
    add("loss_nll d_gamma", fd_check_map(pm.gamma, adj.dgamma, eps, [&] { return loss_nll(pm); }));
    add("loss_nll d_alpha", fd_check_map(pm.alpha, adj.dalpha, eps, [&] { return loss_nll(pm); }));
  }

  {  // evidence-scaled residual; keep |d - delta| away from the kink
    ParamMaps pm = random_pm(rng, H, W);
    Tensor d = random_map(rng, H, W, -0.5, 0.5);
    for (std::size_t i = 0; i < d.size(); ++i)
      if (std::fabs(d[i] - pm.delta[i]) < 10.0 * eps) d[i] += 20.0 * eps;
    RegAdjoint adj = loss_reg_adjoint(d, pm);
    auto scalar = [&] { return loss_reg(d, pm); };
    add("loss_reg d_delta", fd_check_map(pm.delta, adj.ddelta, eps, scalar));
    add("loss_reg d_gamma", fd_check_map(pm.gamma, adj.dgamma, eps, scalar));
    add("loss_reg d_alpha", fd_check_map(pm.alpha, adj.dalpha, eps, scalar));
  }

  {  // composite forward pass: model-parameter gradients of the total loss
    ModelParams model = make_model(3, 4, 4, 4, MixtureMode::symmetric, seed);
    Tensor a = random_map(rng, H, W, 0.1, 0.9);
    Tensor b = random_map(rng, H, W, 0.1, 0.9);
    Tensor c = random_map(rng, H, W, 0.1, 0.9);
    ImageTensor i0(a, 60.0), i1(b, 62.0), target(c, 65.0);
    TimeSpec t(60.0, 62.0, 65.0);
    LossConfig smooth = cfg;
    smooth.rec_kind = RecKind::mse;  // avoid the mae kink in the FD probe

    ModelParams grads = zeros_like(model);
    detail::graph_loss_and_grad(i0, i1, t, target, model, smooth, grads);

    Tensor d_truth({H, W});
    for (std::size_t i = 0; i < d_truth.size(); ++i) d_truth[i] = c[i] - b[i];
    auto total = [&] {
      Prediction pred = tnig_forward(i0, i1, t, model);
      return loss_total(pred.image, target, d_truth, pred.fused, smooth).total;
    };

    double worst = 0.0;
    auto params = tensor_manifest(model);
    auto gs = tensor_manifest(const_cast<const ModelParams&>(grads));
    for (std::size_t ti = 0; ti < params.size(); ++ti) {
      Tensor& p = *params[ti].second;
      const Tensor& g = *gs[ti].second;
      std::size_t samples = std::min<std::size_t>(p.size(), 4);
      for (std::size_t s = 0; s < samples; ++s) {
        std::size_t idx = rng.uniform_int(p.size());
        double keep = p[idx];
        p[idx] = keep + eps;
        double up = total();
        p[idx] = keep - eps;
        double dn = total();
        p[idx] = keep;
        worst = std::max(worst, rel_err(g[idx], (up - dn) / (2.0 * eps)));
      }
    }
    add("composite d_model", worst);
  }

  return results;
}

}  // namespace tnig
