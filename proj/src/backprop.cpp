#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "graph.hpp"

namespace tnig {

namespace detail {

namespace {

Tensor project(const Tensor& fm, const Tensor& wmat) {
  std::size_t c = fm.dim(2);
  if (wmat.rank() != 2 || wmat.dim(0) != c) throw ShapeError("projection shape mismatch");
  std::size_t chat = wmat.dim(1);
  Tensor out({fm.dim(0), fm.dim(1), chat});
  std::size_t px = fm.dim(0) * fm.dim(1);
  for (std::size_t p = 0; p < px; ++p) {
    const double* in = fm.data() + p * c;
    double* o = out.data() + p * chat;
    for (std::size_t cc = 0; cc < chat; ++cc) {
      double acc = 0.0;
      for (std::size_t ci = 0; ci < c; ++ci) acc += in[ci] * wmat[ci * chat + cc];
      o[cc] = acc;
    }
  }
  return out;
}

void project_backward(const Tensor& fm, const Tensor& wmat, const Tensor& dproj, Tensor& gw,
                      Tensor* dfm) {
  std::size_t c = fm.dim(2), chat = wmat.dim(1);
  std::size_t px = fm.dim(0) * fm.dim(1);
  for (std::size_t p = 0; p < px; ++p) {
    const double* in = fm.data() + p * c;
    const double* g = dproj.data() + p * chat;
    for (std::size_t ci = 0; ci < c; ++ci) {
      double dfi = 0.0;
      for (std::size_t cc = 0; cc < chat; ++cc) {
        gw[ci * chat + cc] += in[ci] * g[cc];
        dfi += wmat[ci * chat + cc] * g[cc];
      }
      if (dfm) (*dfm)[p * c + ci] += dfi;
    }
  }
}

// Reverse of conv2d: accumulates kernel/bias grads, optionally input grads.
void conv_backward(const Tensor& in, const ConvLayer& layer, const Tensor& out,
                   const Tensor& dout, bool relu, ConvLayer& glayer, Tensor* din) {
  std::size_t h = in.dim(0), w = in.dim(1);
  std::size_t cin = in.rank() == 3 ? in.dim(2) : 1;
  const Tensor& k = layer.kernel;
  std::size_t ks = k.dim(0), cout = k.dim(3);
  long r = static_cast<long>(ks) / 2;
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      for (std::size_t co = 0; co < cout; ++co) {
        double dz = dout.at3(i, j, co);
        if (relu && out.at3(i, j, co) <= 0.0) continue;
        if (dz == 0.0) continue;
        glayer.bias[co] += dz;
        for (long u = -r; u <= r; ++u) {
          long ii = static_cast<long>(i) + u;
          if (ii < 0 || ii >= static_cast<long>(h)) continue;
          for (long v = -r; v <= r; ++v) {
            long jj = static_cast<long>(j) + v;
            if (jj < 0 || jj >= static_cast<long>(w)) continue;
            std::size_t ku = static_cast<std::size_t>(u + r);
            std::size_t kv = static_cast<std::size_t>(v + r);
            for (std::size_t ci = 0; ci < cin; ++ci) {
              double x = in.rank() == 3
                             ? in.at3(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj), ci)
                             : in.at2(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj));
              std::size_t kidx = ((ku * ks + kv) * cin + ci) * cout + co;
              glayer.kernel[kidx] += dz * x;
              if (din)
                din->data()[(static_cast<std::size_t>(ii) * w + static_cast<std::size_t>(jj)) *
                                cin +
                            ci] += dz * k[kidx];
            }
          }
        }
      }
    }
  }
}

struct MixIn {
  double delta, gamma, alpha, beta;
};
struct MixGrad {
  double ddelta = 0, dgamma = 0, dalpha = 0, dbeta = 0;
};

MixIn mix_forward(const MixIn& p1, const MixIn& p2, MixtureMode mode) {
  double gamma = p1.gamma + p2.gamma;
  double delta = (p1.gamma * p1.delta + p2.gamma * p2.delta) / gamma;
  double alpha = p1.alpha + p2.alpha + 0.5;
  double c2 = mode == MixtureMode::verbatim ? p1.gamma : p2.gamma;
  double beta = p1.beta + p2.beta + 0.5 * p1.gamma * (p1.delta - delta) * (p1.delta - delta) +
                0.5 * c2 * (p2.delta - delta) * (p2.delta - delta);
  return {delta, gamma, alpha, beta};
}

void mix_backward(const MixIn& p1, const MixIn& p2, MixtureMode mode, const MixIn& out,
                  const MixGrad& g, MixGrad& g1, MixGrad& g2) {
  double G = out.gamma;
  double A = p1.delta - out.delta;
  double B = p2.delta - out.delta;
  bool verbatim = mode == MixtureMode::verbatim;
  double c2 = verbatim ? p1.gamma : p2.gamma;

  double ddelta_ddelta1 = p1.gamma / G;
  double ddelta_ddelta2 = p2.gamma / G;
  double ddelta_dgamma1 = A / G;
  double ddelta_dgamma2 = B / G;

  double dbeta_ddelta1 = p1.gamma * A * (1.0 - ddelta_ddelta1) - c2 * B * ddelta_ddelta1;
  double dbeta_ddelta2 = -p1.gamma * A * ddelta_ddelta2 + c2 * B * (1.0 - ddelta_ddelta2);
  double dbeta_dgamma1 = 0.5 * A * A + (verbatim ? 0.5 * B * B : 0.0) +
                         (-p1.gamma * A - c2 * B) * ddelta_dgamma1;
  double dbeta_dgamma2 =
      (verbatim ? 0.0 : 0.5 * B * B) + (-p1.gamma * A - c2 * B) * ddelta_dgamma2;

  g1.ddelta += g.ddelta * ddelta_ddelta1 + g.dbeta * dbeta_ddelta1;
  g2.ddelta += g.ddelta * ddelta_ddelta2 + g.dbeta * dbeta_ddelta2;
  g1.dgamma += g.dgamma + g.ddelta * ddelta_dgamma1 + g.dbeta * dbeta_dgamma1;
  g2.dgamma += g.dgamma + g.ddelta * ddelta_dgamma2 + g.dbeta * dbeta_dgamma2;
  g1.dalpha += g.dalpha;
  g2.dalpha += g.dalpha;
  g1.dbeta += g.dbeta;
  g2.dbeta += g.dbeta;
}

MixIn pm_at(const ParamMaps& pm, std::size_t p) {
  return {pm.delta[p], pm.gamma[p], pm.alpha[p], pm.beta[p]};
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct PmGrad {
  Tensor ddelta, dgamma, dalpha, dbeta;
  explicit PmGrad(const Tensor& like)
      : ddelta(Tensor::zeros_like(like)),
        dgamma(Tensor::zeros_like(like)),
        dalpha(Tensor::zeros_like(like)),
        dbeta(Tensor::zeros_like(like)) {}
};

void head_backward(const Tensor& feat, double t_norm, const HeadParams& head, const Tensor& raw,
                   const PmGrad& dpm, HeadParams& ghead, Tensor& dfeat) {
  std::size_t cf = feat.dim(2);
  std::size_t px = feat.dim(0) * feat.dim(1);
  for (std::size_t p = 0; p < px; ++p) {
    double draw[4];
    draw[0] = dpm.ddelta[p];
    draw[1] = dpm.dgamma[p] * sigmoid(raw[p * 4 + 1]);
    draw[2] = dpm.dalpha[p] * sigmoid(raw[p * 4 + 2]);
    draw[3] = dpm.dbeta[p] * sigmoid(raw[p * 4 + 3]);
    const double* x = feat.data() + p * cf;
    for (std::size_t r = 0; r < 4; ++r) {
      if (draw[r] == 0.0) continue;
      ghead.bias[r] += draw[r];
      for (std::size_t ci = 0; ci < cf; ++ci) {
        ghead.weight[ci * 4 + r] += x[ci] * draw[r];
        dfeat[p * cf + ci] += head.weight[ci * 4 + r] * draw[r];
      }
      ghead.weight[cf * 4 + r] += t_norm * draw[r];
    }
  }
}

// Attention softmax backward for one pixel. ds over window cells ->
// gradients on q and on the gathered key rows.
void attention_backward(const std::vector<double>& q, const Gathered& gk,
                        const double* s, const double* ds, int chat, std::vector<double>& dq,
                        std::vector<double>& dk_rows) {
  std::size_t n2 = gk.valid.size();
  std::size_t ch = static_cast<std::size_t>(chat);
  double scale = 1.0 / std::sqrt(static_cast<double>(chat));
  double dot = 0.0;
  for (std::size_t m = 0; m < n2; ++m)
    if (gk.valid[m]) dot += s[m] * ds[m];
  dq.assign(ch, 0.0);
  dk_rows.assign(n2 * ch, 0.0);
  for (std::size_t m = 0; m < n2; ++m) {
    if (!gk.valid[m]) continue;
    double dlogit = s[m] * (ds[m] - dot);
    if (dlogit == 0.0) continue;
    for (std::size_t c = 0; c < ch; ++c) {
      dq[c] += dlogit * gk.rows[m * ch + c] * scale;
      dk_rows[m * ch + c] = dlogit * q[c] * scale;
    }
  }
}

void scatter_window(Tensor& field, std::size_t i, std::size_t j, int n,
                    const std::vector<double>& rows, const std::vector<std::uint8_t>& valid) {
  std::size_t w = field.dim(1), c = field.dim(2);
  int r = (n - 1) / 2;
  std::size_t m = 0;
  for (int du = -r; du <= r; ++du)
    for (int dv = -r; dv <= r; ++dv, ++m) {
      if (!valid[m]) continue;
      std::size_t ii = static_cast<std::size_t>(static_cast<long>(i) + du);
      std::size_t jj = static_cast<std::size_t>(static_cast<long>(j) + dv);
      for (std::size_t ci = 0; ci < c; ++ci)
        field.data()[(ii * w + jj) * c + ci] += rows[m * c + ci];
    }
}

}  // namespace

Prediction graph_forward(const ImageTensor& i0, const ImageTensor& i1, const TimeSpec& t,
                         const ModelParams& m, GraphCache& cache) {
  if (!i0.data().same_shape(i1.data())) throw ShapeError("input images must match in shape");
  NeighborhoodWindow win = m.window();
  std::size_t h = i0.h(), w = i0.w();
  std::size_t n2 = static_cast<std::size_t>(win.n) * static_cast<std::size_t>(win.n);
  std::size_t chat = static_cast<std::size_t>(win.chat);

  for (int k = 0; k < 3; ++k) {
    cache.f0[k] = conv2d_relu(i0.data(), m.ttcn[k].tex);
    cache.f1[k] = conv2d_relu(i1.data(), m.ttcn[k].tex);
    cache.qf[k] = project(cache.f0[k], m.ttcn[k].wq);
    cache.kf[k] = project(cache.f1[k], m.ttcn[k].wk);
    cache.vf[k] = project(cache.f1[k], m.ttcn[k].wv);
    cache.att[k] = Tensor({h, w, n2});
    cache.tc[k] = Tensor({h, w, chat});
    std::vector<double> q(chat);
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        for (std::size_t c = 0; c < chat; ++c) q[c] = cache.qf[k].at3(i, j, c);
        Gathered gk = neighborhood_gather(cache.kf[k], i, j, win);
        Gathered gv = neighborhood_gather(cache.vf[k], i, j, win);
        std::vector<double> s = attention_scores(q, gk.rows, gk.valid, win.chat);
        std::vector<double> mix = texture_change(s, gv.rows, win.chat);
        for (std::size_t mm = 0; mm < n2; ++mm) cache.att[k].at3(i, j, mm) = s[mm];
        for (std::size_t c = 0; c < chat; ++c) cache.tc[k].at3(i, j, c) = mix[c];
      }
    }
    cache.pm_local[k] =
        head_forward(cache.tc[k], t.t_norm, m.local_heads[k], &cache.local_head[k].raw);
  }

  cache.g0 = conv2d_relu(i0.data(), m.tdcn.tex);
  cache.g1 = conv2d_relu(i1.data(), m.tdcn.tex);
  cache.qg = project(cache.g0, m.tdcn.wq);
  cache.kg = project(cache.g1, m.tdcn.wk);
  cache.attg = Tensor({h, w, n2});
  cache.deform = Tensor({h, w, 2});
  {
    std::vector<double> q(chat);
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        for (std::size_t c = 0; c < chat; ++c) q[c] = cache.qg.at3(i, j, c);
        Gathered gk = neighborhood_gather(cache.kg, i, j, win);
        std::vector<double> s = attention_scores(q, gk.rows, gk.valid, win.chat);
        std::array<double, 2> d = deformation_from_attention(s, gk.valid, win.n);
        for (std::size_t mm = 0; mm < n2; ++mm) cache.attg.at3(i, j, mm) = s[mm];
        cache.deform.at3(i, j, 0) = d[0];
        cache.deform.at3(i, j, 1) = d[1];
      }
    }
  }
  cache.pm_global = head_forward(cache.deform, t.t_norm, m.global_head, &cache.global_head.raw);

  // Pointwise fusion fold: (p1 + p2) + p3, then + global.
  auto alloc_pm = [&] {
    return ParamMaps{Tensor({h, w}), Tensor({h, w}), Tensor({h, w}), Tensor({h, w})};
  };
  cache.pm12 = alloc_pm();
  cache.pm123 = alloc_pm();
  cache.fused = alloc_pm();
  for (std::size_t p = 0; p < h * w; ++p) {
    MixIn a = mix_forward(pm_at(cache.pm_local[0], p), pm_at(cache.pm_local[1], p), m.mode);
    cache.pm12.delta[p] = a.delta;
    cache.pm12.gamma[p] = a.gamma;
    cache.pm12.alpha[p] = a.alpha;
    cache.pm12.beta[p] = a.beta;
    MixIn b = mix_forward(a, pm_at(cache.pm_local[2], p), m.mode);
    cache.pm123.delta[p] = b.delta;
    cache.pm123.gamma[p] = b.gamma;
    cache.pm123.alpha[p] = b.alpha;
    cache.pm123.beta[p] = b.beta;
    MixIn f = mix_forward(b, pm_at(cache.pm_global, p), m.mode);
    cache.fused.delta[p] = f.delta;
    cache.fused.gamma[p] = f.gamma;
    cache.fused.alpha[p] = f.alpha;
    cache.fused.beta[p] = f.beta;
  }

  Tensor d_map = cache.fused.delta;
  Tensor al_map({h, w});
  Tensor ep_map({h, w});
  for (std::size_t p = 0; p < h * w; ++p) {
    double al = cache.fused.beta[p] / (cache.fused.alpha[p] - 1.0);
    al_map[p] = al;
    ep_map[p] = al / cache.fused.gamma[p];
  }

  Tensor img = decode_cached(d_map, al_map, ep_map, m.dec1, m.dec2, &cache.dec_in,
                             &cache.dec_mid, &cache.dec_out);

  if (!img.all_finite() || !d_map.all_finite() || !al_map.all_finite() || !ep_map.all_finite())
    throw NumericalError("tnig_forward: non-finite value in outputs");
  cache.fused.validate();

  return Prediction{ImageTensor(std::move(img), t.t_target), std::move(d_map),
                    std::move(al_map), std::move(ep_map), cache.fused};
}

LossBreakdown graph_loss_and_grad(const ImageTensor& i0, const ImageTensor& i1,
                                  const TimeSpec& t, const ImageTensor& target,
                                  const ModelParams& m, const LossConfig& cfg,
                                  ModelParams& grads) {
  GraphCache cache;
  Prediction pred = graph_forward(i0, i1, t, m, cache);
  if (!target.data().same_shape(i1.data())) throw ShapeError("target shape mismatch");

  std::size_t h = i0.h(), w = i0.w();
  std::size_t px = h * w;
  NeighborhoodWindow win = m.window();
  std::size_t chat = static_cast<std::size_t>(win.chat);

  // Ground truth for the feature-change residual: intensity change vs I1.
  Tensor d_truth({h, w});
  for (std::size_t p = 0; p < px; ++p) d_truth[p] = target.data()[p] - i1.data()[p];

  LossBreakdown bd = loss_total(pred.image, target, d_truth, cache.fused, cfg);

  // --- reconstruction path ---
  Tensor dimg = loss_rec_adjoint(pred.image, target, cfg);
  for (std::size_t p = 0; p < px; ++p) dimg[p] *= cfg.rec_weight;

  Tensor dpre({h, w, 1});
  for (std::size_t p = 0; p < px; ++p) {
    double y = pred.image.data()[p];
    dpre[p] = dimg[p] * y * (1.0 - y);
  }
  Tensor dmid = Tensor::zeros_like(cache.dec_mid);
  conv_backward(cache.dec_mid, m.dec2, cache.dec_out, dpre, false, grads.dec2, &dmid);
  Tensor dx = Tensor::zeros_like(cache.dec_in);
  conv_backward(cache.dec_in, m.dec1, cache.dec_mid, dmid, true, grads.dec1, &dx);

  // --- fused-parameter gradients ---
  PmGrad dfused(cache.fused.delta);
  for (std::size_t p = 0; p < px; ++p) {
    double dd = dx[p * 3 + 0];
    double dal = dx[p * 3 + 1];
    double dep = dx[p * 3 + 2];
    double g = cache.fused.gamma[p], a = cache.fused.alpha[p], b = cache.fused.beta[p];
    double am1 = a - 1.0;
    dfused.ddelta[p] += dd;
    dfused.dbeta[p] += dal / am1 + dep / (g * am1);
    dfused.dalpha[p] += -dal * b / (am1 * am1) - dep * b / (g * am1 * am1);
    dfused.dgamma[p] += -dep * b / (g * g * am1);
  }
  {
    NllAdjoint nll = loss_nll_adjoint(cache.fused);
    RegAdjoint reg = loss_reg_adjoint(d_truth, cache.fused);
    for (std::size_t p = 0; p < px; ++p) {
      dfused.dgamma[p] += nll.dgamma[p] + cfg.tau * reg.dgamma[p];
      dfused.dalpha[p] += nll.dalpha[p] + cfg.tau * reg.dalpha[p];
      dfused.ddelta[p] += cfg.tau * reg.ddelta[p];
    }
  }

  // --- mixture fold backward ---
  std::array<PmGrad, 3> dlocal{PmGrad(cache.fused.delta), PmGrad(cache.fused.delta),
                               PmGrad(cache.fused.delta)};
  PmGrad dglobal(cache.fused.delta);
  for (std::size_t p = 0; p < px; ++p) {
    MixIn p1 = pm_at(cache.pm_local[0], p);
    MixIn p2 = pm_at(cache.pm_local[1], p);
    MixIn p3 = pm_at(cache.pm_local[2], p);
    MixIn pg = pm_at(cache.pm_global, p);
    MixIn m12 = pm_at(cache.pm12, p);
    MixIn m123 = pm_at(cache.pm123, p);
    MixIn mf = pm_at(cache.fused, p);

    MixGrad gf{dfused.ddelta[p], dfused.dgamma[p], dfused.dalpha[p], dfused.dbeta[p]};
    MixGrad g123, gg;
    mix_backward(m123, pg, m.mode, mf, gf, g123, gg);
    MixGrad g12, g3;
    mix_backward(m12, p3, m.mode, m123, g123, g12, g3);
    MixGrad g1, g2;
    mix_backward(p1, p2, m.mode, m12, g12, g1, g2);

    auto store = [p](PmGrad& dst, const MixGrad& src) {
      dst.ddelta[p] += src.ddelta;
      dst.dgamma[p] += src.dgamma;
      dst.dalpha[p] += src.dalpha;
      dst.dbeta[p] += src.dbeta;
    };
    store(dlocal[0], g1);
    store(dlocal[1], g2);
    store(dlocal[2], g3);
    store(dglobal, gg);
  }

  // --- heads backward ---
  std::array<Tensor, 3> dtc;
  for (int k = 0; k < 3; ++k) {
    dtc[k] = Tensor::zeros_like(cache.tc[k]);
    head_backward(cache.tc[k], t.t_norm, m.local_heads[k], cache.local_head[k].raw, dlocal[k],
                  grads.local_heads[k], dtc[k]);
  }
  Tensor ddeform = Tensor::zeros_like(cache.deform);
  head_backward(cache.deform, t.t_norm, m.global_head, cache.global_head.raw, dglobal,
                grads.global_head, ddeform);

  // --- TTCN backward per scale ---
  for (int k = 0; k < 3; ++k) {
    Tensor dqf = Tensor::zeros_like(cache.qf[k]);
    Tensor dkf = Tensor::zeros_like(cache.kf[k]);
    Tensor dvf = Tensor::zeros_like(cache.vf[k]);
    std::size_t n2 = static_cast<std::size_t>(win.n) * static_cast<std::size_t>(win.n);
    std::vector<double> q(chat), dq, dk_rows, ds(n2), dv_rows(n2 * chat);
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        for (std::size_t c = 0; c < chat; ++c) q[c] = cache.qf[k].at3(i, j, c);
        Gathered gk = neighborhood_gather(cache.kf[k], i, j, win);
        Gathered gv = neighborhood_gather(cache.vf[k], i, j, win);
        const double* s = cache.att[k].data() + (i * w + j) * n2;
        const double* dout = dtc[k].data() + (i * w + j) * chat;
        std::fill(dv_rows.begin(), dv_rows.end(), 0.0);
        for (std::size_t mm = 0; mm < n2; ++mm) {
          double dsm = 0.0;
          for (std::size_t c = 0; c < chat; ++c) {
            dsm += dout[c] * gv.rows[mm * chat + c];
            if (gk.valid[mm]) dv_rows[mm * chat + c] = s[mm] * dout[c];
          }
          ds[mm] = dsm;
        }
        attention_backward(q, gk, s, ds.data(), win.chat, dq, dk_rows);
        for (std::size_t c = 0; c < chat; ++c) dqf.at3(i, j, c) += dq[c];
        scatter_window(dkf, i, j, win.n, dk_rows, gk.valid);
        scatter_window(dvf, i, j, win.n, dv_rows, gv.valid);
      }
    }
    Tensor df0 = Tensor::zeros_like(cache.f0[k]);
    Tensor df1 = Tensor::zeros_like(cache.f1[k]);
    project_backward(cache.f0[k], m.ttcn[k].wq, dqf, grads.ttcn[k].wq, &df0);
    project_backward(cache.f1[k], m.ttcn[k].wk, dkf, grads.ttcn[k].wk, &df1);
    project_backward(cache.f1[k], m.ttcn[k].wv, dvf, grads.ttcn[k].wv, &df1);
    conv_backward(i0.data(), m.ttcn[k].tex, cache.f0[k], df0, true, grads.ttcn[k].tex, nullptr);
    conv_backward(i1.data(), m.ttcn[k].tex, cache.f1[k], df1, true, grads.ttcn[k].tex, nullptr);
  }

  // --- TDCN backward ---
  {
    Tensor dqg = Tensor::zeros_like(cache.qg);
    Tensor dkg = Tensor::zeros_like(cache.kg);
    std::size_t n2 = static_cast<std::size_t>(win.n) * static_cast<std::size_t>(win.n);
    int r = (win.n - 1) / 2;
    std::vector<double> q(chat), dq, dk_rows, ds(n2);
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        for (std::size_t c = 0; c < chat; ++c) q[c] = cache.qg.at3(i, j, c);
        Gathered gk = neighborhood_gather(cache.kg, i, j, win);
        const double* s = cache.attg.data() + (i * w + j) * n2;
        double dmr = ddeform.at3(i, j, 0);
        double dmc = ddeform.at3(i, j, 1);
        std::size_t mm = 0;
        for (int du = -r; du <= r; ++du)
          for (int dv = -r; dv <= r; ++dv, ++mm)
            ds[mm] = gk.valid[mm] ? dmr * du + dmc * dv : 0.0;
        attention_backward(q, gk, s, ds.data(), win.chat, dq, dk_rows);
        for (std::size_t c = 0; c < chat; ++c) dqg.at3(i, j, c) += dq[c];
        scatter_window(dkg, i, j, win.n, dk_rows, gk.valid);
      }
    }
    Tensor dg0 = Tensor::zeros_like(cache.g0);
    Tensor dg1 = Tensor::zeros_like(cache.g1);
    project_backward(cache.g0, m.tdcn.wq, dqg, grads.tdcn.wq, &dg0);
    project_backward(cache.g1, m.tdcn.wk, dkg, grads.tdcn.wk, &dg1);
    conv_backward(i0.data(), m.tdcn.tex, cache.g0, dg0, true, grads.tdcn.tex, nullptr);
    conv_backward(i1.data(), m.tdcn.tex, cache.g1, dg1, true, grads.tdcn.tex, nullptr);
  }

  return bd;
}

}  // namespace detail

Prediction tnig_forward(const ImageTensor& i0, const ImageTensor& i1, const TimeSpec& t,
                        const ModelParams& m) {
  detail::GraphCache cache;
  return detail::graph_forward(i0, i1, t, m, cache);
}

}  // namespace tnig
