#include "tnig/features.hpp"

#include <cmath>
#include <limits>

namespace tnig {

ImageTensor::ImageTensor(Tensor data, double age_years)
    : data_(std::move(data)), age_years_(age_years) {
  if (data_.rank() != 2) throw ShapeError("image must be 2-d");
  if (data_.dim(0) < 8 || data_.dim(1) < 8) throw ShapeError("image must be at least 8x8");
  if (!(age_years_ >= 0.0) || !std::isfinite(age_years_))
    throw DomainError("age must be finite and >= 0");
  for (std::size_t i = 0; i < data_.size(); ++i) {
    double v = data_[i];
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("image pixels must lie in [0,1]");
  }
}

Tensor conv2d(const Tensor& in, const ConvLayer& layer, bool relu) {
  if (in.rank() != 2 && in.rank() != 3) throw ShapeError("conv input must be 2-d or 3-d");
  std::size_t h = in.dim(0), w = in.dim(1);
  std::size_t cin = in.rank() == 3 ? in.dim(2) : 1;
  const Tensor& k = layer.kernel;
  if (k.rank() != 4 || k.dim(0) != k.dim(1) || k.dim(0) % 2 == 0)
    throw ShapeError("kernel must be k x k x Cin x Cout with odd k");
  if (k.dim(2) != cin) throw ShapeError("kernel input channels mismatch");
  std::size_t cout = k.dim(3);
  if (layer.bias.rank() != 1 || layer.bias.dim(0) != cout)
    throw ShapeError("bias length mismatch");
  std::size_t ks = k.dim(0);
  long r = static_cast<long>(ks) / 2;

  Tensor out({h, w, cout});
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      for (std::size_t co = 0; co < cout; ++co) {
        double acc = layer.bias[co];
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
              acc += x * k[((ku * ks + kv) * cin + ci) * cout + co];
            }
          }
        }
        out.at3(i, j, co) = relu && acc < 0.0 ? 0.0 : acc;
      }
    }
  }
  return out;
}

Tensor conv2d_relu(const Tensor& in, const ConvLayer& layer) { return conv2d(in, layer, true); }

Tensor extract_texture(const ImageTensor& img, int scale_k, const ConvLayer& layer) {
  if (scale_k < 1 || scale_k > 3) throw DomainError("scale index must be in {1,2,3}");
  std::size_t want = static_cast<std::size_t>(2 * scale_k - 1);
  if (layer.kernel.rank() != 4 || layer.kernel.dim(0) != want)
    throw ShapeError("kernel side must be 2k-1 for scale k");
  return conv2d_relu(img.data(), layer);
}

Gathered neighborhood_gather(const Tensor& fm, std::size_t i, std::size_t j,
                             const NeighborhoodWindow& win) {
  if (fm.rank() != 3) throw ShapeError("feature map must be 3-d");
  std::size_t h = fm.dim(0), w = fm.dim(1), c = fm.dim(2);
  if (i >= h || j >= w) throw IndexError("neighborhood center out of range");
  int r = (win.n - 1) / 2;
  std::size_t n2 = static_cast<std::size_t>(win.n) * static_cast<std::size_t>(win.n);
  Gathered g;
  g.rows.assign(n2 * c, 0.0);
  g.valid.assign(n2, 0);
  std::size_t m = 0;
  for (int du = -r; du <= r; ++du) {
    for (int dv = -r; dv <= r; ++dv, ++m) {
      long ii = static_cast<long>(i) + du;
      long jj = static_cast<long>(j) + dv;
      if (ii < 0 || ii >= static_cast<long>(h) || jj < 0 || jj >= static_cast<long>(w)) continue;
      g.valid[m] = 1;
      for (std::size_t ci = 0; ci < c; ++ci)
        g.rows[m * c + ci] =
            fm.at3(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj), ci);
    }
  }
  return g;
}

std::vector<double> attention_scores(const std::vector<double>& q,
                                     const std::vector<double>& k_rows,
                                     const std::vector<std::uint8_t>& valid, int chat) {
  std::size_t n2 = valid.size();
  if (q.size() != static_cast<std::size_t>(chat) || k_rows.size() != n2 * q.size())
    throw ShapeError("attention_scores: inconsistent shapes");
  double scale = 1.0 / std::sqrt(static_cast<double>(chat));
  std::vector<double> logits(n2, 0.0);
  bool any = false;
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < n2; ++m) {
    if (!valid[m]) continue;
    any = true;
    double dot = 0.0;
    for (std::size_t c = 0; c < q.size(); ++c) dot += q[c] * k_rows[m * q.size() + c];
    logits[m] = dot * scale;
    max_logit = std::max(max_logit, logits[m]);
  }
  if (!any) throw MaskError("attention_scores: no valid window cells");
  std::vector<double> out(n2, 0.0);
  double sum = 0.0;
  for (std::size_t m = 0; m < n2; ++m) {
    if (!valid[m]) continue;
    out[m] = std::exp(logits[m] - max_logit);
    sum += out[m];
  }
  for (std::size_t m = 0; m < n2; ++m) out[m] /= sum;
  return out;
}

std::vector<double> texture_change(const std::vector<double>& s,
                                   const std::vector<double>& v_rows, int chat) {
  std::size_t n2 = s.size();
  if (v_rows.size() != n2 * static_cast<std::size_t>(chat))
    throw ShapeError("texture_change: inconsistent shapes");
  std::vector<double> out(static_cast<std::size_t>(chat), 0.0);
  for (std::size_t m = 0; m < n2; ++m) {
    if (s[m] == 0.0) continue;
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += s[m] * v_rows[m * out.size() + c];
  }
  return out;
}

namespace {

// Projects an H x W x C field through a C x Ĉ matrix.
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

}  // namespace

Tensor ttcn_forward_scale(const ImageTensor& i0, const ImageTensor& i1,
                          const NeighborhoodWindow& win, const TtcnScaleParams& params,
                          int scale_k) {
  if (!i0.data().same_shape(i1.data())) throw ShapeError("input images must match in shape");
  Tensor f0 = extract_texture(i0, scale_k, params.tex);
  Tensor f1 = extract_texture(i1, scale_k, params.tex);
  Tensor qf = project(f0, params.wq);
  Tensor kf = project(f1, params.wk);
  Tensor vf = project(f1, params.wv);
  std::size_t h = f0.dim(0), w = f0.dim(1);
  std::size_t chat = qf.dim(2);
  Tensor out({h, w, chat});
  std::vector<double> q(chat);
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      for (std::size_t c = 0; c < chat; ++c) q[c] = qf.at3(i, j, c);
      Gathered gk = neighborhood_gather(kf, i, j, win);
      Gathered gv = neighborhood_gather(vf, i, j, win);
      std::vector<double> s = attention_scores(q, gk.rows, gk.valid, win.chat);
      std::vector<double> mix = texture_change(s, gv.rows, win.chat);
      for (std::size_t c = 0; c < chat; ++c) out.at3(i, j, c) = mix[c];
    }
  }
  return out;
}

std::array<Tensor, 3> ttcn_forward(const ImageTensor& i0, const ImageTensor& i1,
                                   const NeighborhoodWindow& win,
                                   const std::array<TtcnScaleParams, 3>& params) {
  return {ttcn_forward_scale(i0, i1, win, params[0], 1),
          ttcn_forward_scale(i0, i1, win, params[1], 2),
          ttcn_forward_scale(i0, i1, win, params[2], 3)};
}

Tensor coordinate_map(std::size_t h, std::size_t w) {
  if (h < 8 || w < 8) throw ShapeError("coordinate map needs h,w >= 8");
  Tensor out({h, w, 2});
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      out.at3(i, j, 0) = static_cast<double>(i);
      out.at3(i, j, 1) = static_cast<double>(j);
    }
  return out;
}

std::array<double, 2> deformation_from_attention(const std::vector<double>& s,
                                                 const std::vector<std::uint8_t>& valid, int n) {
  if (s.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n) ||
      valid.size() != s.size())
    throw ShapeError("deformation_from_attention: inconsistent shapes");
  int r = (n - 1) / 2;
  double dr = 0.0, dc = 0.0;
  std::size_t m = 0;
  for (int du = -r; du <= r; ++du)
    for (int dv = -r; dv <= r; ++dv, ++m) {
      if (!valid[m]) continue;
      dr += s[m] * du;
      dc += s[m] * dv;
    }
  return {dr, dc};
}

Tensor tdcn_forward(const ImageTensor& i0, const ImageTensor& i1,
                    const NeighborhoodWindow& win, const TdcnParams& params) {
  if (!i0.data().same_shape(i1.data())) throw ShapeError("input images must match in shape");
  Tensor f0 = conv2d_relu(i0.data(), params.tex);
  Tensor f1 = conv2d_relu(i1.data(), params.tex);
  Tensor qf = project(f0, params.wq);
  Tensor kf = project(f1, params.wk);
  std::size_t h = f0.dim(0), w = f0.dim(1);
  std::size_t chat = qf.dim(2);
  Tensor out({h, w, 2});
  std::vector<double> q(chat);
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      for (std::size_t c = 0; c < chat; ++c) q[c] = qf.at3(i, j, c);
      Gathered gk = neighborhood_gather(kf, i, j, win);
      std::vector<double> s = attention_scores(q, gk.rows, gk.valid, win.chat);
      std::array<double, 2> m = deformation_from_attention(s, gk.valid, win.n);
      out.at3(i, j, 0) = m[0];
      out.at3(i, j, 1) = m[1];
    }
  }
  return out;
}

}  // namespace tnig
