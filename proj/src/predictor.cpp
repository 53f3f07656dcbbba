#include "tnig/predictor.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "tnig/rng.hpp"

namespace tnig {

TimeSpec::TimeSpec(double t0_, double t1_, double t_target_)
    : t0(t0_), t1(t1_), t_target(t_target_) {
  if (!std::isfinite(t0) || !std::isfinite(t1) || !std::isfinite(t_target))
    throw DomainError("TimeSpec: non-finite time");
  if (!(t1 > t0)) throw DomainError("TimeSpec: t1 must be > t0");
  t_norm = (t_target - t1) / (t1 - t0);
  if (!std::isfinite(t_norm)) throw DomainError("TimeSpec: non-finite t_norm");
}

void ParamMaps::validate() const {
  if (delta.rank() != 2 || !gamma.same_shape(delta) || !alpha.same_shape(delta) ||
      !beta.same_shape(delta))
    throw ShapeError("ParamMaps: four aligned 2-d maps required");
  for (std::size_t i = 0; i < delta.size(); ++i) {
    if (!std::isfinite(delta[i]) || !std::isfinite(gamma[i]) || !std::isfinite(alpha[i]) ||
        !std::isfinite(beta[i]))
      throw NumericalError("ParamMaps: non-finite entry");
    if (!(gamma[i] > 0.0 && alpha[i] > 1.0 && beta[i] > 0.0))
      throw DomainError("ParamMaps: parameter floor violated");
  }
}

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

namespace {

ModelParams model_with_shapes(int window_n, int channels, int chat, int decoder_channels,
                              MixtureMode mode) {
  if (window_n < 3 || window_n % 2 == 0) throw ConfigError("window side must be odd and >= 3");
  if (channels < 1 || chat < 1 || decoder_channels < 1)
    throw ConfigError("channel counts must be >= 1");
  std::size_t c = static_cast<std::size_t>(channels);
  std::size_t ch = static_cast<std::size_t>(chat);
  std::size_t dc = static_cast<std::size_t>(decoder_channels);

  ModelParams m;
  m.window_n = window_n;
  m.channels = channels;
  m.chat = chat;
  m.decoder_channels = decoder_channels;
  m.mode = mode;
  for (int k = 0; k < 3; ++k) {
    std::size_t ks = static_cast<std::size_t>(2 * (k + 1) - 1);
    m.ttcn[k].tex.kernel = Tensor({ks, ks, 1, c});
    m.ttcn[k].tex.bias = Tensor({c});
    m.ttcn[k].wq = Tensor({c, ch});
    m.ttcn[k].wk = Tensor({c, ch});
    m.ttcn[k].wv = Tensor({c, ch});
    m.local_heads[k].weight = Tensor({ch + 1, 4});
    m.local_heads[k].bias = Tensor({4});
  }
  m.tdcn.tex.kernel = Tensor({3, 3, 1, c});
  m.tdcn.tex.bias = Tensor({c});
  m.tdcn.wq = Tensor({c, ch});
  m.tdcn.wk = Tensor({c, ch});
  m.global_head.weight = Tensor({3, 4});
  m.global_head.bias = Tensor({4});
  m.dec1.kernel = Tensor({3, 3, 3, dc});
  m.dec1.bias = Tensor({dc});
  m.dec2.kernel = Tensor({3, 3, dc, 1});
  m.dec2.bias = Tensor({1});
  return m;
}

std::size_t fan_in(const std::string& name, const Tensor& t) {
  if (t.rank() == 4) return t.dim(0) * t.dim(1) * t.dim(2);  // conv kernel
  if (t.rank() == 2) return t.dim(0);                        // projection / head
  (void)name;
  return 1;  // bias
}

}  // namespace

std::vector<std::pair<std::string, Tensor*>> tensor_manifest(ModelParams& m) {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (int k = 0; k < 3; ++k) {
    std::string s = std::to_string(k + 1);
    out.emplace_back("tex" + s + ".kernel", &m.ttcn[k].tex.kernel);
    out.emplace_back("tex" + s + ".bias", &m.ttcn[k].tex.bias);
    out.emplace_back("ttcn" + s + ".wq", &m.ttcn[k].wq);
    out.emplace_back("ttcn" + s + ".wk", &m.ttcn[k].wk);
    out.emplace_back("ttcn" + s + ".wv", &m.ttcn[k].wv);
  }
  out.emplace_back("tdcn.kernel", &m.tdcn.tex.kernel);
  out.emplace_back("tdcn.bias", &m.tdcn.tex.bias);
  out.emplace_back("tdcn.wq", &m.tdcn.wq);
  out.emplace_back("tdcn.wk", &m.tdcn.wk);
  for (int k = 0; k < 3; ++k) {
    std::string s = std::to_string(k + 1);
    out.emplace_back("head_local" + s + ".weight", &m.local_heads[k].weight);
    out.emplace_back("head_local" + s + ".bias", &m.local_heads[k].bias);
  }
  out.emplace_back("head_global.weight", &m.global_head.weight);
  out.emplace_back("head_global.bias", &m.global_head.bias);
  out.emplace_back("dec1.kernel", &m.dec1.kernel);
  out.emplace_back("dec1.bias", &m.dec1.bias);
  out.emplace_back("dec2.kernel", &m.dec2.kernel);
  out.emplace_back("dec2.bias", &m.dec2.bias);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> tensor_manifest(const ModelParams& m) {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, t] : tensor_manifest(const_cast<ModelParams&>(m))) out.emplace_back(name, t);
  return out;
}

ModelParams make_model(int window_n, int channels, int chat, int decoder_channels,
                       MixtureMode mode, std::uint64_t seed) {
  ModelParams m = model_with_shapes(window_n, channels, chat, decoder_channels, mode);
  Rng rng(seed);
  for (auto& [name, t] : tensor_manifest(m)) {
    if (t->rank() == 1) continue;  // biases start at zero
    double s = std::sqrt(1.0 / static_cast<double>(fan_in(name, *t)));
    for (std::size_t i = 0; i < t->size(); ++i) (*t)[i] = rng.uniform(-s, s);
    t->snap_to_f32();
  }
  return m;
}

ModelParams zeros_like(const ModelParams& like) {
  return model_with_shapes(like.window_n, like.channels, like.chat, like.decoder_channels,
                           like.mode);
}

namespace detail {

ParamMaps head_forward(const Tensor& feat, double t_norm, const HeadParams& head,
                       Tensor* raw_out) {
  if (feat.rank() != 3) throw ShapeError("param_head: feature tensor must be 3-d");
  if (!feat.all_finite()) throw NumericalError("param_head: non-finite features");
  std::size_t cf = feat.dim(2);
  if (head.weight.rank() != 2 || head.weight.dim(0) != cf + 1 || head.weight.dim(1) != 4 ||
      head.bias.rank() != 1 || head.bias.dim(0) != 4)
    throw ShapeError("param_head: head weight shape mismatch");
  std::size_t h = feat.dim(0), w = feat.dim(1);
  Tensor raw({h, w, 4});
  ParamMaps pm{Tensor({h, w}), Tensor({h, w}), Tensor({h, w}), Tensor({h, w})};
  for (std::size_t p = 0; p < h * w; ++p) {
    const double* x = feat.data() + p * cf;
    for (std::size_t r = 0; r < 4; ++r) {
      double acc = head.bias[r];
      for (std::size_t ci = 0; ci < cf; ++ci) acc += x[ci] * head.weight[ci * 4 + r];
      acc += t_norm * head.weight[cf * 4 + r];
      raw[p * 4 + r] = acc;
    }
    pm.delta[p] = raw[p * 4 + 0];
    pm.gamma[p] = softplus(raw[p * 4 + 1]) + 1e-6;
    pm.alpha[p] = 1.0 + softplus(raw[p * 4 + 2]) + 1e-6;
    pm.beta[p] = softplus(raw[p * 4 + 3]) + 1e-6;
  }
  if (raw_out) *raw_out = std::move(raw);
  return pm;
}

Tensor decode_cached(const Tensor& d_map, const Tensor& al_map, const Tensor& ep_map,
                     const ConvLayer& dec1, const ConvLayer& dec2, Tensor* in_out,
                     Tensor* mid_out, Tensor* pre_out) {
  if (d_map.rank() != 2 || !al_map.same_shape(d_map) || !ep_map.same_shape(d_map))
    throw ShapeError("decode: three aligned 2-d maps required");
  std::size_t h = d_map.dim(0), w = d_map.dim(1);
  Tensor x({h, w, 3});
  for (std::size_t p = 0; p < h * w; ++p) {
    x[p * 3 + 0] = d_map[p];
    x[p * 3 + 1] = al_map[p];
    x[p * 3 + 2] = ep_map[p];
  }
  Tensor mid = conv2d(x, dec1, true);
  Tensor pre = conv2d(mid, dec2, false);
  Tensor img({h, w});
  for (std::size_t p = 0; p < h * w; ++p) img[p] = 1.0 / (1.0 + std::exp(-pre[p * 1]));
  if (in_out) *in_out = std::move(x);
  if (mid_out) *mid_out = std::move(mid);
  if (pre_out) *pre_out = std::move(pre);
  return img;
}

}  // namespace detail

ParamMaps param_head(const Tensor& feat, const TimeSpec& t, const HeadParams& head) {
  return detail::head_forward(feat, t.t_norm, head, nullptr);
}

Tensor decode(const Tensor& d_map, const Tensor& al_map, const Tensor& ep_map,
              const ConvLayer& dec1, const ConvLayer& dec2) {
  return detail::decode_cached(d_map, al_map, ep_map, dec1, dec2, nullptr, nullptr, nullptr);
}

namespace {

constexpr char kMagic[4] = {'T', 'N', 'I', 'G'};

std::string mode_name(MixtureMode m) {
  return m == MixtureMode::symmetric ? "symmetric" : "verbatim";
}

MixtureMode mode_from_name(const std::string& s) {
  if (s == "symmetric") return MixtureMode::symmetric;
  if (s == "verbatim") return MixtureMode::verbatim;
  throw FormatError("unknown mixture mode: " + s);
}

}  // namespace

void model_save(const ModelParams& m, const std::string& path) {
  nlohmann::json header;
  header["hyperparameters"] = {{"window_n", m.window_n},
                               {"channels", m.channels},
                               {"chat", m.chat},
                               {"decoder_channels", m.decoder_channels},
                               {"mixture_mode", mode_name(m.mode)}};
  nlohmann::json manifest = nlohmann::json::array();
  auto tensors = tensor_manifest(m);
  for (auto& [name, t] : tensors) manifest.push_back({{"name", name}, {"dims", t->dims()}});
  header["tensors"] = manifest;
  std::string header_str = header.dump();

  std::vector<std::uint8_t> buf;
  buf.insert(buf.end(), kMagic, kMagic + 4);
  put_u16(buf, 1);
  put_u32(buf, static_cast<std::uint32_t>(header_str.size()));
  buf.insert(buf.end(), header_str.begin(), header_str.end());
  for (auto& [name, t] : tensors)
    for (std::size_t i = 0; i < t->size(); ++i) put_f32(buf, static_cast<float>((*t)[i]));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for write: " + path);
  f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!f) throw IoError("write failed: " + path);
}

ModelParams model_load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for read: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (pos + n > bytes.size()) throw FormatError("truncated model file: " + path);
  };
  need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad magic: " + path);
  pos = 4;
  need(2);
  std::uint16_t version = static_cast<std::uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
  pos += 2;
  if (version != 1) throw FormatError("unsupported model version");
  need(4);
  std::uint32_t hlen = 0;
  for (int i = 0; i < 4; ++i) hlen |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
  pos += 4;
  need(hlen);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + static_cast<long>(pos),
                                   bytes.begin() + static_cast<long>(pos + hlen));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad model header: ") + e.what());
  }
  pos += hlen;

  ModelParams m;
  try {
    const auto& hp = header.at("hyperparameters");
    m = model_with_shapes(hp.at("window_n").get<int>(), hp.at("channels").get<int>(),
                          hp.at("chat").get<int>(), hp.at("decoder_channels").get<int>(),
                          mode_from_name(hp.at("mixture_mode").get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad model header: ") + e.what());
  }

  auto tensors = tensor_manifest(m);
  const auto& manifest = header.at("tensors");
  if (!manifest.is_array() || manifest.size() != tensors.size())
    throw ShapeError("model manifest entry count mismatch");
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    auto& [name, t] = tensors[i];
    if (manifest[i].at("name").get<std::string>() != name)
      throw ShapeError("model manifest name mismatch: " + name);
    if (manifest[i].at("dims").get<std::vector<std::size_t>>() != t->dims())
      throw ShapeError("model manifest shape mismatch: " + name);
    need(t->size() * 4);
    for (std::size_t j = 0; j < t->size(); ++j) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[pos + b]) << (8 * b);
      pos += 4;
      float v;
      std::memcpy(&v, &bits, 4);
      (*t)[j] = static_cast<double>(v);
    }
  }
  if (pos != bytes.size()) throw FormatError("trailing bytes in model file");
  return m;
}

}  // namespace tnig
