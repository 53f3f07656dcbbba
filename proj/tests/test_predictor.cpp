// End-to-end forward pass: time-conditioned parameter heads, pointwise
// fusion, uncertainty maps, decoding, and model persistence.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <ctime>
#include <string>

#include "tnig/predictor.hpp"
#include "tnig/rng.hpp"

using namespace tnig;

namespace {

Tensor random_map(Rng& rng, std::vector<std::size_t> dims, double lo, double hi) {
  Tensor t(std::move(dims));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

ImageTensor random_image(Rng& rng, std::size_t h, std::size_t w, double age) {
  return ImageTensor(random_map(rng, {h, w}, 0.0, 1.0), age);
}

std::string temp_path(const char* name) {
  return std::string("/tmp/tnig_test_") + name;
}

}  // namespace

TEST_CASE("TimeSpec normalized time") {
  TimeSpec extrap(60.0, 62.0, 65.0);
  CHECK(extrap.t_norm == doctest::Approx(1.5).epsilon(1e-15));
  TimeSpec interp(60.0, 62.0, 61.0);
  CHECK(interp.t_norm == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK_THROWS_AS(TimeSpec(62.0, 62.0, 65.0), DomainError);
  CHECK_THROWS_AS(TimeSpec(63.0, 62.0, 65.0), DomainError);
}

TEST_CASE("param_head activations and time conditioning") {
  TimeSpec t(60.0, 62.0, 65.0);
  Tensor feat({6, 6, 3}, 0.25);

  HeadParams zero{Tensor({4, 4}), Tensor({4})};  // (C+1) x 4, all zero
  ParamMaps pm = param_head(feat, t, zero);
  double sp0 = std::log(2.0) + 1e-6;  // softplus(0) + floor
  for (std::size_t i = 0; i < pm.delta.size(); ++i) {
    CHECK(pm.delta[i] == 0.0);
    CHECK(pm.gamma[i] == doctest::Approx(sp0).epsilon(1e-12));
    CHECK(pm.alpha[i] == doctest::Approx(1.0 + sp0).epsilon(1e-12));
    CHECK(pm.beta[i] == doctest::Approx(sp0).epsilon(1e-12));
  }

  // Nonzero time-channel weight: output tracks t_norm. Zero time row:
  // output is t-invariant.
  HeadParams timed = zero;
  timed.weight[3 * 4 + 0] = 1.0;  // time row -> delta column
  ParamMaps a = param_head(feat, TimeSpec(60, 62, 65), timed);
  ParamMaps b = param_head(feat, TimeSpec(60, 62, 67), timed);
  CHECK(a.delta[0] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(b.delta[0] == doctest::Approx(2.5).epsilon(1e-12));

  Rng rng(1);
  HeadParams untimed{random_map(rng, {4, 4}, -1, 1), random_map(rng, {4}, -1, 1)};
  for (std::size_t c = 0; c < 4; ++c) untimed.weight[3 * 4 + c] = 0.0;
  ParamMaps u1 = param_head(feat, TimeSpec(60, 62, 65), untimed);
  ParamMaps u2 = param_head(feat, TimeSpec(60, 62, 80), untimed);
  CHECK(u1.delta == u2.delta);
  CHECK(u1.gamma == u2.gamma);

  // Activation floors hold under fuzzed weights.
  for (int it = 0; it < 50; ++it) {
    HeadParams h{random_map(rng, {4, 4}, -5, 5), random_map(rng, {4}, -5, 5)};
    ParamMaps f = param_head(random_map(rng, {6, 6, 3}, -3, 3), t, h);
    CHECK_NOTHROW(f.validate());
  }

  HeadParams wrong{Tensor({5, 4}), Tensor({4})};
  CHECK_THROWS_AS(param_head(feat, t, wrong), ShapeError);
}

TEST_CASE("decode squashes into [0,1]") {
  Tensor d({8, 8}, 0.2), al({8, 8}, 0.5), ep({8, 8}, 0.1);
  ConvLayer dec1{Tensor({3, 3, 3, 4}), Tensor({4})};
  ConvLayer dec2{Tensor({3, 3, 4, 1}), Tensor({1})};
  Tensor img = decode(d, al, ep, dec1, dec2);
  REQUIRE(img.dims() == std::vector<std::size_t>{8, 8});
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(img[i] == 0.5);  // logistic(0)

  Rng rng(2);
  for (int it = 0; it < 100; ++it) {
    ConvLayer r1{random_map(rng, {3, 3, 3, 4}, -2, 2), random_map(rng, {4}, -1, 1)};
    ConvLayer r2{random_map(rng, {3, 3, 4, 1}, -2, 2), random_map(rng, {1}, -1, 1)};
    Tensor out = decode(random_map(rng, {8, 8}, -2, 2), random_map(rng, {8, 8}, 0, 3),
                        random_map(rng, {8, 8}, 0, 3), r1, r2);
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(out[i] >= 0.0);
      CHECK(out[i] <= 1.0);
    }
  }
}

TEST_CASE("tnig_forward invariants and fusion identities") {
  Rng rng(3);
  ModelParams m = make_model(3, 4, 4, 4, MixtureMode::symmetric, 7);
  ImageTensor i0 = random_image(rng, 12, 12, 60.0);
  ImageTensor i1 = random_image(rng, 12, 12, 62.0);
  TimeSpec t(60.0, 62.0, 65.0);

  Prediction p = tnig_forward(i0, i1, t, m);
  CHECK_NOTHROW(p.fused.validate());
  for (std::size_t i = 0; i < p.image.data().size(); ++i) {
    CHECK(p.image.data()[i] >= 0.0);
    CHECK(p.image.data()[i] <= 1.0);
    CHECK(p.al_map[i] >= 0.0);
    CHECK(p.ep_map[i] >= 0.0);
    CHECK(p.d_map[i] == p.fused.delta[i]);
    CHECK(p.al_map[i] ==
          doctest::Approx(p.fused.beta[i] / (p.fused.alpha[i] - 1.0)).epsilon(1e-12));
    CHECK(p.ep_map[i] == doctest::Approx(p.al_map[i] / p.fused.gamma[i]).epsilon(1e-12));
  }

  // Recompute the four source parameter maps and check the fold identities.
  auto tex = ttcn_forward(i0, i1, m.window(), m.ttcn);
  Tensor deform = tdcn_forward(i0, i1, m.window(), m.tdcn);
  ParamMaps pm1 = param_head(tex[0], t, m.local_heads[0]);
  ParamMaps pm2 = param_head(tex[1], t, m.local_heads[1]);
  ParamMaps pm3 = param_head(tex[2], t, m.local_heads[2]);
  ParamMaps pmg = param_head(deform, t, m.global_head);
  for (std::size_t i = 0; i < p.fused.gamma.size(); ++i) {
    double gsum = pm1.gamma[i] + pm2.gamma[i] + pm3.gamma[i] + pmg.gamma[i];
    double asum = pm1.alpha[i] + pm2.alpha[i] + pm3.alpha[i] + pmg.alpha[i] + 1.5;
    CHECK(p.fused.gamma[i] == doctest::Approx(gsum).epsilon(1e-12));
    CHECK(p.fused.alpha[i] == doctest::Approx(asum).epsilon(1e-12));
    NigParams local = nig_fuse_local(
        NigParams(pm1.delta[i], pm1.gamma[i], pm1.alpha[i], pm1.beta[i]),
        NigParams(pm2.delta[i], pm2.gamma[i], pm2.alpha[i], pm2.beta[i]),
        NigParams(pm3.delta[i], pm3.gamma[i], pm3.alpha[i], pm3.beta[i]), m.mode);
    NigParams fused = nig_fuse_global(
        local, NigParams(pmg.delta[i], pmg.gamma[i], pmg.alpha[i], pmg.beta[i]), m.mode);
    CHECK(p.fused.delta[i] == doctest::Approx(fused.delta()).epsilon(1e-12));
    CHECK(p.fused.beta[i] == doctest::Approx(fused.beta()).epsilon(1e-12));
  }

  // Determinism: bit-identical repeat.
  Prediction q = tnig_forward(i0, i1, t, m);
  CHECK(q.image == p.image);
  CHECK(q.d_map == p.d_map);
  CHECK(q.al_map == p.al_map);
  CHECK(q.ep_map == p.ep_map);

  // Continuity in t_norm.
  Prediction r = tnig_forward(i0, i1, TimeSpec(60.0, 62.0, 65.0 + 2e-4), m);
  double worst = 0.0;
  for (std::size_t i = 0; i < r.image.data().size(); ++i)
    worst = std::max(worst, std::fabs(r.image.data()[i] - p.image.data()[i]));
  CHECK(worst <= 1e-2);

  ImageTensor other = random_image(rng, 12, 14, 62.0);
  CHECK_THROWS_AS(tnig_forward(i0, other, t, m), ShapeError);
}

TEST_CASE("forward pass at 64x64 stays under the performance floor") {
  Rng rng(4);
  ModelParams m = make_model(3, 8, 8, 8, MixtureMode::symmetric, 1);
  ImageTensor i0 = random_image(rng, 64, 64, 60.0);
  ImageTensor i1 = random_image(rng, 64, 64, 62.0);
  std::clock_t start = std::clock();
  Prediction p = tnig_forward(i0, i1, TimeSpec(60, 62, 65), m);
  double cpu_s = static_cast<double>(std::clock() - start) / CLOCKS_PER_SEC;
  CHECK(p.image.h() == 64);
  CHECK(cpu_s < 1.0);
}

TEST_CASE("model persistence round-trips bitwise") {
  ModelParams m = make_model(3, 4, 4, 4, MixtureMode::verbatim, 99);
  std::string path = temp_path("model.tnig");
  model_save(m, path);
  ModelParams back = model_load(path);
  CHECK(back.window_n == m.window_n);
  CHECK(back.channels == m.channels);
  CHECK(back.chat == m.chat);
  CHECK(back.decoder_channels == m.decoder_channels);
  CHECK(back.mode == m.mode);
  auto ma = tensor_manifest(m);
  auto mb = tensor_manifest(back);
  REQUIRE(ma.size() == mb.size());
  for (std::size_t i = 0; i < ma.size(); ++i) {
    CHECK(ma[i].first == mb[i].first);
    CHECK(*ma[i].second == *mb[i].second);
  }

  // Truncation and magic corruption are format errors.
  {
    FILE* f = std::fopen(path.c_str(), "rb");
    REQUIRE(f);
    std::fseek(f, 0, SEEK_END);
    long len = std::ftell(f);
    std::fseek(f, 0, SEEK_SET);
    std::string bytes(static_cast<std::size_t>(len), '\0');
    REQUIRE(std::fread(bytes.data(), 1, bytes.size(), f) == bytes.size());
    std::fclose(f);

    std::string trunc_path = temp_path("model_trunc.tnig");
    FILE* g = std::fopen(trunc_path.c_str(), "wb");
    std::fwrite(bytes.data(), 1, bytes.size() / 2, g);
    std::fclose(g);
    CHECK_THROWS_AS(model_load(trunc_path), FormatError);

    std::string magic_path = temp_path("model_magic.tnig");
    bytes[0] = 'X';
    FILE* h = std::fopen(magic_path.c_str(), "wb");
    std::fwrite(bytes.data(), 1, bytes.size(), h);
    std::fclose(h);
    CHECK_THROWS_AS(model_load(magic_path), FormatError);
  }
  CHECK_THROWS_AS(model_load(temp_path("does_not_exist.tnig")), IoError);
}

TEST_CASE("make_model and zeros_like") {
  ModelParams m = make_model(3, 4, 4, 4, MixtureMode::symmetric, 5);
  ModelParams m2 = make_model(3, 4, 4, 4, MixtureMode::symmetric, 5);
  auto ta = tensor_manifest(m);
  auto tb = tensor_manifest(m2);
  for (std::size_t i = 0; i < ta.size(); ++i) {
    CHECK(*ta[i].second == *tb[i].second);  // same seed, same init
    Tensor snapped = *ta[i].second;
    snapped.snap_to_f32();
    CHECK(snapped == *ta[i].second);  // init already float32-representable
  }
  ModelParams z = zeros_like(m);
  for (auto& [name, t] : tensor_manifest(z)) {
    (void)name;
    for (std::size_t i = 0; i < t->size(); ++i) CHECK((*t)[i] == 0.0);
  }
  ModelParams diff = make_model(3, 4, 4, 4, MixtureMode::symmetric, 6);
  CHECK(*tensor_manifest(diff)[0].second != *ta[0].second);
}
