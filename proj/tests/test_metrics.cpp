// Image-quality metrics and the evaluation harness.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "tnig/metrics.hpp"
#include "tnig/rng.hpp"

using namespace tnig;

namespace {

ImageTensor constant(std::size_t hw, double v, double age = 60.0) {
  return ImageTensor(Tensor({hw, hw}, v), age);
}

ImageTensor random_image(Rng& rng, std::size_t hw, double age = 60.0) {
  Tensor t({hw, hw});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(0.0, 1.0);
  return ImageTensor(t, age);
}

ImageTensor checkerboard(std::size_t hw) {
  Tensor t({hw, hw});
  for (std::size_t i = 0; i < hw; ++i)
    for (std::size_t j = 0; j < hw; ++j) t.at2(i, j) = (i + j) % 2 ? 1.0 : 0.0;
  return ImageTensor(t, 60.0);
}

}  // namespace

TEST_CASE("mse basics") {
  CHECK(mse(constant(16, 0.5), constant(16, 0.5)) == 0.0);
  CHECK(mse(constant(16, 0.0), constant(16, 1.0)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(mse(constant(16, 0.0), constant(16, 0.5)) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(mse(constant(16, 0.5), constant(32, 0.5)), ShapeError);
}

TEST_CASE("psnr conventions") {
  CHECK(psnr(constant(16, 0.3), constant(16, 0.3)) == 100.0);  // cap at identity
  // Uniform difference of 0.1 -> mse 0.01 -> 20 dB.
  CHECK(psnr(constant(16, 0.4), constant(16, 0.5)) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(psnr(constant(16, 0.0), constant(16, 1.0)) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("psnr and mse are antitone") {
  Rng rng(1);
  ImageTensor a = random_image(rng, 16);
  for (int it = 0; it < 50; ++it) {
    ImageTensor b1 = random_image(rng, 16);
    ImageTensor b2 = random_image(rng, 16);
    double m1 = mse(a, b1), m2 = mse(a, b2);
    if (m1 == m2) continue;
    CHECK((m1 < m2) == (psnr(a, b1) > psnr(a, b2)));
  }
}

TEST_CASE("ssim identity, symmetry, anticorrelation, bounds") {
  Rng rng(2);
  ImageTensor a = random_image(rng, 24);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-9));

  ImageTensor cb = checkerboard(24);
  Tensor inv = cb.data();
  for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 - inv[i];
  CHECK(ssim(cb, ImageTensor(inv, 60.0)) < 0.0);

  for (int it = 0; it < 20; ++it) {
    ImageTensor x = random_image(rng, 16);
    ImageTensor y = random_image(rng, 16);
    double sxy = ssim(x, y);
    CHECK(sxy == doctest::Approx(ssim(y, x)).epsilon(1e-12));
    CHECK(sxy >= -1.0);
    CHECK(sxy <= 1.0);
  }

  CHECK_THROWS_AS(ssim(constant(10, 0.5), constant(10, 0.5)), SizeError);
  CHECK_THROWS_AS(ssim(constant(16, 0.5), constant(32, 0.5)), ShapeError);
}

TEST_CASE("evaluate scores a self-consistent dataset perfectly") {
  // Oracle dataset: targets are the model's own predictions, so every
  // cell must report ssim 1 and mse 0.
  ModelParams model = make_model(3, 4, 4, 4, MixtureMode::symmetric, 3);
  Rng rng(4);
  std::vector<SubjectSequence> dataset;
  for (int s = 0; s < 3; ++s) {
    SubjectSequence seq;
    seq.subject_id = "subj" + std::to_string(s);
    seq.label = Label::CN;
    ImageTensor i0 = random_image(rng, 16, 60.0 + s);
    ImageTensor i1 = random_image(rng, 16, 62.0 + s);
    seq.scans = {i0, i1};
    for (double t : {64.0 + s, 69.0 + s}) {
      Prediction p = tnig_forward(i0, i1, TimeSpec(i0.age_years(), i1.age_years(), t), model);
      seq.scans.emplace_back(p.image.data(), t);
    }
    dataset.push_back(std::move(seq));
  }

  EvalReport report = evaluate(model, dataset);
  REQUIRE(!report.cells.empty());
  bool saw_near = false, saw_far = false;
  for (const EvalCell& c : report.cells) {
    CHECK(c.count > 0);
    CHECK(c.ssim_mean == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(c.mse_mean == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(c.psnr_mean == doctest::Approx(100.0).epsilon(1e-9));
    if (c.group == "horizon" && c.bucket == "dt_lt_5y") saw_near = true;
    if (c.group == "horizon" && c.bucket == "dt_ge_5y") saw_far = true;
  }
  // Targets at dt=2y and dt=7y populate both horizon buckets; dt=7y also
  // proves the [5, inf) bucket's closed-open boundary assignment.
  CHECK(saw_near);
  CHECK(saw_far);

  // Order independence: reversed dataset gives the identical report.
  std::vector<SubjectSequence> reversed(dataset.rbegin(), dataset.rend());
  CHECK(evaluate(model, reversed).to_json() == report.to_json());

  // Empty buckets are omitted: near-only targets produce no dt_ge_5y cell.
  std::vector<SubjectSequence> near_only = dataset;
  for (auto& seq : near_only) seq.scans.pop_back();
  EvalReport near_report = evaluate(model, near_only);
  for (const EvalCell& c : near_report.cells) CHECK(c.bucket != "dt_ge_5y");

  std::vector<SubjectSequence> short_seq = dataset;
  short_seq[0].scans.erase(short_seq[0].scans.begin() + 2, short_seq[0].scans.end());
  CHECK_THROWS_AS(evaluate(model, short_seq), DataError);
}

TEST_CASE("report serialization") {
  EvalReport r;
  r.missing_ratio = 0.2;
  EvalCell c;
  c.group = "horizon";
  c.bucket = "dt_lt_5y";
  c.count = 3;
  c.ssim_mean = 0.91;
  c.psnr_mean = 24.5;
  c.mse_mean = 0.004;
  r.cells.push_back(c);

  std::string js = r.to_json();
  CHECK(js.find("\"missing_ratio\": 0.2") != std::string::npos);
  CHECK(js.find("\"bucket\": \"dt_lt_5y\"") != std::string::npos);
  CHECK(js.find("\"ssim_mean\": 0.91") != std::string::npos);

  std::string csv = r.to_csv();
  CHECK(csv.rfind("group,bucket,count,", 0) == 0);
  CHECK(csv.find("horizon,dt_lt_5y,3,0.910000") != std::string::npos);
}
