#include "tnig/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <tuple>

#include <json.hpp>

namespace tnig {

namespace {

void check_same(const ImageTensor& a, const ImageTensor& b) {
  if (!a.data().same_shape(b.data())) throw ShapeError("image shape mismatch");
}

}  // namespace

double mse(const ImageTensor& a, const ImageTensor& b) {
  check_same(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    double d = a.data()[i] - b.data()[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.data().size());
}

double psnr(const ImageTensor& a, const ImageTensor& b) {
  double m = mse(a, b);
  if (m < 1e-10) return 100.0;
  return 10.0 * std::log10(1.0 / m);
}

double ssim(const ImageTensor& a, const ImageTensor& b) {
  check_same(a, b);
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  constexpr double kC1 = 0.01 * 0.01;  // (K1*L)^2
  constexpr double kC2 = 0.03 * 0.03;  // (K2*L)^2
  std::size_t h = a.h(), w = a.w();
  if (h < kWin || w < kWin) throw SizeError("ssim needs at least 11x11 images");

  double win[kWin][kWin];
  double total = 0.0;
  for (int i = 0; i < kWin; ++i)
    for (int j = 0; j < kWin; ++j) {
      double di = i - (kWin - 1) / 2.0, dj = j - (kWin - 1) / 2.0;
      win[i][j] = std::exp(-(di * di + dj * dj) / (2.0 * kSigma * kSigma));
      total += win[i][j];
    }
  for (auto& row : win)
    for (double& v : row) v /= total;

  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i + kWin <= h; ++i) {
    for (std::size_t j = 0; j + kWin <= w; ++j) {
      double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
      for (int u = 0; u < kWin; ++u)
        for (int v = 0; v < kWin; ++v) {
          double x = a.data().at2(i + static_cast<std::size_t>(u), j + static_cast<std::size_t>(v));
          double y = b.data().at2(i + static_cast<std::size_t>(u), j + static_cast<std::size_t>(v));
          double wt = win[u][v];
          mu_a += wt * x;
          mu_b += wt * y;
          aa += wt * x * x;
          bb += wt * y * y;
          ab += wt * x * y;
        }
      double var_a = aa - mu_a * mu_a;
      double var_b = bb - mu_b * mu_b;
      double cov = ab - mu_a * mu_b;
      double num = (2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2);
      double den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
      acc += num / den;
      ++count;
    }
  }
  return acc / static_cast<double>(count);
}

namespace {

struct Samples {
  std::vector<double> ssim_v, psnr_v, mse_v;
};

std::pair<double, double> mean_std(const std::vector<double>& v) {
  double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var = v.size() > 1 ? var / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var)};
}

EvalCell make_cell(const std::string& group, const std::string& bucket, const Samples& s) {
  EvalCell c;
  c.group = group;
  c.bucket = bucket;
  c.count = s.ssim_v.size();
  std::tie(c.ssim_mean, c.ssim_std) = mean_std(s.ssim_v);
  std::tie(c.psnr_mean, c.psnr_std) = mean_std(s.psnr_v);
  std::tie(c.mse_mean, c.mse_std) = mean_std(s.mse_v);
  return c;
}

}  // namespace

std::string EvalReport::to_json() const {
  nlohmann::json cells_j = nlohmann::json::array();
  for (const EvalCell& c : cells)
    cells_j.push_back({{"group", c.group},
                       {"bucket", c.bucket},
                       {"count", c.count},
                       {"ssim_mean", c.ssim_mean},
                       {"ssim_std", c.ssim_std},
                       {"psnr_mean", c.psnr_mean},
                       {"psnr_std", c.psnr_std},
                       {"mse_mean", c.mse_mean},
                       {"mse_std", c.mse_std}});
  nlohmann::json j = {{"missing_ratio", missing_ratio}, {"cells", cells_j}};
  return j.dump(2);
}

std::string EvalReport::to_csv() const {
  std::string out =
      "group,bucket,count,ssim_mean,ssim_std,psnr_mean,psnr_std,mse_mean,mse_std\n";
  char line[256];
  for (const EvalCell& c : cells) {
    std::snprintf(line, sizeof(line), "%s,%s,%zu,%.6f,%.6f,%.6f,%.6f,%.8f,%.8f\n",
                  c.group.c_str(), c.bucket.c_str(), c.count, c.ssim_mean, c.ssim_std,
                  c.psnr_mean, c.psnr_std, c.mse_mean, c.mse_std);
    out += line;
  }
  return out;
}

EvalReport evaluate(const ModelParams& model, const std::vector<SubjectSequence>& dataset) {
  std::vector<const SubjectSequence*> ordered;
  for (const SubjectSequence& s : dataset) {
    s.validate();
    if (s.scans.size() < 3) throw DataError("evaluate needs >= 3 scans: " + s.subject_id);
    ordered.push_back(&s);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const SubjectSequence* a, const SubjectSequence* b) {
              return a->subject_id < b->subject_id;
            });

  // std::map keeps bucket output order deterministic and sorted.
  std::map<std::string, Samples> horizon, age_decade;
  for (const SubjectSequence* seq : ordered) {
    const ImageTensor& i0 = seq->scans[0];
    const ImageTensor& i1 = seq->scans[1];
    for (std::size_t k = 2; k < seq->scans.size(); ++k) {
      const ImageTensor& truth = seq->scans[k];
      TimeSpec t(i0.age_years(), i1.age_years(), truth.age_years());
      Prediction pred = tnig_forward(i0, i1, t, model);
      double s = ssim(pred.image, truth);
      double p = psnr(pred.image, truth);
      double m = mse(pred.image, truth);
      double dt = truth.age_years() - i1.age_years();
      std::string hb = dt < 5.0 ? "dt_lt_5y" : "dt_ge_5y";  // closed-open [0,5), [5,inf)
      int decade = static_cast<int>(std::floor(truth.age_years() / 10.0)) * 10;
      std::string ab = "age_" + std::to_string(decade) + "s";
      for (auto* cell : {&horizon[hb], &age_decade[ab]}) {
        cell->ssim_v.push_back(s);
        cell->psnr_v.push_back(p);
        cell->mse_v.push_back(m);
      }
    }
  }

  EvalReport report;
  for (auto& [bucket, s] : horizon) report.cells.push_back(make_cell("horizon", bucket, s));
  for (auto& [bucket, s] : age_decade)
    report.cells.push_back(make_cell("age_decade", bucket, s));
  return report;
}

}  // namespace tnig
