#include "tnig/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "graph.hpp"
#include "tnig/rng.hpp"

namespace tnig {

void TrainConfig::validate() const {
  if (epochs == 0 || batch == 0) throw ConfigError("epochs and batch must be > 0");
  if (folds < 2) throw ConfigError("folds must be >= 2");
  if (fold_index >= folds) throw ConfigError("fold_index out of range");
  if (!(lr >= 0.0) || !(weight_decay >= 0.0)) throw ConfigError("lr and weight_decay must be >= 0");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0) ||
      !(adam_eps > 0.0))
    throw ConfigError("bad Adam constants");
  loss.validate();
}

std::string TrainHistory::to_jsonl() const {
  std::string out;
  for (const EpochStats& e : epochs) {
    nlohmann::json j = {{"train_total", e.train_total},
                        {"train_rec", e.train_rec},
                        {"train_uncertainty", e.train_uncertainty},
                        {"val_total", e.val_total},
                        {"val_rec", e.val_rec},
                        {"val_uncertainty", e.val_uncertainty},
                        {"wall_seconds", e.wall_seconds}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> kfold_split(
    std::size_t n_subjects, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("folds must be >= 2");
  if (n_subjects < k) throw DataError("need at least as many subjects as folds");
  std::vector<std::size_t> order(n_subjects);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n_subjects; i > 1; --i)
    std::swap(order[i - 1], order[rng.uniform_int(i)]);

  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> folds(k);
  // Contiguous slices of the shuffled order; the first n % k folds get one extra.
  std::size_t base = n_subjects / k, extra = n_subjects % k;
  std::size_t pos = 0;
  std::vector<std::pair<std::size_t, std::size_t>> slices;
  for (std::size_t f = 0; f < k; ++f) {
    std::size_t len = base + (f < extra ? 1 : 0);
    slices.emplace_back(pos, len);
    pos += len;
  }
  for (std::size_t f = 0; f < k; ++f) {
    for (std::size_t g = 0; g < k; ++g) {
      auto [start, len] = slices[g];
      auto& dst = g == f ? folds[f].second : folds[f].first;
      for (std::size_t i = 0; i < len; ++i) dst.push_back(order[start + i]);
    }
  }
  return folds;
}

std::vector<TrainingTriple> make_training_triples(const SubjectSequence& seq) {
  seq.validate();
  std::size_t n = seq.scans.size();
  if (n < 3) throw DataError("need >= 3 scans for training triples: " + seq.subject_id);
  std::vector<TrainingTriple> out;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      for (std::size_t c = 0; c < n; ++c) {
        if (c == a || c == b) continue;
        TimeSpec t(seq.scans[a].age_years(), seq.scans[b].age_years(),
                   seq.scans[c].age_years());
        if (!(t.t_norm > -1.0 && t.t_norm <= 4.0)) continue;
        out.push_back({seq.scans[a], seq.scans[b], seq.scans[c], t});
      }
    }
  }
  return out;
}

namespace {

struct MeanLoss {
  double total = 0, rec = 0, uncertainty = 0;
  std::size_t n = 0;
  void add(const LossBreakdown& b) {
    total += b.total;
    rec += b.rec;
    uncertainty += b.uncertainty;
    ++n;
  }
  void finish() {
    if (n == 0) return;
    double d = static_cast<double>(n);
    total /= d;
    rec /= d;
    uncertainty /= d;
  }
};

MeanLoss eval_triples(const ModelParams& m, const std::vector<TrainingTriple>& triples,
                      const LossConfig& cfg) {
  MeanLoss acc;
  for (const TrainingTriple& tr : triples) {
    Prediction pred = tnig_forward(tr.i0, tr.i1, tr.t, m);
    Tensor d_truth = Tensor::zeros_like(tr.target.data());
    for (std::size_t p = 0; p < d_truth.size(); ++p)
      d_truth[p] = tr.target.data()[p] - tr.i1.data()[p];
    acc.add(loss_total(pred.image, tr.target, d_truth, pred.fused, cfg));
  }
  acc.finish();
  return acc;
}

void check_finite(const ModelParams& g) {
  for (auto& [name, t] : tensor_manifest(g))
    if (!t->all_finite()) throw NumericalError("non-finite gradient in " + name);
}

}  // namespace

std::pair<ModelParams, TrainHistory> train(const std::vector<SubjectSequence>& dataset,
                                           const TrainConfig& cfg) {
  cfg.validate();
  auto folds = kfold_split(dataset.size(), cfg.folds, cfg.seed);
  const auto& [train_idx, val_idx] = folds[cfg.fold_index];

  std::vector<TrainingTriple> train_triples, val_triples;
  for (std::size_t i : train_idx)
    for (TrainingTriple& tr : make_training_triples(dataset[i]))
      train_triples.push_back(std::move(tr));
  for (std::size_t i : val_idx)
    for (TrainingTriple& tr : make_training_triples(dataset[i]))
      val_triples.push_back(std::move(tr));
  if (train_triples.empty()) throw DataError("no training triples after expansion");

  ModelParams model = make_model(cfg.window_n, cfg.channels, cfg.chat, cfg.decoder_channels,
                                 cfg.mode, cfg.seed);
  ModelParams adam_m = zeros_like(model);
  ModelParams adam_v = zeros_like(model);
  std::size_t step = 0;

  ModelParams best = model;
  double best_metric = std::numeric_limits<double>::infinity();
  TrainHistory history;

  std::vector<std::size_t> order(train_triples.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto t_start = std::chrono::steady_clock::now();
    Rng shuffle_rng(Rng::mix(cfg.seed, epoch + 1));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);

    MeanLoss train_acc;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      std::size_t end = std::min(start + cfg.batch, order.size());
      ModelParams grads = zeros_like(model);
      for (std::size_t k = start; k < end; ++k) {
        const TrainingTriple& tr = train_triples[order[k]];
        train_acc.add(detail::graph_loss_and_grad(tr.i0, tr.i1, tr.t, tr.target, model,
                                                  cfg.loss, grads));
      }
      double inv = 1.0 / static_cast<double>(end - start);
      if (!std::isfinite(train_acc.total)) throw NumericalError("non-finite training loss");
      check_finite(grads);

      ++step;
      double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
      double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
      auto params = tensor_manifest(model);
      auto gs = tensor_manifest(grads);
      auto ms = tensor_manifest(adam_m);
      auto vs = tensor_manifest(adam_v);
      for (std::size_t ti = 0; ti < params.size(); ++ti) {
        Tensor& p = *params[ti].second;
        Tensor& g = *gs[ti].second;
        Tensor& mm = *ms[ti].second;
        Tensor& vv = *vs[ti].second;
        for (std::size_t e = 0; e < p.size(); ++e) {
          double gi = g[e] * inv;
          mm[e] = cfg.adam_beta1 * mm[e] + (1.0 - cfg.adam_beta1) * gi;
          vv[e] = cfg.adam_beta2 * vv[e] + (1.0 - cfg.adam_beta2) * gi * gi;
          double mhat = mm[e] / bc1;
          double vhat = vv[e] / bc2;
          p[e] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
          p[e] -= cfg.lr * cfg.weight_decay * p[e];
        }
        p.snap_to_f32();
      }
    }
    train_acc.finish();

    MeanLoss val_acc = eval_triples(model, val_triples, cfg.loss);
    // Select on the reconstruction component: the evidential NLL term is
    // unbounded below, so the total anti-selects once evidence grows.
    double metric = val_triples.empty() ? train_acc.rec : val_acc.rec;
    if (metric < best_metric) {
      best_metric = metric;
      best = model;
    }

    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    history.epochs.push_back({train_acc.total, train_acc.rec, train_acc.uncertainty,
                              val_acc.total, val_acc.rec, val_acc.uncertainty, wall});
  }
  return {std::move(best), std::move(history)};
}

}  // namespace tnig
