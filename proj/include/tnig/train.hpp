#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tnig/losses.hpp"
#include "tnig/predictor.hpp"
#include "tnig/synth.hpp"

namespace tnig {

struct TrainConfig {
  std::size_t epochs = 200;
  double lr = 1e-4;
  double weight_decay = 1e-5;
  std::size_t batch = 8;
  std::size_t folds = 5;
  std::size_t fold_index = 0;
  std::uint64_t seed = 0;
  LossConfig loss;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  // Model hyperparameters.
  int window_n = 3;
  int channels = 8;
  int chat = 8;
  int decoder_channels = 8;
  MixtureMode mode = MixtureMode::symmetric;

  void validate() const;  // ConfigError
};

struct EpochStats {
  double train_total, train_rec, train_uncertainty;
  double val_total, val_rec, val_uncertainty;
  double wall_seconds;  // advisory only; excluded from determinism guarantees
};

struct TrainHistory {
  std::vector<EpochStats> epochs;

  std::string to_jsonl() const;  // one JSON object per epoch, newline-separated
};

// Subject-level k-fold partition: fold f -> (train indices, val indices).
// Deterministic per seed; folds disjoint; union of val folds = all subjects.
std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> kfold_split(
    std::size_t n_subjects, std::size_t k, std::uint64_t seed);

struct TrainingTriple {
  ImageTensor i0, i1, target;
  TimeSpec t;
};

// All ordered anchor pairs (a < b) with a third scan as target, keeping
// only targets with t_norm in (-1, 4]: after the first anchor and at most
// 4 inter-anchor gaps beyond the second.
std::vector<TrainingTriple> make_training_triples(const SubjectSequence& seq);

// Deterministic Adam training with decoupled weight decay; returns the
// snapshot with the best validation reconstruction loss (the evidential
// NLL term is unbounded below, so the total cannot rank checkpoints) and
// the per-epoch history.
std::pair<ModelParams, TrainHistory> train(const std::vector<SubjectSequence>& dataset,
                                           const TrainConfig& cfg);

}  // namespace tnig
