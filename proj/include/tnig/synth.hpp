#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tnig/features.hpp"

namespace tnig {

enum class Label { CN, MCI, AD };

std::string label_name(Label l);
Label label_from_name(const std::string& s);

// One subject's ordered longitudinal scans; ages strictly increasing,
// intervals may be uneven.
struct SubjectSequence {
  std::string subject_id;
  Label label;
  std::vector<ImageTensor> scans;

  void validate() const;  // DataError on violated invariants
};

struct SynthConfig {
  std::size_t subjects = 32;
  std::size_t height = 32;
  std::size_t width = 32;
  int scans_min = 3;
  int scans_max = 6;
  double interval_min = 1.0;  // years
  double interval_max = 3.0;
  double atrophy_cn = 0.005;  // ventricle area growth per year, by label
  double atrophy_mci = 0.02;
  double atrophy_ad = 0.04;
  double texture_drift = 0.02;  // flow magnitude per year
  double noise_sigma = 0.01;
  std::uint64_t seed = 0;

  void validate() const;  // ConfigError
  double atrophy_rate(Label l) const;
};

// Phantom head: elliptical skull shell, textured tissue band, central
// ventricle whose area grows as (1 + rate * years since baseline). All
// randomness derives from (cfg.seed, index), so subjects are reproducible
// independently of each other.
SubjectSequence synth_subject(const SynthConfig& cfg, std::size_t index);

std::vector<SubjectSequence> synth_dataset(const SynthConfig& cfg);

// Dark-pixel count in the central window; proxy for ventricle area.
double ventricle_area(const ImageTensor& img);

// Removes round(ratio * n) interior scans per sequence, uniformly at
// random, keeping the first and last scans; deterministic per seed.
std::vector<SubjectSequence> apply_missing(const std::vector<SubjectSequence>& dataset,
                                           double ratio, std::uint64_t seed);

// Directory layout: manifest.json + one tensor file per scan.
void write_dataset(const std::vector<SubjectSequence>& dataset, const std::string& dir);
std::vector<SubjectSequence> read_dataset(const std::string& dir);

}  // namespace tnig
