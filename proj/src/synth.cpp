#include "tnig/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "tnig/rng.hpp"

namespace fs = std::filesystem;

namespace tnig {

std::string label_name(Label l) {
  switch (l) {
    case Label::CN: return "CN";
    case Label::MCI: return "MCI";
    case Label::AD: return "AD";
  }
  throw DomainError("bad label value");
}

Label label_from_name(const std::string& s) {
  if (s == "CN") return Label::CN;
  if (s == "MCI") return Label::MCI;
  if (s == "AD") return Label::AD;
  throw FormatError("unknown label: " + s);
}

void SubjectSequence::validate() const {
  if (subject_id.empty()) throw DataError("subject_id must be nonempty");
  if (scans.size() < 2) throw DataError("sequence needs at least 2 scans: " + subject_id);
  for (std::size_t i = 1; i < scans.size(); ++i)
    if (!(scans[i].age_years() > scans[i - 1].age_years()))
      throw DataError("scan ages must be strictly increasing: " + subject_id);
}

void SynthConfig::validate() const {
  if (subjects == 0) throw ConfigError("subjects must be > 0");
  if (height < 8 || width < 8) throw ConfigError("image size must be at least 8x8");
  if (scans_min < 2 || scans_max < scans_min) throw ConfigError("bad scan count range");
  if (!(interval_min > 0.0) || interval_max < interval_min)
    throw ConfigError("bad interval range");
  if (atrophy_cn < 0.0 || atrophy_mci < 0.0 || atrophy_ad < 0.0 || texture_drift < 0.0 ||
      noise_sigma < 0.0)
    throw ConfigError("rates must be >= 0");
}

double SynthConfig::atrophy_rate(Label l) const {
  switch (l) {
    case Label::CN: return atrophy_cn;
    case Label::MCI: return atrophy_mci;
    case Label::AD: return atrophy_ad;
  }
  throw DomainError("bad label value");
}

namespace {

constexpr int kWaves = 6;

// Per-subject shape and texture parameters, frozen once per subject.
struct Phantom {
  double skull_a, skull_b;
  double vent_a, vent_b;
  double wave_fu[kWaves], wave_fv[kWaves], wave_ph[kWaves], wave_amp[kWaves];
  double flow_fu[2], flow_fv[2], flow_ph[2];

  double texture(double u, double v) const {
    double acc = 0.0;
    for (int k = 0; k < kWaves; ++k)
      acc += wave_amp[k] * std::sin(2.0 * M_PI * (wave_fu[k] * u + wave_fv[k] * v) + wave_ph[k]);
    return acc;
  }

  double value(double u, double v, double dage, double rate, double drift) const {
    double r_sk = (u / skull_a) * (u / skull_a) + (v / skull_b) * (v / skull_b);
    if (r_sk > 1.0) return 0.05;
    if (r_sk > 0.78) return 0.85;
    double scale = std::sqrt(1.0 + rate * dage);
    double va = vent_a * scale, vb = vent_b * scale;
    double r_v = (u / va) * (u / va) + (v / vb) * (v / vb);
    if (r_v < 1.0) return 0.12;
    double shift = drift * dage;
    double uw = u + shift * std::sin(2.0 * M_PI * (flow_fu[0] * u + flow_fv[0] * v) + flow_ph[0]);
    double vw = v + shift * std::sin(2.0 * M_PI * (flow_fu[1] * u + flow_fv[1] * v) + flow_ph[1]);
    return 0.55 + 0.18 * texture(uw, vw);
  }
};

Phantom draw_phantom(Rng& rng) {
  Phantom p;
  p.skull_a = rng.uniform(0.40, 0.45);
  p.skull_b = rng.uniform(0.34, 0.40);
  p.vent_a = rng.uniform(0.08, 0.12);
  p.vent_b = rng.uniform(0.06, 0.10);
  double total = 0.0;
  for (int k = 0; k < kWaves; ++k) {
    double sign_u = rng.uniform() < 0.5 ? -1.0 : 1.0;
    double sign_v = rng.uniform() < 0.5 ? -1.0 : 1.0;
    p.wave_fu[k] = sign_u * rng.uniform(1.0, 3.0);
    p.wave_fv[k] = sign_v * rng.uniform(1.0, 3.0);
    p.wave_ph[k] = rng.uniform(0.0, 2.0 * M_PI);
    p.wave_amp[k] = rng.uniform(0.5, 1.0);
    total += p.wave_amp[k];
  }
  for (int k = 0; k < kWaves; ++k) p.wave_amp[k] /= total;
  for (int k = 0; k < 2; ++k) {
    p.flow_fu[k] = rng.uniform(1.0, 3.0);
    p.flow_fv[k] = rng.uniform(1.0, 3.0);
    p.flow_ph[k] = rng.uniform(0.0, 2.0 * M_PI);
  }
  return p;
}

Tensor render(const Phantom& p, std::size_t h, std::size_t w, double dage, double rate,
              double drift) {
  constexpr int kSub = 3;  // 3x3 subsamples per pixel for soft edges
  Tensor img({h, w});
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      double acc = 0.0;
      for (int si = 0; si < kSub; ++si) {
        double u = (static_cast<double>(i) + (si + 0.5) / kSub) / static_cast<double>(h) - 0.5;
        for (int sj = 0; sj < kSub; ++sj) {
          double v =
              (static_cast<double>(j) + (sj + 0.5) / kSub) / static_cast<double>(w) - 0.5;
          acc += p.value(u, v, dage, rate, drift);
        }
      }
      img.at2(i, j) = acc / (kSub * kSub);
    }
  }
  return img;
}

std::string scan_filename(const std::string& subject_id, std::size_t k) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "_%03zu.tnig", k);
  return subject_id + buf;
}

}  // namespace

SubjectSequence synth_subject(const SynthConfig& cfg, std::size_t index) {
  cfg.validate();
  if (index >= cfg.subjects) throw ConfigError("subject index out of range");
  Rng rng(Rng::mix(cfg.seed, index));

  SubjectSequence seq;
  char id[32];
  std::snprintf(id, sizeof(id), "s%04zu", index);
  seq.subject_id = id;
  seq.label = static_cast<Label>(index % 3);
  double rate = cfg.atrophy_rate(seq.label);

  double age0 = rng.uniform(55.0, 75.0);
  int n_scans = cfg.scans_min +
                static_cast<int>(rng.uniform_int(
                    static_cast<std::uint64_t>(cfg.scans_max - cfg.scans_min + 1)));
  std::vector<double> ages{age0};
  for (int k = 1; k < n_scans; ++k)
    ages.push_back(ages.back() + rng.uniform(cfg.interval_min, cfg.interval_max));

  Phantom ph = draw_phantom(rng);
  for (int k = 0; k < n_scans; ++k) {
    Tensor img = render(ph, cfg.height, cfg.width, ages[static_cast<std::size_t>(k)] - age0,
                        rate, cfg.texture_drift);
    for (std::size_t p = 0; p < img.size(); ++p) {
      double v = img[p] + rng.normal(0.0, cfg.noise_sigma);
      img[p] = std::clamp(v, 0.0, 1.0);
    }
    img.snap_to_f32();
    seq.scans.emplace_back(std::move(img), ages[static_cast<std::size_t>(k)]);
  }
  seq.validate();
  return seq;
}

std::vector<SubjectSequence> synth_dataset(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<SubjectSequence> out;
  out.reserve(cfg.subjects);
  for (std::size_t i = 0; i < cfg.subjects; ++i) out.push_back(synth_subject(cfg, i));
  return out;
}

double ventricle_area(const ImageTensor& img) {
  std::size_t h = img.h(), w = img.w();
  double count = 0.0;
  for (std::size_t i = 0; i < h; ++i) {
    double u = (static_cast<double>(i) + 0.5) / static_cast<double>(h) - 0.5;
    if (std::fabs(u) >= 0.25) continue;
    for (std::size_t j = 0; j < w; ++j) {
      double v = (static_cast<double>(j) + 0.5) / static_cast<double>(w) - 0.5;
      if (std::fabs(v) >= 0.25) continue;
      // Soft count: linear ramp between tissue (>=0.35) and ventricle (<=0.2).
      double x = img.data().at2(i, j);
      if (x <= 0.20)
        count += 1.0;
      else if (x < 0.35)
        count += (0.35 - x) / 0.15;
    }
  }
  return count;
}

std::vector<SubjectSequence> apply_missing(const std::vector<SubjectSequence>& dataset,
                                           double ratio, std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw DomainError("missing ratio must be in [0, 1)");
  std::vector<SubjectSequence> out;
  out.reserve(dataset.size());
  for (std::size_t si = 0; si < dataset.size(); ++si) {
    const SubjectSequence& seq = dataset[si];
    seq.validate();
    std::size_t n = seq.scans.size();
    std::size_t n_remove = static_cast<std::size_t>(
        std::llround(ratio * static_cast<double>(n)));
    if (n_remove == 0) {
      out.push_back(seq);
      continue;
    }
    if (n < 2 || n - n_remove < 3)
      throw DataError("sequence " + seq.subject_id +
                      " cannot satisfy missing ratio while keeping >= 3 scans");
    std::vector<std::size_t> interior;
    for (std::size_t k = 1; k + 1 < n; ++k) interior.push_back(k);
    Rng rng(Rng::mix(seed, si));
    std::vector<std::size_t> removed;
    for (std::size_t r = 0; r < n_remove; ++r) {
      std::size_t pick = rng.uniform_int(interior.size());
      removed.push_back(interior[pick]);
      interior.erase(interior.begin() + static_cast<long>(pick));
    }
    std::sort(removed.begin(), removed.end());
    SubjectSequence trimmed;
    trimmed.subject_id = seq.subject_id;
    trimmed.label = seq.label;
    for (std::size_t k = 0; k < n; ++k)
      if (!std::binary_search(removed.begin(), removed.end(), k))
        trimmed.scans.push_back(seq.scans[k]);
    trimmed.validate();
    out.push_back(std::move(trimmed));
  }
  return out;
}

void write_dataset(const std::vector<SubjectSequence>& dataset, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create dataset directory: " + dir);

  nlohmann::json subjects = nlohmann::json::array();
  for (const SubjectSequence& seq : dataset) {
    seq.validate();
    nlohmann::json scans = nlohmann::json::array();
    for (std::size_t k = 0; k < seq.scans.size(); ++k) {
      std::string name = scan_filename(seq.subject_id, k);
      write_tensor_file(seq.scans[k].data(), (fs::path(dir) / name).string());
      scans.push_back({{"path", name}, {"age_years", seq.scans[k].age_years()}});
    }
    subjects.push_back(
        {{"subject_id", seq.subject_id}, {"label", label_name(seq.label)}, {"scans", scans}});
  }
  nlohmann::json manifest = {{"version", 1}, {"subjects", subjects}};
  std::ofstream f(fs::path(dir) / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write manifest in " + dir);
  f << manifest.dump(2) << "\n";
  if (!f) throw IoError("manifest write failed in " + dir);
}

std::vector<SubjectSequence> read_dataset(const std::string& dir) {
  fs::path manifest_path = fs::path(dir) / "manifest.json";
  if (!fs::exists(manifest_path)) throw FormatError("missing manifest: " + manifest_path.string());
  std::ifstream f(manifest_path, std::ios::binary);
  if (!f) throw IoError("cannot read manifest: " + manifest_path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad manifest: ") + e.what());
  }

  std::vector<SubjectSequence> out;
  try {
    if (manifest.at("version").get<int>() != 1)
      throw FormatError("unsupported dataset version");
    for (const auto& subj : manifest.at("subjects")) {
      SubjectSequence seq;
      seq.subject_id = subj.at("subject_id").get<std::string>();
      seq.label = label_from_name(subj.at("label").get<std::string>());
      for (const auto& scan : subj.at("scans")) {
        fs::path p = fs::path(dir) / scan.at("path").get<std::string>();
        if (!fs::exists(p)) throw FormatError("manifest references absent file: " + p.string());
        seq.scans.emplace_back(read_tensor_file(p.string()),
                               scan.at("age_years").get<double>());
      }
      seq.validate();
      out.push_back(std::move(seq));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad manifest: ") + e.what());
  }
  return out;
}

}  // namespace tnig
