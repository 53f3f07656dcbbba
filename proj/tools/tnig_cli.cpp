#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tnig/gradcheck.hpp"
#include "tnig/metrics.hpp"
#include "tnig/nig.hpp"
#include "tnig/synth.hpp"
#include "tnig/train.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

int threads_from_env() {
  const char* env = std::getenv("EVINIG_THREADS");
  if (!env) return 1;
  int n = std::atoi(env);
  return n >= 1 ? n : 1;
}

void echo(const std::string& key, const std::string& value) {
  std::printf("%-18s %s\n", key.c_str(), value.c_str());
}
void echo(const std::string& key, double v) { echo(key, std::to_string(v)); }
void echo(const std::string& key, std::uint64_t v) { echo(key, std::to_string(v)); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw tnig::IoError("cannot open for write: " + path);
  f << text;
  if (!f) throw tnig::IoError("write failed: " + path);
}

tnig::MixtureMode parse_mode(const std::string& s) {
  if (s == "symmetric") return tnig::MixtureMode::symmetric;
  if (s == "verbatim") return tnig::MixtureMode::verbatim;
  throw tnig::ConfigError("unknown mixture mode: " + s);
}

int cmd_synth(const tnig::SynthConfig& cfg, const std::string& out) {
  echo("command", "synth");
  echo("subjects", static_cast<std::uint64_t>(cfg.subjects));
  echo("size", std::to_string(cfg.height) + "x" + std::to_string(cfg.width));
  echo("scans", std::to_string(cfg.scans_min) + ".." + std::to_string(cfg.scans_max));
  echo("interval_years", std::to_string(cfg.interval_min) + ".." + std::to_string(cfg.interval_max));
  echo("atrophy_cn", cfg.atrophy_cn);
  echo("atrophy_mci", cfg.atrophy_mci);
  echo("atrophy_ad", cfg.atrophy_ad);
  echo("texture_drift", cfg.texture_drift);
  echo("noise_sigma", cfg.noise_sigma);
  echo("seed", cfg.seed);
  echo("out", out);
  tnig::write_dataset(tnig::synth_dataset(cfg), out);
  std::printf("wrote %zu subjects to %s\n", cfg.subjects, out.c_str());
  return kExitOk;
}

int cmd_train(const tnig::TrainConfig& cfg, const std::string& data, const std::string& out,
              const std::string& history_path) {
  echo("command", "train");
  echo("data", data);
  echo("epochs", static_cast<std::uint64_t>(cfg.epochs));
  echo("lr", cfg.lr);
  echo("weight_decay", cfg.weight_decay);
  echo("batch", static_cast<std::uint64_t>(cfg.batch));
  echo("folds", static_cast<std::uint64_t>(cfg.folds));
  echo("fold_index", static_cast<std::uint64_t>(cfg.fold_index));
  echo("tau", cfg.loss.tau);
  echo("rec_kind", cfg.loss.rec_kind == tnig::RecKind::mae ? "mae" : "mse");
  echo("rec_weight", cfg.loss.rec_weight);
  echo("window", static_cast<std::uint64_t>(cfg.window_n));
  echo("channels", static_cast<std::uint64_t>(cfg.channels));
  echo("chat", static_cast<std::uint64_t>(cfg.chat));
  echo("decoder_channels", static_cast<std::uint64_t>(cfg.decoder_channels));
  echo("seed", cfg.seed);
  echo("out", out);

  auto dataset = tnig::read_dataset(data);
  auto [model, history] = tnig::train(dataset, cfg);
  tnig::model_save(model, out);
  write_text(history_path, history.to_jsonl());
  const auto& last = history.epochs.back();
  std::printf("final epoch: train_total %.6f val_total %.6f\n", last.train_total,
              last.val_total);
  std::printf("wrote model %s and history %s\n", out.c_str(), history_path.c_str());
  return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& i0_path,
                const std::string& i1_path, double t0, double t1, double t,
                const std::string& prefix, bool pgm) {
  echo("command", "predict");
  echo("model", model_path);
  echo("t0", t0);
  echo("t1", t1);
  echo("t", t);
  echo("out_prefix", prefix);

  tnig::ModelParams model = tnig::model_load(model_path);
  tnig::ImageTensor i0(tnig::read_tensor_file(i0_path), t0);
  tnig::ImageTensor i1(tnig::read_tensor_file(i1_path), t1);
  tnig::TimeSpec ts(t0, t1, t);
  tnig::Prediction pred = tnig::tnig_forward(i0, i1, ts, model);

  tnig::write_tensor_file(pred.image.data(), prefix + "_pred.tnig");
  tnig::write_tensor_file(pred.d_map, prefix + "_d.tnig");
  tnig::write_tensor_file(pred.al_map, prefix + "_al.tnig");
  tnig::write_tensor_file(pred.ep_map, prefix + "_ep.tnig");
  if (pgm) {
    tnig::write_pgm(pred.image.data(), prefix + "_pred.pgm");
    tnig::write_pgm(pred.d_map, prefix + "_d.pgm");
    tnig::write_pgm(pred.al_map, prefix + "_al.pgm");
    tnig::write_pgm(pred.ep_map, prefix + "_ep.pgm");
  }
  std::printf("wrote %s_{pred,d,al,ep}.tnig%s\n", prefix.c_str(), pgm ? " and .pgm previews" : "");
  return kExitOk;
}

int cmd_eval(const std::string& model_path, const std::string& data, double missing,
             std::uint64_t seed, const std::string& out, const std::string& csv) {
  echo("command", "eval");
  echo("model", model_path);
  echo("data", data);
  echo("missing", missing);
  echo("seed", seed);

  tnig::ModelParams model = tnig::model_load(model_path);
  auto dataset = tnig::read_dataset(data);
  if (missing > 0.0) dataset = tnig::apply_missing(dataset, missing, seed);
  tnig::EvalReport report = tnig::evaluate(model, dataset);
  report.missing_ratio = missing;
  std::printf("%s", report.to_csv().c_str());
  if (!out.empty()) write_text(out, report.to_json());
  if (!csv.empty()) write_text(csv, report.to_csv());
  return kExitOk;
}

int cmd_fitdist(const std::string& data, const std::string& deltas_path,
                std::vector<std::string> family_names, const std::string& out) {
  echo("command", "fitdist");
  std::vector<double> deltas;
  if (!deltas_path.empty()) {
    echo("deltas", deltas_path);
    tnig::Tensor t = tnig::read_tensor_file(deltas_path);
    deltas.assign(t.data(), t.data() + t.size());
  } else {
    echo("data", data);
    for (const tnig::SubjectSequence& seq : tnig::read_dataset(data))
      for (std::size_t k = 1; k < seq.scans.size(); ++k) {
        const tnig::Tensor& a = seq.scans[k - 1].data();
        const tnig::Tensor& b = seq.scans[k].data();
        for (std::size_t p = 0; p < a.size(); ++p) deltas.push_back(b[p] - a[p]);
      }
  }
  std::printf("pooled %zu deltas\n", deltas.size());

  if (family_names.empty()) family_names = {"tnig", "student_t", "laplace", "exponential"};
  std::vector<tnig::FitFamily> families;
  for (const std::string& name : family_names) {
    if (name == "tnig") families.push_back(tnig::FitFamily::tnig);
    else if (name == "student_t") families.push_back(tnig::FitFamily::student_t);
    else if (name == "laplace") families.push_back(tnig::FitFamily::laplace);
    else if (name == "exponential") families.push_back(tnig::FitFamily::exponential);
    else throw tnig::ConfigError("unknown family: " + name);
  }

  auto reports = tnig::fit_compare(deltas, families);
  std::printf("%-14s %14s %12s %12s\n", "family", "log_likelihood", "mean_err", "var_err");
  for (const tnig::FitReport& r : reports)
    std::printf("%-14s %14.4f %12.6f %12.6f\n", tnig::fit_family_name(r.family).c_str(),
                r.log_likelihood, r.mean_err, r.var_err);
  if (!out.empty()) write_text(out, tnig::fit_reports_to_json(reports));
  return kExitOk;
}

int cmd_gradcheck(double eps, double tol, std::uint64_t seed) {
  echo("command", "gradcheck");
  echo("eps", eps);
  echo("tol", tol);
  echo("seed", seed);
  bool all = true;
  for (const tnig::GradCheckResult& r : tnig::gradcheck_all(eps, tol, seed)) {
    std::printf("%-22s max_rel_err %.3e %s\n", r.name.c_str(), r.max_rel_err,
                r.pass ? "PASS" : "FAIL");
    all = all && r.pass;
  }
  if (!all) throw tnig::NumericalError("gradient check failed");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal image prediction with evidential uncertainty"};
  app.require_subcommand(1);
  int threads = threads_from_env();
  (void)threads;  // all current kernels are sequential; the cap is honored trivially

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a phantom longitudinal dataset");
  tnig::SynthConfig sc;
  std::vector<std::size_t> size{32, 32};
  std::string synth_out;
  synth->add_option("--subjects", sc.subjects, "Number of subjects");
  synth->add_option("--size", size, "Image size: H W")->expected(2);
  synth->add_option("--scans-min", sc.scans_min, "Minimum scans per subject");
  synth->add_option("--scans-max", sc.scans_max, "Maximum scans per subject");
  synth->add_option("--interval-min", sc.interval_min, "Minimum scan interval (years)");
  synth->add_option("--interval-max", sc.interval_max, "Maximum scan interval (years)");
  synth->add_option("--atrophy-cn", sc.atrophy_cn, "CN ventricle growth per year");
  synth->add_option("--atrophy-mci", sc.atrophy_mci, "MCI ventricle growth per year");
  synth->add_option("--atrophy-ad", sc.atrophy_ad, "AD ventricle growth per year");
  synth->add_option("--drift", sc.texture_drift, "Texture drift per year");
  synth->add_option("--noise", sc.noise_sigma, "Additive noise sigma");
  synth->add_option("--seed", sc.seed, "RNG seed");
  synth->add_option("--out", synth_out, "Output dataset directory")->required();

  // train
  auto* train = app.add_subcommand("train", "Train a model on a dataset");
  tnig::TrainConfig tc;
  std::string train_data, train_out, train_history, rec_kind = "mae", mode = "symmetric";
  train->add_option("--data", train_data, "Dataset directory")->required();
  train->add_option("--out", train_out, "Output model file")->required();
  train->add_option("--history", train_history, "History JSONL path (default <out>.history.jsonl)");
  train->add_option("--epochs", tc.epochs, "Training epochs");
  train->add_option("--lr", tc.lr, "Adam learning rate");
  train->add_option("--weight-decay", tc.weight_decay, "Decoupled weight decay");
  train->add_option("--batch", tc.batch, "Batch size");
  train->add_option("--tau", tc.loss.tau, "Evidence regularization strength");
  train->add_option("--rec", rec_kind, "Reconstruction loss: mae|mse");
  train->add_option("--rec-weight", tc.loss.rec_weight, "Reconstruction loss weight");
  train->add_option("--window", tc.window_n, "Attention window side (odd, >= 3)");
  train->add_option("--channels", tc.channels, "Texture feature channels");
  train->add_option("--chat", tc.chat, "Projected attention channels");
  train->add_option("--decoder-channels", tc.decoder_channels, "Decoder hidden channels");
  train->add_option("--folds", tc.folds, "Cross-validation folds");
  train->add_option("--fold-index", tc.fold_index, "Fold used for validation");
  train->add_option("--mode", mode, "Mixture mode: symmetric|verbatim");
  train->add_option("--seed", tc.seed, "RNG seed");

  // predict
  auto* predict = app.add_subcommand("predict", "Predict an image at time t");
  std::string p_model, p_i0, p_i1, p_prefix;
  double p_t0 = 0, p_t1 = 0, p_t = 0;
  bool p_pgm = false;
  predict->add_option("--model", p_model, "Model file")->required();
  predict->add_option("--i0", p_i0, "First anchor scan (tensor file)")->required();
  predict->add_option("--i1", p_i1, "Second anchor scan (tensor file)")->required();
  predict->add_option("--t0", p_t0, "Age at first anchor (years)")->required();
  predict->add_option("--t1", p_t1, "Age at second anchor (years)")->required();
  predict->add_option("--t", p_t, "Target age (years)")->required();
  predict->add_option("--out", p_prefix, "Output path prefix")->required();
  predict->add_flag("--pgm", p_pgm, "Also write 8-bit PGM previews");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a model on a dataset");
  std::string e_model, e_data, e_out, e_csv;
  double e_missing = 0.0;
  std::uint64_t e_seed = 0;
  eval->add_option("--model", e_model, "Model file")->required();
  eval->add_option("--data", e_data, "Dataset directory")->required();
  eval->add_option("--missing", e_missing, "Missing ratio: 0, 0.2, 0.4 or 0.6")
      ->check(CLI::IsMember(std::vector<double>{0.0, 0.2, 0.4, 0.6}));
  eval->add_option("--seed", e_seed, "RNG seed for scan removal");
  eval->add_option("--out", e_out, "Report JSON path");
  eval->add_option("--csv", e_csv, "Report CSV path");

  // fitdist
  auto* fitdist = app.add_subcommand("fitdist", "Fit distribution families to feature deltas");
  std::string f_data, f_deltas, f_out;
  std::vector<std::string> f_families;
  fitdist->add_option("--data", f_data, "Dataset directory (pool consecutive-scan deltas)");
  fitdist->add_option("--deltas", f_deltas, "Raw delta tensor file");
  fitdist->add_option("--families", f_families,
                      "Families: tnig student_t laplace exponential (default all)");
  fitdist->add_option("--out", f_out, "Report JSON path");

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
  double g_eps = 1e-4, g_tol = 1e-3;
  std::uint64_t g_seed = 0;
  gradcheck->add_option("--eps", g_eps, "Finite-difference step");
  gradcheck->add_option("--tol", g_tol, "Maximum relative error");
  gradcheck->add_option("--seed", g_seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth) {
      sc.height = size[0];
      sc.width = size[1];
      return cmd_synth(sc, synth_out);
    }
    if (*train) {
      if (rec_kind == "mae") tc.loss.rec_kind = tnig::RecKind::mae;
      else if (rec_kind == "mse") tc.loss.rec_kind = tnig::RecKind::mse;
      else throw tnig::ConfigError("unknown rec kind: " + rec_kind);
      tc.mode = parse_mode(mode);
      if (train_history.empty()) train_history = train_out + ".history.jsonl";
      return cmd_train(tc, train_data, train_out, train_history);
    }
    if (*predict) return cmd_predict(p_model, p_i0, p_i1, p_t0, p_t1, p_t, p_prefix, p_pgm);
    if (*eval) return cmd_eval(e_model, e_data, e_missing, e_seed, e_out, e_csv);
    if (*fitdist) {
      if (f_data.empty() == f_deltas.empty())
        throw tnig::ConfigError("fitdist needs exactly one of --data or --deltas");
      return cmd_fitdist(f_data, f_deltas, f_families, f_out);
    }
    if (*gradcheck) return cmd_gradcheck(g_eps, g_tol, g_seed);
    std::fprintf(stderr, "no subcommand selected\n");
    return kExitUsage;
  } catch (const tnig::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const tnig::DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const tnig::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  } catch (const tnig::DegenerateData& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
}
