// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#include "respira/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "respira/config.hpp"
#include "respira/crossval.hpp"
#include "respira/synth.hpp"

namespace respira::cli {
namespace {

namespace fs = std::filesystem;

std::string Fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string SafeName(const std::string& id) {
  std::string s = id;
  for (char& c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return s;
}

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void MakeDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string());
}

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool dump_config = false;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* jobs_opt = nullptr;
};

PipelineConfig ResolveConfig(const Globals& g) {
  PipelineConfig cfg;
  std::string path = g.config;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnvVar)) path = env;
  }
  if (!path.empty()) cfg = PipelineConfig::Load(path);
  if (g.seed_opt->count()) cfg.seed = g.seed;
  if (g.jobs_opt->count()) cfg.jobs = g.jobs;
  cfg.Resolve();
  cfg.Validate();
  return cfg;
}

// Feature matrices for a manifest. Entries pointing at feature cache files
// are read as is; audio entries are preprocessed and turned into MFCC +
// delta-delta on the fly.
LabeledFeatures LoadFeatures(const DatasetManifest& manifest, const PipelineConfig& cfg, std::ostream& err) {
  LabeledFeatures out;
  for (const auto& e : manifest.entries) {
    const int y = e.label == Label::kPositive ? 1 : 0;
    if (e.path.extension() == ".feat") {
      out.Add(e.id, ReadFeatureCache(e.path), y);
      continue;
    }
    try {
      out.Add(e.id, MfccDeltaDelta(Preprocess(ReadWav(e.path), cfg.sad), cfg.frame), y);
    } catch (const Error& x) {
      if (x.code() != ErrorCode::kAllSilent && x.code() != ErrorCode::kTooShort) throw;
      err << "warning: skipping " << e.id << ": " << x.what() << '\n';
    }
  }
  if (out.size() == 0) throw Error(ErrorCode::kDegenerateDataset, "no usable entries in manifest");
  return out;
}

DatasetManifest LoadTaskManifest(const std::string& path, const std::string& task) {
  DatasetManifest m = LoadManifest(path);
  return task.empty() ? m : m.FilterTask(ParseTask(task));
}

ModelSignature SignatureFor(const PipelineConfig& cfg, const LabeledFeatures& data) {
  ModelSignature sig = cfg.model;
  sig.input_dim = static_cast<int>(data.feats.front().dims());
  return sig;
}

// Writes `<dir>/<id>.feat` per item and a manifest pointing at them.
void WriteFeatureSet(const fs::path& dir, const DatasetManifest& source,
                     const std::function<std::optional<FeatureMatrix>(const ManifestEntry&)>& make) {
  MakeDir(dir);
  DatasetManifest out;
  for (const auto& e : source.entries) {
    std::optional<FeatureMatrix> f = make(e);
    if (!f) continue;
    ManifestEntry o = e;
    o.path = dir / (SafeName(e.id) + ".feat");
    WriteFeatureCache(o.path, *f);
    out.entries.push_back(std::move(o));
  }
  if (out.size() == 0) throw Error(ErrorCode::kDegenerateDataset, "no usable entries in manifest");
  SaveManifest(dir / "manifest.csv", out);
}

std::optional<AudioClip> PreprocessOrSkip(const ManifestEntry& e, const SadConfig& sad, std::ostream& err) {
  try {
    return Preprocess(ReadWav(e.path), sad);
  } catch (const Error& x) {
    if (x.code() != ErrorCode::kAllSilent && x.code() != ErrorCode::kEmptyAudio) throw;
    err << "warning: skipping " << e.id << ": " << x.what() << '\n';
    return std::nullopt;
  }
}

void Positive(CLI::Option* o) { o->check(CLI::PositiveNumber); }

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Acoustic COVID-19 screening from breath, cough and speech recordings.", "covidscreen"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config,
                 std::string("Pipeline config (YAML); defaults to $") + kConfigEnvVar + " when set");
  g.seed_opt = app.add_option("--seed", g.seed, "Seed for every random choice (overrides the config)");
  g.jobs_opt = app.add_option("--jobs", g.jobs, "Parallel fold/task workers (results do not depend on it)")
                   ->check(CLI::PositiveNumber);
  app.add_flag("--dump-config", g.dump_config, "Print the effective config to stdout before running");

  // preprocess
  std::string pp_manifest, pp_out;
  auto* pp = app.add_subcommand("preprocess", "Resample to 16 kHz, normalize and remove silence");
  pp->add_option("--manifest", pp_manifest, "Input manifest (id,path,label,task)")->required();
  pp->add_option("--out", pp_out, "Output directory for float WAVs and manifest.csv")->required();

  // featurize
  std::string ft_manifest, ft_out, ft_kind = "mfcc";
  auto* ft = app.add_subcommand("featurize", "Preprocess and write per-clip feature caches");
  ft->add_option("--manifest", ft_manifest, "Input manifest")->required();
  ft->add_option("--out", ft_out, "Output directory for .feat files and manifest.csv")->required();
  ft->add_option("--kind", ft_kind, "mfcc (MFCC + delta-delta) or spectrogram")
      ->check(CLI::IsMember({"mfcc", "spectrogram"}))
      ->capture_default_str();

  // train
  std::string tr_data, tr_val, tr_task, tr_init, tr_out, tr_log;
  int tr_epochs = 0;
  auto* tr = app.add_subcommand("train", "Train (or finetune) the BiLSTM classifier");
  tr->add_option("--data", tr_data, "Training manifest (audio or .feat entries)")->required();
  tr->add_option("--val", tr_val, "Validation manifest");
  tr->add_option("--task", tr_task, "Keep only breath, cough or speech entries");
  tr->add_option("--init", tr_init, "Initialize from this checkpoint (e.g. an averaged model)");
  tr->add_option("--out", tr_out, "Output checkpoint")->required();
  tr->add_option("--log", tr_log, "Per-epoch CSV log");
  Positive(tr->add_option("--epochs", tr_epochs, "Override train.epochs"));

  // pretrain-avg
  std::string pa_data, pa_out, pa_task_dir;
  int pa_epochs = 0;
  bool pa_distinct = false;
  auto* pa = app.add_subcommand("pretrain-avg", "Train one model per task and average their parameters");
  pa->add_option("--data", pa_data, "Manifest holding all three tasks")->required();
  pa->add_option("--out", pa_out, "Averaged checkpoint")->required();
  pa->add_option("--task-dir", pa_task_dir, "Also write per-task checkpoints and logs here");
  Positive(pa->add_option("--epochs", pa_epochs, "Override train.epochs"));
  pa->add_flag("--distinct-seeds", pa_distinct, "Use a different training seed per task");

  // pretrain-ssl
  std::string ps_manifest, ps_out, ps_log, ps_init, ps_preset;
  int ps_steps = 0, ps_epochs = 0;
  auto* ps = app.add_subcommand("pretrain-ssl", "Self-supervised pre-training on raw waveforms");
  ps->add_option("--manifest", ps_manifest, "Audio manifest (labels are ignored)")->required();
  ps->add_option("--out", ps_out, "Output SSL checkpoint")->required();
  ps->add_option("--log", ps_log, "Per-step CSV log");
  ps->add_option("--init", ps_init, "Continue from this SSL checkpoint");
  ps->add_option("--preset", ps_preset, "mini or paper; resets the ssl section to that preset")
      ->check(CLI::IsMember({"mini", "paper"}));
  Positive(ps->add_option("--steps", ps_steps, "Stop after this many optimization steps"));
  Positive(ps->add_option("--epochs", ps_epochs, "Override ssl.epochs"));

  // extract-ssl
  std::string xs_model, xs_manifest, xs_out;
  int xs_chunk = 160000;
  auto* xs = app.add_subcommand("extract-ssl", "Encode clips with a frozen SSL model into feature caches");
  xs->add_option("--model", xs_model, "SSL checkpoint")->required();
  xs->add_option("--manifest", xs_manifest, "Audio manifest")->required();
  xs->add_option("--out", xs_out, "Output directory for .feat files and manifest.csv")->required();
  Positive(xs->add_option("--chunk-samples", xs_chunk, "Encode long clips in chunks of this many samples")
               ->capture_default_str());

  // predict
  std::string pr_model, pr_data, pr_task, pr_out;
  auto* pr = app.add_subcommand("predict", "Score a manifest with a classifier checkpoint");
  pr->add_option("--model", pr_model, "Classifier checkpoint")->required();
  pr->add_option("--data", pr_data, "Manifest to score")->required();
  pr->add_option("--task", pr_task, "Keep only breath, cough or speech entries");
  pr->add_option("--out", pr_out, "Score file (id score)")->required();

  // ensemble
  std::string en_sup, en_ssl, en_out, en_labels;
  double en_mu = 0.0;
  bool en_search = false;
  auto* en = app.add_subcommand("ensemble", "Blend supervised and SSL scores: mu*sup + (1-mu)*ssl");
  en->add_option("--sup", en_sup, "Supervised-branch scores")->required();
  en->add_option("--ssl", en_ssl, "SSL-branch scores")->required();
  auto* en_mu_opt = en->add_option("--mu", en_mu, "Blend weight in [0, 1] (default: ensemble.mu)");
  en->add_option("--out", en_out, "Output score file")->required();
  en->add_option("--labels", en_labels, "Manifest with labels; prints the blended AUC");
  en->add_flag("--search-mu", en_search, "Pick mu on the grid 0, 0.1, ..., 1 by AUC (needs --labels)");

  // fuse
  std::vector<double> fu_weights;
  std::vector<std::string> fu_in;
  std::string fu_out;
  auto* fu = app.add_subcommand("fuse", "Weighted sum of breath, cough and speech scores");
  auto* fu_w_opt = fu->add_option("--weights", fu_weights, "theta,gamma,phi for breath,cough,speech; sum to 1")
                       ->delimiter(',')
                       ->expected(3);
  fu->add_option("--in", fu_in, "breath,cough,speech score files")->delimiter(',')->expected(3)->required();
  fu->add_option("--out", fu_out, "Output score file")->required();

  // cv
  std::string cv_data, cv_test, cv_task, cv_init, cv_out;
  int cv_k = 0, cv_epochs = 0;
  auto* cv = app.add_subcommand("cv", "Stratified k-fold cross-validation of the classifier");
  cv->add_option("--data", cv_data, "Development manifest")->required();
  cv->add_option("--test", cv_test, "Test manifest scored by every fold model");
  cv->add_option("--task", cv_task, "Keep only breath, cough or speech entries");
  cv->add_option("--init", cv_init, "Initialize every fold from this checkpoint");
  cv->add_option("--out", cv_out, "Output directory")->required();
  cv->add_option("--k", cv_k, "Override cv.k")->check(CLI::Range(2, 1000));
  Positive(cv->add_option("--epochs", cv_epochs, "Override train.epochs"));

  // auc
  std::string au_scores, au_labels;
  auto* au = app.add_subcommand("auc", "Print the ROC AUC of a score file");
  au->add_option("--scores", au_scores, "Score file")->required();
  au->add_option("--labels", au_labels, "Manifest with labels")->required();

  // plot-roc
  std::vector<std::string> pl_scores, pl_names;
  std::string pl_labels, pl_out;
  auto* pl = app.add_subcommand("plot-roc", "Draw ROC curves as SVG");
  pl->add_option("--scores", pl_scores, "One or more score files")->delimiter(',')->required();
  pl->add_option("--names", pl_names, "Legend names (default: file stems)")->delimiter(',');
  pl->add_option("--labels", pl_labels, "Manifest with labels")->required();
  pl->add_option("--out", pl_out, "Output SVG")->required();

  // plot-spec
  std::string sp_wav, sp_out, sp_svg;
  double sp_range = 80.0;
  bool sp_raw = false;
  auto* sp = app.add_subcommand("plot-spec", "Render a power spectrogram as PGM (and optionally SVG)");
  sp->add_option("--wav", sp_wav, "Input WAV")->required();
  sp->add_option("--out", sp_out, "Output PGM")->required();
  sp->add_option("--svg", sp_svg, "Also write an SVG rendering");
  Positive(sp->add_option("--range-db", sp_range, "Dynamic range below the peak")->capture_default_str());
  sp->add_flag("--raw", sp_raw, "Skip preprocessing");

  // synth-data
  int sy_n = 0;
  std::string sy_out;
  auto* sy = app.add_subcommand("synth-data", "Generate a labeled synthetic dataset");
  auto* sy_n_opt = sy->add_option("--n", sy_n, "Number of clips (default: synth.n)")->check(CLI::Range(10, 1000000));
  sy->add_option("--out", sy_out, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    PipelineConfig cfg = ResolveConfig(g);
    if (g.dump_config) out << cfg.ToYaml();

    if (pp->parsed()) {
      const DatasetManifest m = LoadManifest(pp_manifest);
      MakeDir(pp_out);
      DatasetManifest kept;
      for (const auto& e : m.entries) {
        std::optional<AudioClip> clip = PreprocessOrSkip(e, cfg.sad, err);
        if (!clip) continue;
        ManifestEntry o = e;
        o.path = fs::path(pp_out) / (SafeName(e.id) + ".wav");
        WriteWavFloat(o.path, *clip);
        kept.entries.push_back(std::move(o));
      }
      if (kept.size() == 0) throw Error(ErrorCode::kDegenerateDataset, "every clip was rejected");
      SaveManifest(fs::path(pp_out) / "manifest.csv", kept);
      out << "preprocessed " << kept.size() << " of " << m.size() << " clips\n";
    } else if (ft->parsed()) {
      const DatasetManifest m = LoadManifest(ft_manifest);
      const bool spec = ft_kind == "spectrogram";
      WriteFeatureSet(ft_out, m, [&](const ManifestEntry& e) -> std::optional<FeatureMatrix> {
        std::optional<AudioClip> clip = PreprocessOrSkip(e, cfg.sad, err);
        if (!clip) return std::nullopt;
        try {
          return spec ? PowerSpectrogram(*clip, cfg.frame) : MfccDeltaDelta(*clip, cfg.frame);
        } catch (const Error& x) {
          if (x.code() != ErrorCode::kTooShort) throw;
          err << "warning: skipping " << e.id << ": " << x.what() << '\n';
          return std::nullopt;
        }
      });
      out << "wrote " << (fs::path(ft_out) / "manifest.csv").string() << '\n';
    } else if (tr->parsed()) {
      if (tr_epochs > 0) cfg.train.epochs = tr_epochs;
      const LabeledFeatures train = LoadFeatures(LoadTaskManifest(tr_data, tr_task), cfg, err);
      std::optional<LabeledFeatures> val;
      if (!tr_val.empty()) val = LoadFeatures(LoadTaskManifest(tr_val, tr_task), cfg, err);
      TrainResult r;
      if (!tr_init.empty()) {
        r = Finetune(LoadModel(tr_init), train, val ? &*val : nullptr, cfg.train);
      } else {
        r = TrainModel(train, val ? &*val : nullptr, SignatureFor(cfg, train), nullptr, cfg.train);
      }
      SaveModel(tr_out, r.model);
      if (!tr_log.empty()) WriteTrainLog(tr_log, r.log);
      if (!r.log.empty()) {
        out << "final train loss " << Fixed6(r.log.back().train_loss);
        if (val && std::isfinite(r.log.back().val_auc)) out << ", val AUC " << Fixed6(r.log.back().val_auc);
        out << '\n';
      }
    } else if (pa->parsed()) {
      if (pa_epochs > 0) cfg.train.epochs = pa_epochs;
      const DatasetManifest m = LoadManifest(pa_data);
      const std::array<Task, 3> order = {Task::kBreath, Task::kCough, Task::kSpeech};
      std::array<LabeledFeatures, 3> tasks;
      for (std::size_t t = 0; t < 3; ++t) tasks[t] = LoadFeatures(m.FilterTask(order[t]), cfg, err);
      const PretrainResult r = SupervisedPretrain(tasks, SignatureFor(cfg, tasks[0]), cfg.train,
                                                  pa_distinct || cfg.distinct_task_seeds, cfg.jobs);
      SaveModel(pa_out, r.average);
      if (!pa_task_dir.empty()) {
        MakeDir(pa_task_dir);
        for (std::size_t t = 0; t < 3; ++t) {
          const std::string name = ToString(order[t]);
          SaveModel(fs::path(pa_task_dir) / (name + ".ckpt"), r.task_models[t]);
          WriteTrainLog(fs::path(pa_task_dir) / (name + "_log.csv"), r.logs[t]);
        }
      }
      out << "averaged " << r.task_models.size() << " task models into " << pa_out << '\n';
    } else if (ps->parsed()) {
      if (!ps_preset.empty()) {
        cfg.ssl_preset = ParseSslPreset(ps_preset);
        cfg.ssl = SslConfig::Preset(cfg.ssl_preset);
        cfg.Resolve();
      }
      if (ps_epochs > 0) cfg.ssl.epochs = ps_epochs;
      if (ps_steps > 0) cfg.ssl.max_steps = ps_steps;
      const DatasetManifest m = LoadManifest(ps_manifest);
      std::vector<AudioClip> clips;
      for (const auto& e : m.entries) {
        if (std::optional<AudioClip> c = PreprocessOrSkip(e, cfg.sad, err)) clips.push_back(std::move(*c));
      }
      std::optional<SslModel> init;
      if (!ps_init.empty()) init = LoadSslModel(ps_init);
      const SslTrainResult r = SslPretrain(clips, cfg.ssl, init ? &*init : nullptr);
      SaveSslModel(ps_out, r.model);
      if (!ps_log.empty()) WriteSslLog(ps_log, r.log);
      if (r.skipped_clips) err << "warning: " << r.skipped_clips << " clips too short for pre-training\n";
      out << "ran " << r.log.size() << " steps";
      if (!r.log.empty()) out << ", final loss " << Fixed6(r.log.back().loss.total);
      out << '\n';
    } else if (xs->parsed()) {
      const SslModel model = LoadSslModel(xs_model);
      const DatasetManifest m = LoadManifest(xs_manifest);
      WriteFeatureSet(xs_out, m, [&](const ManifestEntry& e) -> std::optional<FeatureMatrix> {
        std::optional<AudioClip> clip = PreprocessOrSkip(e, cfg.sad, err);
        if (!clip) return std::nullopt;
        try {
          return ExtractSslFeatures(model, *clip, xs_chunk);
        } catch (const Error& x) {
          if (x.code() != ErrorCode::kTooShort) throw;
          err << "warning: skipping " << e.id << ": " << x.what() << '\n';
          return std::nullopt;
        }
      });
      out << "wrote " << (fs::path(xs_out) / "manifest.csv").string() << '\n';
    } else if (pr->parsed()) {
      const ModelParams model = LoadModel(pr_model);
      const LabeledFeatures data = LoadFeatures(LoadTaskManifest(pr_data, pr_task), cfg, err);
      WriteScores(pr_out, PredictScores(model, data));
      out << "scored " << data.size() << " recordings\n";
    } else if (en->parsed()) {
      const ScoreSet sup = ReadScores(en_sup);
      const ScoreSet ssl = ReadScores(en_ssl);
      double mu = en_mu_opt->count() ? en_mu : cfg.mu;
      if (en_search && en_labels.empty()) throw Error(ErrorCode::kUsage, "--search-mu needs --labels");
      std::map<std::string, int> labels;
      if (!en_labels.empty()) labels = LabelMap(LoadManifest(en_labels, false));
      if (en_search) {
        const MuSearchResult s = SearchMu(sup, ssl, labels);
        for (const auto& [m, a] : s.grid) out << "mu " << Fixed6(m) << " auc " << Fixed6(a) << '\n';
        mu = s.mu;
      }
      const ScoreSet blended = EnsembleScores(sup, ssl, mu);
      WriteScores(en_out, blended);
      out << "mu " << Fixed6(mu);
      if (!labels.empty()) out << " auc " << Fixed6(RocAuc(blended, labels));
      out << '\n';
    } else if (fu->parsed()) {
      FusionWeights w = cfg.fusion;
      if (fu_w_opt->count()) w = {fu_weights[0], fu_weights[1], fu_weights[2]};
      w.Validate();
      WriteScores(fu_out, FuseScores(ReadScores(fu_in[0]), ReadScores(fu_in[1]), ReadScores(fu_in[2]), w));
      out << "fused " << fu_out << '\n';
    } else if (cv->parsed()) {
      if (cv_epochs > 0) cfg.train.epochs = cv_epochs;
      if (cv_k > 0) cfg.cv_k = cv_k;
      const LabeledFeatures data = LoadFeatures(LoadTaskManifest(cv_data, cv_task), cfg, err);
      std::optional<LabeledFeatures> test;
      if (!cv_test.empty()) test = LoadFeatures(LoadTaskManifest(cv_test, cv_task), cfg, err);
      std::optional<ModelParams> init;
      if (!cv_init.empty()) init = LoadModel(cv_init);
      CvConfig cc;
      cc.k = cfg.cv_k;
      cc.seed = cfg.seed;
      cc.jobs = cfg.jobs;
      cc.signature = init ? init->signature : SignatureFor(cfg, data);
      cc.train = cfg.train;
      CvReport r = CrossValidate(data, test ? &*test : nullptr, cc, init ? &*init : nullptr);
      const fs::path dir = cv_out;
      MakeDir(dir);
      r.fingerprint = Fingerprint(cfg.ToYaml() + Slurp(cv_data) + cv_task);
      WriteScores(dir / "val_scores.txt", r.val_scores);
      r.score_files.push_back("val_scores.txt");
      if (test) {
        WriteScores(dir / "test_scores.txt", r.test_scores);
        r.score_files.push_back("test_scores.txt");
      }
      for (std::size_t f = 0; f < r.models.size(); ++f) {
        SaveModel(dir / ("fold" + std::to_string(f) + ".ckpt"), r.models[f]);
        WriteTrainLog(dir / ("fold" + std::to_string(f) + "_log.csv"), r.folds[f].log);
      }
      WriteCvReport(dir, r);
      out << "pooled validation AUC " << Fixed6(r.pooled_val_auc) << '\n';
      if (test && std::isfinite(r.averaged_test_auc)) out << "test AUC " << Fixed6(r.averaged_test_auc) << '\n';
    } else if (au->parsed()) {
      out << Fixed6(RocAuc(ReadScores(au_scores), LabelMap(LoadManifest(au_labels, false)))) << '\n';
    } else if (pl->parsed()) {
      if (!pl_names.empty() && pl_names.size() != pl_scores.size()) {
        throw Error(ErrorCode::kUsage, "--names needs one name per score file");
      }
      const auto labels = LabelMap(LoadManifest(pl_labels, false));
      std::vector<std::pair<std::string, std::vector<RocPoint>>> curves;
      for (std::size_t i = 0; i < pl_scores.size(); ++i) {
        const ScoreSet s = ReadScores(pl_scores[i]);
        std::vector<int> y;
        for (const auto& id : s.ids) {
          const auto it = labels.find(id);
          if (it == labels.end()) throw Error(ErrorCode::kIdSetMismatch, "no label for id " + id);
          y.push_back(it->second);
        }
        const std::string name = pl_names.empty() ? fs::path(pl_scores[i]).stem().string() : pl_names[i];
        curves.emplace_back(name, RocCurve(s.scores, y));
        out << name << " AUC " << Fixed6(RocAuc(s.scores, y)) << '\n';
      }
      WriteRocSvg(pl_out, curves);
    } else if (sp->parsed()) {
      AudioClip clip = ReadWav(sp_wav);
      clip = sp_raw ? Resample(clip, kTargetSampleRate) : Preprocess(clip, cfg.sad);
      const FeatureMatrix spec = PowerSpectrogram(clip, cfg.frame);
      ExportSpectrogramImage(spec, sp_out, sp_svg, sp_range);
      out << "image " << spec.frames() << "x" << spec.dims() << '\n';
    } else if (sy->parsed()) {
      SynthConfig sc;
      sc.n = sy_n_opt->count() ? sy_n : cfg.synth_n;
      sc.seed = cfg.seed;
      sc.cutoff_hz = cfg.synth_cutoff_hz;
      const DatasetManifest m = SynthesizeDataset(sc, sy_out);
      out << "wrote " << m.size() << " clips (" << m.CountLabel(Label::kPositive) << " positive) to " << sy_out
          << '\n';
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::kUsage:
      case ErrorCode::kInvalidConfig:
      case ErrorCode::kInvalidWeights:
        return kExitUsage;
      default:
        return kExitData;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace respira::cli
