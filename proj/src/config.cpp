// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#include "respira/config.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>

namespace respira {
namespace {

std::string FormatDouble(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);  // shortest round-trip form
  *res.ptr = '\0';
  std::string s = buf;
  // Keep floats recognizable as floats.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

struct Field {
  const char* section;
  const char* key;
  std::function<std::string()> get;
  std::function<void(const YAML::Node&)> set;
  std::optional<std::string> paper;  // value stated in the publication, if any
};

template <typename T>
T As(const YAML::Node& n, const std::string& where) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw Error(ErrorCode::kInvalidConfig, "bad value for " + where);
  }
}

Field Dbl(const char* s, const char* k, double& v, std::optional<std::string> paper = std::nullopt) {
  const std::string where = std::string(s) + "." + k;
  return {s, k, [&v] { return FormatDouble(v); }, [&v, where](const YAML::Node& n) { v = As<double>(n, where); },
          std::move(paper)};
}

Field Int(const char* s, const char* k, int& v, std::optional<std::string> paper = std::nullopt) {
  const std::string where = std::string(s) + "." + k;
  return {s, k, [&v] { return std::to_string(v); }, [&v, where](const YAML::Node& n) { v = As<int>(n, where); },
          std::move(paper)};
}

Field Bool(const char* s, const char* k, bool& v, std::optional<std::string> paper = std::nullopt) {
  const std::string where = std::string(s) + "." + k;
  return {s, k, [&v] { return std::string(v ? "true" : "false"); },
          [&v, where](const YAML::Node& n) { v = As<bool>(n, where); }, std::move(paper)};
}

std::string JoinInts(const std::vector<int>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + std::to_string(v[i]);
  return out + "]";
}

// ssl.preset is handled separately because it resets the other ssl values.
std::vector<Field> Fields(PipelineConfig& c) {
  std::vector<Field> f;
  f.push_back({"", "seed", [&c] { return std::to_string(c.seed); },
               [&c](const YAML::Node& n) { c.seed = As<std::uint64_t>(n, "seed"); }, std::nullopt});

  f.push_back({"audio", "sample_rate", [] { return std::to_string(kTargetSampleRate); },
               [](const YAML::Node& n) {
                 if (As<int>(n, "audio.sample_rate") != kTargetSampleRate) {
                   throw Error(ErrorCode::kInvalidConfig, "audio.sample_rate must be 16000");
                 }
               },
               "16000"});
  f.push_back(Dbl("audio", "sad_frame_ms", c.sad.frame_ms));
  f.push_back(Dbl("audio", "sad_hop_ms", c.sad.hop_ms));
  f.push_back(Dbl("audio", "sad_threshold_db", c.sad.threshold_db));
  f.push_back(Dbl("audio", "sad_min_voiced_ms", c.sad.min_voiced_ms));

  f.push_back(Dbl("features", "window_ms", c.frame.window_ms, "25.0"));
  f.push_back(Dbl("features", "hop_ms", c.frame.hop_ms, "10.0"));
  f.push_back(Int("features", "n_fft", c.frame.n_fft));
  f.push_back(Int("features", "n_mels", c.frame.n_mels));
  f.push_back(Int("features", "n_mfcc", c.frame.n_mfcc, "40"));
  f.push_back(Int("features", "delta_window", c.frame.delta_window));
  f.push_back(Dbl("features", "log_floor", c.frame.log_floor));
  f.push_back(Bool("features", "include_delta", c.frame.include_delta));

  f.push_back(Int("spec_augment", "time_mask_len", c.mask.time_mask_len, "20"));
  f.push_back(Int("spec_augment", "freq_mask_len", c.mask.freq_mask_len, "50"));
  f.push_back(Int("spec_augment", "n_time_masks", c.mask.n_time_masks));
  f.push_back(Int("spec_augment", "n_freq_masks", c.mask.n_freq_masks));
  f.push_back(Dbl("spec_augment", "fill", c.mask.fill));

  f.push_back(Int("model", "layers", c.model.layers, "2"));
  f.push_back(Int("model", "hidden", c.model.hidden, "128"));
  f.push_back(Int("model", "ffn_dim", c.model.ffn_dim, "256"));
  f.push_back(Dbl("model", "dropout", c.model.dropout, "0.1"));
  f.push_back({"model", "pooling", [&c] { return std::string(ToString(c.model.pooling)); },
               [&c](const YAML::Node& n) { c.model.pooling = ParsePooling(As<std::string>(n, "model.pooling")); },
               std::nullopt});

  f.push_back(Int("train", "epochs", c.train.epochs, "50"));
  f.push_back(Dbl("train", "lr", c.train.lr));
  f.push_back(Int("train", "batch_size", c.train.batch_size));
  f.push_back(Bool("train", "spec_augment", c.train.spec_augment, "true"));
  f.push_back(Dbl("train", "pos_weight", c.train.pos_weight));
  f.push_back(Bool("train", "standardize", c.train.standardize));
  f.push_back(Bool("train", "distinct_task_seeds", c.distinct_task_seeds));

  const SslArch paper = SslArch::Preset(SslPreset::kPaper);
  f.push_back(Int("ssl", "groups", c.ssl.arch.groups, std::to_string(paper.groups)));
  f.push_back(Int("ssl", "entries", c.ssl.arch.entries, std::to_string(paper.entries)));
  f.push_back(Int("ssl", "entry_dim", c.ssl.arch.entry_dim, std::to_string(paper.entry_dim)));
  f.push_back(Dbl("ssl", "kappa", c.ssl.kappa, "0.1"));
  f.push_back(Dbl("ssl", "tau_start", c.ssl.tau_start, "2.0"));
  f.push_back(Dbl("ssl", "tau_floor", c.ssl.tau_floor, "0.5"));
  f.push_back(Dbl("ssl", "tau_factor", c.ssl.tau_factor, "0.999995"));
  f.push_back(Dbl("ssl", "alpha", c.ssl.alpha, "0.1"));
  f.push_back(Dbl("ssl", "beta", c.ssl.beta, "10.0"));
  f.push_back(Int("ssl", "distractors", c.ssl.distractors, "100"));
  f.push_back(Int("ssl", "epochs", c.ssl.epochs, "200"));
  f.push_back(Int("ssl", "max_steps", c.ssl.max_steps));
  f.push_back(Dbl("ssl", "mask_prob", c.ssl.mask_prob));
  f.push_back(Int("ssl", "mask_span", c.ssl.mask_span));
  f.push_back(Dbl("ssl", "lr", c.ssl.lr));
  f.push_back(Int("ssl", "batch_size", c.ssl.batch_size));
  f.push_back(Int("ssl", "crop_samples", c.ssl.crop_samples));
  f.push_back(Bool("ssl", "hard", c.ssl.hard));

  f.push_back(Int("cv", "k", c.cv_k, "5"));
  f.push_back(Int("cv", "jobs", c.jobs));

  f.push_back(Dbl("ensemble", "mu", c.mu));
  f.push_back(Dbl("fusion", "theta", c.fusion.theta, "0.4"));
  f.push_back(Dbl("fusion", "gamma", c.fusion.gamma, "0.2"));
  f.push_back(Dbl("fusion", "phi", c.fusion.phi, "0.4"));

  f.push_back(Int("synth", "n", c.synth_n));
  f.push_back(Dbl("synth", "cutoff_hz", c.synth_cutoff_hz));
  return f;
}

}  // namespace

PipelineConfig::PipelineConfig() {
  ssl = SslConfig::Preset(ssl_preset);
  Resolve();
}

void PipelineConfig::Resolve() {
  model.input_dim = frame.FeatureDim();
  train.mask = mask;
  train.seed = seed;
  ssl.seed = seed;
}

void PipelineConfig::Validate() const {
  sad.Validate();
  frame.Validate(kTargetSampleRate);
  model.Validate();
  train.Validate();
  ssl.Validate();
  fusion.Validate();
  if (cv_k < 2) throw Error(ErrorCode::kInvalidConfig, "cv.k must be >= 2");
  if (jobs < 1) throw Error(ErrorCode::kInvalidConfig, "cv.jobs must be >= 1");
  if (!(mu >= 0.0 && mu <= 1.0)) throw Error(ErrorCode::kInvalidConfig, "ensemble.mu must be in [0, 1]");
  if (synth_n < 10) throw Error(ErrorCode::kInvalidConfig, "synth.n must be >= 10");
  if (!(synth_cutoff_hz > 0.0 && synth_cutoff_hz < kTargetSampleRate / 2.0)) {
    throw Error(ErrorCode::kInvalidConfig, "synth.cutoff_hz must be in (0, 8000)");
  }
}

std::string PipelineConfig::ToYaml() const {
  PipelineConfig c = *this;
  std::ostringstream out;
  out << "# respira pipeline configuration\n";
  std::string section = "\x01";
  auto line = [&](const std::string& key, const std::string& value, bool flagged) {
    out << (section.empty() ? "" : "  ") << key << ": " << value;
    if (flagged) out << "  # non-paper default";
    out << '\n';
  };
  for (const Field& f : Fields(c)) {
    if (f.section != section) {
      section = f.section;
      if (!section.empty()) out << '\n' << section << ":\n";
      if (section == "fusion") out << "  # weights for breath, cough and speech scores\n";
      if (section == "ssl") {
        line("preset", ToString(c.ssl_preset), c.ssl_preset != SslPreset::kPaper);
        const SslArch paper = SslArch::Preset(SslPreset::kPaper);
        out << "  # encoder: kernels " << JoinInts(c.ssl.arch.kernels) << ", strides " << JoinInts(c.ssl.arch.strides)
            << ", " << c.ssl.arch.channels << " channels, " << c.ssl.arch.blocks << " blocks of dim "
            << c.ssl.arch.dim << (c.ssl.arch.kernels == paper.kernels ? "" : " (set by preset)") << '\n';
      }
    }
    const std::string v = f.get();
    line(f.key, v, !(f.paper && *f.paper == v));
  }
  return out.str();
}

PipelineConfig PipelineConfig::FromYaml(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("config is not valid YAML: ") + e.what());
  }
  PipelineConfig c;
  if (root.IsNull()) return c;
  if (!root.IsMap()) throw Error(ErrorCode::kInvalidConfig, "config must be a mapping");

  if (root["ssl"] && root["ssl"].IsMap() && root["ssl"]["preset"]) {
    c.ssl_preset = ParseSslPreset(As<std::string>(root["ssl"]["preset"], "ssl.preset"));
    c.ssl = SslConfig::Preset(c.ssl_preset);
  }
  std::vector<Field> fields = Fields(c);
  std::set<std::string> known = {"ssl.preset"};
  for (const Field& f : fields) known.insert(std::string(f.section).empty() ? f.key : std::string(f.section) + "." + f.key);
  for (const auto& top : root) {
    const std::string name = top.first.as<std::string>();
    if (top.second.IsMap()) {
      for (const auto& kv : top.second) {
        const std::string full = name + "." + kv.first.as<std::string>();
        if (!known.count(full)) throw Error(ErrorCode::kInvalidConfig, "unknown config key " + full);
      }
    } else if (!known.count(name)) {
      throw Error(ErrorCode::kInvalidConfig, "unknown config key " + name);
    }
  }
  for (const Field& f : fields) {
    const YAML::Node node = std::string(f.section).empty() ? root[f.key] : root[f.section][f.key];
    if (node) f.set(node);
  }
  c.Resolve();
  c.Validate();
  return c;
}

PipelineConfig PipelineConfig::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return FromYaml(ss.str());
}

void PipelineConfig::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write config " + path.string());
  out << ToYaml();
}

}  // namespace respira
