// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "respira/audio.hpp"
#include "respira/error.hpp"

namespace respira {
namespace {

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string Trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

std::string ToString(Task task) {
  switch (task) {
    case Task::kBreath: return "breath";
    case Task::kCough: return "cough";
    case Task::kSpeech: return "speech";
  }
  return "breath";
}

Task ParseTask(const std::string& text) {
  if (text == "breath") return Task::kBreath;
  if (text == "cough") return Task::kCough;
  if (text == "speech") return Task::kSpeech;
  throw Error(ErrorCode::kInvalidManifest, "unknown task '" + text + "'");
}

std::size_t DatasetManifest::CountLabel(Label label) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [&](const ManifestEntry& e) { return e.label == label; }));
}

DatasetManifest DatasetManifest::FilterTask(Task task) const {
  DatasetManifest out;
  for (const auto& e : entries) {
    if (e.task == task) out.entries.push_back(e);
  }
  return out;
}

DatasetManifest DatasetManifest::Subset(const std::vector<std::size_t>& indices) const {
  DatasetManifest out;
  out.entries.reserve(indices.size());
  for (std::size_t i : indices) out.entries.push_back(entries.at(i));
  return out;
}

DatasetManifest LoadManifest(const std::filesystem::path& path, bool check_paths) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open manifest " + path.string());
  const std::filesystem::path base = path.parent_path();
  std::string line;
  if (!std::getline(in, line) || Trim(line) != "id,path,label,task") {
    throw Error(ErrorCode::kInvalidManifest, path.string() + ": header must be 'id,path,label,task'");
  }
  DatasetManifest manifest;
  std::set<std::string> seen;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const std::vector<std::string> f = SplitCsvLine(Trim(line));
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != 4) throw Error(ErrorCode::kInvalidManifest, where + ": expected 4 fields");
    ManifestEntry e;
    e.id = Trim(f[0]);
    if (e.id.empty()) throw Error(ErrorCode::kInvalidManifest, where + ": empty id");
    if (!seen.insert(e.id).second) throw Error(ErrorCode::kInvalidManifest, where + ": duplicate id " + e.id);
    std::filesystem::path p = Trim(f[1]);
    e.path = p.is_absolute() ? p : base / p;
    const std::string label = Trim(f[2]);
    if (label == "p") {
      e.label = Label::kPositive;
    } else if (label == "n") {
      e.label = Label::kNegative;
    } else {
      throw Error(ErrorCode::kInvalidManifest, where + ": label must be p or n");
    }
    try {
      e.task = ParseTask(Trim(f[3]));
    } catch (const Error& err) {
      throw Error(ErrorCode::kInvalidManifest, where + ": " + err.what());
    }
    if (check_paths && !std::filesystem::exists(e.path)) {
      throw Error(ErrorCode::kIoError, where + ": missing file " + e.path.string());
    }
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

void SaveManifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write manifest " + path.string());
  const std::filesystem::path base = path.parent_path();
  out << "id,path,label,task\n";
  for (const auto& e : manifest.entries) {
    std::filesystem::path p = e.path;
    if (!base.empty() && p.is_absolute() == std::filesystem::path(base).is_absolute()) {
      const auto rel = p.lexically_relative(base);
      if (!rel.empty() && rel.native().rfind("..", 0) != 0) p = rel;
    }
    out << e.id << ',' << p.generic_string() << ',' << (e.label == Label::kPositive ? 'p' : 'n') << ','
        << ToString(e.task) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

}  // namespace respira
