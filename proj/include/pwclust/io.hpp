#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pwclust/processes.hpp"
#include "pwclust/time_series.hpp"
#include "pwclust/version.hpp"

namespace pwclust {

using json = nlohmann::json;

/// Shortest decimal representation that round-trips; keeps emitted tables and
/// reports byte-stable across runs.
inline std::string format_double(double x) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// Sample files: one JSON record per line, fields "id" and "values".
// ---------------------------------------------------------------------------

inline std::vector<TimeSeries> read_sample_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<TimeSeries> samples;
  std::map<std::string, bool> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": " + e.what());
    }
    if (!record.contains("id") || !record.contains("values") ||
        !record["values"].is_array())
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": record needs \"id\" and \"values\" fields");
    std::string id = record["id"].get<std::string>();
    if (seen[id])
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": duplicate sample id '" + id + "'");
    seen[id] = true;
    std::vector<double> values;
    values.reserve(record["values"].size());
    for (const auto& v : record["values"]) {
      if (!v.is_number())
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                 ": non-numeric value");
      double x = v.get<double>();
      if (!std::isfinite(x))
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                 ": non-finite value");
      values.push_back(x);
    }
    if (values.empty())
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": empty values array");
    samples.emplace_back(std::move(id), std::move(values));
  }
  if (samples.empty())
    throw std::runtime_error(path.string() + ": no samples");
  return samples;
}

/// Atomic file write: stage to a sibling temp file, then rename over.
inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_sample_file(const std::filesystem::path& path,
                              const std::vector<TimeSeries>& samples) {
  std::string out;
  for (const TimeSeries& s : samples) {
    json record;
    record["id"] = s.id;
    record["values"] = s.values;
    out += record.dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

// ---------------------------------------------------------------------------
// Normalization: one global affine map into [0,1) shared by all samples of a
// file, so equal distributions stay equal after rescaling.
// ---------------------------------------------------------------------------

struct NormalizationRecord {
  double min = 0.0;
  double max = 0.0;
  bool constant = false;
  static constexpr double kEpsilon = 0x1.0p-32;

  double apply(double x) const {
    if (constant) return 0.5;
    return (x - min) / ((max - min) * (1.0 + kEpsilon));
  }

  json to_json() const {
    return json{{"min", min}, {"max", max}, {"epsilon", kEpsilon},
                {"constant", constant}};
  }
};

inline NormalizationRecord normalize_in_place(
    std::vector<TimeSeries>& samples) {
  NormalizationRecord record;
  record.min = std::numeric_limits<double>::infinity();
  record.max = -std::numeric_limits<double>::infinity();
  for (const TimeSeries& s : samples)
    for (double v : s.values) {
      record.min = std::min(record.min, v);
      record.max = std::max(record.max, v);
    }
  record.constant = record.min == record.max;
  for (TimeSeries& s : samples)
    for (double& v : s.values) v = record.apply(v);
  return record;
}

/// Reads a sample file and rescales every value into [0,1).
inline std::pair<std::vector<TimeSeries>, NormalizationRecord> ingest(
    const std::filesystem::path& path) {
  std::vector<TimeSeries> samples = read_sample_file(path);
  NormalizationRecord record = normalize_in_place(samples);
  return {std::move(samples), record};
}

// ---------------------------------------------------------------------------
// Generator spec files.
// ---------------------------------------------------------------------------

struct SampleSpec {
  std::string id;
  std::string class_name;
  PiecewiseSpec piecewise;
};

struct GeneratorSpec {
  std::vector<SampleSpec> samples;
  bool shared_seed = false;  // reuse one noise stream across samples

  double alpha() const {
    double a = 1.0;
    for (const SampleSpec& s : samples) a = std::min(a, s.piecewise.alpha());
    return a;
  }
};

inline ProcessSpec parse_process_spec(const json& j) {
  if (!j.contains("kind"))
    throw std::runtime_error("process spec: missing \"kind\"");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "iid_finite")
    return ProcessSpec::iid(j.at("support").get<std::vector<double>>(),
                            j.at("probs").get<std::vector<double>>());
  if (kind == "markov_finite")
    return ProcessSpec::markov(
        j.at("values").get<std::vector<double>>(),
        j.at("transition").get<std::vector<std::vector<double>>>());
  if (kind == "rotation")
    return ProcessSpec::rotation(j.at("angle").get<double>());
  throw std::runtime_error("process spec: unknown kind '" + kind + "'");
}

inline json process_spec_to_json(const ProcessSpec& spec) {
  switch (spec.kind) {
    case ProcessKind::iid_finite:
      return json{{"kind", "iid_finite"},
                  {"support", spec.support},
                  {"probs", spec.probs}};
    case ProcessKind::markov_finite:
      return json{{"kind", "markov_finite"},
                  {"values", spec.state_values},
                  {"transition", spec.transition}};
    case ProcessKind::rotation:
      return json{{"kind", "rotation"}, {"angle", spec.angle}};
  }
  throw std::logic_error("unknown process kind");
}

inline GeneratorSpec parse_generator_spec(const json& j) {
  if (!j.contains("samples") || !j["samples"].is_array() ||
      j["samples"].empty())
    throw std::runtime_error("generator spec: needs a \"samples\" array");
  GeneratorSpec spec;
  if (j.contains("seed_mode")) {
    const std::string mode = j["seed_mode"].get<std::string>();
    if (mode == "shared")
      spec.shared_seed = true;
    else if (mode != "independent")
      throw std::runtime_error("generator spec: seed_mode must be "
                               "\"independent\" or \"shared\"");
  }
  std::map<std::string, bool> seen;
  for (const auto& s : j["samples"]) {
    SampleSpec sample{
        s.at("id").get<std::string>(), s.at("class").get<std::string>(),
        PiecewiseSpec(s.at("thetas").get<std::vector<double>>(), [&] {
          std::vector<ProcessSpec> segs;
          for (const auto& seg : s.at("segments"))
            segs.push_back(parse_process_spec(seg));
          return segs;
        }())};
    if (seen[sample.id])
      throw std::runtime_error("generator spec: duplicate id '" + sample.id +
                               "'");
    seen[sample.id] = true;
    spec.samples.push_back(std::move(sample));
  }
  return spec;
}

inline GeneratorSpec load_generator_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return parse_generator_spec(j);
}

// ---------------------------------------------------------------------------
// Ground truth sidecar.
// ---------------------------------------------------------------------------

struct TruthEntry {
  std::string id;
  std::string class_name;
  std::size_t length = 0;
  std::vector<std::size_t> change_points;
};

struct TruthFile {
  double alpha = 0.0;
  std::vector<TruthEntry> samples;
};

inline json truth_to_json(const TruthFile& truth) {
  json j;
  j["alpha"] = truth.alpha;
  j["samples"] = json::array();
  for (const TruthEntry& e : truth.samples)
    j["samples"].push_back(json{{"id", e.id},
                                {"class", e.class_name},
                                {"length", e.length},
                                {"change_points", e.change_points}});
  return j;
}

inline TruthFile load_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  TruthFile truth;
  truth.alpha = j.value("alpha", 0.0);
  for (const auto& s : j.at("samples"))
    truth.samples.push_back(TruthEntry{
        s.at("id").get<std::string>(), s.at("class").get<std::string>(),
        s.value("length", std::size_t{0}),
        s.value("change_points", std::vector<std::size_t>{})});
  return truth;
}

// ---------------------------------------------------------------------------
// Reports: a deterministic "body" plus an unhashed "run" section holding
// timings and paths. Rerunning with identical inputs reproduces the body
// byte-for-byte.
// ---------------------------------------------------------------------------

inline json report_body(const std::string& command, json params) {
  json body;
  body["tool_version"] = kVersion;
  body["command"] = command;
  body["params"] = std::move(params);
  return body;
}

inline void write_report(const std::filesystem::path& path, json body,
                         json run_section) {
  json report;
  report["body"] = std::move(body);
  report["run"] = std::move(run_section);
  write_file_atomic(path, report.dump(2) + "\n");
}

inline json load_report_body(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  if (!j.contains("body"))
    throw std::runtime_error(path.string() + ": not a report file");
  return j["body"];
}

}  // namespace pwclust
