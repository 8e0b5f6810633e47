// SPDX-License-Identifier: Apache-2.0
#pragma once

// JSON form of run records and the append-only JSONL run log.

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "paritylab/config.hpp"
#include "paritylab/error.hpp"
#include "paritylab/trainer.hpp"

namespace paritylab {

using Json = nlohmann::ordered_json;

inline Json to_json(const RunRecord& r, bool include_wall_time = true) {
  Json trace = Json::array();
  for (const auto& e : r.trace) trace.push_back({{"step", e.step}, {"accuracy", e.accuracy}, {"rho", e.rho}});
  Json config = Json::object();
  const auto kv = r.config.to_key_values();
  for (const auto& [k, v] : kv.entries()) config[k] = v;
  Json j = {
      {"type", "run"},
      {"length", r.length()},
      {"seed", r.seed},
      {"rho0", r.config.schedule.rho0},
      {"outcome", std::string(to_string(r.outcome))},
      {"steps_to_success", r.steps_to_success ? Json(*r.steps_to_success) : Json(nullptr)},
      {"steps_executed", r.steps_executed},
      {"training_examples", r.training_examples},
      {"corrupted_labels", r.corrupted_labels},
      {"final_accuracy", r.trace.empty() ? Json(nullptr) : Json(r.trace.back().accuracy)},
      {"config", config},
      {"config_text", r.config_text},
      {"trace", trace},
      {"checkpoint", r.checkpoint},
      {"diagnostic", r.diagnostic},
  };
  if (include_wall_time) j["wall_time_s"] = r.wall_time_s;
  return j;
}

/// One-line summary appended to the run log.
inline Json summary_json(const RunRecord& r) {
  return {
      {"type", "run"},
      {"length", r.length()},
      {"seed", r.seed},
      {"rho0", r.config.schedule.rho0},
      {"kind", std::string(to_string(r.config.sampler.kind))},
      {"outcome", std::string(to_string(r.outcome))},
      {"steps_to_success", r.steps_to_success ? Json(*r.steps_to_success) : Json(nullptr)},
      {"steps_executed", r.steps_executed},
      {"final_accuracy", r.trace.empty() ? Json(nullptr) : Json(r.trace.back().accuracy)},
      {"wall_time_s", r.wall_time_s},
  };
}

/// The fields of a run needed for aggregation, as read back from a log.
struct RunSummary {
  std::size_t length = 0;
  std::uint64_t seed = 0;
  double rho0 = 0;
  Outcome outcome = Outcome::failure;
  std::optional<std::uint64_t> steps_to_success;

  static RunSummary of(const RunRecord& r) {
    return {r.length(), r.seed, r.config.schedule.rho0, r.outcome, r.steps_to_success};
  }

  static RunSummary from_json(const Json& j) {
    RunSummary s;
    s.length = j.at("length").get<std::size_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.rho0 = j.at("rho0").get<double>();
    s.outcome = parse_outcome(j.at("outcome").get<std::string>());
    if (!j.at("steps_to_success").is_null()) s.steps_to_success = j.at("steps_to_success").get<std::uint64_t>();
    return s;
  }
};

inline void append_jsonl(const std::string& path, const Json& line) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw IoError("cannot append to log " + path);
  out << line.dump() << '\n';
  if (!out) throw IoError("failed writing log " + path);
}

/// Every line of a JSONL file, each parsed independently.
inline std::vector<Json> read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read log " + path);
  std::vector<Json> lines;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      lines.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return lines;
}

} // namespace paritylab
