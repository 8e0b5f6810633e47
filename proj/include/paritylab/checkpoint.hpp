// SPDX-License-Identifier: Apache-2.0
#pragma once

// Versioned text checkpoint of LSTM parameters:
//
//   paritylab-lstm 1
//   hidden_size 16
//   encoding scalar
//   master_seed 7
//   count 1169
//   <one value per line, in the declared parameter order>
//
// Values are written in shortest round-trip form, so loading is exact.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "paritylab/config.hpp"
#include "paritylab/error.hpp"
#include "paritylab/lstm.hpp"

namespace paritylab {

inline constexpr int checkpoint_version = 1;

struct Checkpoint {
  LstmParams<double> params;
  std::uint64_t master_seed = 0;
};

inline std::string format_checkpoint(const LstmParams<double>& params, std::uint64_t master_seed) {
  std::string out = "paritylab-lstm " + std::to_string(checkpoint_version) + "\n";
  out += "hidden_size " + std::to_string(params.hidden_size()) + "\n";
  out += "encoding " + std::string(to_string(params.encoding())) + "\n";
  out += "master_seed " + std::to_string(master_seed) + "\n";
  out += "count " + std::to_string(params.size()) + "\n";
  for (double v : params.flat()) out += format_double(v) + "\n";
  return out;
}

inline Checkpoint parse_checkpoint(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  std::string value;
  auto expect = [&](const char* key) {
    if (!(in >> tag >> value) || tag != key) throw IoError(std::string("checkpoint: expected '") + key + "'");
    return value;
  };
  if (expect("paritylab-lstm") != std::to_string(checkpoint_version)) {
    throw IoError("checkpoint: unsupported version " + value);
  }
  const auto hidden = parse_uint(expect("hidden_size"));
  const auto encoding = parse_input_encoding(expect("encoding"));
  const auto seed = parse_uint(expect("master_seed"));
  const auto count = parse_uint(expect("count"));
  Checkpoint ck{LstmParams<double>(hidden, encoding), seed};
  if (count != ck.params.size()) throw IoError("checkpoint: parameter count does not match hidden_size");
  for (auto& v : ck.params.flat()) {
    if (!(in >> value)) throw IoError("checkpoint: truncated parameter list");
    v = parse_double(value);
  }
  if (in >> value) throw IoError("checkpoint: trailing data");
  return ck;
}

inline void save_checkpoint(const std::string& path, const LstmParams<double>& params, std::uint64_t master_seed) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path);
  out << format_checkpoint(params, master_seed);
  if (!out) throw IoError("failed writing checkpoint " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

} // namespace paritylab
