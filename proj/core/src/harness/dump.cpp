// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "socattn/harness/dump.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <set>
#include <vector>

#include "socattn/error.hpp"
#include "socattn/harness/scene_json.hpp"

namespace socattn::harness {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string head_name(HeadKey key) {
  return "layer " + std::to_string(key.layer) + ", head " + std::to_string(key.head);
}

std::string payload_file_name(HeadKey key) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "l%02zu_h%02zu.f32", key.layer, key.head);
  return buf;
}

[[noreturn]] void shape_error(const std::string& message) {
  throw Error(ErrorCode::kDumpShape, message);
}

std::size_t manifest_count(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end() || !it->is_number_unsigned()) {
    shape_error(std::string("manifest field '") + key + "' missing or not a count");
  }
  return it->get<std::size_t>();
}

Matrix read_payload(const std::filesystem::path& path, HeadKey key, std::size_t n,
                    PayloadKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open payload for " + head_name(key) + ": " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const std::size_t expected = n * n * 4;
  if (bytes.size() < expected) {
    throw Error(ErrorCode::kDumpTruncated,
                "truncated payload for " + head_name(key) + ": expected " +
                    std::to_string(expected) + " bytes, found " + std::to_string(bytes.size()));
  }
  if (bytes.size() > expected) {
    shape_error("payload for " + head_name(key) + " holds " + std::to_string(bytes.size()) +
                " bytes, declared shape needs " + std::to_string(expected));
  }
  std::vector<double> values(n * n);
  for (std::size_t k = 0; k < values.size(); ++k) {
    const unsigned char* p = bytes.data() + 4 * k;
    const std::uint32_t raw = static_cast<std::uint32_t>(p[0]) |
                              (static_cast<std::uint32_t>(p[1]) << 8) |
                              (static_cast<std::uint32_t>(p[2]) << 16) |
                              (static_cast<std::uint32_t>(p[3]) << 24);
    double v = static_cast<double>(std::bit_cast<float>(raw));
    if (!std::isfinite(v)) {
      const std::size_t i = k / n;
      const std::size_t j = k % n;
      if (kind == PayloadKind::kScores && j > i) {
        v = 0.0;
      } else {
        throw Error(ErrorCode::kDumpInconsistent, "non-finite value at (" + std::to_string(i) +
                                                      ", " + std::to_string(j) + ") in " +
                                                      head_name(key));
      }
    }
    values[k] = v;
  }
  return Matrix(n, n, std::move(values));
}

}  // namespace

std::string to_string(PayloadKind kind) {
  return kind == PayloadKind::kScores ? "scores" : "weights";
}

AttentionDump load_dump(const std::filesystem::path& manifest_path) {
  const json doc = read_json_file(manifest_path);
  if (!doc.is_object()) shape_error("manifest must be a JSON object");
  auto version = doc.find("version");
  if (version == doc.end() || !version->is_number_integer() ||
      version->get<long long>() != kDumpFormatVersion) {
    throw Error(ErrorCode::kDumpVersion,
                "unsupported dump version " + (version == doc.end() ? "(missing)" : version->dump()));
  }
  static const std::set<std::string> kKnown = {"version", "model", "n_layers", "n_heads", "payload",
                                               "dtype", "sequence", "heads"};
  for (const auto& [key, value] : doc.items()) {
    if (!kKnown.contains(key)) shape_error("unknown manifest field '" + key + "'");
  }

  AttentionDump dump;
  dump.model = doc.value("model", std::string{});
  dump.n_layers = manifest_count(doc, "n_layers");
  dump.n_heads = manifest_count(doc, "n_heads");
  const std::string payload = doc.value("payload", std::string{});
  if (payload == "scores") {
    dump.payload = PayloadKind::kScores;
  } else if (payload == "weights") {
    dump.payload = PayloadKind::kWeights;
  } else {
    shape_error("manifest payload must be \"scores\" or \"weights\", got \"" + payload + "\"");
  }
  if (doc.value("dtype", std::string{"float32"}) != "float32") {
    shape_error("only float32 payloads are supported");
  }
  if (!doc.contains("sequence")) shape_error("manifest has no sequence block");
  dump.scene = sequence_from_json(doc["sequence"]);
  const std::size_t n = dump.scene.sequence.total_len;

  if (!doc.contains("heads") || !doc["heads"].is_array()) shape_error("manifest has no heads list");
  const auto dir = manifest_path.parent_path();
  for (const auto& entry : doc["heads"]) {
    if (!entry.is_object() || !entry.contains("layer") || !entry.contains("head") ||
        !entry.contains("file") || !entry["file"].is_string() ||
        !entry["layer"].is_number_unsigned() || !entry["head"].is_number_unsigned()) {
      shape_error("head entry needs layer, head and file");
    }
    const HeadKey key{entry["layer"].get<std::size_t>(), entry["head"].get<std::size_t>()};
    if (key.layer >= dump.n_layers || key.head >= dump.n_heads) {
      shape_error(head_name(key) + " outside declared " + std::to_string(dump.n_layers) + "x" +
                  std::to_string(dump.n_heads) + " model");
    }
    if (dump.matrices.contains(key)) shape_error("duplicate entry for " + head_name(key));
    dump.matrices.emplace(key,
                          read_payload(dir / entry["file"].get<std::string>(), key, n, dump.payload));
  }
  return dump;
}

void write_dump(const std::filesystem::path& dir, const AttentionDump& dump) {
  std::filesystem::create_directories(dir);
  ordered_json manifest;
  manifest["version"] = kDumpFormatVersion;
  manifest["model"] = dump.model;
  manifest["n_layers"] = dump.n_layers;
  manifest["n_heads"] = dump.n_heads;
  manifest["payload"] = to_string(dump.payload);
  manifest["dtype"] = "float32";
  manifest["sequence"] = sequence_to_json(dump.scene);
  ordered_json heads = ordered_json::array();
  for (const auto& [key, m] : dump.matrices) {
    const std::string file = payload_file_name(key);
    std::vector<unsigned char> bytes;
    bytes.reserve(m.data().size() * 4);
    for (double v : m.data()) {
      const auto raw = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<unsigned char>(raw >> (8 * b)));
    }
    std::ofstream out(dir / file, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIo, "cannot write payload " + (dir / file).string());
    ordered_json entry;
    entry["layer"] = key.layer;
    entry["head"] = key.head;
    entry["file"] = file;
    heads.push_back(entry);
  }
  manifest["heads"] = heads;
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

RowSumCheck check_row_sums(const AttentionDump& dump, double tolerance) {
  RowSumCheck check;
  if (dump.payload != PayloadKind::kWeights) return check;
  for (const auto& [key, m] : dump.matrices) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      double sum = 0.0;
      for (double v : m.row(i)) sum += v;
      const double err = std::abs(sum - 1.0);
      if (err > check.worst_error) {
        check.worst_error = err;
        check.worst_head = key;
        check.worst_row = i;
      }
    }
  }
  check.consistent = check.worst_error <= tolerance;
  return check;
}

}  // namespace socattn::harness
