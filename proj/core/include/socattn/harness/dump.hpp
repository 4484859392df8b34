// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "socattn/layer_range.hpp"
#include "socattn/numerics.hpp"
#include "socattn/scene_model.hpp"

namespace socattn::harness {

inline constexpr int kDumpFormatVersion = 1;

enum class PayloadKind {
  kScores,   // pre-softmax scaled scores; bias replay is possible
  kWeights,  // post-softmax attention; analysis only
};

std::string to_string(PayloadKind kind);

/// Attention captured from a model forward pass.
///
/// On disk: `manifest.json`
///   { "version": 1, "model": str, "n_layers": L, "n_heads": H,
///     "payload": "scores" | "weights", "dtype": "float32",
///     "sequence": { seq_len, visual_offset, frames, grid, frame_times, speakers,
///                   boxes, utterances: [{index, text, speaker, timestamp}],
///                   other_text: [idx...], aliases },
///     "heads": [ { "layer": l, "head": h, "file": "l00_h00.f32" }, ... ] }
/// and one file per listed head holding seq_len * seq_len little-endian
/// float32 values, row-major. Heads may be a subset of L x H.
struct AttentionDump {
  std::string model;
  std::size_t n_layers = 0;
  std::size_t n_heads = 0;
  PayloadKind payload = PayloadKind::kScores;
  Scene scene;
  std::map<HeadKey, Matrix> matrices;
};

/// Validates the manifest and every payload. Non-finite values at causally
/// hidden positions of a score payload are read as 0; anywhere else they are
/// E_DUMP_INCONSISTENT. Short payloads raise E_DUMP_TRUNCATED, other size
/// mismatches E_DUMP_SHAPE, an unknown version E_DUMP_VERSION.
AttentionDump load_dump(const std::filesystem::path& manifest_path);

/// Writes manifest.json and the payload files into `dir`.
void write_dump(const std::filesystem::path& dir, const AttentionDump& dump);

struct RowSumCheck {
  bool consistent = true;
  double worst_error = 0.0;
  HeadKey worst_head;
  std::size_t worst_row = 0;
};

/// For weight payloads: every row must sum to 1 within `tolerance`.
RowSumCheck check_row_sums(const AttentionDump& dump, double tolerance);

}  // namespace socattn::harness
