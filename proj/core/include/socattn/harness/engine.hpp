// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "socattn/alignment.hpp"
#include "socattn/attention.hpp"
#include "socattn/harness/dump.hpp"
#include "socattn/harness/heatmap.hpp"
#include "socattn/harness/report.hpp"
#include "socattn/synth.hpp"

namespace socattn::harness {

/// `scenes` synthetic scenes with seeds spec.seed, spec.seed + 1, ...; the
/// model stack is generated once from spec.seed.
struct SyntheticSource {
  SynthSpec spec;
  std::size_t scenes = 1;
};

/// Scene file plus embedding file; the model comes from `model`
/// (seed, model_dim, n_layers, n_heads, qk_coupling).
struct SceneFileSource {
  std::filesystem::path scene;
  std::filesystem::path embeddings;
  SynthSpec model;
};

struct DumpSource {
  std::filesystem::path manifest;
  double row_sum_tolerance = 1e-6;
};

using SceneSource = std::variant<SyntheticSource, SceneFileSource, DumpSource>;

struct RunConfig {
  SceneSource source = SyntheticSource{};
  BiasConfig bias;
  RegionScope scope = RegionScope::kTokenFrame;
  // Heads whose attention enters the alignment metrics. Defaults to the bias
  // layer range, or every layer when that range is empty.
  std::optional<LayerRange> analysis_layers;
  std::filesystem::path output_dir;  // empty: write nothing
};

nlohmann::ordered_json source_to_json(const SceneSource& source);

/// Baseline and biased analysis; writes <output_dir>/report.json.
RunReport run(const RunConfig& cfg);

struct SweepGrid {
  std::vector<double> lambdas;
  std::vector<double> alphas;
  std::vector<LayerRange> ranges;
};

/// One row per (lambda, alpha, range) cell, lambda outermost. Cell c uses
/// base.bias with those three fields replaced. Writes <output_dir>/sweep.csv.
std::vector<SweepRow> sweep(const RunConfig& base, const SweepGrid& grid);

struct HeatmapRequest {
  HeadKey head{16, 0};
  std::optional<std::size_t> token;  // sequence index; default: first utterance with a region
  std::size_t sample = 0;
};

/// Writes heatmaps for one token of one head under <output_dir>/heatmaps.
HeatmapFiles heatmap(const RunConfig& cfg, const HeatmapRequest& request);

struct VerifyResult {
  std::size_t attention_instances = 0;
  std::size_t scan_scenes = 0;
  double max_attention_delta = 0.0;  // sparse vs dense biased attention
  double max_activity_delta = 0.0;   // fast head scores vs exhaustive scan
  bool passed = false;
};

inline constexpr double kAttentionOracleTolerance = 1e-9;
inline constexpr double kActivityOracleTolerance = 1e-12;

/// Differential check of the fast paths against the brute-force oracle.
VerifyResult verify(std::size_t attention_instances, std::size_t scan_scenes, std::uint64_t seed);

/// Writes scene.json and embeddings.bin for `spec` into `dir`.
void write_synthetic_scene(const std::filesystem::path& dir, const SynthSpec& spec);

/// Runs the synthetic model on `spec` and writes its attention as a dump.
void write_synthetic_dump(const std::filesystem::path& dir, const SynthSpec& spec,
                          PayloadKind payload);

}  // namespace socattn::harness
