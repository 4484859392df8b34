// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "socattn/harness/engine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "socattn/error.hpp"
#include "socattn/harness/embedding_io.hpp"
#include "socattn/harness/scene_json.hpp"
#include "socattn/oracle.hpp"

namespace socattn::harness {

namespace {

using nlohmann::ordered_json;

ordered_json spec_json(const SynthSpec& s) {
  ordered_json out;
  out["seed"] = s.seed;
  out["frames"] = s.frames;
  out["grid"] = ordered_json::array({s.grid_h, s.grid_w});
  out["n_speakers"] = s.n_speakers;
  out["tokens_per_speaker"] = s.tokens_per_speaker;
  out["model_dim"] = s.model_dim;
  out["n_layers"] = s.n_layers;
  out["n_heads"] = s.n_heads;
  out["signal_strength"] = s.signal_strength;
  out["box_layout"] = to_string(s.box_layout);
  out["distractor_text_len"] = s.distractor_text_len;
  out["qk_coupling"] = s.qk_coupling;
  out["mention_rate"] = s.mention_rate;
  return out;
}

struct Sample {
  SceneContext scene;
  Matrix embeddings;
  std::vector<std::size_t> rows;  // query rows the analysis reads

  Sample(SceneContext ctx, Matrix emb)
      : scene(std::move(ctx)), embeddings(std::move(emb)), rows(scene.utterance_indices()) {}
};

// Produces the samples of a source one at a time and evaluates their heads.
class SampleStream {
 public:
  explicit SampleStream(const SceneSource& source) : source_(source) {
    if (const auto* syn = std::get_if<SyntheticSource>(&source_)) {
      stack_ = generate_stack(syn->spec);
    } else if (const auto* file = std::get_if<SceneFileSource>(&source_)) {
      stack_ = generate_stack(file->model);
    } else {
      const auto& src = std::get<DumpSource>(source_);
      dump_ = load_dump(src.manifest);
      const auto check = check_row_sums(*dump_, src.row_sum_tolerance);
      if (!check.consistent) {
        throw Error(ErrorCode::kDumpInconsistent,
                    "attention rows do not sum to 1: row " + std::to_string(check.worst_row) +
                        " of layer " + std::to_string(check.worst_head.layer) + ", head " +
                        std::to_string(check.worst_head.head) + " is off by " +
                        format_real(check.worst_error));
      }
    }
  }

  std::size_t count() const {
    if (const auto* syn = std::get_if<SyntheticSource>(&source_)) return syn->scenes;
    return 1;
  }

  std::size_t n_layers() const { return stack_ ? stack_->n_layers() : dump_->n_layers; }
  std::size_t heads_per_sample() const {
    return stack_ ? stack_->total_heads() : dump_->matrices.size();
  }
  bool analysis_only() const { return dump_ && dump_->payload == PayloadKind::kWeights; }

  Sample load(std::size_t k) const {
    if (const auto* syn = std::get_if<SyntheticSource>(&source_)) {
      SynthSpec spec = syn->spec;
      spec.seed += k;
      auto generated = generate_scene(spec);
      return Sample{prepare_scene(generated.scene), std::move(generated.embeddings)};
    }
    if (const auto* file = std::get_if<SceneFileSource>(&source_)) {
      Scene scene = load_scene(file->scene);
      Matrix emb = read_embeddings(file->embeddings);
      if (emb.rows() != scene.sequence.total_len || emb.cols() != stack_->model_dim()) {
        throw Error(ErrorCode::kScene,
                    "embedding file is " + std::to_string(emb.rows()) + "x" +
                        std::to_string(emb.cols()) + ", scene and model need " +
                        std::to_string(scene.sequence.total_len) + "x" +
                        std::to_string(stack_->model_dim()));
      }
      return Sample{prepare_scene(scene), std::move(emb)};
    }
    try {
      return Sample{prepare_scene(dump_->scene), Matrix{}};
    } catch (const ContractViolation& e) {
      throw Error(ErrorCode::kScene, std::string("dump sequence: ") + e.what());
    }
  }

  HeadBaseline evaluate(const Sample& sample, HeadKey key, const Mask& mask) const {
    if (stack_) {
      return evaluate_head_rows(sample.embeddings, stack_->head(key.layer, key.head), sample.scene,
                                mask, sample.rows);
    }
    const Matrix& m = dump_->matrices.at(key);
    HeadBaseline hb;
    if (dump_->payload == PayloadKind::kScores) {
      hb.scores = m;
      hb.attention = baseline_attention(m, mask);
    } else {
      hb.attention = m;
    }
    const auto utterances = sample.scene.utterance_indices();
    if (!utterances.empty() && !sample.scene.regions.v_all().empty()) {
      hb.activity = head_activity_score(hb.attention, utterances, sample.scene.regions.v_all());
    }
    return hb;
  }

  std::vector<HeadKey> heads() const {
    std::vector<HeadKey> out;
    if (stack_) {
      for (std::size_t l = 0; l < stack_->n_layers(); ++l) {
        for (std::size_t h = 0; h < stack_->n_heads(l); ++h) out.push_back({l, h});
      }
    } else {
      for (const auto& [key, m] : dump_->matrices) out.push_back(key);
    }
    return out;
  }

 private:
  const SceneSource& source_;
  std::optional<LayerStack> stack_;
  std::optional<AttentionDump> dump_;
};

struct Cell {
  BiasConfig bias;
  LayerRange analysis;
};

struct CellResult {
  std::vector<std::vector<AlignmentScore>> baseline;
  std::vector<std::vector<AlignmentScore>> biased;
  HeadSelectionStats stats;
};

std::vector<CellResult> evaluate_cells(const SampleStream& stream, const std::vector<Cell>& cells,
                                       RegionScope scope) {
  for (const auto& cell : cells) cell.bias.validate(stream.n_layers());
  std::vector<HeadSelector> selectors;
  for (const auto& cell : cells) selectors.push_back(threshold_selector(cell.bias));

  std::vector<CellResult> results(cells.size());
  const auto keys = stream.heads();
  for (std::size_t k = 0; k < stream.count(); ++k) {
    const Sample sample = stream.load(k);
    const Mask mask = Mask::causal(sample.scene.sequence.total_len);
    std::vector<HeadSelection> selections(cells.size());
    for (auto& r : results) {
      r.baseline.emplace_back();
      r.biased.emplace_back();
    }

    for (const HeadKey key : keys) {
      const HeadBaseline hb = stream.evaluate(sample, key, mask);
      std::optional<std::vector<AlignmentScore>> base_scores;
      for (std::size_t c = 0; c < cells.size(); ++c) {
        const bool active = selectors[c](key, hb.activity);
        selections[c].heads[key] = HeadStatus{hb.activity.value_or(0.0), active};
        if (!cells[c].analysis.contains(key.layer)) continue;
        if (!base_scores) base_scores = score_tokens(hb.attention, sample.scene, scope, key);
        auto& base_out = results[c].baseline.back();
        base_out.insert(base_out.end(), base_scores->begin(), base_scores->end());
        if (stream.analysis_only()) continue;

        auto& bias_out = results[c].biased.back();
        BiasPlan plan;
        if (active) plan = compute_bias_plan(hb.scores, sample.scene, cells[c].bias, &hb.attention);
        if (plan.empty()) {
          bias_out.insert(bias_out.end(), base_scores->begin(), base_scores->end());
        } else {
          const Matrix biased = biased_attention(hb.scores, plan, mask, hb.attention);
          const auto scores = score_tokens(biased, sample.scene, scope, key);
          bias_out.insert(bias_out.end(), scores.begin(), scores.end());
        }
      }
    }
    for (std::size_t c = 0; c < cells.size(); ++c) results[c].stats.add(selections[c]);
  }
  return results;
}

LayerRange default_analysis(const std::optional<LayerRange>& requested, LayerRange bias_range,
                            std::size_t n_layers) {
  if (requested) return *requested;
  return bias_range.empty() ? LayerRange::all(n_layers) : bias_range;
}

RunReport build_report(const RunConfig& cfg, const SampleStream& stream, const Cell& cell,
                       const CellResult& result) {
  RunReport report;
  report.source = source_to_json(cfg.source);
  report.bias = cell.bias;
  report.scope = cfg.scope;
  report.analysis_layers = cell.analysis;
  report.samples = stream.count();
  report.heads_per_sample = stream.heads_per_sample();
  report.analysis_only = stream.analysis_only();
  report.baseline = aggregate_report(result.baseline, result.stats);
  if (!report.analysis_only) report.biased = aggregate_report(result.biased, result.stats);
  return report;
}

}  // namespace

ordered_json source_to_json(const SceneSource& source) {
  ordered_json out;
  if (const auto* syn = std::get_if<SyntheticSource>(&source)) {
    out["kind"] = "synthetic";
    out["scenes"] = syn->scenes;
    out["spec"] = spec_json(syn->spec);
  } else if (const auto* file = std::get_if<SceneFileSource>(&source)) {
    out["kind"] = "scene_file";
    out["scene"] = file->scene.generic_string();
    out["embeddings"] = file->embeddings.generic_string();
    out["model"] = spec_json(file->model);
  } else {
    const auto& dump = std::get<DumpSource>(source);
    out["kind"] = "dump";
    out["manifest"] = dump.manifest.generic_string();
    out["row_sum_tolerance"] = dump.row_sum_tolerance;
  }
  return out;
}

RunReport run(const RunConfig& cfg) {
  const SampleStream stream(cfg.source);
  const Cell cell{cfg.bias,
                  default_analysis(cfg.analysis_layers, cfg.bias.layer_range, stream.n_layers())};
  const auto results = evaluate_cells(stream, {cell}, cfg.scope);
  RunReport report = build_report(cfg, stream, cell, results.front());
  if (!cfg.output_dir.empty()) write_report(cfg.output_dir / "report.json", report);
  return report;
}

std::vector<SweepRow> sweep(const RunConfig& base, const SweepGrid& grid) {
  if (grid.lambdas.empty() || grid.alphas.empty() || grid.ranges.empty()) {
    throw Error(ErrorCode::kUsage, "sweep grid needs at least one lambda, alpha and range");
  }
  const SampleStream stream(base.source);
  std::vector<Cell> cells;
  for (double lambda : grid.lambdas) {
    for (double alpha : grid.alphas) {
      for (const auto& range : grid.ranges) {
        Cell cell{base.bias, {}};
        cell.bias.lambda = lambda;
        cell.bias.alpha = alpha;
        cell.bias.layer_range = range;
        cell.analysis = default_analysis(base.analysis_layers, range, stream.n_layers());
        cells.push_back(cell);
      }
    }
  }
  const auto results = evaluate_cells(stream, cells, base.scope);

  std::vector<SweepRow> rows;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const RunReport report = build_report(base, stream, cells[c], results[c]);
    SweepRow row;
    row.lambda = cells[c].bias.lambda;
    row.alpha = cells[c].bias.alpha;
    row.range = cells[c].bias.layer_range;
    row.active_ratio = report.baseline.active_head_ratio;
    row.baseline = report.baseline.overall;
    row.biased = report.biased ? report.biased->overall : report.baseline.overall;
    rows.push_back(row);
  }
  if (!base.output_dir.empty()) write_sweep_csv(base.output_dir / "sweep.csv", rows);
  return rows;
}

HeatmapFiles heatmap(const RunConfig& cfg, const HeatmapRequest& request) {
  const SampleStream stream(cfg.source);
  cfg.bias.validate(stream.n_layers());
  if (request.sample >= stream.count()) throw Error(ErrorCode::kUsage, "heatmap sample out of range");
  const auto keys = stream.heads();
  if (std::find(keys.begin(), keys.end(), request.head) == keys.end()) {
    throw Error(ErrorCode::kUsage, "no layer " + std::to_string(request.head.layer) + ", head " +
                                       std::to_string(request.head.head) + " in this source");
  }
  const Sample sample = stream.load(request.sample);
  const auto& seq = sample.scene.sequence;

  std::size_t token = 0;
  if (request.token) {
    token = *request.token;
    const auto idx = seq.utterance_indices();
    if (std::find(idx.begin(), idx.end(), token) == idx.end()) {
      throw Error(ErrorCode::kUsage, "sequence index " + std::to_string(token) +
                                         " is not an utterance token");
    }
  } else {
    bool found = false;
    for (std::size_t k = 0; k < seq.utterances.size() && !found; ++k) {
      if (!sample.scene.regions
               .window(seq.utterances[k].speaker, sample.scene.token_frames[k], cfg.bias.frame_window)
               .empty()) {
        token = seq.utterances[k].sequence_index;
        found = true;
      }
    }
    if (!found) throw Error(ErrorCode::kUsage, "no utterance token has a speaker region");
  }

  const Mask mask = Mask::causal(seq.total_len);
  const HeadBaseline hb = stream.evaluate(sample, request.head, mask);
  Matrix biased = hb.attention;
  if (!stream.analysis_only() && threshold_selector(cfg.bias)(request.head, hb.activity)) {
    const BiasPlan plan = compute_bias_plan(hb.scores, sample.scene, cfg.bias, &hb.attention);
    if (!plan.empty()) biased = biased_attention(hb.scores, plan, mask, hb.attention);
  }
  const auto& grid = seq.visual;
  const auto base_row = hb.attention.row(token).subspan(grid.base_offset, grid.size());
  const auto bias_row = biased.row(token).subspan(grid.base_offset, grid.size());
  return export_heatmap(base_row, bias_row, grid, token, cfg.output_dir / "heatmaps");
}

VerifyResult verify(std::size_t attention_instances, std::size_t scan_scenes, std::uint64_t seed) {
  VerifyResult result;
  Rng rng(seed);

  for (std::size_t k = 0; k < attention_instances; ++k) {
    const std::size_t n = 2 + rng.below(15);
    std::vector<double> values(n * n);
    for (double& v : values) v = 4.0 * rng.normal();
    const Matrix scores(n, n, std::move(values));
    const Mask mask = Mask::causal(n);
    BiasPlan plan;
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.uniform() < 0.4) continue;
      std::vector<std::size_t> keys;
      for (std::size_t j = 0; j <= i; ++j) {
        if (rng.uniform() < 0.5) keys.push_back(j);
      }
      if (keys.empty()) continue;
      plan.add_row(BiasRow{i, 0.0, 6.0 * rng.normal(), std::move(keys)});
    }
    const double delta =
        max_abs_diff(biased_attention(scores, plan, mask), oracle::dense_biased_attention(scores, plan, mask));
    result.max_attention_delta = std::max(result.max_attention_delta, delta);
    ++result.attention_instances;
  }

  for (std::size_t k = 0; k < scan_scenes; ++k) {
    SynthSpec spec;
    spec.seed = seed + 1000 + k;
    spec.frames = 2;
    spec.grid_h = 3;
    spec.grid_w = 4;
    spec.n_speakers = 2 + k % 3;
    spec.tokens_per_speaker = 3;
    spec.model_dim = 16;
    spec.n_layers = 2;
    spec.n_heads = 4;
    spec.distractor_text_len = 2;
    spec.box_layout = k % 2 == 0 ? BoxLayout::kDisjoint : BoxLayout::kOverlapping;
    const auto generated = generate_scene(spec);
    const auto stack = generate_stack(spec);
    const SceneContext scene = prepare_scene(generated.scene);
    const auto reference = oracle::exhaustive_head_scan(generated.embeddings, stack, scene);
    const Mask mask = Mask::causal(scene.sequence.total_len);
    const auto rows = scene.utterance_indices();
    for (const auto& [key, expected] : reference) {
      const auto& head = stack.head(key.layer, key.head);
      const auto full = evaluate_head(generated.embeddings, head, scene, mask);
      const auto part = evaluate_head_rows(generated.embeddings, head, scene, mask, rows);
      result.max_activity_delta =
          std::max({result.max_activity_delta, std::abs(full.activity.value_or(0.0) - expected),
                    std::abs(part.activity.value_or(0.0) - expected)});
    }
    ++result.scan_scenes;
  }

  result.passed = result.max_attention_delta <= kAttentionOracleTolerance &&
                  result.max_activity_delta <= kActivityOracleTolerance;
  return result;
}

void write_synthetic_scene(const std::filesystem::path& dir, const SynthSpec& spec) {
  const auto generated = generate_scene(spec);
  save_scene(dir / "scene.json", generated.scene);
  write_embeddings(dir / "embeddings.bin", generated.embeddings);
}

void write_synthetic_dump(const std::filesystem::path& dir, const SynthSpec& spec,
                          PayloadKind payload) {
  const auto generated = generate_scene(spec);
  const auto stack = generate_stack(spec);
  const SceneContext scene = prepare_scene(generated.scene);
  const Mask mask = Mask::causal(scene.sequence.total_len);

  AttentionDump dump;
  dump.model = "socattn-synthetic";
  dump.n_layers = stack.n_layers();
  dump.n_heads = spec.n_heads;
  dump.payload = payload;
  dump.scene = generated.scene;
  for (std::size_t l = 0; l < stack.n_layers(); ++l) {
    for (std::size_t h = 0; h < stack.n_heads(l); ++h) {
      auto hb = evaluate_head(generated.embeddings, stack.head(l, h), scene, mask);
      dump.matrices.emplace(HeadKey{l, h}, payload == PayloadKind::kScores ? std::move(hb.scores)
                                                                           : std::move(hb.attention));
    }
  }
  write_dump(dir, dump);
}

}  // namespace socattn::harness
