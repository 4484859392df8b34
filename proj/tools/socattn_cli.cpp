// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

// socattn: run, sweep and inspect speaker-aware attention bias experiments.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "socattn/error.hpp"
#include "socattn/harness/dump.hpp"
#include "socattn/harness/engine.hpp"
#include "socattn/harness/report.hpp"

namespace {

using namespace socattn;
using namespace socattn::harness;

struct SourceFlags {
  SynthSpec spec;
  std::size_t scenes = 1;
  std::string scene_path;
  std::string embeddings_path;
  std::string dump_path;
  double row_sum_tol = 1e-6;
  std::string box_layout = "disjoint";
};

struct BiasFlags {
  double alpha = 1.0;
  std::string lambda = "5e-5";
  std::string layer_range = "10-19";
  bool clamp_nonnegative = false;
  std::size_t frame_window = 0;
  std::string bias_strength = "adaptive";
  double fixed_bias = 0.0;
  std::string max_source = "pre_softmax";
  std::string region_scope = "token_frame";
  std::string analysis_layers;
};

void add_synth_flags(CLI::App* cmd, SourceFlags& f) {
  auto& s = f.spec;
  cmd->add_option("--seed", s.seed, "Base RNG seed")->capture_default_str();
  cmd->add_option("--frames", s.frames, "Sampled frames T")->capture_default_str();
  cmd->add_option("--grid_h", s.grid_h, "Patch rows H")->capture_default_str();
  cmd->add_option("--grid_w", s.grid_w, "Patch columns W")->capture_default_str();
  cmd->add_option("--n_speakers", s.n_speakers)->capture_default_str();
  cmd->add_option("--tokens_per_speaker", s.tokens_per_speaker)->capture_default_str();
  cmd->add_option("--model_dim", s.model_dim)->capture_default_str();
  cmd->add_option("--n_layers", s.n_layers)->capture_default_str();
  cmd->add_option("--n_heads", s.n_heads)->capture_default_str();
  cmd->add_option("--signal_strength", s.signal_strength)->capture_default_str();
  cmd->add_option("--box_layout", f.box_layout, "disjoint | overlapping")->capture_default_str();
  cmd->add_option("--distractor_text_len", s.distractor_text_len)->capture_default_str();
  cmd->add_option("--qk_coupling", s.qk_coupling)->capture_default_str();
  cmd->add_option("--mention_rate", s.mention_rate)->capture_default_str();
}

void add_source_flags(CLI::App* cmd, SourceFlags& f) {
  add_synth_flags(cmd, f);
  cmd->add_option("--scenes", f.scenes, "Number of synthetic scenes")->capture_default_str();
  auto* scene = cmd->add_option("--scene", f.scene_path, "Scene JSON file");
  cmd->add_option("--embeddings", f.embeddings_path, "Embedding file for --scene")->needs(scene);
  auto* dump = cmd->add_option("--dump", f.dump_path, "Attention dump manifest");
  dump->excludes(scene);
  cmd->add_option("--row_sum_tol", f.row_sum_tol, "Row-sum tolerance for weight dumps")
      ->capture_default_str();
}

void add_bias_flags(CLI::App* cmd, BiasFlags& b, bool with_grid_axes) {
  if (!with_grid_axes) {
    cmd->add_option("--alpha", b.alpha, "Bias scale")->capture_default_str();
    cmd->add_option("--lambda", b.lambda, "Head activity threshold (number or inf)")
        ->capture_default_str();
    cmd->add_option("--layer_range", b.layer_range, "Biased layers: a-b, a or none")
        ->capture_default_str();
  }
  cmd->add_flag("--clamp_nonnegative", b.clamp_nonnegative, "Clamp bias values at 0");
  cmd->add_option("--frame_window", b.frame_window, "Frames on each side of the token's frame")
      ->capture_default_str();
  cmd->add_option("--bias_strength", b.bias_strength, "adaptive | fixed")->capture_default_str();
  cmd->add_option("--fixed_bias", b.fixed_bias, "Bias value for --bias_strength fixed")
      ->capture_default_str();
  cmd->add_option("--max_source", b.max_source, "pre_softmax | post_softmax")->capture_default_str();
  cmd->add_option("--region_scope", b.region_scope, "token_frame | all_frames")->capture_default_str();
  cmd->add_option("--analysis_layers", b.analysis_layers, "Layers scored in the report");
}

SceneSource make_source(const SourceFlags& f) {
  SynthSpec spec = f.spec;
  spec.box_layout = parse_box_layout(f.box_layout);
  if (!f.dump_path.empty()) return DumpSource{f.dump_path, f.row_sum_tol};
  if (!f.scene_path.empty()) {
    if (f.embeddings_path.empty()) throw Error(ErrorCode::kUsage, "--scene requires --embeddings");
    return SceneFileSource{f.scene_path, f.embeddings_path, spec};
  }
  return SyntheticSource{spec, f.scenes};
}

RunConfig make_config(const SourceFlags& src, const BiasFlags& b, const std::string& out) {
  RunConfig cfg;
  cfg.source = make_source(src);
  cfg.bias.alpha = b.alpha;
  cfg.bias.lambda = parse_real(b.lambda);
  cfg.bias.layer_range = LayerRange::parse(b.layer_range);
  cfg.bias.clamp_nonnegative = b.clamp_nonnegative;
  cfg.bias.frame_window = b.frame_window;
  if (b.bias_strength == "adaptive") {
    cfg.bias.strength = BiasStrength::kAdaptive;
  } else if (b.bias_strength == "fixed") {
    cfg.bias.strength = BiasStrength::kFixed;
  } else {
    throw Error(ErrorCode::kUsage, "unknown --bias_strength '" + b.bias_strength + "'");
  }
  cfg.bias.fixed_bias = b.fixed_bias;
  if (b.max_source == "pre_softmax") {
    cfg.bias.max_source = MaxSource::kPreSoftmax;
  } else if (b.max_source == "post_softmax") {
    cfg.bias.max_source = MaxSource::kPostSoftmax;
  } else {
    throw Error(ErrorCode::kUsage, "unknown --max_source '" + b.max_source + "'");
  }
  if (b.region_scope == "token_frame") {
    cfg.scope = RegionScope::kTokenFrame;
  } else if (b.region_scope == "all_frames") {
    cfg.scope = RegionScope::kAllFrames;
  } else {
    throw Error(ErrorCode::kUsage, "unknown --region_scope '" + b.region_scope + "'");
  }
  if (!b.analysis_layers.empty()) cfg.analysis_layers = LayerRange::parse(b.analysis_layers);
  cfg.output_dir = out;
  return cfg;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void print_report(const RunReport& r) {
  std::printf("mode: %s\n", r.analysis_only ? "analysis-only" : "biased");
  std::printf("samples: %zu  heads/sample: %zu  active_head_ratio: %s\n", r.samples,
              r.heads_per_sample, format_real(r.baseline.active_head_ratio).c_str());
  std::printf("baseline  AttnMax %.4f (x1e-2)  AttnMean %.4f (x1e-4)\n",
              r.baseline.overall.attn_max_display(), r.baseline.overall.attn_mean_display());
  if (r.biased) {
    std::printf("biased    AttnMax %.4f (x1e-2)  AttnMean %.4f (x1e-4)\n",
                r.biased->overall.attn_max_display(), r.biased->overall.attn_mean_display());
  }
}

int fail(ErrorCode code, const std::string& message) {
  std::string line = message;
  for (char& c : line) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::fprintf(stderr, "error[%s]: %s\n", std::string(error_code_name(code)).c_str(), line.c_str());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speaker-aware cross-modal attention analysis"};
  app.require_subcommand(1);

  SourceFlags src;
  BiasFlags bias;
  std::string out;

  auto* run_cmd = app.add_subcommand("run", "Baseline vs biased alignment report");
  add_source_flags(run_cmd, src);
  add_bias_flags(run_cmd, bias, false);
  run_cmd->add_option("--out", out, "Output directory")->required();

  std::string lambdas = "0,5e-5,2e-4,8e-4,inf";
  std::string alphas = "1";
  std::string ranges = "10-19";
  auto* sweep_cmd = app.add_subcommand("sweep", "Grid over lambda x alpha x layer_range");
  add_source_flags(sweep_cmd, src);
  add_bias_flags(sweep_cmd, bias, true);
  sweep_cmd->add_option("--lambdas", lambdas, "Comma-separated thresholds")->capture_default_str();
  sweep_cmd->add_option("--alphas", alphas, "Comma-separated bias scales")->capture_default_str();
  sweep_cmd->add_option("--ranges", ranges, "Comma-separated layer ranges")->capture_default_str();
  sweep_cmd->add_option("--out", out, "Output directory")->required();

  auto* ingest_cmd = app.add_subcommand("ingest", "Analyze an attention dump from a real model");
  std::string manifest;
  ingest_cmd->add_option("manifest", manifest, "Dump manifest.json")->required();
  ingest_cmd->add_option("--row_sum_tol", src.row_sum_tol, "Row-sum tolerance for weight dumps")
      ->capture_default_str();
  add_bias_flags(ingest_cmd, bias, false);
  ingest_cmd->add_option("--out", out, "Output directory")->required();

  HeatmapRequest hm;
  std::size_t hm_layer = 16;
  std::size_t hm_head = 0;
  long long hm_token = -1;
  auto* heat_cmd = app.add_subcommand("heatmap", "Export PGM/CSV heatmaps for one token");
  add_source_flags(heat_cmd, src);
  add_bias_flags(heat_cmd, bias, false);
  heat_cmd->add_option("--layer", hm_layer)->capture_default_str();
  heat_cmd->add_option("--head", hm_head)->capture_default_str();
  heat_cmd->add_option("--token", hm_token, "Utterance sequence index (default: first with a region)");
  heat_cmd->add_option("--sample", hm.sample, "Synthetic scene number")->capture_default_str();
  heat_cmd->add_option("--out", out, "Output directory")->required();

  std::string dump_payload;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic scene (and optionally a dump)");
  add_synth_flags(synth_cmd, src);
  synth_cmd->add_option("--dump_payload", dump_payload, "Also write a dump: scores | weights");
  synth_cmd->add_option("--out", out, "Output directory")->required();

  std::size_t instances = 200;
  std::size_t scan_scenes = 50;
  std::uint64_t verify_seed = 7;
  auto* verify_cmd = app.add_subcommand("verify", "Check fast paths against brute-force oracles");
  verify_cmd->add_option("--instances", instances)->capture_default_str();
  verify_cmd->add_option("--scenes", scan_scenes)->capture_default_str();
  verify_cmd->add_option("--seed", verify_seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(ErrorCode::kUsage, e.what());
  }

  try {
    if (*run_cmd) {
      const auto report = run(make_config(src, bias, out));
      print_report(report);
      std::printf("wrote %s\n", (std::filesystem::path(out) / "report.json").string().c_str());
    } else if (*sweep_cmd) {
      RunConfig cfg = make_config(src, bias, out);
      SweepGrid grid;
      for (const auto& v : split_list(lambdas)) grid.lambdas.push_back(parse_real(v));
      for (const auto& v : split_list(alphas)) grid.alphas.push_back(parse_real(v));
      for (const auto& v : split_list(ranges)) grid.ranges.push_back(LayerRange::parse(v));
      const auto rows = sweep(cfg, grid);
      std::fputs(sweep_csv(rows).c_str(), stdout);
      std::printf("wrote %s\n", (std::filesystem::path(out) / "sweep.csv").string().c_str());
    } else if (*ingest_cmd) {
      src.dump_path = manifest;
      const auto report = run(make_config(src, bias, out));
      print_report(report);
      if (report.analysis_only) {
        std::printf("note: dump holds post-softmax weights; bias replay needs scores\n");
      }
      std::printf("wrote %s\n", (std::filesystem::path(out) / "report.json").string().c_str());
    } else if (*heat_cmd) {
      hm.head = HeadKey{hm_layer, hm_head};
      if (hm_token >= 0) hm.token = static_cast<std::size_t>(hm_token);
      const auto files = heatmap(make_config(src, bias, out), hm);
      for (const auto& p : files.images) std::printf("wrote %s\n", p.string().c_str());
      std::printf("wrote %s\n", files.csv.string().c_str());
    } else if (*synth_cmd) {
      SynthSpec spec = src.spec;
      spec.box_layout = parse_box_layout(src.box_layout);
      write_synthetic_scene(out, spec);
      std::printf("wrote %s and %s\n", (std::filesystem::path(out) / "scene.json").string().c_str(),
                  (std::filesystem::path(out) / "embeddings.bin").string().c_str());
      if (!dump_payload.empty()) {
        PayloadKind kind = PayloadKind::kScores;
        if (dump_payload == "weights") {
          kind = PayloadKind::kWeights;
        } else if (dump_payload != "scores") {
          throw Error(ErrorCode::kUsage, "unknown --dump_payload '" + dump_payload + "'");
        }
        write_synthetic_dump(std::filesystem::path(out) / "dump", spec, kind);
        std::printf("wrote %s\n", (std::filesystem::path(out) / "dump" / "manifest.json").string().c_str());
      }
    } else if (*verify_cmd) {
      const auto r = verify(instances, scan_scenes, verify_seed);
      std::printf("sparse vs dense biased attention: %zu instances, max |delta| %s (tolerance %s)\n",
                  r.attention_instances, format_real(r.max_attention_delta).c_str(),
                  format_real(kAttentionOracleTolerance).c_str());
      std::printf("head activity vs exhaustive scan: %zu scenes, max |delta| %s (tolerance %s)\n",
                  r.scan_scenes, format_real(r.max_activity_delta).c_str(),
                  format_real(kActivityOracleTolerance).c_str());
      if (!r.passed) return fail(ErrorCode::kVerify, "oracle equivalence bound exceeded");
      std::printf("verify: ok\n");
    }
  } catch (const Error& e) {
    return fail(e.code(), e.what());
  } catch (const std::exception& e) {
    return fail(ErrorCode::kIo, e.what());
  }
  return 0;
}
