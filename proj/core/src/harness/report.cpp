// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "socattn/harness/report.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "socattn/error.hpp"
#include "socattn/harness/scene_json.hpp"

namespace socattn::harness {

namespace {

using nlohmann::ordered_json;

// JSON has no infinity; infinite thresholds are written as strings.
ordered_json real_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

ordered_json summary_json(const MetricSummary& m) {
  ordered_json out;
  out["tokens"] = m.tokens;
  out["attn_max"] = m.attn_max;
  out["attn_mean"] = m.attn_mean;
  out["attn_max_x1e-2"] = m.attn_max_display();
  out["attn_mean_x1e-4"] = m.attn_mean_display();
  return out;
}

ordered_json alignment_json(const AlignmentReport& r) {
  ordered_json out;
  out["overall"] = summary_json(r.overall);
  out["active_heads"] = r.active_heads;
  out["head_observations"] = r.head_observations;
  out["active_head_ratio"] = r.active_head_ratio;
  ordered_json heads = ordered_json::array();
  for (const auto& h : r.heads) {
    ordered_json e;
    e["layer"] = h.head.layer;
    e["head"] = h.head.head;
    e["mean_activity"] = h.mean_activity;
    e["active_fraction"] = h.active_fraction;
    e["metrics"] = summary_json(h.metrics);
    heads.push_back(e);
  }
  out["heads"] = heads;
  return out;
}

}  // namespace

std::string format_real(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw ContractViolation("format_real: conversion failed");
  return std::string(buf, ptr);
}

double parse_real(const std::string& text) {
  if (text == "inf" || text == "+inf" || text == "infinity") return HUGE_VAL;
  if (text == "-inf") return -HUGE_VAL;
  double value = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw Error(ErrorCode::kUsage, "invalid number '" + text + "'");
  }
  return value;
}

ordered_json bias_config_to_json(const BiasConfig& cfg) {
  ordered_json out;
  out["alpha"] = cfg.alpha;
  out["lambda"] = real_json(cfg.lambda);
  out["layer_range"] = cfg.layer_range.to_string();
  out["clamp_nonnegative"] = cfg.clamp_nonnegative;
  out["frame_window"] = cfg.frame_window;
  out["bias_strength"] = cfg.strength == BiasStrength::kAdaptive ? "adaptive" : "fixed";
  out["fixed_bias"] = cfg.fixed_bias;
  out["max_source"] = cfg.max_source == MaxSource::kPreSoftmax ? "pre_softmax" : "post_softmax";
  return out;
}

ordered_json report_to_json(const RunReport& report) {
  ordered_json out;
  out["version"] = kReportFormatVersion;
  out["source"] = report.source;
  out["config"] = bias_config_to_json(report.bias);
  out["region_scope"] = report.scope == RegionScope::kTokenFrame ? "token_frame" : "all_frames";
  out["analysis_layers"] = report.analysis_layers.to_string();
  out["mode"] = report.analysis_only ? "analysis-only" : "biased";
  out["samples"] = report.samples;
  out["heads_per_sample"] = report.heads_per_sample;
  const auto& sel = report.biased ? *report.biased : report.baseline;
  out["active_head_ratio"] = sel.active_head_ratio;
  out["baseline"] = alignment_json(report.baseline);
  out["biased"] = report.biased ? alignment_json(*report.biased) : ordered_json(nullptr);
  return out;
}

void write_report(const std::filesystem::path& path, const RunReport& report) {
  write_text_file(path, report_to_json(report).dump(2) + "\n");
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "lambda,alpha,range,active_ratio,attn_max,attn_mean,baseline_attn_max,baseline_attn_mean\n";
  for (const auto& r : rows) {
    out << format_real(r.lambda) << ',' << format_real(r.alpha) << ',' << r.range.to_string()
        << ',' << format_real(r.active_ratio) << ',' << format_real(r.biased.attn_max) << ','
        << format_real(r.biased.attn_mean) << ',' << format_real(r.baseline.attn_max) << ','
        << format_real(r.baseline.attn_mean) << '\n';
  }
  return out.str();
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  write_text_file(path, sweep_csv(rows));
}

}  // namespace socattn::harness
