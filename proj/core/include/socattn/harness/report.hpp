// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "socattn/alignment.hpp"
#include "socattn/attention.hpp"

namespace socattn::harness {

inline constexpr int kReportFormatVersion = 1;

/// Shortest decimal that round-trips to the same double; "inf" / "-inf".
std::string format_real(double value);
double parse_real(const std::string& text);

struct RunReport {
  nlohmann::ordered_json source;
  BiasConfig bias;
  RegionScope scope = RegionScope::kTokenFrame;
  LayerRange analysis_layers;
  std::size_t samples = 0;
  std::size_t heads_per_sample = 0;
  bool analysis_only = false;
  AlignmentReport baseline;
  std::optional<AlignmentReport> biased;  // absent in analysis-only mode
};

nlohmann::ordered_json bias_config_to_json(const BiasConfig& cfg);
nlohmann::ordered_json report_to_json(const RunReport& report);
void write_report(const std::filesystem::path& path, const RunReport& report);

struct SweepRow {
  double lambda = 0.0;
  double alpha = 0.0;
  LayerRange range;
  double active_ratio = 0.0;
  MetricSummary biased;
  MetricSummary baseline;
};

/// Header: lambda,alpha,range,active_ratio,attn_max,attn_mean,
/// baseline_attn_max,baseline_attn_mean. Metrics are raw (unscaled).
std::string sweep_csv(const std::vector<SweepRow>& rows);
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);

}  // namespace socattn::harness
