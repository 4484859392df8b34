// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "socattn/alignment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

#include "socattn/error.hpp"

namespace socattn {

namespace {

void check_region(std::span<const double> row, std::span<const std::size_t> region,
                  const char* op) {
  if (region.empty()) throw ContractViolation(std::string(op) + ": empty region");
  for (std::size_t j : region) {
    if (j >= row.size()) {
      throw ContractViolation(std::string(op) + ": region index " + std::to_string(j) +
                              " outside row of length " + std::to_string(row.size()));
    }
  }
}

// Order-independent mean: sort, then compensated summation.
double stable_mean(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double t = sum + v;
    carry += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return (sum + carry) / static_cast<double>(values.size());
}

std::size_t parse_index(const std::string& text) {
  std::size_t value = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw Error(ErrorCode::kUsage, "invalid layer index '" + text + "'");
  }
  return value;
}

MetricSummary summarize(const std::vector<double>& maxes, const std::vector<double>& means) {
  MetricSummary s;
  s.tokens = maxes.size();
  s.attn_max = stable_mean(maxes);
  s.attn_mean = stable_mean(means);
  return s;
}

}  // namespace

std::string LayerRange::to_string() const {
  if (empty()) return "none";
  if (first == last) return std::to_string(first);
  return std::to_string(first) + "-" + std::to_string(last);
}

LayerRange LayerRange::parse(const std::string& text) {
  if (text == "none" || text.empty()) return none();
  const auto dash = text.find('-');
  if (dash == std::string::npos) {
    const auto v = parse_index(text);
    return closed(v, v);
  }
  const auto lo = parse_index(text.substr(0, dash));
  const auto hi = parse_index(text.substr(dash + 1));
  if (lo > hi) throw Error(ErrorCode::kUsage, "layer range '" + text + "' is reversed");
  return closed(lo, hi);
}

double attn_max(std::span<const double> attn_row, std::span<const std::size_t> region) {
  check_region(attn_row, region, "attn_max");
  double best = attn_row[region.front()];
  for (std::size_t j : region) best = std::max(best, attn_row[j]);
  return best;
}

double attn_mean(std::span<const double> attn_row, std::span<const std::size_t> region) {
  check_region(attn_row, region, "attn_mean");
  double sum = 0.0;
  for (std::size_t j : region) sum += attn_row[j];
  return sum / static_cast<double>(region.size());
}

double head_activity_score(const Matrix& attn, std::span<const std::size_t> utterances,
                           std::span<const std::size_t> v_all) {
  if (utterances.empty() || v_all.empty()) {
    throw ContractViolation("head_activity_score: utterance and region sets must be nonempty");
  }
  double total = 0.0;
  for (std::size_t i : utterances) {
    if (i >= attn.rows()) throw ContractViolation("head_activity_score: row out of range");
    auto row = attn.row(i);
    for (std::size_t j : v_all) {
      if (j >= row.size()) throw ContractViolation("head_activity_score: column out of range");
      total += row[j];
    }
  }
  return total / (static_cast<double>(utterances.size()) * static_cast<double>(v_all.size()));
}

double uniform_head_activity(std::span<const std::size_t> utterances) {
  if (utterances.empty()) throw ContractViolation("uniform_head_activity: no utterance rows");
  std::vector<double> per_row;
  per_row.reserve(utterances.size());
  for (std::size_t i : utterances) per_row.push_back(1.0 / static_cast<double>(i + 1));
  return stable_mean(std::move(per_row));
}

std::size_t HeadSelection::active_count() const {
  return static_cast<std::size_t>(
      std::count_if(heads.begin(), heads.end(), [](const auto& kv) { return kv.second.active; }));
}

std::set<HeadKey> HeadSelection::active_set() const {
  std::set<HeadKey> out;
  for (const auto& [key, status] : heads) {
    if (status.active) out.insert(key);
  }
  return out;
}

bool HeadSelection::active(HeadKey key) const {
  auto it = heads.find(key);
  return it != heads.end() && it->second.active;
}

HeadSelection classify_heads(const std::map<HeadKey, double>& scores, double lambda,
                             LayerRange layer_range) {
  HeadSelection out;
  for (const auto& [key, score] : scores) {
    out.heads[key] = HeadStatus{score, layer_range.contains(key.layer) && is_active(score, lambda)};
  }
  return out;
}

std::vector<AlignmentScore> score_tokens(const Matrix& attn, const SceneContext& scene,
                                         RegionScope scope, HeadKey head) {
  const auto& tokens = scene.sequence.utterances;
  std::vector<AlignmentScore> out;
  out.reserve(tokens.size());
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const auto& tok = tokens[k];
    std::vector<std::size_t> region;
    std::optional<std::size_t> frame;
    if (scope == RegionScope::kTokenFrame) {
      frame = scene.token_frames.at(k);
      if (const auto* r = scene.regions.find(tok.speaker, *frame)) region = *r;
    } else {
      region = scene.regions.speaker_union(tok.speaker);
    }
    if (region.empty()) continue;
    auto row = attn.row(tok.sequence_index);
    out.push_back(AlignmentScore{attn_max(row, region), attn_mean(row, region),
                                 tok.sequence_index, tok.speaker, frame, head});
  }
  return out;
}

void HeadSelectionStats::add(const HeadSelection& selection) {
  for (const auto& [key, status] : selection.heads) {
    auto& e = entries_[key];
    e.activities.push_back(status.activity);
    e.active += status.active ? 1 : 0;
  }
}

std::size_t HeadSelectionStats::active_total() const {
  std::size_t n = 0;
  for (const auto& [key, e] : entries_) n += e.active;
  return n;
}

std::size_t HeadSelectionStats::observations_total() const {
  std::size_t n = 0;
  for (const auto& [key, e] : entries_) n += e.observations();
  return n;
}

AlignmentReport aggregate_report(std::span<const std::vector<AlignmentScore>> samples,
                                 const HeadSelectionStats& selection) {
  if (samples.empty()) throw ContractViolation("aggregate_report: no samples");

  std::vector<double> maxes;
  std::vector<double> means;
  std::map<HeadKey, std::pair<std::vector<double>, std::vector<double>>> per_head;
  for (const auto& sample : samples) {
    for (const auto& s : sample) {
      maxes.push_back(s.attn_max);
      means.push_back(s.attn_mean);
      auto& bucket = per_head[s.head];
      bucket.first.push_back(s.attn_max);
      bucket.second.push_back(s.attn_mean);
    }
  }

  AlignmentReport report;
  report.overall = summarize(maxes, means);
  report.active_heads = selection.active_total();
  report.head_observations = selection.observations_total();
  report.active_head_ratio =
      report.head_observations == 0
          ? 0.0
          : static_cast<double>(report.active_heads) / static_cast<double>(report.head_observations);

  std::set<HeadKey> keys;
  for (const auto& [key, e] : selection.entries()) keys.insert(key);
  for (const auto& [key, bucket] : per_head) keys.insert(key);
  for (const auto& key : keys) {
    HeadBreakdown hb;
    hb.head = key;
    if (auto it = selection.entries().find(key); it != selection.entries().end()) {
      const auto& e = it->second;
      if (e.observations() > 0) {
        hb.mean_activity = stable_mean(e.activities);
        hb.active_fraction = static_cast<double>(e.active) / static_cast<double>(e.observations());
      }
    }
    if (auto it = per_head.find(key); it != per_head.end()) {
      hb.metrics = summarize(it->second.first, it->second.second);
    }
    report.heads.push_back(hb);
  }
  return report;
}

}  // namespace socattn
