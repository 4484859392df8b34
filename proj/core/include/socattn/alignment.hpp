// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "socattn/layer_range.hpp"
#include "socattn/numerics.hpp"
#include "socattn/scene_model.hpp"

namespace socattn {

// Display scales of the cross-attention table: AttnMax in units of 1e-2,
// AttnMean in units of 1e-4.
inline constexpr double kAttnMaxDisplayScale = 1e2;
inline constexpr double kAttnMeanDisplayScale = 1e4;

/// Largest attention weight the row places on any token of `region`.
double attn_max(std::span<const double> attn_row, std::span<const std::size_t> region);

/// Average attention weight over `region`.
double attn_mean(std::span<const double> attn_row, std::span<const std::size_t> region);

/// Mean of attn[u][v] over u in `utterances`, v in `v_all`.
double head_activity_score(const Matrix& attn, std::span<const std::size_t> utterances,
                           std::span<const std::size_t> v_all);

// Activity of a head whose causal rows are uniform: mean over utterance rows of 1/(i+1).
// Requires every v_all index to precede every utterance row.
double uniform_head_activity(std::span<const std::size_t> utterances);

/// Strict threshold test; ties are inactive and lambda = +inf admits nothing.
inline bool is_active(double activity, double lambda) { return activity > lambda; }

struct HeadStatus {
  double activity = 0.0;
  bool active = false;
};

struct HeadSelection {
  std::map<HeadKey, HeadStatus> heads;

  std::size_t active_count() const;
  std::set<HeadKey> active_set() const;
  bool active(HeadKey key) const;
};

/// Heads outside `layer_range` are inactive whatever their score.
HeadSelection classify_heads(const std::map<HeadKey, double>& scores, double lambda,
                             LayerRange layer_range);

/// Which speaker region a token's score is measured against.
enum class RegionScope {
  kTokenFrame,  // region of the token's speaker at the token's mapped frame
  kAllFrames,   // union of the speaker's regions over every frame
};

struct AlignmentScore {
  double attn_max = 0.0;
  double attn_mean = 0.0;
  std::size_t token_index = 0;
  SpeakerId speaker;
  std::optional<std::size_t> frame;  // nullopt for the all-frames scope
  HeadKey head;
};

/// Per-token scores for one head's attention matrix. Tokens whose speaker has
/// no region under `scope` are skipped.
std::vector<AlignmentScore> score_tokens(const Matrix& attn, const SceneContext& scene,
                                         RegionScope scope, HeadKey head);

struct MetricSummary {
  double attn_max = 0.0;
  double attn_mean = 0.0;
  std::size_t tokens = 0;

  double attn_max_display() const { return attn_max * kAttnMaxDisplayScale; }
  double attn_mean_display() const { return attn_mean * kAttnMeanDisplayScale; }
};

/// Running per-head activity statistics over many forward passes.
class HeadSelectionStats {
 public:
  void add(const HeadSelection& selection);

  struct Entry {
    std::vector<double> activities;
    std::size_t active = 0;

    std::size_t observations() const noexcept { return activities.size(); }
  };

  const std::map<HeadKey, Entry>& entries() const noexcept { return entries_; }
  std::size_t active_total() const;
  std::size_t observations_total() const;

 private:
  std::map<HeadKey, Entry> entries_;
};

struct HeadBreakdown {
  HeadKey head;
  double mean_activity = 0.0;
  double active_fraction = 0.0;
  MetricSummary metrics;
};

struct AlignmentReport {
  MetricSummary overall;
  std::vector<HeadBreakdown> heads;
  std::size_t active_heads = 0;
  std::size_t head_observations = 0;
  double active_head_ratio = 0.0;
};

/// Unweighted per-token means over every sample; the active-head ratio is
/// active observations over all (layer, head) observations. Sums are taken
/// over sorted values so the result does not depend on sample order.
AlignmentReport aggregate_report(std::span<const std::vector<AlignmentScore>> samples,
                                 const HeadSelectionStats& selection);

}  // namespace socattn
