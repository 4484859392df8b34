// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "socattn/alignment.hpp"
#include "socattn/layer_range.hpp"
#include "socattn/numerics.hpp"
#include "socattn/scene_model.hpp"

namespace socattn {

/// Query/key projections of one attention head, both model_dim x head_dim.
struct HeadWeights {
  Matrix w_q;
  Matrix w_k;

  std::size_t model_dim() const noexcept { return w_q.rows(); }
  std::size_t head_dim() const noexcept { return w_q.cols(); }
};

class LayerStack {
 public:
  LayerStack() = default;
  LayerStack(std::size_t model_dim, std::vector<std::vector<HeadWeights>> layers);

  std::size_t model_dim() const noexcept { return model_dim_; }
  std::size_t head_dim() const noexcept { return head_dim_; }
  std::size_t n_layers() const noexcept { return layers_.size(); }
  std::size_t n_heads(std::size_t layer) const { return layers_.at(layer).size(); }
  std::size_t total_heads() const;

  const HeadWeights& head(std::size_t layer, std::size_t head) const {
    return layers_.at(layer).at(head);
  }

 private:
  std::size_t model_dim_ = 0;
  std::size_t head_dim_ = 0;
  std::vector<std::vector<HeadWeights>> layers_;
};

/// How the per-row bias value is obtained.
enum class BiasStrength {
  kAdaptive,  // alpha * (max cross-modal reference of the row)
  kFixed,     // constant fixed_bias on every biased entry
};

/// What the adaptive maximum is taken over.
enum class MaxSource {
  kPreSoftmax,   // scaled dot-product scores
  kPostSoftmax,  // baseline attention weights
};

struct BiasConfig {
  double alpha = 1.0;
  double lambda = 5e-5;
  LayerRange layer_range = LayerRange::closed(10, 19);
  bool clamp_nonnegative = false;
  std::size_t frame_window = 0;
  BiasStrength strength = BiasStrength::kAdaptive;
  double fixed_bias = 0.0;
  MaxSource max_source = MaxSource::kPreSoftmax;

  /// alpha finite and >= 0, lambda >= 0 (may be +inf), range inside the stack.
  void validate(std::size_t n_layers) const;
};

/// One biased query row: every key in `keys` receives `value`.
struct BiasRow {
  std::size_t query = 0;
  double reference = 0.0;  // the row maximum the value was derived from
  double value = 0.0;
  std::vector<std::size_t> keys;  // sorted, unique
};

/// Sparse additive bias. Each query row carries a single shared value, so the
/// plan is stored row-wise.
class BiasPlan {
 public:
  void add_row(BiasRow row);

  const std::vector<BiasRow>& rows() const noexcept { return rows_; }
  bool empty() const noexcept { return rows_.empty(); }
  std::size_t entry_count() const;
  std::optional<double> value_at(std::size_t query, std::size_t key) const;
  const BiasRow* row_for(std::size_t query) const;

 private:
  std::vector<BiasRow> rows_;  // sorted by query
};

/// Full N x N pre-softmax scores (X W_q)(X W_k)^T / sqrt(head_dim).
Matrix head_scores(const Matrix& seq_embeddings, const HeadWeights& head);

Matrix baseline_attention(const Matrix& scores, const Mask& mask);

/// Utterance rows x visual columns, in utterance order and grid order.
Matrix cross_modal_block(const Matrix& attn, const TokenSequence& seq);

/// The reference maximum for one query row, restricted to `v_all`.
/// `baseline_row` is consulted only for MaxSource::kPostSoftmax.
double row_reference(std::span<const double> scores_row, std::span<const double> baseline_row,
                     std::span<const std::size_t> v_all, MaxSource source);

/// `baseline` is required when cfg.max_source is kPostSoftmax.
BiasPlan compute_bias_plan(const Matrix& scores, const SceneContext& scene, const BiasConfig& cfg,
                           const Matrix* baseline = nullptr);

/// softmax(scores + bias) per row. Rows without plan entries are computed
/// exactly as in baseline_attention.
Matrix biased_attention(const Matrix& scores, const BiasPlan& plan, const Mask& mask);

/// Same result, reusing a precomputed baseline for the unbiased rows.
Matrix biased_attention(const Matrix& scores, const BiasPlan& plan, const Mask& mask,
                        const Matrix& baseline);

/// Scores, unbiased attention and cross-modal activity of one head.
struct HeadBaseline {
  Matrix scores;
  Matrix attention;
  std::optional<double> activity;  // nullopt when U or V_all is empty
};

HeadBaseline evaluate_head(const Matrix& seq_embeddings, const HeadWeights& head,
                           const SceneContext& scene, const Mask& mask);

/// evaluate_head restricted to the query `rows`: those rows of scores and
/// attention match evaluate_head exactly, every other row is left zero.
/// Activity, bias plans and alignment scores read utterance rows only, so
/// rows = utterance indices is enough for them.
HeadBaseline evaluate_head_rows(const Matrix& seq_embeddings, const HeadWeights& head,
                                const SceneContext& scene, const Mask& mask,
                                std::span<const std::size_t> rows);

/// Decides whether a head receives the bias, given its unbiased activity.
using HeadSelector =
    std::function<bool(HeadKey head, std::optional<double> activity)>;

/// Active iff the layer lies in cfg.layer_range and activity > cfg.lambda.
HeadSelector threshold_selector(const BiasConfig& cfg);

struct HeadTrace {
  HeadKey head;
  double activity = 0.0;
  bool active = false;
  const Matrix& scores;
  const Matrix& baseline;
  const Matrix& biased;
  const BiasPlan& plan;
};

using HeadVisitor = std::function<void(const HeadTrace&)>;

/// Runs every head of every layer. Each head is classified on its unbiased
/// attention and biased only when the selector marks it active; the visitor
/// sees both attention matrices. Nothing is retained between heads.
void forward_pass(const Matrix& seq_embeddings, const LayerStack& stack,
                  const SceneContext& scene, const BiasConfig& cfg, const HeadSelector& selector,
                  const HeadVisitor& visitor);

struct HeadAttention {
  HeadKey head;
  double activity = 0.0;
  bool active = false;
  Matrix baseline;
  Matrix biased;
  BiasPlan plan;
};

struct ForwardResult {
  std::vector<HeadAttention> heads;  // layer-major

  const HeadAttention& at(HeadKey key) const;
  HeadSelection selection() const;
};

/// Collecting form of forward_pass; keeps every head's matrices in memory.
ForwardResult forward_pass(const Matrix& seq_embeddings, const LayerStack& stack,
                           const SceneContext& scene, const BiasConfig& cfg);

}  // namespace socattn
