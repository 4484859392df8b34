// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "socattn/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "socattn/error.hpp"

namespace socattn {

LayerStack::LayerStack(std::size_t model_dim, std::vector<std::vector<HeadWeights>> layers)
    : model_dim_(model_dim), layers_(std::move(layers)) {
  bool first = true;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    for (std::size_t h = 0; h < layers_[l].size(); ++h) {
      const auto& hw = layers_[l][h];
      const std::string where = "layer " + std::to_string(l) + " head " + std::to_string(h);
      if (hw.w_q.rows() != hw.w_k.rows() || hw.w_q.cols() != hw.w_k.cols()) {
        throw ContractViolation(where + ": w_q and w_k differ in shape");
      }
      if (hw.model_dim() != model_dim_) throw ContractViolation(where + ": model_dim mismatch");
      if (hw.head_dim() == 0) throw ContractViolation(where + ": head_dim must be >= 1");
      if (first) {
        head_dim_ = hw.head_dim();
        first = false;
      } else if (hw.head_dim() != head_dim_) {
        throw ContractViolation(where + ": head_dim differs from the rest of the stack");
      }
    }
  }
}

std::size_t LayerStack::total_heads() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.size();
  return n;
}

void BiasConfig::validate(std::size_t n_layers) const {
  if (!std::isfinite(alpha) || alpha < 0.0) {
    throw ContractViolation("alpha must be finite and nonnegative");
  }
  if (std::isnan(lambda) || lambda < 0.0) throw ContractViolation("lambda must be nonnegative");
  if (!std::isfinite(fixed_bias)) throw ContractViolation("fixed_bias must be finite");
  if (!layer_range.empty() && layer_range.last >= n_layers) {
    throw ContractViolation("layer_range " + layer_range.to_string() + " exceeds a stack of " +
                            std::to_string(n_layers) + " layers");
  }
}

void BiasPlan::add_row(BiasRow row) {
  if (!std::is_sorted(row.keys.begin(), row.keys.end()) ||
      std::adjacent_find(row.keys.begin(), row.keys.end()) != row.keys.end()) {
    throw ContractViolation("bias row keys must be sorted and unique");
  }
  if (!std::isfinite(row.value)) throw ContractViolation("bias value must be finite");
  auto pos = std::lower_bound(rows_.begin(), rows_.end(), row.query,
                              [](const BiasRow& r, std::size_t q) { return r.query < q; });
  if (pos != rows_.end() && pos->query == row.query) {
    throw ContractViolation("duplicate bias row for query " + std::to_string(row.query));
  }
  rows_.insert(pos, std::move(row));
}

std::size_t BiasPlan::entry_count() const {
  std::size_t n = 0;
  for (const auto& r : rows_) n += r.keys.size();
  return n;
}

const BiasRow* BiasPlan::row_for(std::size_t query) const {
  auto pos = std::lower_bound(rows_.begin(), rows_.end(), query,
                              [](const BiasRow& r, std::size_t q) { return r.query < q; });
  return pos != rows_.end() && pos->query == query ? &*pos : nullptr;
}

std::optional<double> BiasPlan::value_at(std::size_t query, std::size_t key) const {
  const BiasRow* r = row_for(query);
  if (r == nullptr || !std::binary_search(r->keys.begin(), r->keys.end(), key)) {
    return std::nullopt;
  }
  return r->value;
}

Matrix head_scores(const Matrix& seq_embeddings, const HeadWeights& head) {
  if (seq_embeddings.cols() != head.model_dim()) {
    throw ContractViolation("head_scores: embeddings have " +
                            std::to_string(seq_embeddings.cols()) + " columns, head expects " +
                            std::to_string(head.model_dim()));
  }
  return scaled_scores(matmul(seq_embeddings, head.w_q), matmul(seq_embeddings, head.w_k),
                       head.head_dim());
}

Matrix baseline_attention(const Matrix& scores, const Mask& mask) {
  if (scores.rows() != scores.cols()) throw ContractViolation("attention scores must be square");
  return row_softmax(scores, mask);
}

Matrix cross_modal_block(const Matrix& attn, const TokenSequence& seq) {
  const auto& grid = seq.visual;
  Matrix out(seq.utterances.size(), grid.size());
  for (std::size_t r = 0; r < seq.utterances.size(); ++r) {
    auto src = attn.row(seq.utterances[r].sequence_index);
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(grid.base_offset), grid.size(),
                out.row(r).begin());
  }
  return out;
}

double row_reference(std::span<const double> scores_row, std::span<const double> baseline_row,
                     std::span<const std::size_t> v_all, MaxSource source) {
  const auto row = source == MaxSource::kPreSoftmax ? scores_row : baseline_row;
  double best = row[v_all.front()];
  for (std::size_t j : v_all) best = std::max(best, row[j]);
  return best;
}

BiasPlan compute_bias_plan(const Matrix& scores, const SceneContext& scene, const BiasConfig& cfg,
                           const Matrix* baseline) {
  BiasPlan plan;
  const auto& v_all = scene.regions.v_all();
  if (v_all.empty()) return plan;
  if (cfg.max_source == MaxSource::kPostSoftmax && baseline == nullptr) {
    throw ContractViolation("compute_bias_plan: post-softmax reference needs baseline attention");
  }

  const auto& tokens = scene.sequence.utterances;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const auto& tok = tokens[k];
    auto keys = scene.regions.window(tok.speaker, scene.token_frames.at(k), cfg.frame_window);
    if (keys.empty()) continue;

    const auto i = tok.sequence_index;
    const double reference =
        row_reference(scores.row(i), baseline ? baseline->row(i) : std::span<const double>{},
                      v_all, cfg.max_source);
    double value =
        cfg.strength == BiasStrength::kAdaptive ? cfg.alpha * reference : cfg.fixed_bias;
    if (cfg.clamp_nonnegative) value = std::max(0.0, value);
    plan.add_row(BiasRow{i, reference, value, std::move(keys)});
  }
  return plan;
}

namespace {

void apply_plan_rows(const Matrix& scores, const BiasPlan& plan, const Mask& mask, Matrix& out) {
  for (const auto& row : plan.rows()) {
    if (row.query >= scores.rows()) {
      throw ContractViolation("bias row " + std::to_string(row.query) + " outside score matrix");
    }
    auto dst = out.row(row.query);
    auto src = scores.row(row.query);
    std::copy(src.begin(), src.end(), dst.begin());
    for (std::size_t j : row.keys) {
      if (j >= scores.cols() || !mask.visible(row.query, j)) {
        throw ContractViolation("bias entry (" + std::to_string(row.query) + ", " +
                                std::to_string(j) + ") targets a masked position");
      }
      dst[j] += row.value;
    }
    softmax_row(dst, mask.row(row.query));
  }
}

}  // namespace

Matrix biased_attention(const Matrix& scores, const BiasPlan& plan, const Mask& mask) {
  Matrix out = baseline_attention(scores, mask);
  apply_plan_rows(scores, plan, mask, out);
  return out;
}

Matrix biased_attention(const Matrix& scores, const BiasPlan& plan, const Mask& mask,
                        const Matrix& baseline) {
  if (baseline.rows() != scores.rows() || baseline.cols() != scores.cols()) {
    throw ContractViolation("biased_attention: baseline shape differs from scores");
  }
  Matrix out = baseline;
  apply_plan_rows(scores, plan, mask, out);
  return out;
}

HeadBaseline evaluate_head(const Matrix& seq_embeddings, const HeadWeights& head,
                           const SceneContext& scene, const Mask& mask) {
  HeadBaseline hb;
  hb.scores = head_scores(seq_embeddings, head);
  hb.attention = baseline_attention(hb.scores, mask);
  const auto utterances = scene.utterance_indices();
  if (!utterances.empty() && !scene.regions.v_all().empty()) {
    hb.activity = head_activity_score(hb.attention, utterances, scene.regions.v_all());
  }
  return hb;
}

HeadBaseline evaluate_head_rows(const Matrix& seq_embeddings, const HeadWeights& head,
                                const SceneContext& scene, const Mask& mask,
                                std::span<const std::size_t> rows) {
  const std::size_t n = seq_embeddings.rows();
  if (seq_embeddings.cols() != head.model_dim()) {
    throw ContractViolation("evaluate_head_rows: embeddings have " +
                            std::to_string(seq_embeddings.cols()) + " columns, head expects " +
                            std::to_string(head.model_dim()));
  }
  if (mask.rows() != n || mask.cols() != n) {
    throw ContractViolation("evaluate_head_rows: mask shape differs from sequence length");
  }
  Matrix picked(rows.size(), seq_embeddings.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= n) throw ContractViolation("evaluate_head_rows: row out of range");
    const auto src = seq_embeddings.row(rows[r]);
    std::copy(src.begin(), src.end(), picked.row(r).begin());
  }
  const Matrix partial =
      scaled_scores(matmul(picked, head.w_q), matmul(seq_embeddings, head.w_k), head.head_dim());

  HeadBaseline hb;
  hb.scores = Matrix(n, n);
  hb.attention = Matrix(n, n);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = partial.row(r);
    std::copy(src.begin(), src.end(), hb.scores.row(rows[r]).begin());
    auto out = hb.attention.row(rows[r]);
    std::copy(src.begin(), src.end(), out.begin());
    try {
      softmax_row(out, mask.row(rows[r]));
    } catch (const ContractViolation&) {
      throw ContractViolation("evaluate_head_rows: row " + std::to_string(rows[r]) +
                              " is fully masked");
    }
  }
  const auto utterances = scene.utterance_indices();
  if (!utterances.empty() && !scene.regions.v_all().empty()) {
    for (std::size_t i : utterances) {
      if (std::find(rows.begin(), rows.end(), i) == rows.end()) {
        throw ContractViolation("evaluate_head_rows: rows must cover every utterance token");
      }
    }
    hb.activity = head_activity_score(hb.attention, utterances, scene.regions.v_all());
  }
  return hb;
}

HeadSelector threshold_selector(const BiasConfig& cfg) {
  return [range = cfg.layer_range, lambda = cfg.lambda](HeadKey head,
                                                         std::optional<double> activity) {
    return activity.has_value() && range.contains(head.layer) && is_active(*activity, lambda);
  };
}

void forward_pass(const Matrix& seq_embeddings, const LayerStack& stack,
                  const SceneContext& scene, const BiasConfig& cfg, const HeadSelector& selector,
                  const HeadVisitor& visitor) {
  cfg.validate(stack.n_layers());
  const std::size_t n = scene.sequence.total_len;
  if (seq_embeddings.rows() != n) {
    throw ContractViolation("forward_pass: " + std::to_string(seq_embeddings.rows()) +
                            " embedding rows for a sequence of " + std::to_string(n));
  }
  if (seq_embeddings.cols() != stack.model_dim()) {
    throw ContractViolation("forward_pass: embedding width differs from model_dim");
  }
  const Mask mask = Mask::causal(n);

  for (std::size_t l = 0; l < stack.n_layers(); ++l) {
    for (std::size_t h = 0; h < stack.n_heads(l); ++h) {
      const HeadKey key{l, h};
      HeadBaseline hb = evaluate_head(seq_embeddings, stack.head(l, h), scene, mask);
      const bool active = selector(key, hb.activity);
      BiasPlan plan;
      if (active) plan = compute_bias_plan(hb.scores, scene, cfg, &hb.attention);
      const Matrix biased =
          plan.empty() ? hb.attention : biased_attention(hb.scores, plan, mask, hb.attention);
      visitor(HeadTrace{key, hb.activity.value_or(0.0), active, hb.scores, hb.attention, biased,
                        plan});
    }
  }
}

const HeadAttention& ForwardResult::at(HeadKey key) const {
  for (const auto& h : heads) {
    if (h.head == key) return h;
  }
  throw ContractViolation("no head " + std::to_string(key.layer) + ":" +
                          std::to_string(key.head) + " in forward result");
}

HeadSelection ForwardResult::selection() const {
  HeadSelection out;
  for (const auto& h : heads) out.heads[h.head] = HeadStatus{h.activity, h.active};
  return out;
}

ForwardResult forward_pass(const Matrix& seq_embeddings, const LayerStack& stack,
                           const SceneContext& scene, const BiasConfig& cfg) {
  ForwardResult result;
  forward_pass(seq_embeddings, stack, scene, cfg, threshold_selector(cfg),
               [&](const HeadTrace& t) {
                 result.heads.push_back(
                     HeadAttention{t.head, t.activity, t.active, t.baseline, t.biased, t.plan});
               });
  return result;
}

}  // namespace socattn
