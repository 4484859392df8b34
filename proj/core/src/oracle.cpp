// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "socattn/oracle.hpp"

#include <cmath>
#include <set>
#include <vector>

#include "socattn/error.hpp"

namespace socattn::oracle {

namespace {

// Two-pass masked softmax in long double.
std::vector<double> reference_softmax(const std::vector<double>& logits,
                                      const std::vector<bool>& visible) {
  long double peak = 0.0L;
  bool seen = false;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (!visible[j]) continue;
    if (!seen || logits[j] > peak) peak = logits[j];
    seen = true;
  }
  if (!seen) throw ContractViolation("oracle softmax: fully masked row");
  long double total = 0.0L;
  std::vector<long double> e(logits.size(), 0.0L);
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (!visible[j]) continue;
    e[j] = std::exp(static_cast<long double>(logits[j]) - peak);
    total += e[j];
  }
  std::vector<double> out(logits.size(), 0.0);
  for (std::size_t j = 0; j < logits.size(); ++j) out[j] = static_cast<double>(e[j] / total);
  return out;
}

}  // namespace

Matrix dense_biased_attention(const Matrix& scores, const BiasPlan& plan, const Mask& mask) {
  const std::size_t n = scores.rows();
  if (scores.cols() != n || mask.rows() != n || mask.cols() != n) {
    throw ContractViolation("oracle: scores and mask must be square and equal in shape");
  }
  std::vector<std::vector<double>> bias(n, std::vector<double>(n, 0.0));
  for (const auto& row : plan.rows()) {
    for (std::size_t j : row.keys) {
      if (row.query >= n || j >= n || !mask.visible(row.query, j)) {
        throw ContractViolation("oracle: bias entry on a masked or missing position");
      }
      bias[row.query][j] = row.value;
    }
  }
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> logits(n);
    std::vector<bool> visible(n);
    for (std::size_t j = 0; j < n; ++j) {
      logits[j] = scores(i, j) + bias[i][j];
      visible[j] = mask.visible(i, j);
    }
    const auto p = reference_softmax(logits, visible);
    for (std::size_t j = 0; j < n; ++j) out(i, j) = p[j];
  }
  return out;
}

std::map<HeadKey, double> exhaustive_head_scan(const Matrix& seq_embeddings,
                                               const LayerStack& stack,
                                               const SceneContext& scene) {
  std::map<HeadKey, double> out;
  const std::size_t n = seq_embeddings.rows();
  const std::size_t d = seq_embeddings.cols();
  std::set<std::size_t> in_v_all(scene.regions.v_all().begin(), scene.regions.v_all().end());
  const auto& tokens = scene.sequence.utterances;
  if (tokens.empty() || in_v_all.empty()) return out;

  for (std::size_t l = 0; l < stack.n_layers(); ++l) {
    for (std::size_t h = 0; h < stack.n_heads(l); ++h) {
      const auto& w = stack.head(l, h);
      const std::size_t dh = w.head_dim();
      const double root = std::sqrt(static_cast<double>(dh));

      long double total = 0.0L;
      for (const auto& tok : tokens) {
        const std::size_t i = tok.sequence_index;
        std::vector<double> logits(n, 0.0);
        std::vector<bool> visible(n, false);
        std::vector<double> q(dh, 0.0);
        for (std::size_t c = 0; c < dh; ++c) {
          for (std::size_t m = 0; m < d; ++m) q[c] += seq_embeddings(i, m) * w.w_q(m, c);
        }
        for (std::size_t j = 0; j <= i && j < n; ++j) {
          double dot = 0.0;
          for (std::size_t c = 0; c < dh; ++c) {
            double k = 0.0;
            for (std::size_t m = 0; m < d; ++m) k += seq_embeddings(j, m) * w.w_k(m, c);
            dot += q[c] * k;
          }
          logits[j] = dot / root;
          visible[j] = true;
        }
        const auto p = reference_softmax(logits, visible);
        for (std::size_t j = 0; j < n; ++j) {
          if (in_v_all.contains(j)) total += p[j];
        }
      }
      out[HeadKey{l, h}] = static_cast<double>(
          total / (static_cast<long double>(tokens.size()) * static_cast<long double>(in_v_all.size())));
    }
  }
  return out;
}

}  // namespace socattn::oracle
