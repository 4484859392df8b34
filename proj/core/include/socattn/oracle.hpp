// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>

#include "socattn/attention.hpp"
#include "socattn/layer_range.hpp"
#include "socattn/numerics.hpp"
#include "socattn/scene_model.hpp"

// Brute-force references for differential tests and `socattn verify`. Nothing
// here calls the optimized kernels; the softmax is a separate implementation.
namespace socattn::oracle {

/// Materializes the dense N x N bias matrix, adds it to the scores and
/// applies a masked softmax.
Matrix dense_biased_attention(const Matrix& scores, const BiasPlan& plan, const Mask& mask);

/// Activity score of every head, recomputed with nested loops under a causal
/// mask.
std::map<HeadKey, double> exhaustive_head_scan(const Matrix& seq_embeddings,
                                               const LayerStack& stack,
                                               const SceneContext& scene);

}  // namespace socattn::oracle
