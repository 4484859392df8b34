// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "socattn/attention.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "socattn/error.hpp"
#include "socattn/oracle.hpp"
#include "test_support.hpp"

namespace socattn {
namespace {

using testing::random_matrix;
using testing::small_spec;

// 2 frames of 1x2 patches (tokens 0..3), one prompt token (4), two
// utterance tokens (5: A at frame 0, 6: B at frame 1).
SceneContext hand_scene() {
  Scene s;
  s.sequence.visual = PatchGrid{2, 1, 2, 0};
  s.sequence.frame_times = {0.0, 1.0};
  s.sequence.other_text = {4};
  s.sequence.utterances = {UtteranceToken{5, "hi", SpeakerId{"A"}, 0.1},
                           UtteranceToken{6, "yo", SpeakerId{"B"}, 0.9}};
  s.sequence.total_len = 7;
  s.speakers = {SpeakerId{"A"}, SpeakerId{"B"}};
  s.boxes = {SpeakerBox{SpeakerId{"A"}, 0, Box{0, 0, 0.5, 1}},
             SpeakerBox{SpeakerId{"B"}, 1, Box{0.5, 0, 1, 1}}};
  return prepare_scene(s);
}

TEST(HeadScores, IdentityProjectionsOnOrthonormalRows) {
  const HeadWeights hw{Matrix::identity(4), Matrix::identity(4)};
  const auto s = head_scores(Matrix::identity(4), hw);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(s(i, j), i == j ? 0.5 : 0.0);
  }
}

TEST(HeadScores, ZeroEmbeddings) {
  const HeadWeights hw{Matrix::identity(3), Matrix::identity(3)};
  EXPECT_EQ(head_scores(Matrix(5, 3), hw), Matrix(5, 5));
}

TEST(HeadScores, SingleToken) {
  const HeadWeights hw{Matrix::identity(2), Matrix::identity(2)};
  EXPECT_DOUBLE_EQ(head_scores(Matrix{{3, 4}}, hw)(0, 0), 25.0 / std::sqrt(2.0));
}

TEST(HeadScores, DimensionMismatch) {
  const HeadWeights hw{Matrix::identity(3), Matrix::identity(3)};
  EXPECT_THROW(head_scores(Matrix(2, 2), hw), ContractViolation);
}

TEST(BaselineAttention, UniformAndCausal) {
  EXPECT_EQ(baseline_attention(Matrix(2, 2), Mask(2, 2, true)), (Matrix{{0.5, 0.5}, {0.5, 0.5}}));
  EXPECT_EQ(baseline_attention(Matrix(2, 2), Mask::causal(2)), (Matrix{{1, 0}, {0.5, 0.5}}));
}

TEST(BaselineAttention, LnTwoRow) {
  const auto a = baseline_attention(Matrix{{std::log(2.0), 0}, {std::log(2.0), 0}}, Mask(2, 2, true));
  EXPECT_NEAR(a(0, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(a(0, 1), 1.0 / 3.0, 1e-15);
}

TEST(CrossModalBlock, ShapeAndValues) {
  const auto scene = hand_scene();
  const auto a = baseline_attention(Matrix(7, 7), Mask(7, 7, true));
  const auto block = cross_modal_block(a, scene.sequence);
  EXPECT_EQ(block.rows(), 2u);
  EXPECT_EQ(block.cols(), 4u);
  for (double v : block.data()) EXPECT_DOUBLE_EQ(v, 1.0 / 7.0);
}

TEST(CrossModalBlock, EmptyUtterances) {
  auto scene = hand_scene();
  scene.sequence.utterances.clear();
  EXPECT_EQ(cross_modal_block(Matrix(7, 7), scene.sequence).rows(), 0u);
}

TEST(CrossModalBlock, ReembeddingRoundTrip) {
  Rng rng(41);
  const auto scene = hand_scene();
  const auto a = random_matrix(rng, 7, 7, 0, 1);
  const auto block = cross_modal_block(a, scene.sequence);
  Matrix back(7, 7);
  const auto rows = scene.sequence.utterance_indices();
  const auto cols = scene.sequence.visual_indices();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) back(rows[r], cols[c]) = block(r, c);
  }
  EXPECT_EQ(cross_modal_block(back, scene.sequence), block);
}

Matrix scores_with_visual_row(std::size_t row, std::vector<double> visual) {
  Matrix s(7, 7);
  for (std::size_t j = 0; j < visual.size(); ++j) s(row, j) = visual[j];
  return s;
}

TEST(BiasPlan, AdaptiveValueIsRowMaxOverVAll) {
  const auto scene = hand_scene();
  // v_all = {0, 3}: A's left patch at frame 0 and B's right patch at frame 1.
  ASSERT_EQ(scene.regions.v_all(), (std::vector<std::size_t>{0, 3}));
  Matrix s(7, 7);
  s(5, 0) = 0.2;
  s(5, 3) = -0.1;
  s(5, 1) = 0.5;  // not in v_all
  BiasConfig cfg;
  const auto plan = compute_bias_plan(s, scene, cfg);
  ASSERT_EQ(plan.rows().size(), 2u);
  EXPECT_DOUBLE_EQ(plan.row_for(5)->value, 0.2);
  EXPECT_EQ(plan.row_for(5)->keys, (std::vector<std::size_t>{0}));
  cfg.alpha = 0.5;
  EXPECT_DOUBLE_EQ(compute_bias_plan(s, scene, cfg).row_for(5)->value, 0.1);
}

TEST(BiasPlan, SpecRowMax) {
  // Scores over v_all [0.2, -0.1, 0.5]: value 0.5 at alpha 1, 0.25 at alpha 0.5.
  const std::vector<double> row{0.2, -0.1, 0.5};
  const std::vector<std::size_t> v_all{0, 1, 2};
  EXPECT_DOUBLE_EQ(row_reference(row, {}, v_all, MaxSource::kPreSoftmax), 0.5);
  EXPECT_DOUBLE_EQ(0.5 * row_reference(row, {}, v_all, MaxSource::kPreSoftmax), 0.25);
}

TEST(BiasPlan, ZeroAlphaGivesZeroEntries) {
  Rng rng(42);
  const auto scene = hand_scene();
  BiasConfig cfg;
  cfg.alpha = 0.0;
  const auto plan = compute_bias_plan(random_matrix(rng, 7, 7, -2, 2), scene, cfg);
  for (const auto& r : plan.rows()) EXPECT_EQ(r.value, 0.0);
}

TEST(BiasPlan, NegativeReferenceAndClamp) {
  const auto scene = hand_scene();
  Matrix s(7, 7);
  s(5, 0) = -0.4;
  s(5, 3) = -0.3;
  BiasConfig cfg;
  EXPECT_DOUBLE_EQ(compute_bias_plan(s, scene, cfg).row_for(5)->value, -0.3);
  cfg.clamp_nonnegative = true;
  EXPECT_DOUBLE_EQ(compute_bias_plan(s, scene, cfg).row_for(5)->value, 0.0);
}

TEST(BiasPlan, FixedStrength) {
  const auto scene = hand_scene();
  BiasConfig cfg;
  cfg.strength = BiasStrength::kFixed;
  cfg.fixed_bias = 10.0;
  const auto plan = compute_bias_plan(Matrix(7, 7), scene, cfg);
  for (const auto& r : plan.rows()) EXPECT_EQ(r.value, 10.0);
}

TEST(BiasPlan, PostSoftmaxSourceNeedsBaseline) {
  const auto scene = hand_scene();
  BiasConfig cfg;
  cfg.max_source = MaxSource::kPostSoftmax;
  EXPECT_THROW(compute_bias_plan(Matrix(7, 7), scene, cfg), ContractViolation);
  const auto base = baseline_attention(Matrix(7, 7), Mask::causal(7));
  EXPECT_DOUBLE_EQ(compute_bias_plan(Matrix(7, 7), scene, cfg, &base).row_for(5)->value, 1.0 / 6.0);
}

TEST(BiasPlan, FrameWindowWidensRegion) {
  const auto scene = hand_scene();
  BiasConfig cfg;
  cfg.frame_window = 1;
  // A has a box only at frame 0; B only at frame 1. The window does not add frames that lack boxes.
  const auto plan = compute_bias_plan(Matrix(7, 7), scene, cfg);
  EXPECT_EQ(plan.row_for(5)->keys, (std::vector<std::size_t>{0}));
  EXPECT_EQ(plan.row_for(6)->keys, (std::vector<std::size_t>{3}));
}

TEST(BiasPlan, TokenWithoutRegionIsSkipped) {
  auto scene = hand_scene();
  scene.token_frames = {1, 0};  // A has no box at frame 1, B none at frame 0
  EXPECT_TRUE(compute_bias_plan(Matrix(7, 7), scene, BiasConfig{}).empty());
}

TEST(BiasPlan, RejectsUnsortedKeysAndDuplicateRows) {
  BiasPlan plan;
  EXPECT_THROW(plan.add_row(BiasRow{1, 0, 1, {2, 1}}), ContractViolation);
  plan.add_row(BiasRow{1, 0, 1, {0}});
  EXPECT_THROW(plan.add_row(BiasRow{1, 0, 1, {0}}), ContractViolation);
  EXPECT_EQ(plan.entry_count(), 1u);
  EXPECT_EQ(plan.value_at(1, 0), 1.0);
  EXPECT_FALSE(plan.value_at(1, 1).has_value());
}

TEST(BiasedAttention, EmptyPlanEqualsBaseline) {
  Rng rng(43);
  const auto s = random_matrix(rng, 6, 6, -3, 3);
  const auto mask = Mask::causal(6);
  EXPECT_EQ(biased_attention(s, BiasPlan{}, mask), baseline_attention(s, mask));
}

TEST(BiasedAttention, LnThreeOnTwoOfFourKeys) {
  BiasPlan plan;
  plan.add_row(BiasRow{3, 0, std::log(3.0), {0, 1}});
  const auto a = biased_attention(Matrix(4, 4), plan, Mask::causal(4));
  EXPECT_NEAR(a(3, 0), 3.0 / 8.0, 1e-15);
  EXPECT_NEAR(a(3, 1), 3.0 / 8.0, 1e-15);
  EXPECT_NEAR(a(3, 2), 1.0 / 8.0, 1e-15);
  EXPECT_NEAR(a(3, 3), 1.0 / 8.0, 1e-15);
}

TEST(BiasedAttention, MaskedEntryIsContractViolation) {
  BiasPlan plan;
  plan.add_row(BiasRow{1, 0, 1.0, {2}});
  EXPECT_THROW(biased_attention(Matrix(3, 3), plan, Mask::causal(3)), ContractViolation);
}

TEST(BiasedAttention, NegativeValueLowersSubsetMass) {
  Rng rng(44);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 2 + rng.below(10);
    const auto s = random_matrix(rng, n, n, -4, 4);
    const auto keys = testing::random_subset(rng, n);
    BiasPlan plan;
    plan.add_row(BiasRow{n - 1, 0, -0.01 - 3 * rng.uniform(), keys});
    const auto mask = Mask(n, n, true);
    const auto base = baseline_attention(s, mask);
    const auto biased = biased_attention(s, plan, mask);
    double mb = 0, mx = 0;
    for (std::size_t j : keys) {
      mb += base(n - 1, j);
      mx += biased(n - 1, j);
    }
    EXPECT_LT(mx, mb);
  }
}

TEST(BiasedAttentionProperty, ZeroBiasIdentity) {
  Rng rng(45);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.below(20);
    const auto s = random_matrix(rng, n, n, -5, 5);
    BiasPlan plan;
    for (std::size_t i = 1; i < n; i += 2) plan.add_row(BiasRow{i, 0, 0.0, {0}});
    const auto mask = Mask::causal(n);
    EXPECT_LE(max_abs_diff(biased_attention(s, plan, mask), baseline_attention(s, mask)), 1e-12);
  }
}

TEST(BiasedAttentionProperty, RowLocalityAndStochasticity) {
  Rng rng(46);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 3 + rng.below(15);
    const auto s = random_matrix(rng, n, n, -5, 5);
    const auto mask = Mask::causal(n);
    BiasPlan plan;
    std::set<std::size_t> biased_rows;
    for (std::size_t i = 1; i < n; ++i) {
      if (rng.uniform() < 0.4) {
        plan.add_row(BiasRow{i, 0, 2.0 * rng.normal(), testing::random_subset(rng, i + 1, false)});
        biased_rows.insert(i);
      }
    }
    const auto base = baseline_attention(s, mask);
    const auto b = biased_attention(s, plan, mask);
    EXPECT_EQ(b, biased_attention(s, plan, mask, base));
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = b.row(i);
      EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-9);
      if (!biased_rows.contains(i)) {
        for (std::size_t j = 0; j < n; ++j) EXPECT_EQ(b(i, j), base(i, j));
      }
    }
  }
}

TEST(EvaluateHeadRows, MatchesFullEvaluationOnRequestedRows) {
  const auto spec = small_spec(3);
  const auto gen = generate_scene(spec);
  const auto stack = generate_stack(spec);
  const auto scene = prepare_scene(gen.scene);
  const auto mask = Mask::causal(scene.sequence.total_len);
  const auto rows = scene.utterance_indices();
  for (std::size_t h = 0; h < 4; ++h) {
    const auto full = evaluate_head(gen.embeddings, stack.head(1, h), scene, mask);
    const auto part = evaluate_head_rows(gen.embeddings, stack.head(1, h), scene, mask, rows);
    ASSERT_TRUE(full.activity && part.activity);
    EXPECT_EQ(*full.activity, *part.activity);
    for (std::size_t i : rows) {
      for (std::size_t j = 0; j < scene.sequence.total_len; ++j) {
        EXPECT_EQ(full.scores(i, j), part.scores(i, j));
        EXPECT_EQ(full.attention(i, j), part.attention(i, j));
      }
    }
  }
  EXPECT_THROW(evaluate_head_rows(gen.embeddings, stack.head(0, 0), scene, mask,
                                  std::vector<std::size_t>{rows.front()}),
               ContractViolation);
}

TEST(BiasConfig, Validation) {
  BiasConfig cfg;
  EXPECT_NO_THROW(cfg.validate(28));
  EXPECT_THROW(cfg.validate(12), ContractViolation);
  cfg.alpha = -1;
  EXPECT_THROW(cfg.validate(28), ContractViolation);
  cfg = BiasConfig{};
  cfg.lambda = std::numeric_limits<double>::infinity();
  EXPECT_NO_THROW(cfg.validate(28));
  cfg.lambda = -1;
  EXPECT_THROW(cfg.validate(28), ContractViolation);
}

class ForwardPassTest : public ::testing::Test {
 protected:
  void SetUp() override {
    spec_ = small_spec(5);
    gen_ = generate_scene(spec_);
    stack_ = generate_stack(spec_);
    scene_ = prepare_scene(gen_.scene);
  }
  ForwardResult pass(const BiasConfig& cfg) const {
    return forward_pass(gen_.embeddings, stack_, scene_, cfg);
  }
  SynthSpec spec_;
  SyntheticScene gen_;
  LayerStack stack_;
  SceneContext scene_;
};

TEST_F(ForwardPassTest, InfiniteLambdaLeavesBaseline) {
  BiasConfig cfg;
  cfg.layer_range = LayerRange::all(4);
  cfg.lambda = std::numeric_limits<double>::infinity();
  const auto r = pass(cfg);
  ASSERT_EQ(r.heads.size(), 16u);
  for (const auto& h : r.heads) {
    EXPECT_FALSE(h.active);
    EXPECT_EQ(h.biased, h.baseline);
  }
  EXPECT_EQ(r.selection().active_count(), 0u);
}

TEST_F(ForwardPassTest, EmptyRangeLeavesBaseline) {
  BiasConfig cfg;
  cfg.layer_range = LayerRange::none();
  cfg.lambda = 0;
  for (const auto& h : pass(cfg).heads) EXPECT_EQ(h.biased, h.baseline);
}

TEST_F(ForwardPassTest, ZeroLambdaBiasesExactlyRegionTokens) {
  BiasConfig cfg;
  cfg.layer_range = LayerRange::all(4);
  cfg.lambda = 0;
  std::set<std::size_t> expected;
  const auto& toks = scene_.sequence.utterances;
  for (std::size_t k = 0; k < toks.size(); ++k) {
    if (scene_.regions.find(toks[k].speaker, scene_.token_frames[k])) expected.insert(toks[k].sequence_index);
  }
  ASSERT_FALSE(expected.empty());
  for (const auto& h : pass(cfg).heads) {
    ASSERT_TRUE(h.active);
    std::set<std::size_t> changed;
    for (std::size_t i = 0; i < h.baseline.rows(); ++i) {
      for (std::size_t j = 0; j < h.baseline.cols(); ++j) {
        if (h.baseline(i, j) != h.biased(i, j)) changed.insert(i);
      }
    }
    EXPECT_EQ(changed, expected);
    EXPECT_LE(max_abs_diff(h.biased, oracle::dense_biased_attention(
                                         head_scores(gen_.embeddings, stack_.head(h.head.layer, h.head.head)),
                                         h.plan, Mask::causal(h.baseline.rows()))),
              1e-9);
  }
}

TEST_F(ForwardPassTest, VisitorAndCollectingFormsAgree) {
  BiasConfig cfg;
  cfg.layer_range = LayerRange::closed(1, 2);
  cfg.lambda = 0;
  const auto collected = pass(cfg);
  std::size_t seen = 0;
  forward_pass(gen_.embeddings, stack_, scene_, cfg, threshold_selector(cfg), [&](const HeadTrace& t) {
    const auto& h = collected.at(t.head);
    EXPECT_EQ(t.active, h.active);
    EXPECT_EQ(t.biased, h.biased);
    EXPECT_EQ(t.baseline, h.baseline);
    ++seen;
  });
  EXPECT_EQ(seen, 16u);
}

TEST_F(ForwardPassTest, VisualRowsNeverBiased) {
  BiasConfig cfg;
  cfg.layer_range = LayerRange::all(4);
  cfg.lambda = 0;
  cfg.alpha = 50;
  for (const auto& h : pass(cfg).heads) {
    for (const auto& row : h.plan.rows()) EXPECT_FALSE(scene_.sequence.visual.contains(row.query));
    for (std::size_t i = 0; i < scene_.sequence.visual.end(); ++i) {
      for (std::size_t j = 0; j < h.baseline.cols(); ++j) EXPECT_EQ(h.baseline(i, j), h.biased(i, j));
    }
  }
}

}  // namespace
}  // namespace socattn
