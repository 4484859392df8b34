// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "socattn/scene_model.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "socattn/error.hpp"
#include "test_support.hpp"

namespace socattn {
namespace {

SpeakerBox make_box(const std::string& s, std::size_t frame, double x0, double y0, double x1,
                    double y1) {
  return SpeakerBox{SpeakerId{s}, frame, Box{x0, y0, x1, y1}};
}

std::vector<std::size_t> frame_range(const PatchGrid& g, std::size_t t) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.patches_per_frame(); ++i) {
    out.push_back(g.base_offset + t * g.patches_per_frame() + i);
  }
  return out;
}

Box random_box(Rng& rng) {
  double x0 = rng.uniform(), x1 = rng.uniform(), y0 = rng.uniform(), y1 = rng.uniform();
  if (x0 > x1) std::swap(x0, x1);
  if (y0 > y1) std::swap(y0, y1);
  if (x1 - x0 < 1e-6) x1 = std::min(1.0, x0 + 1e-3);
  if (y1 - y0 < 1e-6) y1 = std::min(1.0, y0 + 1e-3);
  if (x1 - x0 < 1e-6) x0 = x1 - 1e-3;
  if (y1 - y0 < 1e-6) y0 = y1 - 1e-3;
  return Box{x0, y0, x1, y1};
}

TEST(Rasterize, FullFrameBoxCoversFrame) {
  const PatchGrid g{3, 2, 4, 5};
  EXPECT_EQ(rasterize_box(make_box("A", 1, 0, 0, 1, 1), g), frame_range(g, 1));
}

TEST(Rasterize, LeftHalfOnTwoByFour) {
  const PatchGrid g{1, 2, 4, 0};
  EXPECT_EQ(rasterize_box(make_box("A", 0, 0, 0, 0.5, 1), g),
            (std::vector<std::size_t>{0, 1, 4, 5}));
}

TEST(Rasterize, TinyBoxFallsBackToNearestCenter) {
  const PatchGrid g{1, 2, 4, 0};
  EXPECT_EQ(rasterize_box(make_box("A", 0, 0.90, 0.90, 0.91, 0.91), g),
            (std::vector<std::size_t>{7}));
}

TEST(Rasterize, CenterOnUpperEdgeIsExcluded) {
  // Column centers on W=4 are 0.125, 0.375, ...; x1 = 0.375 excludes column 1.
  const PatchGrid g{1, 1, 4, 0};
  EXPECT_EQ(rasterize_box(make_box("A", 0, 0.125, 0, 0.375, 1), g),
            (std::vector<std::size_t>{0}));
}

TEST(Rasterize, FrameOutOfRange) {
  EXPECT_THROW(rasterize_box(make_box("A", 2, 0, 0, 1, 1), PatchGrid{2, 2, 2, 0}),
               ContractViolation);
}

TEST(Rasterize, DegenerateBoxRejected) {
  EXPECT_THROW(rasterize_box(make_box("A", 0, 0.5, 0, 0.5, 1), PatchGrid{1, 2, 2, 0}),
               ContractViolation);
  EXPECT_THROW(rasterize_box(make_box("A", 0, -0.1, 0, 0.5, 1), PatchGrid{1, 2, 2, 0}),
               ContractViolation);
}

TEST(RasterizeProperty, StaysInsideOwnFrame) {
  Rng rng(31);
  for (int t = 0; t < 1000; ++t) {
    const PatchGrid g{1 + rng.below(4), 1 + rng.below(9), 1 + rng.below(9), rng.below(20)};
    const std::size_t frame = rng.below(g.frames);
    const auto cells = rasterize_box(SpeakerBox{SpeakerId{"A"}, frame, random_box(rng)}, g);
    ASSERT_FALSE(cells.empty());
    const auto lo = g.base_offset + frame * g.patches_per_frame();
    for (std::size_t c : cells) {
      EXPECT_GE(c, lo);
      EXPECT_LT(c, lo + g.patches_per_frame());
    }
  }
}

TEST(RasterizeProperty, EnlargingNeverRemovesCells) {
  Rng rng(32);
  int checked = 0;
  for (int t = 0; t < 1000; ++t) {
    const PatchGrid g{1, 1 + rng.below(9), 1 + rng.below(9), 0};
    const Box inner = random_box(rng);
    const Box outer{inner.x0 * rng.uniform(), inner.y0 * rng.uniform(),
                    inner.x1 + (1.0 - inner.x1) * rng.uniform(),
                    inner.y1 + (1.0 - inner.y1) * rng.uniform()};
    const PatchGrid& grid = g;
    // Only boxes that capture a patch center by containment are comparable.
    bool inner_hits = false;
    for (std::size_t h = 0; h < grid.grid_h && !inner_hits; ++h) {
      const double cy = (h + 0.5) / grid.grid_h;
      for (std::size_t w = 0; w < grid.grid_w; ++w) {
        const double cx = (w + 0.5) / grid.grid_w;
        if (cx >= inner.x0 && cx < inner.x1 && cy >= inner.y0 && cy < inner.y1) inner_hits = true;
      }
    }
    if (!inner_hits) continue;
    ++checked;
    const auto a = rasterize_box(SpeakerBox{SpeakerId{"A"}, 0, inner}, grid);
    const auto b = rasterize_box(SpeakerBox{SpeakerId{"A"}, 0, outer}, grid);
    EXPECT_TRUE(std::includes(b.begin(), b.end(), a.begin(), a.end()));
  }
  EXPECT_GT(checked, 100);
}

TEST(RegionIndex, EmptyBoxList) {
  const auto idx = build_region_index({}, PatchGrid{2, 2, 2, 0});
  EXPECT_TRUE(idx.empty());
  EXPECT_TRUE(idx.v_all().empty());
}

TEST(RegionIndex, TwoHalfFrameSpeakers) {
  const std::vector<SpeakerBox> boxes{make_box("A", 0, 0, 0, 0.5, 1), make_box("B", 0, 0.5, 0, 1, 1)};
  const auto idx = build_region_index(boxes, PatchGrid{1, 2, 4, 0});
  EXPECT_EQ(idx.find(SpeakerId{"A"}, 0)->size(), 4u);
  EXPECT_EQ(idx.find(SpeakerId{"B"}, 0)->size(), 4u);
  EXPECT_EQ(idx.v_all().size(), 8u);
}

TEST(RegionIndex, IdenticalBoxes) {
  const std::vector<SpeakerBox> boxes{make_box("A", 0, 0.2, 0.2, 0.8, 0.8),
                                      make_box("B", 0, 0.2, 0.2, 0.8, 0.8)};
  const auto idx = build_region_index(boxes, PatchGrid{1, 4, 4, 0});
  EXPECT_EQ(*idx.find(SpeakerId{"A"}, 0), *idx.find(SpeakerId{"B"}, 0));
  EXPECT_EQ(idx.v_all().size(), idx.find(SpeakerId{"A"}, 0)->size());
}

TEST(RegionIndex, MissingFrameIsAbsent) {
  const std::vector<SpeakerBox> boxes{make_box("A", 1, 0, 0, 1, 1)};
  const auto idx = build_region_index(boxes, PatchGrid{3, 2, 2, 0});
  EXPECT_EQ(idx.find(SpeakerId{"A"}, 0), nullptr);
  EXPECT_EQ(idx.find(SpeakerId{"B"}, 1), nullptr);
  EXPECT_EQ(idx.window(SpeakerId{"A"}, 0, 1).size(), 4u);
  EXPECT_TRUE(idx.window(SpeakerId{"A"}, 0, 0).empty());
  EXPECT_EQ(idx.speaker_union(SpeakerId{"A"}).size(), 4u);
}

TEST(RegionIndexProperty, VAllIsUnionOfRegions) {
  Rng rng(33);
  for (int t = 0; t < 300; ++t) {
    const PatchGrid g{1 + rng.below(4), 1 + rng.below(6), 1 + rng.below(6), rng.below(10)};
    std::vector<SpeakerBox> boxes;
    const std::size_t n = rng.below(8);
    for (std::size_t b = 0; b < n; ++b) {
      boxes.push_back(SpeakerBox{SpeakerId{std::string(1, static_cast<char>('A' + rng.below(3)))},
                                 rng.below(g.frames), random_box(rng)});
    }
    const auto idx = build_region_index(boxes, g);
    std::set<std::size_t> naive;
    for (const auto& b : boxes) {
      for (std::size_t c : rasterize_box(b, g)) naive.insert(c);
    }
    EXPECT_EQ(idx.v_all(), std::vector<std::size_t>(naive.begin(), naive.end()));
    for (const auto& [key, cells] : idx.regions()) {
      EXPECT_TRUE(std::is_sorted(cells.begin(), cells.end()));
      EXPECT_EQ(std::adjacent_find(cells.begin(), cells.end()), cells.end());
    }
  }
}

UtteranceToken tok(const std::string& text, const std::string& speaker) {
  return UtteranceToken{0, text, SpeakerId{speaker}, 0.0};
}

TEST(SpeakerLabels, NameMentionTakesDenotedSpeaker) {
  const std::vector<UtteranceToken> in{tok("Mitchell", "1")};
  const auto out = assign_speaker_labels(in, AliasTable{{"mitchell", SpeakerId{"3"}}});
  EXPECT_EQ(out[0].speaker.value, "3");
}

TEST(SpeakerLabels, UnmatchedTokenKeepsUtterer) {
  const std::vector<UtteranceToken> in{tok("yeah", "2")};
  const auto out = assign_speaker_labels(in, AliasTable{{"mitchell", SpeakerId{"3"}}});
  EXPECT_EQ(out[0].speaker.value, "2");
}

TEST(SpeakerLabels, EmptyTableIsIdentity) {
  const std::vector<UtteranceToken> in{tok("a", "1"), tok("b", "2")};
  const auto out = assign_speaker_labels(in, {});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].speaker.value, "1");
  EXPECT_EQ(out[1].speaker.value, "2");
}

TEST(SpeakerLabels, EmptyAliasNameRejected) {
  const std::vector<UtteranceToken> in{tok("a", "1")};
  EXPECT_THROW(assign_speaker_labels(in, AliasTable{{"", SpeakerId{"1"}}}), ContractViolation);
}

TEST(SpeakerLabelsProperty, Idempotent) {
  Rng rng(34);
  const std::vector<std::string> words{"alice", "Bob", "yeah", "ok", "CAROL", "speaker", "so"};
  const AliasTable aliases{{"alice", SpeakerId{"S1"}}, {"bob", SpeakerId{"S2"}}, {"Carol", SpeakerId{"S3"}}};
  for (int t = 0; t < 200; ++t) {
    std::vector<UtteranceToken> in;
    for (std::size_t i = 0, n = rng.below(12); i < n; ++i) {
      in.push_back(tok(words[rng.below(words.size())], "S" + std::to_string(1 + rng.below(4))));
    }
    const auto once = assign_speaker_labels(in, aliases);
    const auto twice = assign_speaker_labels(once, aliases);
    ASSERT_EQ(once.size(), twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) EXPECT_EQ(once[i].speaker, twice[i].speaker);
  }
}

TEST(TimestampToFrame, Nearest) {
  const std::vector<double> ft{0, 1, 2};
  EXPECT_EQ(map_timestamp_to_frame(1.4, ft), 1u);
  EXPECT_EQ(map_timestamp_to_frame(1.6, ft), 2u);
}

TEST(TimestampToFrame, TieGoesEarlier) {
  const std::vector<double> ft{0, 1};
  EXPECT_EQ(map_timestamp_to_frame(0.5, ft), 0u);
}

TEST(TimestampToFrame, ClampsAtEnds) {
  const std::vector<double> ft{0.5, 1.5};
  EXPECT_EQ(map_timestamp_to_frame(9.0, ft), 1u);
  EXPECT_EQ(map_timestamp_to_frame(0.0, ft), 0u);
  EXPECT_THROW(map_timestamp_to_frame(0.0, std::vector<double>{}), ContractViolation);
}

Scene tiny_scene() {
  Scene s;
  s.sequence.visual = PatchGrid{2, 2, 2, 0};
  s.sequence.frame_times = {0.5, 1.5};
  s.sequence.other_text = {8};
  s.sequence.utterances = {UtteranceToken{9, "hi", SpeakerId{"A"}, 0.2},
                           UtteranceToken{10, "Bea", SpeakerId{"A"}, 1.9}};
  s.sequence.total_len = 11;
  s.speakers = {SpeakerId{"A"}, SpeakerId{"B"}};
  s.boxes = {make_box("A", 0, 0, 0, 0.5, 1), make_box("B", 1, 0.5, 0, 1, 1)};
  s.aliases = {{"bea", SpeakerId{"B"}}};
  return s;
}

TEST(Scene, PrepareRelabelsAndMapsFrames) {
  const auto ctx = prepare_scene(tiny_scene());
  EXPECT_EQ(ctx.sequence.utterances[1].speaker.value, "B");
  EXPECT_EQ(ctx.token_frames, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(ctx.utterance_indices(), (std::vector<std::size_t>{9, 10}));
}

TEST(Scene, DefaultTimeSpanIsOneIntervalPastLastFrame) {
  EXPECT_DOUBLE_EQ(tiny_scene().time_span_end(), 2.5);
  auto s = tiny_scene();
  s.duration = 3.0;
  EXPECT_DOUBLE_EQ(s.time_span_end(), 3.0);
}

TEST(Scene, RejectsUnknownSpeaker) {
  auto s = tiny_scene();
  s.boxes.push_back(make_box("Z", 0, 0, 0, 1, 1));
  EXPECT_THROW(s.validate(), ContractViolation);
}

TEST(Scene, RejectsTimestampOutsideSpan) {
  auto s = tiny_scene();
  s.sequence.utterances[0].timestamp = 2.6;
  EXPECT_THROW(s.validate(), ContractViolation);
}

TEST(Scene, RejectsOverlappingIndices) {
  auto s = tiny_scene();
  s.sequence.other_text = {3};
  EXPECT_THROW(s.validate(), ContractViolation);
}

TEST(Scene, RejectsNonIncreasingFrameTimes) {
  auto s = tiny_scene();
  s.sequence.frame_times = {1.0, 1.0};
  EXPECT_THROW(s.validate(), ContractViolation);
}

}  // namespace
}  // namespace socattn
