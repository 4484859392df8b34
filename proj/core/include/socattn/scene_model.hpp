// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace socattn {

struct SpeakerId {
  std::string value;

  auto operator<=>(const SpeakerId&) const = default;
};

/// The T x H x W lattice of visual tokens, laid out frame-major starting at
/// `base_offset` in the concatenated sequence.
struct PatchGrid {
  std::size_t frames = 1;
  std::size_t grid_h = 1;
  std::size_t grid_w = 1;
  std::size_t base_offset = 0;

  std::size_t size() const noexcept { return frames * grid_h * grid_w; }
  std::size_t patches_per_frame() const noexcept { return grid_h * grid_w; }
  std::size_t end() const noexcept { return base_offset + size(); }

  std::size_t token_index(std::size_t t, std::size_t h, std::size_t w) const {
    return base_offset + (t * grid_h + h) * grid_w + w;
  }
  bool contains(std::size_t seq_index) const noexcept {
    return seq_index >= base_offset && seq_index < end();
  }
  std::size_t frame_of(std::size_t seq_index) const {
    return (seq_index - base_offset) / patches_per_frame();
  }

  void validate() const;
};

/// Normalized box in unit-square image coordinates.
struct Box {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 1.0;
  double y1 = 1.0;

  double area() const noexcept { return (x1 - x0) * (y1 - y0); }
};

struct SpeakerBox {
  SpeakerId speaker;
  std::size_t frame = 0;
  Box box;

  void validate() const;
};

struct UtteranceToken {
  std::size_t sequence_index = 0;
  std::string text;
  SpeakerId speaker;
  double timestamp = 0.0;
};

/// Concatenated input sequence: visual tokens, then instruction / prompt
/// text, then speaker utterance tokens.
struct TokenSequence {
  std::size_t total_len = 0;
  PatchGrid visual;
  std::vector<UtteranceToken> utterances;
  std::vector<std::size_t> other_text;
  std::vector<double> frame_times;

  std::vector<std::size_t> utterance_indices() const;
  std::vector<std::size_t> visual_indices() const;

  /// Checks index disjointness, bounds, ordering and frame timing.
  void validate() const;
};

using RegionKey = std::pair<SpeakerId, std::size_t>;

/// Map (speaker, frame) -> sorted visual token indices, plus their union.
class SpeakerRegionIndex {
 public:
  SpeakerRegionIndex() = default;
  explicit SpeakerRegionIndex(std::map<RegionKey, std::vector<std::size_t>> regions);

  const std::map<RegionKey, std::vector<std::size_t>>& regions() const noexcept {
    return regions_;
  }
  const std::vector<std::size_t>& v_all() const noexcept { return v_all_; }
  bool empty() const noexcept { return regions_.empty(); }

  /// nullptr when the speaker has no box in that frame.
  const std::vector<std::size_t>* find(const SpeakerId& speaker, std::size_t frame) const;

  /// Union of the speaker's regions over frames [frame - window, frame + window].
  /// Empty when none of those frames has a region.
  std::vector<std::size_t> window(const SpeakerId& speaker, std::size_t frame,
                                  std::size_t window) const;

  /// Union of the speaker's regions over every frame.
  std::vector<std::size_t> speaker_union(const SpeakerId& speaker) const;

 private:
  std::map<RegionKey, std::vector<std::size_t>> regions_;
  std::vector<std::size_t> v_all_;
};

/// Lower-cased name -> denoted speaker.
using AliasTable = std::map<std::string, SpeakerId>;

/// Visual token indices of `box.frame` whose patch center lies in the box
/// (x0 <= cx < x1, y0 <= cy < y1). Falls back to the single patch whose center
/// is nearest the box center when no center is covered.
std::vector<std::size_t> rasterize_box(const SpeakerBox& box, const PatchGrid& grid);

SpeakerRegionIndex build_region_index(std::span<const SpeakerBox> boxes, const PatchGrid& grid);

/// Tokens naming a speaker (case-insensitive whole-token match) take the
/// named speaker's label; every other token keeps its utterer's label.
std::vector<UtteranceToken> assign_speaker_labels(std::span<const UtteranceToken> tokens,
                                                  const AliasTable& aliases);

/// Nearest sampled frame; exact ties go to the earlier frame.
std::size_t map_timestamp_to_frame(double timestamp, std::span<const double> frame_times);

/// Annotated scene as stored on disk: utterance tokens carry their utterer.
struct Scene {
  TokenSequence sequence;
  std::vector<SpeakerId> speakers;
  std::vector<SpeakerBox> boxes;
  AliasTable aliases;
  std::optional<double> duration;

  /// End of the video's time span; defaults to one frame interval past the
  /// last sampled frame.
  double time_span_end() const;

  void validate() const;
};

/// Scene with speaker labels resolved and region sets derived; what the
/// attention and alignment code consumes.
struct SceneContext {
  TokenSequence sequence;
  SpeakerRegionIndex regions;
  std::vector<std::size_t> token_frames;  // parallel to sequence.utterances

  std::vector<std::size_t> utterance_indices() const { return sequence.utterance_indices(); }
};

SceneContext prepare_scene(const Scene& scene);

}  // namespace socattn
