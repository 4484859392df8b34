// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "socattn/scene_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "socattn/error.hpp"

namespace socattn {

namespace {

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void sorted_union_into(std::vector<std::size_t>& acc, const std::vector<std::size_t>& add) {
  std::vector<std::size_t> merged;
  merged.reserve(acc.size() + add.size());
  std::set_union(acc.begin(), acc.end(), add.begin(), add.end(), std::back_inserter(merged));
  acc = std::move(merged);
}

}  // namespace

void PatchGrid::validate() const {
  if (frames == 0 || grid_h == 0 || grid_w == 0) {
    throw ContractViolation("patch grid dimensions must be >= 1");
  }
}

void SpeakerBox::validate() const {
  const bool ok = 0.0 <= box.x0 && box.x0 < box.x1 && box.x1 <= 1.0 && 0.0 <= box.y0 &&
                  box.y0 < box.y1 && box.y1 <= 1.0;
  if (!ok) {
    throw ContractViolation("box for speaker '" + speaker.value + "' in frame " +
                            std::to_string(frame) + " is not a valid unit-square box");
  }
}

std::vector<std::size_t> TokenSequence::utterance_indices() const {
  std::vector<std::size_t> out;
  out.reserve(utterances.size());
  for (const auto& u : utterances) out.push_back(u.sequence_index);
  return out;
}

std::vector<std::size_t> TokenSequence::visual_indices() const {
  std::vector<std::size_t> out(visual.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = visual.base_offset + k;
  return out;
}

void TokenSequence::validate() const {
  visual.validate();
  if (visual.end() > total_len) throw ContractViolation("visual tokens exceed sequence length");
  if (frame_times.size() != visual.frames) {
    throw ContractViolation("frame_times has " + std::to_string(frame_times.size()) +
                            " entries for " + std::to_string(visual.frames) + " frames");
  }
  for (std::size_t t = 0; t < frame_times.size(); ++t) {
    if (!std::isfinite(frame_times[t])) throw ContractViolation("frame time is not finite");
    if (t > 0 && !(frame_times[t] > frame_times[t - 1])) {
      throw ContractViolation("frame_times must be strictly increasing");
    }
  }

  std::vector<unsigned char> used(total_len, 0);
  for (std::size_t i = visual.base_offset; i < visual.end(); ++i) used[i] = 1;
  auto claim = [&](std::size_t idx, const char* what) {
    if (idx >= total_len) {
      throw ContractViolation(std::string(what) + " index " + std::to_string(idx) +
                              " outside sequence of length " + std::to_string(total_len));
    }
    if (used[idx]) {
      throw ContractViolation(std::string(what) + " index " + std::to_string(idx) +
                              " overlaps another token class");
    }
    used[idx] = 1;
  };
  for (std::size_t idx : other_text) claim(idx, "other_text");
  for (const auto& u : utterances) {
    claim(u.sequence_index, "utterance");
    if (u.sequence_index < visual.end()) {
      throw ContractViolation("utterance token " + std::to_string(u.sequence_index) +
                              " precedes a visual token");
    }
    if (!std::isfinite(u.timestamp)) throw ContractViolation("utterance timestamp not finite");
  }
}

SpeakerRegionIndex::SpeakerRegionIndex(std::map<RegionKey, std::vector<std::size_t>> regions)
    : regions_(std::move(regions)) {
  for (auto& [key, idx] : regions_) {
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    sorted_union_into(v_all_, idx);
  }
}

const std::vector<std::size_t>* SpeakerRegionIndex::find(const SpeakerId& speaker,
                                                         std::size_t frame) const {
  auto it = regions_.find(RegionKey{speaker, frame});
  return it == regions_.end() ? nullptr : &it->second;
}

std::vector<std::size_t> SpeakerRegionIndex::window(const SpeakerId& speaker, std::size_t frame,
                                                    std::size_t window) const {
  const std::size_t lo = frame >= window ? frame - window : 0;
  const std::size_t hi = frame + window;
  std::vector<std::size_t> out;
  auto it = regions_.lower_bound(RegionKey{speaker, lo});
  for (; it != regions_.end() && it->first.first == speaker && it->first.second <= hi; ++it) {
    sorted_union_into(out, it->second);
  }
  return out;
}

std::vector<std::size_t> SpeakerRegionIndex::speaker_union(const SpeakerId& speaker) const {
  return window(speaker, 0, std::numeric_limits<std::size_t>::max() / 2);
}

std::vector<std::size_t> rasterize_box(const SpeakerBox& box, const PatchGrid& grid) {
  box.validate();
  grid.validate();
  if (box.frame >= grid.frames) {
    throw ContractViolation("box frame " + std::to_string(box.frame) + " outside grid of " +
                            std::to_string(grid.frames) + " frames");
  }
  const auto& b = box.box;
  const double width = static_cast<double>(grid.grid_w);
  const double height = static_cast<double>(grid.grid_h);

  std::vector<std::size_t> out;
  for (std::size_t h = 0; h < grid.grid_h; ++h) {
    const double cy = (static_cast<double>(h) + 0.5) / height;
    if (cy < b.y0 || cy >= b.y1) continue;
    for (std::size_t w = 0; w < grid.grid_w; ++w) {
      const double cx = (static_cast<double>(w) + 0.5) / width;
      if (cx >= b.x0 && cx < b.x1) out.push_back(grid.token_index(box.frame, h, w));
    }
  }
  if (!out.empty()) return out;

  // Nearest center to the box center; first (row-major) patch wins ties.
  const double bx = 0.5 * (b.x0 + b.x1);
  const double by = 0.5 * (b.y0 + b.y1);
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_index = grid.token_index(box.frame, 0, 0);
  for (std::size_t h = 0; h < grid.grid_h; ++h) {
    for (std::size_t w = 0; w < grid.grid_w; ++w) {
      const double dx = (static_cast<double>(w) + 0.5) / width - bx;
      const double dy = (static_cast<double>(h) + 0.5) / height - by;
      const double d2 = dx * dx + dy * dy;
      if (d2 < best) {
        best = d2;
        best_index = grid.token_index(box.frame, h, w);
      }
    }
  }
  return {best_index};
}

SpeakerRegionIndex build_region_index(std::span<const SpeakerBox> boxes, const PatchGrid& grid) {
  std::map<RegionKey, std::vector<std::size_t>> regions;
  for (const auto& box : boxes) {
    auto cells = rasterize_box(box, grid);
    auto& slot = regions[RegionKey{box.speaker, box.frame}];
    slot.insert(slot.end(), cells.begin(), cells.end());
  }
  return SpeakerRegionIndex(std::move(regions));
}

std::vector<UtteranceToken> assign_speaker_labels(std::span<const UtteranceToken> tokens,
                                                  const AliasTable& aliases) {
  std::map<std::string, SpeakerId> folded;
  for (const auto& [name, speaker] : aliases) {
    if (name.empty()) throw ContractViolation("alias table contains an empty name");
    folded.emplace(lowercase(name), speaker);
  }
  std::vector<UtteranceToken> out(tokens.begin(), tokens.end());
  for (auto& tok : out) {
    auto it = folded.find(lowercase(tok.text));
    if (it != folded.end()) tok.speaker = it->second;
  }
  return out;
}

std::size_t map_timestamp_to_frame(double timestamp, std::span<const double> frame_times) {
  if (frame_times.empty()) throw ContractViolation("map_timestamp_to_frame: no frames");
  auto upper = std::lower_bound(frame_times.begin(), frame_times.end(), timestamp);
  if (upper == frame_times.begin()) return 0;
  if (upper == frame_times.end()) return frame_times.size() - 1;
  const auto hi = static_cast<std::size_t>(upper - frame_times.begin());
  const std::size_t lo = hi - 1;
  return (frame_times[hi] - timestamp) < (timestamp - frame_times[lo]) ? hi : lo;
}

double Scene::time_span_end() const {
  if (duration) return *duration;
  const auto& ft = sequence.frame_times;
  if (ft.empty()) return 0.0;
  if (ft.size() == 1) return std::numeric_limits<double>::infinity();
  const double spacing = (ft.back() - ft.front()) / static_cast<double>(ft.size() - 1);
  return ft.back() + spacing;
}

void Scene::validate() const {
  sequence.validate();
  std::set<SpeakerId> roster(speakers.begin(), speakers.end());
  if (roster.size() != speakers.size()) throw ContractViolation("duplicate speaker in roster");
  auto require_member = [&](const SpeakerId& s, const std::string& where) {
    if (!roster.contains(s)) {
      throw ContractViolation(where + " refers to unknown speaker '" + s.value + "'");
    }
  };
  const double end = time_span_end();
  if (duration && !(std::isfinite(*duration) && *duration >= 0.0)) {
    throw ContractViolation("duration must be finite and nonnegative");
  }
  for (const auto& u : sequence.utterances) {
    require_member(u.speaker, "utterance token '" + u.text + "'");
    if (u.timestamp < 0.0 || u.timestamp > end) {
      throw ContractViolation("utterance timestamp " + std::to_string(u.timestamp) +
                              " outside the video time span");
    }
  }
  for (const auto& b : boxes) {
    require_member(b.speaker, "box");
    b.validate();
    if (b.frame >= sequence.visual.frames) {
      throw ContractViolation("box frame " + std::to_string(b.frame) + " out of range");
    }
  }
  for (const auto& [name, s] : aliases) {
    if (name.empty()) throw ContractViolation("empty alias name");
    require_member(s, "alias '" + name + "'");
  }
}

SceneContext prepare_scene(const Scene& scene) {
  scene.validate();
  SceneContext ctx;
  ctx.sequence = scene.sequence;
  ctx.sequence.utterances = assign_speaker_labels(scene.sequence.utterances, scene.aliases);
  ctx.regions = build_region_index(scene.boxes, scene.sequence.visual);
  ctx.token_frames.reserve(ctx.sequence.utterances.size());
  for (const auto& u : ctx.sequence.utterances) {
    ctx.token_frames.push_back(map_timestamp_to_frame(u.timestamp, ctx.sequence.frame_times));
  }
  return ctx;
}

}  // namespace socattn
