// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "socattn/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "socattn/error.hpp"

namespace socattn {

namespace {

constexpr double kDuration = 3.0;
constexpr std::uint64_t kSceneStream = 0x5343454e45000001ULL;
constexpr std::uint64_t kStackStream = 0x535441434b000002ULL;

constexpr std::array<const char*, 12> kNames = {"alice", "bob",  "carol", "dave",
                                                "erin",  "frank", "grace", "heidi",
                                                "ivan",  "judy", "mallory", "oscar"};
constexpr std::array<const char*, 16> kFillers = {"yeah", "so",   "then",  "okay", "right", "well",
                                                  "i",    "think", "we",   "you",  "it",    "is",
                                                  "no",   "wait", "maybe", "sure"};

std::string speaker_label(std::size_t k) { return "S" + std::to_string(k + 1); }

std::string speaker_name(std::size_t k) {
  if (k < kNames.size()) return kNames[k];
  return "player" + std::to_string(k + 1);
}

struct Tiling {
  std::size_t cols = 1;
  std::size_t rows = 1;
};

Tiling tiling_for(const SynthSpec& spec) {
  Tiling t;
  t.cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(spec.n_speakers))));
  t.rows = (spec.n_speakers + t.cols - 1) / t.cols;
  return t;
}

Box cell_box(const Tiling& t, std::size_t cell, BoxLayout layout) {
  const double cw = 1.0 / static_cast<double>(t.cols);
  const double ch = 1.0 / static_cast<double>(t.rows);
  const double c = static_cast<double>(cell % t.cols);
  const double r = static_cast<double>(cell / t.cols);
  Box b{c * cw, r * ch, (c + 1.0) * cw, (r + 1.0) * ch};
  if (cell % t.cols == t.cols - 1) b.x1 = 1.0;
  if (cell / t.cols == t.rows - 1) b.y1 = 1.0;
  if (layout == BoxLayout::kOverlapping) {
    b.x0 = std::max(0.0, b.x0 - 0.1 * cw);
    b.y0 = std::max(0.0, b.y0 - 0.1 * ch);
    b.x1 = std::min(1.0, b.x1 + 0.1 * cw);
    b.y1 = std::min(1.0, b.y1 + 0.1 * ch);
  }
  return b;
}

void fill_noise(Rng& rng, std::span<double> row) {
  for (double& v : row) v = rng.normal();
}

}  // namespace

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw ContractViolation("Rng::below(0)");
  return static_cast<std::size_t>(next() % n);
}

void SynthSpec::validate() const {
  if (frames == 0 || grid_h == 0 || grid_w == 0) throw ContractViolation("synth: empty grid");
  if (n_speakers == 0) throw ContractViolation("synth: n_speakers must be >= 1");
  if (tokens_per_speaker == 0) throw ContractViolation("synth: tokens_per_speaker must be >= 1");
  if (model_dim == 0 || n_layers == 0 || n_heads == 0) {
    throw ContractViolation("synth: model_dim, n_layers and n_heads must be >= 1");
  }
  if (model_dim % n_heads != 0) {
    throw ContractViolation("synth: model_dim " + std::to_string(model_dim) +
                            " not divisible by n_heads " + std::to_string(n_heads));
  }
  if (!std::isfinite(signal_strength) || signal_strength < 0.0) {
    throw ContractViolation("synth: signal_strength must be finite and nonnegative");
  }
  if (!(qk_coupling >= -1.0 && qk_coupling <= 1.0)) {
    throw ContractViolation("synth: qk_coupling must lie in [-1, 1]");
  }
  if (!(mention_rate >= 0.0 && mention_rate <= 1.0)) {
    throw ContractViolation("synth: mention_rate must lie in [0, 1]");
  }
  const Tiling t = tiling_for(*this);
  if (t.cols > grid_w || t.rows > grid_h) {
    throw ContractViolation("synth: " + std::to_string(n_speakers) +
                            " speakers cannot be tiled on a " + std::to_string(grid_h) + "x" +
                            std::to_string(grid_w) + " grid");
  }
}

SyntheticScene generate_scene(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed ^ kSceneStream);
  const std::size_t d = spec.model_dim;

  Scene scene;
  for (std::size_t k = 0; k < spec.n_speakers; ++k) {
    scene.speakers.push_back(SpeakerId{speaker_label(k)});
    scene.aliases.emplace(speaker_name(k), SpeakerId{speaker_label(k)});
  }
  scene.duration = kDuration;

  auto& seq = scene.sequence;
  seq.visual = PatchGrid{spec.frames, spec.grid_h, spec.grid_w, 0};
  const std::size_t n_utterances = spec.n_speakers * spec.tokens_per_speaker;
  seq.total_len = seq.visual.size() + spec.distractor_text_len + n_utterances;
  for (std::size_t t = 0; t < spec.frames; ++t) {
    seq.frame_times.push_back((static_cast<double>(t) + 0.5) * kDuration /
                              static_cast<double>(spec.frames));
  }
  for (std::size_t k = 0; k < spec.distractor_text_len; ++k) {
    seq.other_text.push_back(seq.visual.end() + k);
  }

  // Boxes: cells are dealt to speakers afresh in every frame.
  const Tiling tiling = tiling_for(spec);
  std::vector<std::size_t> cells(tiling.cols * tiling.rows);
  for (std::size_t c = 0; c < cells.size(); ++c) cells[c] = c;
  for (std::size_t t = 0; t < spec.frames; ++t) {
    rng.shuffle(cells);
    for (std::size_t k = 0; k < spec.n_speakers; ++k) {
      scene.boxes.push_back(
          SpeakerBox{SpeakerId{speaker_label(k)}, t, cell_box(tiling, cells[k], spec.box_layout)});
    }
  }

  // Utterances: one turn per speaker in shuffled order, timestamps uniform
  // over the clip. Mentions carry the named speaker's direction.
  std::vector<std::size_t> turn_order(spec.n_speakers);
  for (std::size_t k = 0; k < turn_order.size(); ++k) turn_order[k] = k;
  rng.shuffle(turn_order);
  std::vector<std::size_t> denoted;  // ground-truth speaker per utterance token
  const std::size_t text_base = seq.visual.end() + spec.distractor_text_len;
  for (std::size_t turn = 0; turn < turn_order.size(); ++turn) {
    const std::size_t speaker = turn_order[turn];
    for (std::size_t w = 0; w < spec.tokens_per_speaker; ++w) {
      const std::size_t k = denoted.size();
      UtteranceToken tok;
      tok.sequence_index = text_base + k;
      tok.speaker = SpeakerId{speaker_label(speaker)};
      tok.timestamp =
          (static_cast<double>(k) + 0.5) * kDuration / static_cast<double>(n_utterances);
      const bool mention = spec.n_speakers > 1 && rng.uniform() < spec.mention_rate;
      if (mention) {
        std::size_t other = rng.below(spec.n_speakers - 1);
        if (other >= speaker) ++other;
        tok.text = speaker_name(other);
        denoted.push_back(other);
      } else {
        tok.text = kFillers[rng.below(kFillers.size())];
        denoted.push_back(speaker);
      }
      seq.utterances.push_back(std::move(tok));
    }
  }

  // Speaker directions, then embeddings row by row in sequence order.
  std::vector<std::vector<double>> directions(spec.n_speakers, std::vector<double>(d));
  for (auto& dir : directions) fill_noise(rng, dir);

  const SpeakerRegionIndex regions = build_region_index(scene.boxes, seq.visual);
  std::vector<long> owner(seq.visual.size(), -1);
  for (std::size_t k = spec.n_speakers; k-- > 0;) {
    for (std::size_t t = 0; t < spec.frames; ++t) {
      if (const auto* cells_of = regions.find(SpeakerId{speaker_label(k)}, t)) {
        for (std::size_t idx : *cells_of) owner[idx - seq.visual.base_offset] = static_cast<long>(k);
      }
    }
  }

  Matrix emb(seq.total_len, d);
  const double s = spec.signal_strength;
  auto embed = [&](std::size_t row, long speaker) {
    auto r = emb.row(row);
    fill_noise(rng, r);
    if (speaker >= 0) {
      const auto& dir = directions[static_cast<std::size_t>(speaker)];
      for (std::size_t c = 0; c < d; ++c) r[c] += s * dir[c];
    }
  };
  for (std::size_t v = 0; v < seq.visual.size(); ++v) embed(seq.visual.base_offset + v, owner[v]);
  for (std::size_t idx : seq.other_text) embed(idx, -1);
  for (std::size_t k = 0; k < seq.utterances.size(); ++k) {
    embed(seq.utterances[k].sequence_index, static_cast<long>(denoted[k]));
  }

  scene.validate();
  return SyntheticScene{std::move(scene), std::move(emb)};
}

LayerStack generate_stack(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed ^ kStackStream);
  const std::size_t d = spec.model_dim;
  const std::size_t dh = d / spec.n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  const double c = spec.qk_coupling;
  const double c_free = std::sqrt(std::max(0.0, 1.0 - c * c));

  std::vector<std::vector<HeadWeights>> layers(spec.n_layers);
  for (auto& layer : layers) {
    layer.reserve(spec.n_heads);
    for (std::size_t h = 0; h < spec.n_heads; ++h) {
      Matrix wq(d, dh);
      Matrix wk(d, dh);
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < dh; ++j) wq(i, j) = rng.normal() * scale;
      }
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < dh; ++j) wk(i, j) = c * wq(i, j) + c_free * rng.normal() * scale;
      }
      layer.push_back(HeadWeights{std::move(wq), std::move(wk)});
    }
  }
  return LayerStack(d, std::move(layers));
}

std::string to_string(BoxLayout layout) {
  return layout == BoxLayout::kDisjoint ? "disjoint" : "overlapping";
}

BoxLayout parse_box_layout(const std::string& text) {
  if (text == "disjoint") return BoxLayout::kDisjoint;
  if (text == "overlapping") return BoxLayout::kOverlapping;
  throw Error(ErrorCode::kUsage, "unknown box layout '" + text + "'");
}

}  // namespace socattn
