// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "socattn/attention.hpp"
#include "socattn/numerics.hpp"
#include "socattn/scene_model.hpp"

namespace socattn {

/// Portable random stream. The engine is std::mt19937_64, whose output
/// sequence is fixed by the C++ standard; the transforms below are written
/// out here because the std:: distributions are implementation-defined.
///   uniform(): (next() >> 11) * 2^-53, in [0, 1)
///   normal():  Box-Muller on two uniforms, u1 mapped to (0, 1]; the sine
///              branch is cached and returned by the following call
///   below(n):  next() % n (bias is irrelevant at the sizes used here)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();
  double normal();
  std::size_t below(std::size_t n);

  /// Fisher-Yates, last index down to 1.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

enum class BoxLayout { kDisjoint, kOverlapping };

struct SynthSpec {
  std::uint64_t seed = 0;
  std::size_t frames = 8;
  std::size_t grid_h = 4;
  std::size_t grid_w = 4;
  std::size_t n_speakers = 4;
  std::size_t tokens_per_speaker = 6;
  std::size_t model_dim = 112;
  std::size_t n_layers = 28;
  std::size_t n_heads = 28;
  double signal_strength = 2.0;
  BoxLayout box_layout = BoxLayout::kDisjoint;
  std::size_t distractor_text_len = 8;
  // Correlation between a head's key and query projections; 0 gives
  // independent projections, under which a shared speaker direction carries
  // no expected score advantage.
  double qk_coupling = 0.5;
  // Fraction of utterance tokens that name another speaker.
  double mention_rate = 0.15;

  void validate() const;
};

struct SyntheticScene {
  Scene scene;
  Matrix embeddings;  // total_len x model_dim
};

/// Speakers tile the frame on a ceil(sqrt(n)) column grid; cells are
/// reassigned to speakers every frame. Overlapping layout grows each cell by
/// 10% of its size per side. Region patches embed signal_strength * a_s + noise
/// and utterance tokens embed the same for their (denoted) speaker.
SyntheticScene generate_scene(const SynthSpec& spec);

/// Entries of w_q are N(0, 1/d); w_k = c * w_q + sqrt(1 - c^2) * G with
/// G ~ N(0, 1/d) and c = qk_coupling.
LayerStack generate_stack(const SynthSpec& spec);

std::string to_string(BoxLayout layout);
BoxLayout parse_box_layout(const std::string& text);

}  // namespace socattn
