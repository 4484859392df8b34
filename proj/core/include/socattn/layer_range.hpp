// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <string>

namespace socattn {

/// Inclusive interval of layer indices; empty when first > last.
struct LayerRange {
  std::size_t first = 1;
  std::size_t last = 0;

  static LayerRange none() { return {}; }
  static LayerRange closed(std::size_t first, std::size_t last) { return {first, last}; }
  static LayerRange all(std::size_t n_layers) {
    return n_layers == 0 ? none() : closed(0, n_layers - 1);
  }

  bool empty() const noexcept { return first > last; }
  bool contains(std::size_t layer) const noexcept { return !empty() && first <= layer && layer <= last; }
  std::size_t count() const noexcept { return empty() ? 0 : last - first + 1; }

  /// "10-19", "7" or "none".
  std::string to_string() const;
  /// Accepts "a-b", "a", "none".
  static LayerRange parse(const std::string& text);

  bool operator==(const LayerRange&) const = default;
};

struct HeadKey {
  std::size_t layer = 0;
  std::size_t head = 0;

  auto operator<=>(const HeadKey&) const = default;
};

}  // namespace socattn
