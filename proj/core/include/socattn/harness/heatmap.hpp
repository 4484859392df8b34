// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "socattn/scene_model.hpp"

namespace socattn::harness {

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<unsigned char> pixels;  // row-major
};

/// Min-max normalization to 0..255. A constant map becomes uniform mid-gray.
std::vector<unsigned char> normalize_to_gray(std::span<const double> values);

/// Binary portable graymap (P5, maxval 255).
void write_pgm(const std::filesystem::path& path, const GrayImage& image);
GrayImage read_pgm(const std::filesystem::path& path);

struct HeatmapCell {
  std::size_t frame = 0;
  std::size_t h = 0;
  std::size_t w = 0;
  double baseline = 0.0;
  double biased = 0.0;
};

struct HeatmapFiles {
  std::vector<std::filesystem::path> images;
  std::filesystem::path csv;
};

/// Writes, for every frame, token<i>_f<t>_baseline.pgm, token<i>_f<t>_biased.pgm
/// and token<i>_f<t>_pair.pgm (baseline | separator | biased), plus
/// token<i>_heatmap.csv with the raw values. Rows are the token's attention
/// over the visual block, in grid order.
HeatmapFiles export_heatmap(std::span<const double> baseline_row,
                            std::span<const double> biased_row, const PatchGrid& grid,
                            std::size_t token_index, const std::filesystem::path& out_dir);

std::vector<HeatmapCell> read_heatmap_csv(const std::filesystem::path& path);

}  // namespace socattn::harness
