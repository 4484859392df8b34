// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "socattn/harness/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "socattn/error.hpp"
#include "socattn/harness/report.hpp"
#include "socattn/harness/scene_json.hpp"

namespace socattn::harness {

std::vector<unsigned char> normalize_to_gray(std::span<const double> values) {
  std::vector<unsigned char> out(values.size(), 128);
  if (values.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  if (!(range > 0.0)) return out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    out[k] = static_cast<unsigned char>(std::lround(255.0 * (values[k] - lo) / range));
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  if (image.pixels.size() != image.width * image.height) {
    throw ContractViolation("write_pgm: pixel count does not match dimensions");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::string magic;
  GrayImage img;
  int maxval = 0;
  in >> magic >> img.width >> img.height >> maxval;
  in.get();
  if (magic != "P5" || maxval != 255) throw Error(ErrorCode::kIo, path.string() + ": not a P5 graymap");
  img.pixels.resize(img.width * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!in) throw Error(ErrorCode::kIo, path.string() + ": truncated graymap");
  return img;
}

HeatmapFiles export_heatmap(std::span<const double> baseline_row,
                            std::span<const double> biased_row, const PatchGrid& grid,
                            std::size_t token_index, const std::filesystem::path& out_dir) {
  if (baseline_row.size() != grid.size() || biased_row.size() != grid.size()) {
    throw ContractViolation("export_heatmap: rows must cover the whole visual block");
  }
  std::filesystem::create_directories(out_dir);
  const std::string stem = "token" + std::to_string(token_index);
  const std::size_t per_frame = grid.patches_per_frame();
  HeatmapFiles files;

  for (std::size_t t = 0; t < grid.frames; ++t) {
    const auto base = normalize_to_gray(baseline_row.subspan(t * per_frame, per_frame));
    const auto bias = normalize_to_gray(biased_row.subspan(t * per_frame, per_frame));
    const std::string prefix = stem + "_f" + std::to_string(t);

    const GrayImage base_img{grid.grid_w, grid.grid_h, base};
    const GrayImage bias_img{grid.grid_w, grid.grid_h, bias};
    GrayImage pair{2 * grid.grid_w + 1, grid.grid_h, {}};
    pair.pixels.reserve(pair.width * pair.height);
    for (std::size_t h = 0; h < grid.grid_h; ++h) {
      auto row_of = [&](const std::vector<unsigned char>& px) {
        return px.begin() + static_cast<std::ptrdiff_t>(h * grid.grid_w);
      };
      pair.pixels.insert(pair.pixels.end(), row_of(base), row_of(base) + static_cast<std::ptrdiff_t>(grid.grid_w));
      pair.pixels.push_back(255);
      pair.pixels.insert(pair.pixels.end(), row_of(bias), row_of(bias) + static_cast<std::ptrdiff_t>(grid.grid_w));
    }

    for (const auto& [suffix, img] : {std::pair{"_baseline.pgm", &base_img},
                                      std::pair{"_biased.pgm", &bias_img},
                                      std::pair{"_pair.pgm", static_cast<const GrayImage*>(&pair)}}) {
      const auto path = out_dir / (prefix + suffix);
      write_pgm(path, *img);
      files.images.push_back(path);
    }
  }

  std::ostringstream csv;
  csv << "frame,h,w,baseline,biased\n";
  for (std::size_t t = 0; t < grid.frames; ++t) {
    for (std::size_t h = 0; h < grid.grid_h; ++h) {
      for (std::size_t w = 0; w < grid.grid_w; ++w) {
        const std::size_t k = (t * grid.grid_h + h) * grid.grid_w + w;
        csv << t << ',' << h << ',' << w << ',' << format_real(baseline_row[k]) << ','
            << format_real(biased_row[k]) << '\n';
      }
    }
  }
  files.csv = out_dir / (stem + "_heatmap.csv");
  write_text_file(files.csv, csv.str());
  return files;
}

std::vector<HeatmapCell> read_heatmap_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<HeatmapCell> cells;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string f[5];
    for (auto& field : f) std::getline(fields, field, ',');
    cells.push_back(HeatmapCell{std::stoul(f[0]), std::stoul(f[1]), std::stoul(f[2]),
                                parse_real(f[3]), parse_real(f[4])});
  }
  return cells;
}

}  // namespace socattn::harness
