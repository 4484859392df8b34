// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string_view>

#include "socattn/numerics.hpp"

namespace socattn::harness {

// "SATNEMB1", rows (u64 LE), cols (u64 LE), then rows*cols f64 LE row-major.
inline constexpr std::string_view kEmbeddingMagic = "SATNEMB1";

void write_embeddings(const std::filesystem::path& path, const Matrix& embeddings);
Matrix read_embeddings(const std::filesystem::path& path);

}  // namespace socattn::harness
