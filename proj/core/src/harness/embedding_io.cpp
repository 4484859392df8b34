// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "socattn/harness/embedding_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "socattn/error.hpp"

namespace socattn::harness {

namespace {

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
  return v;
}

}  // namespace

void write_embeddings(const std::filesystem::path& path, const Matrix& embeddings) {
  std::vector<unsigned char> bytes(kEmbeddingMagic.begin(), kEmbeddingMagic.end());
  put_u64(bytes, embeddings.rows());
  put_u64(bytes, embeddings.cols());
  for (double v : embeddings.data()) put_u64(bytes, std::bit_cast<std::uint64_t>(v));

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

Matrix read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  constexpr std::size_t kHeader = 24;
  if (bytes.size() < kHeader ||
      std::memcmp(bytes.data(), kEmbeddingMagic.data(), kEmbeddingMagic.size()) != 0) {
    throw Error(ErrorCode::kIo, path.string() + ": not an embedding file (bad magic)");
  }
  const std::uint64_t rows = get_u64(bytes.data() + 8);
  const std::uint64_t cols = get_u64(bytes.data() + 16);
  const std::uint64_t expected = kHeader + rows * cols * 8;
  if (bytes.size() != expected) {
    throw Error(ErrorCode::kIo, path.string() + ": expected " + std::to_string(expected) +
                                    " bytes for " + std::to_string(rows) + "x" +
                                    std::to_string(cols) + ", found " +
                                    std::to_string(bytes.size()));
  }
  std::vector<double> data(rows * cols);
  for (std::size_t k = 0; k < data.size(); ++k) {
    data[k] = std::bit_cast<double>(get_u64(bytes.data() + kHeader + 8 * k));
  }
  try {
    return Matrix(rows, cols, std::move(data));
  } catch (const ContractViolation& e) {
    throw Error(ErrorCode::kIo, path.string() + ": " + e.what());
  }
}

}  // namespace socattn::harness
