// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace socattn {

/// Dense row-major matrix of doubles. Entries are checked to be finite when
/// the matrix is built from caller-supplied data.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Boolean visibility matrix; true means the query row may attend the key
/// column.
class Mask {
 public:
  Mask() = default;
  Mask(std::size_t rows, std::size_t cols, bool visible);

  /// Lower-triangular (j <= i) visibility for an n-token sequence.
  static Mask causal(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  bool visible(std::size_t r, std::size_t c) const { return bits_[r * cols_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool visible) {
    bits_[r * cols_ + c] = visible ? 1 : 0;
  }
  std::span<const unsigned char> row(std::size_t r) const {
    return {bits_.data() + r * cols_, cols_};
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<unsigned char> bits_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

/// result(i, j) = dot(q_i, k_j) / sqrt(scale_dim)
Matrix scaled_scores(const Matrix& q_rows, const Matrix& k_rows, std::size_t scale_dim);

/// Softmax of every row, shifted by the row maximum before exponentiation.
Matrix row_softmax(const Matrix& logits);

/// Masked variant: hidden entries are dropped before exponentiation and come
/// out as exactly 0. A row with no visible entry is a contract violation.
Matrix row_softmax(const Matrix& logits, const Mask& mask);

/// In-place softmax of one row restricted to `visible` entries. An empty
/// `visible` span means every entry is visible.
void softmax_row(std::span<double> row, std::span<const unsigned char> visible = {});

double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace socattn
