// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "socattn/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "socattn/error.hpp"

namespace socattn {

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ContractViolation("matrix data has " + std::to_string(data_.size()) +
                            " entries, expected " + std::to_string(rows_ * cols_));
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw ContractViolation("matrix entry is not finite");
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ContractViolation("ragged matrix initializer");
    for (double v : r) {
      if (!std::isfinite(v)) throw ContractViolation("matrix entry is not finite");
      data_.push_back(v);
    }
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mask::Mask(std::size_t rows, std::size_t cols, bool visible)
    : rows_(rows), cols_(cols), bits_(rows * cols, visible ? 1 : 0) {}

Mask Mask::causal(std::size_t n) {
  Mask m(n, n, false);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) m.set(i, j, true);
  }
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ContractViolation("matmul: " + shape(a) + " times " + shape(b));
  }
  const std::size_t n = a.rows();
  const std::size_t inner = a.cols();
  const std::size_t m = b.cols();
  std::vector<double> out(n * m, 0.0);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    double* o = out.data() + i * m;
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = pa[i * inner + k];
      const double* br = pb + k * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += aik * br[j];
    }
  }
  return Matrix(n, m, std::move(out));
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  }
  return out;
}

Matrix scaled_scores(const Matrix& q_rows, const Matrix& k_rows, std::size_t scale_dim) {
  if (q_rows.cols() != k_rows.cols()) {
    throw ContractViolation("scaled_scores: query " + shape(q_rows) + " vs key " +
                            shape(k_rows));
  }
  if (scale_dim == 0) throw ContractViolation("scaled_scores: scale_dim must be >= 1");
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(scale_dim));
  const std::size_t n = q_rows.rows();
  const std::size_t m = k_rows.rows();
  const std::size_t d = q_rows.cols();
  std::vector<double> out(n * m);
  const double* pq = q_rows.data().data();
  const double* pk = k_rows.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* q = pq + i * d;
    double* o = out.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) {
      const double* k = pk + j * d;
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += q[c] * k[c];
      o[j] = dot * inv_scale;
    }
  }
  return Matrix(n, m, std::move(out));
}

void softmax_row(std::span<double> row, std::span<const unsigned char> visible) {
  const bool masked = !visible.empty();
  if (masked && visible.size() != row.size()) {
    throw ContractViolation("softmax_row: mask length differs from row length");
  }
  double max_logit = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (masked && !visible[j]) continue;
    max_logit = std::max(max_logit, row[j]);
    any = true;
  }
  if (!any) throw ContractViolation("softmax_row: row has no visible entry");

  double total = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (masked && !visible[j]) {
      row[j] = 0.0;
      continue;
    }
    row[j] = std::exp(row[j] - max_logit);
    total += row[j];
  }
  const double inv_total = 1.0 / total;
  for (std::size_t j = 0; j < row.size(); ++j) row[j] *= inv_total;
}

Matrix row_softmax(const Matrix& logits) {
  Matrix out = logits;
  for (std::size_t i = 0; i < out.rows(); ++i) softmax_row(out.row(i));
  return out;
}

Matrix row_softmax(const Matrix& logits, const Mask& mask) {
  if (mask.rows() != logits.rows() || mask.cols() != logits.cols()) {
    throw ContractViolation("row_softmax: mask shape differs from logits " + shape(logits));
  }
  Matrix out = logits;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    try {
      softmax_row(out.row(i), mask.row(i));
    } catch (const ContractViolation&) {
      throw ContractViolation("row_softmax: row " + std::to_string(i) + " is fully masked");
    }
  }
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ContractViolation("max_abs_diff: " + shape(a) + " vs " + shape(b));
  }
  double worst = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) worst = std::max(worst, std::abs(da[i] - db[i]));
  return worst;
}

}  // namespace socattn
