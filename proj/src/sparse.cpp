// Copyright 2026 The LGNSDE Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lgnsde/sparse.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace lgnsde {

namespace {

std::string entry_name(std::size_t r, std::size_t c) {
  return "(" + std::to_string(r) + ", " + std::to_string(c) + ")";
}

}  // namespace

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries) {
  for (const auto& e : entries) {
    if (e.row >= rows || e.col >= cols)
      throw std::invalid_argument("sparse entry " + entry_name(e.row, e.col) + " outside " +
                                  std::to_string(rows) + "x" + std::to_string(cols));
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].row == entries[i - 1].row && entries[i].col == entries[i - 1].col)
      throw std::invalid_argument("duplicate sparse entry " + entry_name(entries[i].row, entries[i].col));
  }

  auto storage = std::make_shared<Storage>();
  storage->row_ptr.assign(rows + 1, 0);
  storage->col_idx.reserve(entries.size());
  storage->values.reserve(entries.size());
  for (const auto& e : entries) {
    ++storage->row_ptr[e.row + 1];
    storage->col_idx.push_back(e.col);
    storage->values.push_back(e.value);
  }
  for (std::size_t r = 0; r < rows; ++r) storage->row_ptr[r + 1] += storage->row_ptr[r];

  // Transpose by counting sort on columns; row order within each column is
  // ascending because entries were visited in row-major order.
  Csr& t = storage->transposed;
  t.row_ptr.assign(cols + 1, 0);
  t.col_idx.resize(entries.size());
  t.values.resize(entries.size());
  for (const auto& e : entries) ++t.row_ptr[e.col + 1];
  for (std::size_t c = 0; c < cols; ++c) t.row_ptr[c + 1] += t.row_ptr[c];
  std::vector<std::size_t> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (const auto& e : entries) {
    const std::size_t slot = cursor[e.col]++;
    t.col_idx[slot] = e.row;
    t.values[slot] = e.value;
  }

  SparseMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.data_ = std::move(storage);
  return m;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<Triplet> entries;
  entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) entries.push_back({i, i, 1.0});
  return from_triplets(n, n, std::move(entries));
}

kernels::CsrView SparseMatrix::view() const {
  if (!data_) {
    static const std::vector<std::size_t> kEmptyPtr(1, 0);
    return {rows_, cols_, {kEmptyPtr.data(), std::min<std::size_t>(1, kEmptyPtr.size())}, {}, {}};
  }
  return {rows_, cols_, data_->row_ptr, data_->col_idx, data_->values};
}

kernels::CsrView SparseMatrix::transposed_view() const {
  if (!data_) return view();
  return {cols_, rows_, data_->transposed.row_ptr, data_->transposed.col_idx, data_->transposed.values};
}

double SparseMatrix::at(std::size_t row, std::size_t col) const {
  if (!data_ || row >= rows_) return 0.0;
  const auto first = data_->col_idx.begin() + static_cast<std::ptrdiff_t>(data_->row_ptr[row]);
  const auto last = data_->col_idx.begin() + static_cast<std::ptrdiff_t>(data_->row_ptr[row + 1]);
  const auto it = std::lower_bound(first, last, col);
  if (it == last || *it != col) return 0.0;
  return data_->values[static_cast<std::size_t>(it - data_->col_idx.begin())];
}

std::vector<double> SparseMatrix::to_dense() const {
  std::vector<double> dense(rows_ * cols_, 0.0);
  if (!data_) return dense;
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t e = data_->row_ptr[r]; e < data_->row_ptr[r + 1]; ++e)
      dense[r * cols_ + data_->col_idx[e]] = data_->values[e];
  return dense;
}

std::vector<double> SparseMatrix::row_sums() const {
  std::vector<double> sums(rows_, 0.0);
  if (!data_) return sums;
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t e = data_->row_ptr[r]; e < data_->row_ptr[r + 1]; ++e) sums[r] += data_->values[e];
  return sums;
}

}  // namespace lgnsde
