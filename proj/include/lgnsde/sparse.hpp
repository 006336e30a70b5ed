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

#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "lgnsde/kernels.hpp"

namespace lgnsde {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

// Immutable CSR matrix. Copies share storage. The transpose is built once
// at construction so spmm's backward pass is a plain forward product.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  // Throws std::invalid_argument on an out-of-range or duplicated (row, col).
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries);
  static SparseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return data_ ? data_->values.size() : 0; }

  kernels::CsrView view() const;
  kernels::CsrView transposed_view() const;

  // Entry lookup by binary search within the row; 0 when absent.
  double at(std::size_t row, std::size_t col) const;
  std::vector<double> to_dense() const;
  std::vector<double> row_sums() const;

 private:
  struct Csr {
    std::vector<std::size_t> row_ptr;
    std::vector<std::size_t> col_idx;
    std::vector<double> values;
  };
  struct Storage {
    std::vector<std::size_t> row_ptr;
    std::vector<std::size_t> col_idx;
    std::vector<double> values;
    Csr transposed;
  };

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::shared_ptr<const Storage> data_;
};

}  // namespace lgnsde
