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

// Dense and sparse inner kernels. The top-level functions are OpenMP
// parallel over output rows; `serial::` holds straightforward reference
// loops used by the tests and the benchmark as a baseline.
//
// All matrices are row-major. Every kernel accumulates into `c`
// (c += ...); callers zero the output when they want assignment.
// Each output element is summed in the same (ascending) order in both
// flavours, so results agree bitwise for finite inputs.

#include <cstddef>
#include <span>

namespace lgnsde::kernels {

// Compressed-row view of a sparse matrix.
struct CsrView {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::span<const std::size_t> row_ptr;
  std::span<const std::size_t> col_idx;
  std::span<const double> values;
};

// c[m x n] += a[m x k] * b[k x n]
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
// c[m x n] += a[k x m]^T * b[k x n]
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
// c[m x n] += a[m x k] * b[n x k]^T
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
// out[rows x d] += s * h[cols x d]
void csr_spmm(const CsrView& s, std::span<const double> h, std::span<double> out, std::size_t d);

// Number of OpenMP threads the parallel kernels will use.
int max_threads();
void set_threads(int n);

namespace serial {
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void csr_spmm(const CsrView& s, std::span<const double> h, std::span<double> out, std::size_t d);
}  // namespace serial

}  // namespace lgnsde::kernels
