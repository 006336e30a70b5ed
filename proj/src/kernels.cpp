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

#include "lgnsde/kernels.hpp"

#include <omp.h>

#include <cstdint>

namespace lgnsde::kernels {

namespace {

// Rows are independent work items; below this many multiply-adds the
// fork/join overhead dominates.
constexpr std::size_t kParallelThreshold = 1 << 15;

bool worth_parallel(std::size_t flops) { return flops >= kParallelThreshold && omp_get_max_threads() > 1; }

}  // namespace

int max_threads() { return omp_get_max_threads(); }
void set_threads(int n) { omp_set_num_threads(n < 1 ? 1 : n); }

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static) if (worth_parallel(m * k * n))
  for (std::int64_t i = 0; i < rows; ++i) {
    double* ci = pc + static_cast<std::size_t>(i) * n;
    const double* ai = pa + static_cast<std::size_t>(i) * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      const double* bp = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static) if (worth_parallel(m * k * n))
  for (std::int64_t i = 0; i < rows; ++i) {
    double* ci = pc + static_cast<std::size_t>(i) * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double api = pa[p * m + static_cast<std::size_t>(i)];
      if (api == 0.0) continue;
      const double* bp = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static) if (worth_parallel(m * k * n))
  for (std::int64_t i = 0; i < rows; ++i) {
    const double* ai = pa + static_cast<std::size_t>(i) * k;
    double* ci = pc + static_cast<std::size_t>(i) * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = pb + j * k;
      double acc = ci[j];
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] = acc;
    }
  }
}

void csr_spmm(const CsrView& s, std::span<const double> h, std::span<double> out, std::size_t d) {
  const double* ph = h.data();
  double* po = out.data();
  const auto rows = static_cast<std::int64_t>(s.rows);
#pragma omp parallel for schedule(static) if (worth_parallel(s.values.size() * d))
  for (std::int64_t r = 0; r < rows; ++r) {
    const auto ru = static_cast<std::size_t>(r);
    double* orow = po + ru * d;
    for (std::size_t e = s.row_ptr[ru]; e < s.row_ptr[ru + 1]; ++e) {
      const double v = s.values[e];
      const double* hrow = ph + s.col_idx[e] * d;
      for (std::size_t j = 0; j < d; ++j) orow[j] += v * hrow[j];
    }
  }
}

namespace serial {

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = c[i * n + j];
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] = acc;
    }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = c[i * n + j];
      for (std::size_t p = 0; p < k; ++p) acc += a[p * m + i] * b[p * n + j];
      c[i * n + j] = acc;
    }
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = c[i * n + j];
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
      c[i * n + j] = acc;
    }
}

void csr_spmm(const CsrView& s, std::span<const double> h, std::span<double> out, std::size_t d) {
  for (std::size_t r = 0; r < s.rows; ++r)
    for (std::size_t j = 0; j < d; ++j) {
      double acc = out[r * d + j];
      for (std::size_t e = s.row_ptr[r]; e < s.row_ptr[r + 1]; ++e)
        acc += s.values[e] * h[s.col_idx[e] * d + j];
      out[r * d + j] = acc;
    }
}

}  // namespace serial

}  // namespace lgnsde::kernels
