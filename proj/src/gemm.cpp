/*
 * Copyright 2026 The NNTC Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gemm.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

namespace nntc::detail {
namespace {

constexpr std::size_t kTileM = 8;
constexpr std::size_t kTileN = 16;

// Packs rows [i0, i0 + kTileM) of op(A) k-major, zero padded past m.
void pack_a(Trans t, std::size_t m, std::size_t k, const double *a, std::size_t i0,
            double *out) {
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t r = 0; r < kTileM; ++r) {
      const std::size_t i = i0 + r;
      double v = 0.0;
      if (i < m) v = (t == Trans::kNo) ? a[i * k + p] : a[p * m + i];
      out[p * kTileM + r] = v;
    }
  }
}

void pack_b(Trans t, std::size_t n, std::size_t k, const double *b, std::size_t j0,
            double *out) {
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t s = 0; s < kTileN; ++s) {
      const std::size_t j = j0 + s;
      double v = 0.0;
      if (j < n) v = (t == Trans::kNo) ? b[p * n + j] : b[j * k + p];
      out[p * kTileN + s] = v;
    }
  }
}

// GCC/Clang vector extension; lowers to whatever SIMD width the target has.
typedef double Vec8 __attribute__((vector_size(64)));

void micro_kernel(std::size_t k, const double *__restrict ap, const double *__restrict bp,
                  double *__restrict acc) {
  Vec8 tile[kTileM][kTileN / 8] = {};
  for (std::size_t p = 0; p < k; ++p) {
    const double *arow = ap + p * kTileM;
    Vec8 bv[kTileN / 8];
    for (std::size_t s = 0; s < kTileN / 8; ++s) {
      std::memcpy(&bv[s], bp + p * kTileN + 8 * s, sizeof(Vec8));
    }
    for (std::size_t r = 0; r < kTileM; ++r) {
      const double av = arow[r];
      for (std::size_t s = 0; s < kTileN / 8; ++s) tile[r][s] += av * bv[s];
    }
  }
  std::memcpy(acc, tile, sizeof(tile));
}

}  // namespace

void gemm(Trans trans_a, Trans trans_b, std::size_t m, std::size_t n, std::size_t k,
          const double *a, const double *b, double *c, bool accumulate) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (!accumulate) std::fill(c, c + m * n, 0.0);
    return;
  }
  const std::size_t m_tiles = (m + kTileM - 1) / kTileM;
  std::vector<double> apack(m_tiles * k * kTileM);
  for (std::size_t t = 0; t < m_tiles; ++t) {
    pack_a(trans_a, m, k, a, t * kTileM, apack.data() + t * k * kTileM);
  }
  std::vector<double> bpack(k * kTileN);
  double acc[kTileM * kTileN];
  for (std::size_t j0 = 0; j0 < n; j0 += kTileN) {
    pack_b(trans_b, n, k, b, j0, bpack.data());
    const std::size_t cols = std::min(kTileN, n - j0);
    for (std::size_t t = 0; t < m_tiles; ++t) {
      micro_kernel(k, apack.data() + t * k * kTileM, bpack.data(), acc);
      const std::size_t i0 = t * kTileM;
      const std::size_t rows = std::min(kTileM, m - i0);
      for (std::size_t r = 0; r < rows; ++r) {
        double *crow = c + (i0 + r) * n + j0;
        if (accumulate) {
          for (std::size_t s = 0; s < cols; ++s) crow[s] += acc[r * kTileN + s];
        } else {
          for (std::size_t s = 0; s < cols; ++s) crow[s] = acc[r * kTileN + s];
        }
      }
    }
  }
}

}  // namespace nntc::detail
