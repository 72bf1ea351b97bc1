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

#ifndef NNTC_SRC_GEMM_HPP
#define NNTC_SRC_GEMM_HPP

#include <cstddef>

namespace nntc::detail {

enum class Trans { kNo, kYes };

// C(MxN) = op(A)(MxK) * op(B)(KxN), or C += ... when accumulate is set.
//
// Every output element is summed from zero in increasing k order, whatever
// the matrix sizes, so a row's result never depends on how many other rows
// were batched alongside it. Encoder and decoder rely on this to reproduce
// each other bit for bit.
void gemm(Trans trans_a, Trans trans_b, std::size_t m, std::size_t n, std::size_t k,
          const double *a, const double *b, double *c, bool accumulate);

}  // namespace nntc::detail

#endif  // NNTC_SRC_GEMM_HPP
