// SPDX-License-Identifier: Apache-2.0
//
// riscest: rank-one matrix-factorization channel estimation for RIS-aided MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef RISCEST_RANDOM_HPP
#define RISCEST_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

#include "types.hpp"

namespace riscest
{

/// Random engine used throughout. Every sampling routine takes it by
/// reference; callers own one engine per thread.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Order-sensitive mix of a sequence of 64-bit words into one seed:
/// h <- splitmix64(h ^ splitmix64(w)) for each word, starting from 0.
constexpr std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words) noexcept
{
    std::uint64_t h = 0;
    for (std::uint64_t w : words)
        h = splitmix64(h ^ splitmix64(w));
    return h;
}

/// Uniform draw on [0,1).
inline double uniform01(Rng& rng)
{
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// Standard circularly-symmetric complex Gaussian, E|z|^2 = 1.
inline cplx complex_gaussian(Rng& rng)
{
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
    const double re = nd(rng);
    const double im = nd(rng);
    return {re, im};
}

/// Vector of i.i.d. CN(0, variance) entries.
inline CVec complex_gaussian_vector(Index n, Rng& rng, double variance = 1.0)
{
    CVec v(n);
    const double s = std::sqrt(variance);
    for (Index i = 0; i < n; ++i)
        v(i) = s * complex_gaussian(rng);
    return v;
}

/// Matrix of i.i.d. CN(0, variance) entries, filled column by column.
inline CMat complex_gaussian_matrix(Index rows, Index cols, Rng& rng, double variance = 1.0)
{
    CMat m(rows, cols);
    const double s = std::sqrt(variance);
    for (Index c = 0; c < cols; ++c)
        for (Index r = 0; r < rows; ++r)
            m(r, c) = s * complex_gaussian(rng);
    return m;
}

} // namespace riscest

#endif
