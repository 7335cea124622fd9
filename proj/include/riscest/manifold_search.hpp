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

#ifndef RISCEST_MANIFOLD_SEARCH_HPP
#define RISCEST_MANIFOLD_SEARCH_HPP

#include <cmath>
#include <concepts>
#include <limits>
#include <type_traits>

#include "types.hpp"

namespace riscest
{

/// Grid-then-refine search over the circular angle domain [0,1).
struct SearchConfig
{
    Index coarse_points = 64;
    Index refine_levels = 6;
    double refine_shrink = 0.1;

    void validate() const
    {
        if (coarse_points < 1 || refine_levels < 0)
            throw ConfigError("SearchConfig: coarse_points must be >= 1 and refine_levels >= 0");
        if (!(refine_shrink > 0.0 && refine_shrink < 1.0))
            throw ConfigError("SearchConfig: refine_shrink must lie in (0,1)");
    }

    /// Default for an N-antenna steering manifold: 4N coarse points.
    static SearchConfig for_array(Index n_bs) { return {4 * n_bs, 6, 0.1}; }

    /// Worst-case distance from the returned point to the best grid point
    /// of the last level.
    double final_resolution() const
    {
        return std::pow(refine_shrink, static_cast<double>(refine_levels)) / static_cast<double>(coarse_points);
    }
};

/// Scores a whole batch of angles at once: RVec -> RVec.
template <class F>
concept BatchScore = requires(F f, const RVec& v) {
    { f(v) } -> std::convertible_to<RVec>;
};

/// Scores a single angle.
template <class F>
concept PointScore = std::is_invocable_r_v<double, F, double>;

namespace detail
{
inline RVec refine_offsets(double shrink)
{
    const Index half = static_cast<Index>(std::ceil(1.0 / shrink - 1e-12));
    return RVec::LinSpaced(2 * half + 1, -1.0, 1.0);
}

/// Index of the first maximal entry. NaN scores never win.
inline Index first_argmax(const RVec& v)
{
    Index best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < v.size(); ++i)
        if (v(i) > best_v)
        {
            best_v = v(i);
            best = i;
        }
    return best;
}
} // namespace detail

/// Maximize a score over ψ ∈ [0,1).
///
/// A circular coarse grid of `coarse_points` is scanned first. Each of the
/// `refine_levels` rounds then searches a window of half-width w around the
/// incumbent (w starts at one coarse spacing) with spacing w*shrink, after
/// which w shrinks by `refine_shrink`. Ties keep the earliest point.
template <BatchScore F>
double maximize_over_manifold(F&& score, const SearchConfig& cfg)
{
    cfg.validate();
    const Index g = cfg.coarse_points;
    RVec grid(g);
    for (Index i = 0; i < g; ++i)
        grid(i) = static_cast<double>(i) / static_cast<double>(g);
    RVec values = score(grid);
    Index bi = detail::first_argmax(values);
    double best = grid(bi);
    double best_v = values(bi);

    const RVec offsets = detail::refine_offsets(cfg.refine_shrink);
    double w = 1.0 / static_cast<double>(g);
    RVec cand(offsets.size());
    for (Index level = 0; level < cfg.refine_levels; ++level)
    {
        for (Index i = 0; i < offsets.size(); ++i)
            cand(i) = detail::wrap_unit(best + w * offsets(i));
        values = score(cand);
        bi = detail::first_argmax(values);
        if (values(bi) > best_v)
        {
            best_v = values(bi);
            best = cand(bi);
        }
        w *= cfg.refine_shrink;
    }
    return best;
}

template <PointScore F>
    requires(!BatchScore<F>)
double maximize_over_manifold(F&& score, const SearchConfig& cfg)
{
    auto batched = [&score](const RVec& psis) {
        RVec out(psis.size());
        for (Index i = 0; i < psis.size(); ++i)
            out(i) = score(psis(i));
        return out;
    };
    return maximize_over_manifold(batched, cfg);
}

/// Steering matrix whose column j is a_B(psis[j]) (N x P).
inline CMat steering_matrix(Index n_bs, const RVec& psis)
{
    CMat a(n_bs, psis.size());
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_bs));
    for (Index j = 0; j < psis.size(); ++j)
    {
        // Phase recurrence per column keeps this O(N) trig-free per entry.
        const cplx step = std::polar(1.0, -two_pi * psis(j));
        cplx cur = scale;
        for (Index i = 0; i < n_bs; ++i)
        {
            a(i, j) = cur;
            cur *= step;
        }
    }
    return a;
}

} // namespace riscest

#endif
