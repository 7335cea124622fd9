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

#include "catch_amalgamated.hpp"
#include "oracles.hpp"

#include <riscest/baselines.hpp>
#include <riscest/experiments.hpp>

// Covered tests:
// - Full LS: exactness at K = MN, feasibility, linearity, dense-QR oracle
// - Rank-one LR: recovery, unstructured factors, monotone objective
// - MF vs LR ordering on structured channels

using namespace riscest;

namespace
{
DownlinkTrial trial(Index n, Index m, Index k, double noise_var, std::uint64_t seed)
{
    Rng rng(seed);
    return draw_downlink_trial(n, m, k, noise_var, PhaseScheduleKind::random, rng);
}
} // namespace

TEST_CASE("Baselines - Full LS")
{
    const auto t = trial(4, 6, 24, 0.0, 1);
    CHECK(nmse(t.cascaded.h_e, ls_full(t.obs, t.schedule)) <= 1e-12);

    const auto u = trial(4, 6, 23, 0.0, 2);
    CHECK_THROWS_AS(ls_full(u.obs, u.schedule), RankDeficientError);
    CHECK(ls_full({CVec::Zero(24), 0.0}, t.schedule).norm() == 0.0);

    // Dense QR on the explicit Kronecker design, small blocks to exercise
    // the accumulation
    const auto v = trial(3, 5, 40, 0.3, 3);
    const CMat d = oracle::ls_design(v.schedule.pilots, v.schedule.phases);
    const CVec ref = d.colPivHouseholderQr().solve(v.obs.r);
    const CMat got = ls_full(v.obs, v.schedule, {7, 1e-13});
    CHECK((Eigen::Map<const CVec>(got.data(), 15) - ref).norm() <= 1e-10 * ref.norm());

    // Linear in the observations
    Rng rng(4);
    const CVec r1 = complex_gaussian_vector(40, rng), r2 = complex_gaussian_vector(40, rng);
    const cplx a(1.5, -0.2), b(-0.3, 2.0);
    const CMat lhs = ls_full({a * r1 + b * r2, 0.0}, v.schedule);
    const CMat rhs = a * ls_full({r1, 0.0}, v.schedule) + b * ls_full({r2, 0.0}, v.schedule);
    CHECK((lhs - rhs).norm() <= 1e-10 * rhs.norm());

    // Rank-deficient design despite enough rows: one pilot direction only
    PilotSchedule bad = v.schedule;
    for (Index k = 0; k < bad.k_slots(); ++k)
        bad.pilots.col(k) = v.schedule.pilots.col(0);
    CHECK_THROWS_AS(ls_full(v.obs, bad), RankDeficientError);
}

TEST_CASE("Baselines - Rank-one LR")
{
    Index hits = 0;
    for (std::uint64_t i = 0; i < 100; ++i)
    {
        const auto t = trial(16, 32, 96, 0.0, mix_seed({5, i}));
        const RankOneEstimate r = lr_rankone(t.obs, t.schedule);
        hits += nmse(t.cascaded.h_e, r.h_e_hat) <= 1e-6;
        CHECK(std::abs(r.factors.v.norm() - 1.0) <= 1e-12);
        CHECK((r.factors.matrix() - r.h_e_hat).norm() <= 1e-12 * r.h_e_hat.norm());
    }
    CHECK(hits >= 90);

    // Unstructured right factor: LR still recovers it
    Rng rng(6);
    const CVec u = complex_gaussian_vector(10, rng), v = complex_gaussian_vector(6, rng);
    CascadedChannel c;
    c.h_e = u * v.adjoint();
    const auto s = make_pilot_schedule(6, 10, 48, PhaseScheduleKind::random, rng);
    const auto obs = downlink_observe(c, s, 0.0, rng);
    CHECK(nmse(c.h_e, lr_rankone(obs, s).h_e_hat) <= 1e-8);

    // Objective non-increasing per alternation
    const auto t = trial(8, 12, 30, 1.0, 7);
    const RankOneEstimate r = lr_rankone(t.obs, t.schedule);
    for (std::size_t k = 1; k < r.objective_history.size(); ++k)
        CHECK(r.objective_history[k] <= r.objective_history[k - 1] * (1 + 1e-12));

    CHECK_THROWS_AS(lr_rankone({CVec::Zero(30), 0.0}, t.schedule), DegenerateInputError);
}

TEST_CASE("Baselines - MF beats LR on structured channels")
{
    // Equal K and SNR, averaged over 200 trials
    double mf = 0.0, lr = 0.0;
    const int trials = 200;
    for (int i = 0; i < trials; ++i)
    {
        const auto t = trial(8, 12, 60, noise_var_from_snr_db(10.0), mix_seed({8, static_cast<std::uint64_t>(i)}));
        mf += nmse(t.cascaded.h_e, estimate_single_user(t.obs, t.schedule).h_e_hat);
        lr += nmse(t.cascaded.h_e, lr_rankone(t.obs, t.schedule).h_e_hat);
    }
    CHECK(mf <= lr);
}
