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

#ifndef RISCEST_SIGNAL_MODEL_HPP
#define RISCEST_SIGNAL_MODEL_HPP

#include <cmath>
#include <vector>

#include "channel_model.hpp"
#include "random.hpp"
#include "types.hpp"

namespace riscest
{

// ----- Schedules -------------------------------------------------------------

/// Downlink training schedule. Column k of `pilots` is x_k (unit norm),
/// column k of `phases` is θ_k (unit modulus).
struct PilotSchedule
{
    CMat pilots; // N x K
    CMat phases; // M x K

    Index n_bs() const { return pilots.rows(); }
    Index m_ris() const { return phases.rows(); }
    Index k_slots() const { return pilots.cols(); }
};

/// Uplink training schedule. phase_matrix is Θ̄ = [θ_1..θ_K];
/// user_pilots[q] is T x K with column k equal to x_{q,k}.
struct UplinkSchedule
{
    CMat phase_matrix;            // M x K
    std::vector<CMat> user_pilots; // Q entries, each T x K

    Index m_ris() const { return phase_matrix.rows(); }
    Index k_blocks() const { return phase_matrix.cols(); }
    Index q_users() const { return static_cast<Index>(user_pilots.size()); }
    Index t_symbols() const { return user_pilots.empty() ? 0 : user_pilots.front().rows(); }
};

/// Received downlink scalars r_k. SNR = 1/noise_var.
struct DownlinkObservations
{
    CVec r;
    double noise_var = 0.0;

    Index size() const { return r.size(); }
};

/// Received uplink blocks R_k (N x T each).
struct UplinkObservations
{
    std::vector<CMat> blocks;
    double noise_var = 0.0;

    Index size() const { return static_cast<Index>(blocks.size()); }
};

/// Which phase family to use for downlink training.
enum class PhaseScheduleKind
{
    random,
    dft
};

// ----- Generators ------------------------------------------------------------

/// Unit-modulus phases exp(j u), u ~ U[0, 2π), drawn column by column.
inline CMat random_phase_schedule(Index m_ris, Index k_slots, Rng& rng)
{
    if (m_ris < 1 || k_slots < 1)
        throw ConfigError("random_phase_schedule: M and K must be >= 1");
    CMat th(m_ris, k_slots);
    for (Index k = 0; k < k_slots; ++k)
        for (Index m = 0; m < m_ris; ++m)
            th(m, k) = std::polar(1.0, two_pi * uniform01(rng));
    return th;
}

namespace detail
{
/// exp(-j 2π (a*b mod n) / n), reduced modulo n so large products stay exact.
inline cplx dft_entry(Index a, Index b, Index n)
{
    const Index idx = (a * b) % n;
    return std::polar(1.0, -two_pi * static_cast<double>(idx) / static_cast<double>(n));
}
} // namespace detail

/// First M rows of the K-point DFT matrix: Θ̄[m,k] = exp(-j2π mk/K).
/// Satisfies Θ̄ Θ̄^H = K I_M.
inline CMat dft_phase_schedule(Index m_ris, Index k_blocks)
{
    if (m_ris < 1 || k_blocks < 1)
        throw ConfigError("dft_phase_schedule: M and K must be >= 1");
    if (k_blocks < m_ris)
        throw RankDeficientError("dft_phase_schedule: K=" + std::to_string(k_blocks) + " < M=" +
                                 std::to_string(m_ris) + ", rows cannot be orthogonal");
    CMat th(m_ris, k_blocks);
    for (Index k = 0; k < k_blocks; ++k)
        for (Index m = 0; m < m_ris; ++m)
            th(m, k) = detail::dft_entry(m, k, k_blocks);
    return th;
}

/// Columns 0..Q-1 of the T-point DFT matrix; returned as a T x Q matrix whose
/// column q is user q's pilot. Gram matrix is T I_Q.
inline CMat orthogonal_user_pilots(Index q_users, Index t_symbols)
{
    if (q_users < 1 || t_symbols < 1)
        throw ConfigError("orthogonal_user_pilots: Q and T must be >= 1");
    if (t_symbols < q_users)
        throw RankDeficientError("orthogonal_user_pilots: T=" + std::to_string(t_symbols) + " < Q=" +
                                 std::to_string(q_users));
    CMat x(t_symbols, q_users);
    for (Index q = 0; q < q_users; ++q)
        for (Index t = 0; t < t_symbols; ++t)
            x(t, q) = detail::dft_entry(t, q, t_symbols);
    return x;
}

/// Unit-norm downlink pilots: i.i.d. complex Gaussian columns, normalized.
inline CMat random_unit_pilots(Index n_bs, Index k_slots, Rng& rng)
{
    CMat x = complex_gaussian_matrix(n_bs, k_slots, rng);
    for (Index k = 0; k < k_slots; ++k)
        x.col(k).normalize();
    return x;
}

/// Downlink schedule: pilots first, then phases, from the same engine.
inline PilotSchedule make_pilot_schedule(Index n_bs, Index m_ris, Index k_slots, PhaseScheduleKind kind, Rng& rng)
{
    PilotSchedule s;
    s.pilots = random_unit_pilots(n_bs, k_slots, rng);
    s.phases = kind == PhaseScheduleKind::dft ? dft_phase_schedule(m_ris, k_slots)
                                              : random_phase_schedule(m_ris, k_slots, rng);
    return s;
}

/// Uplink schedule with the same orthogonal pilot set in every block.
inline UplinkSchedule make_uplink_schedule(const SystemDims& dims, CMat phase_matrix)
{
    dims.validate_uplink();
    detail::require_dims(phase_matrix.rows() == dims.m_ris, "make_uplink_schedule: phase matrix must have M rows");
    const CMat x = orthogonal_user_pilots(dims.q_users, dims.t_symbols);
    UplinkSchedule s;
    s.phase_matrix = std::move(phase_matrix);
    const Index k_blocks = s.phase_matrix.cols();
    for (Index q = 0; q < dims.q_users; ++q)
        s.user_pilots.push_back(x.col(q).replicate(1, k_blocks));
    return s;
}

// ----- Observation synthesis --------------------------------------------------

/// Noiseless downlink samples θ_k^T H_e x_k.
inline CVec downlink_noiseless(const CMat& h_e, const PilotSchedule& sched)
{
    detail::require_dims(h_e.rows() == sched.m_ris() && h_e.cols() == sched.n_bs() &&
                             sched.phases.cols() == sched.pilots.cols(),
                         "downlink_observe: H_e must be M x N and schedule must have K pilots and K phases");
    // (H_e X) is M x K; r_k = θ_k^T (H_e x_k).
    const CMat hx = h_e * sched.pilots;
    return sched.phases.cwiseProduct(hx).colwise().sum().transpose();
}

/// r_k = θ_k^T H_e x_k + n_k with n_k ~ CN(0, noise_var).
inline DownlinkObservations downlink_observe(const CascadedChannel& chan, const PilotSchedule& sched,
                                             double noise_var, Rng& rng)
{
    if (noise_var < 0.0)
        throw ConfigError("downlink_observe: noise_var must be >= 0");
    DownlinkObservations obs;
    obs.r = downlink_noiseless(chan.h_e, sched);
    obs.noise_var = noise_var;
    if (noise_var > 0.0)
        obs.r += complex_gaussian_vector(obs.r.size(), rng, noise_var);
    return obs;
}

/// R_k = Σ_q G diag(θ_k) h_q x_{q,k}^T + N_k.
inline UplinkObservations uplink_observe(const CMat& g, const std::vector<CVec>& h_users,
                                         const UplinkSchedule& sched, double noise_var, Rng& rng)
{
    if (noise_var < 0.0)
        throw ConfigError("uplink_observe: noise_var must be >= 0");
    const Index n = g.rows();
    const Index m = g.cols();
    const Index q_users = static_cast<Index>(h_users.size());
    detail::require_dims(sched.m_ris() == m, "uplink_observe: phase matrix rows must equal G columns (M)");
    detail::require_dims(sched.q_users() == q_users, "uplink_observe: one pilot matrix per user required");
    const Index t = sched.t_symbols();
    const Index k_blocks = sched.k_blocks();
    for (Index q = 0; q < q_users; ++q)
    {
        detail::require_dims(h_users[static_cast<std::size_t>(q)].size() == m, "uplink_observe: h_q must have length M");
        const CMat& xq = sched.user_pilots[static_cast<std::size_t>(q)];
        detail::require_dims(xq.rows() == t && xq.cols() == k_blocks, "uplink_observe: pilot matrices must be T x K");
    }

    UplinkObservations obs;
    obs.noise_var = noise_var;
    obs.blocks.reserve(static_cast<std::size_t>(k_blocks));
    for (Index k = 0; k < k_blocks; ++k)
    {
        CMat rk = CMat::Zero(n, t);
        for (Index q = 0; q < q_users; ++q)
        {
            const CVec col = g * sched.phase_matrix.col(k).cwiseProduct(h_users[static_cast<std::size_t>(q)]);
            rk.noalias() += col * sched.user_pilots[static_cast<std::size_t>(q)].col(k).transpose();
        }
        if (noise_var > 0.0)
            rk += complex_gaussian_matrix(n, t, rng, noise_var);
        obs.blocks.push_back(std::move(rk));
    }
    return obs;
}

/// Despread user q: column k of the result is (1/T) R_k conj(x_{q,k}).
/// Noiseless output equals G diag(h_q) Θ̄; noise per entry is CN(0, σ²/T).
inline CMat despread(const UplinkObservations& obs, const UplinkSchedule& sched, Index q)
{
    if (q < 0 || q >= sched.q_users())
        throw ConfigError("despread: user index " + std::to_string(q) + " out of range");
    detail::require_dims(obs.size() == sched.k_blocks(), "despread: block count must equal schedule K");
    const CMat& xq = sched.user_pilots[static_cast<std::size_t>(q)];
    const Index t = xq.rows();
    const Index n = obs.blocks.empty() ? 0 : obs.blocks.front().rows();
    CMat s(n, obs.size());
    for (Index k = 0; k < obs.size(); ++k)
    {
        const CMat& rk = obs.blocks[static_cast<std::size_t>(k)];
        detail::require_dims(rk.cols() == t && rk.rows() == n, "despread: every block must be N x T");
        s.col(k) = rk * xq.col(k).conjugate() / static_cast<double>(t);
    }
    return s;
}

} // namespace riscest

#endif
