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

///
/// \file multiuser_estimator.hpp
///
/// Uplink multi-user estimation. After despreading, user q sees
///
///   S_q = a_B(ψ) ā_q^H Θ̄ + N_q,   N_q entries ~ CN(0, σ²/T).
///
/// Stage 1 estimates the shared ψ from the stacked [S_1 .. S_Q]; stage 2
/// solves one LS problem per user. With V = Θ̄^T ⊗ a_B(ψ̂) the LS normal
/// matrix is V^H V = ‖a_B‖² conj(Θ̄) Θ̄^T, so nothing of size NK x M is built.
///
#ifndef RISCEST_MULTIUSER_ESTIMATOR_HPP
#define RISCEST_MULTIUSER_ESTIMATOR_HPP

#include <optional>
#include <vector>

#include <Eigen/QR>

#include "channel_model.hpp"
#include "manifold_search.hpp"
#include "signal_model.hpp"
#include "types.hpp"

namespace riscest
{

struct MultiUserEstimate
{
    double psi_hat = 0.0;
    std::vector<CVec> a_bar_hats; // Q vectors of length M
    std::vector<CMat> h_q_hats;   // Q matrices N x M
    double predicted_mse = 0.0;
};

struct MultiUserConfig
{
    /// Coarse ψ grid size; 0 selects 4N.
    Index grid_points_coarse = 0;
    Index refine_levels = 6;
    double refine_shrink = 0.1;
    /// Gram matrices above this condition estimate are rejected.
    double max_condition = 1e12;
    /// Skip stage 1 and use this angle (isolates the LS stage).
    std::optional<double> psi_override;

    SearchConfig search(Index n_bs) const
    {
        return {grid_points_coarse > 0 ? grid_points_coarse : 4 * n_bs, refine_levels, refine_shrink};
    }
};

/// ψ̂ = argmax_ψ ‖a_B(ψ)^H [S_1 .. S_Q]‖².
inline double estimate_psi_uplink(const std::vector<CMat>& s_list, const SearchConfig& search)
{
    if (s_list.empty())
        throw DegenerateInputError("estimate_psi_uplink: no user observations");
    const Index n = s_list.front().rows();
    CMat gram = CMat::Zero(n, n);
    for (const CMat& s : s_list)
    {
        detail::require_dims(s.rows() == n, "estimate_psi_uplink: all S_q must have N rows");
        gram.noalias() += s * s.adjoint();
    }
    if (gram.diagonal().real().maxCoeff() == 0.0)
        throw DegenerateInputError("estimate_psi_uplink: all despread observations are zero");
    auto score = [&](const RVec& psis) {
        const CMat a = steering_matrix(n, psis);
        return (a.conjugate().cwiseProduct(gram * a)).colwise().sum().real().transpose().eval();
    };
    return maximize_over_manifold(score, search);
}

inline double estimate_psi_uplink(const std::vector<CMat>& s_list)
{
    if (s_list.empty())
        throw DegenerateInputError("estimate_psi_uplink: no user observations");
    return estimate_psi_uplink(s_list, SearchConfig::for_array(s_list.front().rows()));
}

namespace detail
{
/// conj(Θ̄) Θ̄^T, the M x M factor of V^H V.
inline CMat phase_gram(const CMat& phase_matrix)
{
    return phase_matrix.conjugate() * phase_matrix.transpose();
}

inline Eigen::ColPivHouseholderQR<CMat> factor_phase_gram(const CMat& gram, double max_condition, const char* what)
{
    Eigen::ColPivHouseholderQR<CMat> qr(gram);
    if (qr.rank() < gram.cols())
        throw RankDeficientError(std::string(what) + ": phase matrix does not have full row rank");
    const auto d = qr.matrixR().diagonal().cwiseAbs();
    if (!(d(0) <= max_condition * d(d.size() - 1)))
        throw IllConditionedError(std::string(what) + ": phase Gram matrix is ill-conditioned");
    return qr;
}
} // namespace detail

/// Per-user LS: ā_q = conj( (V^H V)^{-1} V^H vec(S_q) ) with
/// V^H vec(S_q) = conj(Θ̄) (S_q^T conj(a_B(ψ̂))).
inline CVec estimate_a_q(const CMat& s_q, const CMat& phase_matrix, double psi_hat, double max_condition = 1e12)
{
    detail::require_dims(s_q.cols() == phase_matrix.cols(), "estimate_a_q: S_q must have K columns");
    if (phase_matrix.cols() < phase_matrix.rows())
        throw RankDeficientError("estimate_a_q: K=" + std::to_string(phase_matrix.cols()) + " blocks < M=" +
                                 std::to_string(phase_matrix.rows()));
    const CVec a = array_response(s_q.rows(), psi_hat);
    const CMat vhv = a.squaredNorm() * detail::phase_gram(phase_matrix);
    const auto qr = detail::factor_phase_gram(vhv, max_condition, "estimate_a_q");
    const CVec vhs = phase_matrix.conjugate() * (s_q.transpose() * a.conjugate());
    return qr.solve(vhs).conjugate();
}

/// (σ²/T) tr((V^H V)^{-1}).
inline double predicted_mse(double noise_var, Index t_symbols, const CMat& phase_matrix, double psi_hat,
                            Index n_bs = 1, double max_condition = 1e12)
{
    if (t_symbols < 1)
        throw ConfigError("predicted_mse: T must be >= 1");
    if (phase_matrix.cols() < phase_matrix.rows())
        throw RankDeficientError("predicted_mse: phase matrix has fewer columns than rows");
    if (noise_var == 0.0)
        return 0.0;
    const double a_norm2 = array_response(n_bs, psi_hat).squaredNorm();
    const CMat vhv = a_norm2 * detail::phase_gram(phase_matrix);
    const auto qr = detail::factor_phase_gram(vhv, max_condition, "predicted_mse");
    const CMat inv = qr.solve(CMat::Identity(vhv.rows(), vhv.cols()));
    return noise_var / static_cast<double>(t_symbols) * inv.trace().real();
}

/// Two-stage uplink estimate for all users.
inline MultiUserEstimate estimate_multi_user(const UplinkObservations& obs, const UplinkSchedule& sched,
                                             const MultiUserConfig& cfg = {})
{
    const Index q_users = sched.q_users();
    if (q_users < 1)
        throw ConfigError("estimate_multi_user: schedule has no users");
    if (sched.k_blocks() < sched.m_ris())
        throw RankDeficientError("estimate_multi_user: K=" + std::to_string(sched.k_blocks()) + " blocks < M=" +
                                 std::to_string(sched.m_ris()));
    std::vector<CMat> s_list;
    s_list.reserve(static_cast<std::size_t>(q_users));
    for (Index q = 0; q < q_users; ++q)
        s_list.push_back(despread(obs, sched, q));
    const Index n = s_list.front().rows();

    MultiUserEstimate out;
    out.psi_hat = cfg.psi_override ? detail::wrap_unit(*cfg.psi_override)
                                   : estimate_psi_uplink(s_list, cfg.search(n));
    const CVec a = array_response(n, out.psi_hat);
    for (const CMat& s : s_list)
    {
        CVec aq = estimate_a_q(s, sched.phase_matrix, out.psi_hat, cfg.max_condition);
        out.h_q_hats.push_back(a * aq.adjoint());
        out.a_bar_hats.push_back(std::move(aq));
    }
    out.predicted_mse =
        predicted_mse(obs.noise_var, sched.t_symbols(), sched.phase_matrix, out.psi_hat, n, cfg.max_condition);
    return out;
}

} // namespace riscest

#endif
