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

#ifndef RISCEST_BASELINES_HPP
#define RISCEST_BASELINES_HPP

#include <algorithm>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "mf_estimator.hpp"
#include "signal_model.hpp"
#include "types.hpp"

namespace riscest
{

// ----- Full least squares -----------------------------------------------------

struct LsConfig
{
    /// Rows of the K x MN design matrix materialized at a time.
    Index block_rows = 256;
    /// Pivot ratio min L_ii^2 / max L_ii^2 of the Gram Cholesky factor below
    /// which the design is declared rank deficient.
    double rank_tol = 1e-13;
};

/// Design row for slot k: x_k^T ⊗ θ_k^T, so that r_k = row · vec(H_e) with
/// column-major vec (index m + M n).
inline void ls_design_row(const PilotSchedule& sched, Index k, Eigen::Ref<Eigen::RowVectorXcd, 0, Eigen::InnerStride<>> row)
{
    const Index m = sched.m_ris();
    for (Index n = 0; n < sched.n_bs(); ++n)
        row.segment(n * m, m) = sched.pilots(n, k) * sched.phases.col(k).transpose();
}

/// Unstructured LS estimate of H_e (M x N). Requires K >= MN.
///
/// The normal equations are accumulated over row blocks so the K x MN design
/// is never held whole, then solved with a blocked Cholesky factorization.
inline CMat ls_full(const DownlinkObservations& obs, const PilotSchedule& sched, const LsConfig& cfg = {})
{
    detail::check_downlink(obs, sched);
    const Index m = sched.m_ris();
    const Index n = sched.n_bs();
    const Index unknowns = m * n;
    const Index k_slots = sched.k_slots();
    if (k_slots < unknowns)
        throw RankDeficientError("ls_full: K=" + std::to_string(k_slots) + " pilots < MN=" +
                                 std::to_string(unknowns));

    CMat gram = CMat::Zero(unknowns, unknowns);
    CVec rhs = CVec::Zero(unknowns);
    const Index block = std::max<Index>(1, cfg.block_rows);
    CMat rows(block, unknowns);
    for (Index k0 = 0; k0 < k_slots; k0 += block)
    {
        const Index nb = std::min(block, k_slots - k0);
        for (Index i = 0; i < nb; ++i)
            ls_design_row(sched, k0 + i, rows.row(i));
        const auto blk = rows.topRows(nb);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(blk.adjoint());
        rhs.noalias() += blk.adjoint() * obs.r.segment(k0, nb);
    }

    Eigen::LLT<CMat, Eigen::Lower> llt(gram);
    if (llt.info() != Eigen::Success)
        throw RankDeficientError("ls_full: design matrix is rank deficient");
    const RVec d = llt.matrixLLT().diagonal().real().cwiseAbs2();
    if (!d.allFinite() || d.minCoeff() <= cfg.rank_tol * d.maxCoeff())
        throw RankDeficientError("ls_full: design matrix is rank deficient");
    const CVec vec_h = llt.solve(rhs);
    return Eigen::Map<const CMat>(vec_h.data(), m, n);
}

// ----- Unstructured rank-one recovery ------------------------------------------

/// u v^H with ‖v‖ = 1; the magnitude lives in u.
struct RankOneFactors
{
    CVec u; // M
    CVec v; // N

    CMat matrix() const { return u * v.adjoint(); }
};

struct LrConfig
{
    Index max_iters = 500;
    double tol_objective = 1e-10;
    double max_condition = 1e12;
};

struct RankOneEstimate
{
    RankOneFactors factors;
    CMat h_e_hat;
    std::vector<double> objective_history;
    Index iters_used = 0;
    bool converged = false;
};

namespace detail
{
inline double rank_one_objective(const RankOneFactors& f, const DownlinkObservations& obs, const PilotSchedule& sched)
{
    const CVec tu = sched.phases.transpose() * f.u;
    const CVec vx = sched.pilots.transpose() * f.v.conjugate();
    return (tu.cwiseProduct(vx) - obs.r).squaredNorm();
}

inline void normalize_factors(RankOneFactors& f)
{
    const double s = f.v.norm();
    if (s > 0.0)
    {
        f.v /= s;
        f.u *= s;
    }
}
} // namespace detail

/// Alternating exact LS on r_k = (θ_k^T u)(v^H x_k), initialized from the
/// leading right singular vector of the spectral matrix.
inline RankOneEstimate lr_rankone(const DownlinkObservations& obs, const PilotSchedule& sched,
                                  const LrConfig& cfg = {})
{
    detail::check_downlink(obs, sched);
    const Index m = sched.m_ris();
    const CMat s = spectral_matrix(obs, sched);
    if (s.cwiseAbs2().maxCoeff() == 0.0)
        throw DegenerateInputError("lr_rankone: observations are all zero");

    Eigen::JacobiSVD<CMat> svd(s, Eigen::ComputeThinU | Eigen::ComputeThinV);
    RankOneFactors f;
    f.v = svd.matrixV().col(0);
    f.u = CVec::Zero(m);

    auto solve_u = [&]() {
        const CVec vx = sched.pilots.transpose() * f.v.conjugate();
        const CMat b = vx.asDiagonal() * sched.phases.transpose();
        f.u = detail::solve_ls(b, obs.r, cfg.max_condition, "lr_rankone (u step)");
    };
    auto solve_v = [&]() {
        const CVec tu = sched.phases.transpose() * f.u;
        const CMat b = tu.asDiagonal() * sched.pilots.transpose();
        f.v = detail::solve_ls(b, obs.r, cfg.max_condition, "lr_rankone (v step)").conjugate();
        detail::normalize_factors(f);
    };

    RankOneEstimate out;
    solve_u();
    out.objective_history.push_back(detail::rank_one_objective(f, obs, sched));
    const double floor = detail::objective_floor(obs.r);
    bool converged = out.objective_history.back() <= floor;
    Index it = 0;
    while (!converged && it < cfg.max_iters)
    {
        solve_v();
        solve_u();
        ++it;
        const double j_prev = out.objective_history.back();
        const double j_new = detail::rank_one_objective(f, obs, sched);
        out.objective_history.push_back(j_new);
        converged = j_new <= floor || std::abs(j_prev - j_new) < cfg.tol_objective * j_prev;
    }
    out.factors = f;
    out.h_e_hat = f.matrix();
    out.iters_used = it;
    out.converged = converged;
    return out;
}

} // namespace riscest

#endif
