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
/// \file mf_estimator.hpp
///
/// Single-user downlink estimation of the cascaded channel
/// H_e = ā a_B(ψ)^H from scalar observations r_k = θ_k^T H_e x_k + n_k.
///
/// The unknowns are the RIS-side vector ā (M complex) and the BS angle ψ.
/// Both iterative solvers start from a spectral initialization:
///
///   S   = (√N / K) Σ_k r_k θ_k^* x_k^H,
///   ψ⁰  = argmax_ψ ‖S a_B(ψ)‖²,
///   ā⁰  = argmin_ā ‖B(ψ⁰) ā − r‖²,   B(ψ)[k,:] = a_B(ψ)^H x_k θ_k^T.
///
/// Alternating minimization then repeats a 1-D ψ search with ā fixed and an
/// exact LS solve for ā with ψ fixed. Gradient descent updates Re ā, Im ā
/// and ψ jointly with the real gradients of
///
///   J(ā, ψ) = Σ_k |θ_k^T ā a_B(ψ)^H x_k − r_k|².
///
#ifndef RISCEST_MF_ESTIMATOR_HPP
#define RISCEST_MF_ESTIMATOR_HPP

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/QR>

#include "channel_model.hpp"
#include "manifold_search.hpp"
#include "signal_model.hpp"
#include "types.hpp"

namespace riscest
{

enum class MfSolver
{
    am,
    gd
};

struct MfConfig
{
    Index max_iters = 200;
    /// Gradient-descent step η, shared by Re ā, Im ā and ψ.
    double step_size = 1e-2;
    /// Coarse ψ grid size; 0 selects 4N.
    Index grid_points_coarse = 0;
    Index refine_levels = 6;
    double refine_shrink = 0.1;
    /// Stop when |J_prev - J| / J_prev falls below this.
    double tol_objective = 1e-10;
    MfSolver solver = MfSolver::am;

    /// Halve η (by backtrack_factor) until J does not increase.
    bool backtracking = true;
    double backtrack_factor = 0.5;
    int max_halvings = 30;
    /// Multiplier on η for the ψ coordinate only. 1 reproduces the plain
    /// shared-step update.
    double psi_step_scale = 1.0;

    /// LS solves fail above this estimated condition number.
    double max_condition = 1e12;

    static MfConfig am_defaults() { return {}; }

    static MfConfig gd_defaults()
    {
        MfConfig c;
        c.solver = MfSolver::gd;
        c.max_iters = 2000;
        return c;
    }

    void validate() const
    {
        if (max_iters < 0 || grid_points_coarse < 0 || refine_levels < 0 || max_halvings < 0)
            throw ConfigError("MfConfig: counts must be non-negative");
        if (!(step_size >= 0.0) || !(tol_objective > 0.0) || !(psi_step_scale >= 0.0))
            throw ConfigError("MfConfig: step_size and psi_step_scale must be >= 0, tol_objective > 0");
        if (!(refine_shrink > 0.0 && refine_shrink < 1.0) || !(backtrack_factor > 0.0 && backtrack_factor < 1.0))
            throw ConfigError("MfConfig: refine_shrink and backtrack_factor must lie in (0,1)");
    }

    SearchConfig search(Index n_bs) const
    {
        return {grid_points_coarse > 0 ? grid_points_coarse : 4 * n_bs, refine_levels, refine_shrink};
    }
};

/// Iterate of the factorized estimate.
struct MfState
{
    CVec a_bar;
    double psi = 0.0;
    std::vector<double> objective_history;
    Index iter = 0;
};

struct EstimateResult
{
    CMat h_e_hat;
    double psi_hat = 0.0;
    CVec a_bar_hat;
    double objective_final = 0.0;
    Index iters_used = 0;
    bool converged = false;
    std::vector<double> objective_history;
};

/// Real gradients of J. `a_bar` packs dJ/dRe ā + j dJ/dIm ā.
struct MfGradient
{
    RVec re_a;
    RVec im_a;
    double psi = 0.0;
};

namespace detail
{
inline void check_downlink(const DownlinkObservations& obs, const PilotSchedule& sched)
{
    require_dims(sched.pilots.cols() == sched.phases.cols(), "PilotSchedule: pilot and phase counts differ");
    require_dims(obs.size() == sched.k_slots(), "observation count must equal schedule K");
}

/// c_k(ψ) = a_B(ψ)^H x_k for all k.
inline CVec steering_gains(const PilotSchedule& sched, double psi)
{
    return sched.pilots.transpose() * array_response(sched.n_bs(), psi).conjugate();
}

inline double objective_from(const CVec& d, const CVec& c, const CVec& r)
{
    return (d.cwiseProduct(c) - r).squaredNorm();
}

/// J along a batch of ψ values with ā fixed (d_k = θ_k^T ā precomputed).
inline RVec objective_batch(const CVec& d, const PilotSchedule& sched, const CVec& r, const RVec& psis)
{
    // C[k,j] = a_B(ψ_j)^H x_k
    const CMat c = sched.pilots.transpose() * steering_matrix(sched.n_bs(), psis).conjugate();
    return ((d.asDiagonal() * c).colwise() - r).colwise().squaredNorm().transpose();
}

inline double objective_floor(const CVec& r)
{
    return 1e-26 * std::max(r.squaredNorm(), std::numeric_limits<double>::min());
}
} // namespace detail

/// J(ā, ψ) = Σ_k |θ_k^T ā a_B(ψ)^H x_k − r_k|².
inline double objective(const CVec& a_bar, double psi, const DownlinkObservations& obs, const PilotSchedule& sched)
{
    detail::check_downlink(obs, sched);
    detail::require_dims(a_bar.size() == sched.m_ris(), "objective: a_bar must have length M");
    const CVec d = sched.phases.transpose() * a_bar;
    return detail::objective_from(d, detail::steering_gains(sched, psi), obs.r);
}

/// S = (√N / K) Σ_k r_k conj(θ_k) x_k^H, an M x N matrix.
inline CMat spectral_matrix(const DownlinkObservations& obs, const PilotSchedule& sched)
{
    detail::check_downlink(obs, sched);
    const Index k = sched.k_slots();
    if (k < 1)
        throw RankDeficientError("spectral_matrix: need at least one observation");
    const double scale = std::sqrt(static_cast<double>(sched.n_bs())) / static_cast<double>(k);
    return scale * (sched.phases.conjugate() * obs.r.asDiagonal() * sched.pilots.adjoint());
}

/// ψ⁰ = argmax_ψ ‖S a_B(ψ)‖².
inline double init_psi(const CMat& s, const SearchConfig& search)
{
    if (s.size() == 0 || s.cwiseAbs2().maxCoeff() == 0.0)
        throw DegenerateInputError("init_psi: spectral matrix is zero (no signal in the observations)");
    // ‖S a‖² = a^H (S^H S) a; the N x N Gram keeps each score O(N²).
    const CMat gram = s.adjoint() * s;
    auto score = [&](const RVec& psis) {
        const CMat a = steering_matrix(s.cols(), psis);
        return (a.conjugate().cwiseProduct(gram * a)).colwise().sum().real().transpose().eval();
    };
    return maximize_over_manifold(score, search);
}

inline double init_psi(const CMat& s)
{
    return init_psi(s, SearchConfig::for_array(s.cols()));
}

namespace detail
{
/// Min-norm-free LS via column-pivoted Householder QR with rank and
/// condition checks. `what` prefixes error messages.
inline CVec solve_ls(const CMat& b, const CVec& rhs, double max_condition, const char* what)
{
    const Index rows = b.rows();
    const Index cols = b.cols();
    if (rows < cols)
        throw RankDeficientError(std::string(what) + ": " + std::to_string(rows) + " equations for " +
                                 std::to_string(cols) + " unknowns");
    Eigen::ColPivHouseholderQR<CMat> qr(b);
    if (qr.rank() < cols)
        throw RankDeficientError(std::string(what) + ": design matrix is rank deficient (rank " +
                                 std::to_string(qr.rank()) + " < " + std::to_string(cols) + ")");
    const auto r_diag = qr.matrixR().diagonal().cwiseAbs();
    const double cond = r_diag(0) / r_diag(cols - 1);
    if (!(cond <= max_condition))
        throw IllConditionedError(std::string(what) + ": condition estimate " + std::to_string(cond) +
                                  " exceeds limit");
    return qr.solve(rhs);
}
} // namespace detail

/// argmin_ā ‖B(ψ) ā − r‖², B[k,:] = a_B(ψ)^H x_k θ_k^T.
inline CVec ls_a_bar(double psi, const DownlinkObservations& obs, const PilotSchedule& sched,
                     double max_condition = 1e12)
{
    detail::check_downlink(obs, sched);
    const CVec c = detail::steering_gains(sched, psi);
    const CMat b = c.asDiagonal() * sched.phases.transpose();
    return detail::solve_ls(b, obs.r, max_condition, "ls_a_bar");
}

/// One alternating-minimization sweep: ψ step (accepted only if J does not
/// increase), then the exact LS ā step.
inline MfState am_iterate(const MfState& state, const DownlinkObservations& obs, const PilotSchedule& sched,
                          const MfConfig& cfg)
{
    detail::check_downlink(obs, sched);
    const CVec d = sched.phases.transpose() * state.a_bar;
    const double j_old = detail::objective_from(d, detail::steering_gains(sched, state.psi), obs.r);

    auto neg_j = [&](const RVec& psis) { return (-detail::objective_batch(d, sched, obs.r, psis)).eval(); };
    const double cand = maximize_over_manifold(neg_j, cfg.search(sched.n_bs()));
    const double j_cand = detail::objective_from(d, detail::steering_gains(sched, cand), obs.r);

    MfState next;
    next.psi = j_cand <= j_old ? cand : state.psi;
    next.a_bar = ls_a_bar(next.psi, obs, sched, cfg.max_condition);
    next.objective_history = state.objective_history;
    next.objective_history.push_back(objective(next.a_bar, next.psi, obs, sched));
    next.iter = state.iter + 1;
    return next;
}

inline MfGradient gd_gradients(const CVec& a_bar, double psi, const DownlinkObservations& obs,
                               const PilotSchedule& sched)
{
    detail::check_downlink(obs, sched);
    detail::require_dims(a_bar.size() == sched.m_ris(), "gd_gradients: a_bar must have length M");
    const Index n = sched.n_bs();
    const CVec c = detail::steering_gains(sched, psi);
    const CVec d = sched.phases.transpose() * a_bar;
    const CVec e = d.cwiseProduct(c) - obs.r;

    // dJ/dRe ā + j dJ/dIm ā = 2 Σ_k θ_k^* (x_k^H a_B) e_k
    const CVec ga = 2.0 * (sched.phases.conjugate() * c.conjugate().cwiseProduct(e));
    // dJ/dRe a_B + j dJ/dIm a_B = 2 Σ_k (θ_k^T ā) x_k e_k^*
    const CVec gb = 2.0 * (sched.pilots * d.cwiseProduct(e.conjugate()));
    const CVec da = array_response_derivative(n, psi);

    MfGradient g;
    g.re_a = ga.real();
    g.im_a = ga.imag();
    g.psi = gb.real().dot(da.real()) + gb.imag().dot(da.imag());
    return g;
}

/// One gradient step on (Re ā, Im ā, ψ) with optional backtracking. If no
/// trial step within the halving budget lowers J, the state is kept.
inline MfState gd_iterate(const MfState& state, const DownlinkObservations& obs, const PilotSchedule& sched,
                          const MfConfig& cfg)
{
    const MfGradient g = gd_gradients(state.a_bar, state.psi, obs, sched);
    CVec step(g.re_a.size());
    step.real() = g.re_a;
    step.imag() = g.im_a;

    const double j_old = objective(state.a_bar, state.psi, obs, sched);
    MfState next;
    next.a_bar = state.a_bar;
    next.psi = state.psi;
    double j_new = j_old;
    double eta = cfg.step_size;
    const int attempts = cfg.backtracking ? cfg.max_halvings + 1 : 1;
    for (int h = 0; h < attempts; ++h, eta *= cfg.backtrack_factor)
    {
        CVec a_try = state.a_bar - eta * step;
        const double psi_try = detail::wrap_unit(state.psi - eta * cfg.psi_step_scale * g.psi);
        const double j_try = objective(a_try, psi_try, obs, sched);
        if (!cfg.backtracking || j_try <= j_old)
        {
            next.a_bar = std::move(a_try);
            next.psi = psi_try;
            j_new = j_try;
            break;
        }
    }
    next.objective_history = state.objective_history;
    next.objective_history.push_back(j_new);
    next.iter = state.iter + 1;
    return next;
}

/// Spectral initialization: ψ⁰ from S, then ā⁰ by LS.
inline MfState initialize(const DownlinkObservations& obs, const PilotSchedule& sched, const MfConfig& cfg)
{
    detail::check_downlink(obs, sched);
    if (sched.k_slots() < sched.m_ris())
        throw RankDeficientError("estimate_single_user: K=" + std::to_string(sched.k_slots()) +
                                 " pilots are fewer than the M=" + std::to_string(sched.m_ris()) +
                                 " required");
    MfState st;
    st.psi = init_psi(spectral_matrix(obs, sched), cfg.search(sched.n_bs()));
    st.a_bar = ls_a_bar(st.psi, obs, sched, cfg.max_condition);
    st.objective_history.push_back(objective(st.a_bar, st.psi, obs, sched));
    return st;
}

inline EstimateResult make_result(const MfState& st, Index n_bs, bool converged)
{
    EstimateResult out;
    out.psi_hat = st.psi;
    out.a_bar_hat = st.a_bar;
    out.h_e_hat = st.a_bar * array_response(n_bs, st.psi).adjoint();
    out.objective_final = st.objective_history.empty() ? 0.0 : st.objective_history.back();
    out.iters_used = st.iter;
    out.converged = converged;
    out.objective_history = st.objective_history;
    return out;
}

/// Run the iterative refinement from an explicit starting state.
inline EstimateResult refine(MfState state, const DownlinkObservations& obs, const PilotSchedule& sched,
                             const MfConfig& cfg)
{
    cfg.validate();
    const double floor = detail::objective_floor(obs.r);
    if (state.objective_history.empty())
        state.objective_history.push_back(objective(state.a_bar, state.psi, obs, sched));

    CVec best_a = state.a_bar;
    double best_psi = state.psi;
    double best_j = state.objective_history.back();
    bool converged = best_j <= floor;
    while (!converged && state.iter < cfg.max_iters)
    {
        const double j_prev = state.objective_history.back();
        state = cfg.solver == MfSolver::am ? am_iterate(state, obs, sched, cfg) : gd_iterate(state, obs, sched, cfg);
        const double j_new = state.objective_history.back();
        if (j_new <= best_j)
        {
            best_a = state.a_bar;
            best_psi = state.psi;
            best_j = j_new;
        }
        converged = j_new <= floor || std::abs(j_prev - j_new) < cfg.tol_objective * j_prev;
    }
    // The estimate is the best iterate; the history keeps the full trajectory.
    state.a_bar = std::move(best_a);
    state.psi = best_psi;
    EstimateResult out = make_result(state, sched.n_bs(), converged);
    out.objective_final = best_j;
    return out;
}

/// Full single-user pipeline: spectral init, LS ā, then AM or GD.
inline EstimateResult estimate_single_user(const DownlinkObservations& obs, const PilotSchedule& sched,
                                           const MfConfig& cfg = {})
{
    cfg.validate();
    return refine(initialize(obs, sched, cfg), obs, sched, cfg);
}

/// Successive multipath estimation.
struct MultipathEstimate
{
    std::vector<EstimateResult> paths;
    CMat h_e_hat; // Σ_l Ĥ_e^(l)
};

/// Estimate L rank-one components one after another, each from the
/// observations with the previous components' contributions removed.
///
/// With `backfit_sweeps` > 0 the successive pass is followed by that many
/// cycles over the paths; each cycle re-fits path l against the residual of
/// all other paths, warm-started from its current factors. 0 gives the plain
/// successive estimate.
inline MultipathEstimate estimate_multipath(const DownlinkObservations& obs, const PilotSchedule& sched,
                                            const MfConfig& cfg, Index n_paths, Index backfit_sweeps = 0)
{
    if (n_paths < 1)
        throw ConfigError("estimate_multipath: n_paths must be >= 1");
    if (backfit_sweeps < 0)
        throw ConfigError("estimate_multipath: backfit_sweeps must be >= 0");
    MultipathEstimate out;
    DownlinkObservations residual = obs;
    std::vector<CVec> contrib;
    for (Index l = 0; l < n_paths; ++l)
    {
        EstimateResult est = estimate_single_user(residual, sched, cfg);
        contrib.push_back(downlink_noiseless(est.h_e_hat, sched));
        residual.r -= contrib.back();
        out.paths.push_back(std::move(est));
    }

    for (Index sweep = 0; sweep < backfit_sweeps; ++sweep)
        for (std::size_t l = 0; l < out.paths.size(); ++l)
        {
            DownlinkObservations others = obs;
            for (std::size_t j = 0; j < contrib.size(); ++j)
                if (j != l)
                    others.r -= contrib[j];
            MfState warm;
            warm.a_bar = out.paths[l].a_bar_hat;
            warm.psi = out.paths[l].psi_hat;
            out.paths[l] = refine(std::move(warm), others, sched, cfg);
            contrib[l] = downlink_noiseless(out.paths[l].h_e_hat, sched);
        }

    out.h_e_hat = CMat::Zero(sched.m_ris(), sched.n_bs());
    for (const auto& p : out.paths)
        out.h_e_hat += p.h_e_hat;
    return out;
}

} // namespace riscest

#endif
