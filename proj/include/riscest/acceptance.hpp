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
/// \file acceptance.hpp
///
/// End-to-end acceptance checks. Each check runs a fixed, seeded experiment
/// and compares against a pinned tolerance. Used by the acceptance test
/// binary and by `riscest verify`.
///
#ifndef RISCEST_ACCEPTANCE_HPP
#define RISCEST_ACCEPTANCE_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/QR>

#include "baselines.hpp"
#include "experiments.hpp"
#include "metrics.hpp"
#include "mf_estimator.hpp"
#include "multiuser_estimator.hpp"
#include "results_io.hpp"

namespace riscest::acceptance
{

struct Outcome
{
    bool passed = false;
    std::string detail;
};

struct Criterion
{
    int id;
    std::string name;
    double budget_s;
    std::function<Outcome(unsigned threads)> run;
};

struct Report
{
    int id;
    std::string name;
    bool passed;
    std::string detail;
    double seconds;
    double budget_s;
};

namespace detail
{
inline std::string fmt(double v)
{
    std::ostringstream ss;
    ss.precision(4);
    ss << v;
    return ss.str();
}

inline double mean(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v)
        s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Mean of ok NMSE (or SE) values for one estimator in a record list.
inline double mean_metric(const std::vector<ResultRecord>& recs, Estimator e, double snr_db, bool se, Index* failures)
{
    std::vector<double> v;
    Index bad = 0;
    for (const auto& r : recs)
    {
        if (r.estimator != e || r.snr_db != snr_db)
            continue;
        if (r.status != RecordStatus::ok)
        {
            ++bad;
            continue;
        }
        const auto& m = se ? r.se : r.nmse;
        if (m)
            v.push_back(*m);
    }
    if (failures)
        *failures += bad;
    return mean(v);
}
} // namespace detail

// 1. Empirical MSE of ā_q with the DFT design and the true angle.
inline Outcome mse_reproduction(unsigned threads)
{
    ExperimentSpec spec;
    spec.scenario = Scenario::multi_user_uplink;
    spec.dims = {8, 16, 2, 4, 32};
    spec.snr_grid_db = {0.0}; // σ² = 1
    spec.k_grid = {32};
    spec.estimators = {Estimator::MF_UL};
    spec.n_trials = 2000;
    spec.master_seed = 101;
    spec.schedule_kind = PhaseScheduleKind::dft;
    spec.inject_true_psi = true;
    spec.validate();

    // Draw the same trials the sweep would, keeping the ā error.
    std::vector<double> mse(static_cast<std::size_t>(spec.n_trials));
    std::atomic<Index> next{0};
    auto worker = [&]() {
        for (Index t = next++; t < spec.n_trials; t = next++)
        {
            Rng rng(riscest::detail::trial_seed(spec.master_seed, {0, 0, t}));
            const UplinkTrial tr = draw_uplink_trial(spec.dims, 32, 1.0, PhaseScheduleKind::dft, rng);
            MultiUserConfig cfg;
            cfg.psi_override = tr.channel.psi;
            mse[static_cast<std::size_t>(t)] = a_bar_mse(tr, estimate_multi_user(tr.obs, tr.schedule, cfg));
        }
    };
    {
        std::vector<std::jthread> pool;
        for (unsigned i = 1; i < std::max(1u, threads); ++i)
            pool.emplace_back(worker);
        worker();
    }
    const double got = detail::mean(mse);
    const double want = 1.0 * 16.0 / (32.0 * 4.0);
    const double rel = std::abs(got - want) / want;
    return {rel <= 0.05, "empirical " + detail::fmt(got) + " vs " + detail::fmt(want) + " (rel err " +
                             detail::fmt(rel) + ", tol 0.05)"};
}

// 2. Predicted MSE is bounded below by σ²M/(KT), attained by the DFT design.
inline Outcome mse_optimality(unsigned)
{
    const Index m = 8, k = 16, t = 1;
    const double bound = static_cast<double>(m) / static_cast<double>(k * t);
    Rng rng(202);
    double worst_margin = std::numeric_limits<double>::infinity();
    Index below = 0;
    for (int i = 0; i < 100; ++i)
    {
        const double p = predicted_mse(1.0, t, random_phase_schedule(m, k, rng), uniform01(rng));
        worst_margin = std::min(worst_margin, p - bound);
        below += p < bound;
    }
    const double dft = predicted_mse(1.0, t, dft_phase_schedule(m, k), 0.3);
    const double gap = std::abs(dft - bound);
    return {below == 0 && gap <= 1e-9, "random below bound: " + std::to_string(below) + "/100, min margin " +
                                           detail::fmt(worst_margin) + "; DFT |gap| " + detail::fmt(gap) +
                                           " (tol 1e-9)"};
}

// 3. Noiseless MF-AM recovery at K = M within 20 iterations.
inline Outcome noiseless_exactness(unsigned)
{
    MfConfig cfg = MfConfig::am_defaults();
    cfg.max_iters = 20;
    Index hits = 0;
    std::vector<double> errs;
    for (Index t = 0; t < 100; ++t)
    {
        Rng rng(mix_seed({303, static_cast<std::uint64_t>(t)}));
        const DownlinkTrial tr = draw_downlink_trial(16, 32, 32, 0.0, PhaseScheduleKind::random, rng);
        double e = std::numeric_limits<double>::infinity();
        try
        {
            e = nmse(tr.cascaded.h_e, estimate_single_user(tr.obs, tr.schedule, cfg).h_e_hat);
        }
        catch (const Error&)
        {
        }
        hits += e <= 1e-8;
        errs.push_back(e);
    }
    std::sort(errs.begin(), errs.end());
    return {hits >= 95, std::to_string(hits) + "/100 trials with NMSE <= 1e-8 (need 95); median NMSE " +
                            detail::fmt(errs[50])};
}

// 4. Minimal pilot counts: errors below, success at the boundary.
inline Outcome feasibility_boundary(unsigned)
{
    const Index n = 4, m = 6;
    std::vector<std::string> problems;
    auto draw = [&](Index k, std::uint64_t salt) {
        Rng rng(mix_seed({404, salt, static_cast<std::uint64_t>(k)}));
        return draw_downlink_trial(n, m, k, 0.0, PhaseScheduleKind::random, rng);
    };
    for (const MfConfig& cfg : {MfConfig::am_defaults(), MfConfig::gd_defaults()})
    {
        const char* tag = cfg.solver == MfSolver::am ? "MF-AM" : "MF-GD";
        const DownlinkTrial below = draw(m - 1, 1);
        try
        {
            estimate_single_user(below.obs, below.schedule, cfg);
            problems.push_back(std::string(tag) + " accepted K=M-1");
        }
        catch (const RankDeficientError&)
        {
        }
        const DownlinkTrial at = draw(m, 1);
        try
        {
            const EstimateResult r = estimate_single_user(at.obs, at.schedule, cfg);
            const double fit = r.objective_final / at.obs.r.squaredNorm();
            if (!(fit <= 1e-12))
                problems.push_back(std::string(tag) + " residual " + detail::fmt(fit) + " at K=M");
        }
        catch (const Error& e)
        {
            problems.push_back(std::string(tag) + " threw at K=M: " + e.what());
        }
    }
    {
        const DownlinkTrial below = draw(m * n - 1, 2);
        try
        {
            ls_full(below.obs, below.schedule);
            problems.push_back("LS accepted K=MN-1");
        }
        catch (const RankDeficientError&)
        {
        }
    }
    double worst_ls = 0.0;
    for (std::uint64_t salt = 3; salt < 13; ++salt)
    {
        const DownlinkTrial at = draw(m * n, salt);
        try
        {
            worst_ls = std::max(worst_ls, nmse(at.cascaded.h_e, ls_full(at.obs, at.schedule)));
        }
        catch (const Error& e)
        {
            problems.push_back(std::string("LS threw at K=MN: ") + e.what());
        }
    }
    if (!(worst_ls <= 1e-12))
        problems.push_back("LS NMSE " + detail::fmt(worst_ls) + " at K=MN");
    std::string d = "worst LS NMSE at K=MN " + detail::fmt(worst_ls);
    for (const auto& p : problems)
        d += "; " + p;
    return {problems.empty(), d};
}

// 5. Analytic gradients against central differences.
inline Outcome gradient_check(unsigned)
{
    const double h = 1e-6;
    double worst = 0.0;
    Rng rng(505);
    for (int i = 0; i < 100; ++i)
    {
        const Index n = 2 + static_cast<Index>(uniform01(rng) * 7);
        const Index m = 2 + static_cast<Index>(uniform01(rng) * 7);
        const Index k = m + static_cast<Index>(uniform01(rng) * 10);
        const DownlinkTrial tr = draw_downlink_trial(n, m, k, 0.1, PhaseScheduleKind::random, rng);
        const CVec a = complex_gaussian_vector(m, rng);
        const double psi = uniform01(rng);
        const MfGradient g = gd_gradients(a, psi, tr.obs, tr.schedule);

        auto j = [&](const CVec& av, double p) { return objective(av, p, tr.obs, tr.schedule); };
        RVec analytic(2 * m + 1), numeric(2 * m + 1);
        for (Index q = 0; q < m; ++q)
        {
            CVec ap = a, am = a;
            ap(q) += h;
            am(q) -= h;
            numeric(q) = (j(ap, psi) - j(am, psi)) / (2 * h);
            ap = a;
            am = a;
            ap(q) += cplx(0, h);
            am(q) -= cplx(0, h);
            numeric(m + q) = (j(ap, psi) - j(am, psi)) / (2 * h);
        }
        // Unwrapped ψ so the difference never crosses the [0,1) seam.
        numeric(2 * m) = (j(a, psi + h) - j(a, psi - h)) / (2 * h);
        analytic << g.re_a, g.im_a, g.psi;

        const double scale_a = std::max(analytic.head(2 * m).cwiseAbs().maxCoeff(), 1e-300);
        for (Index q = 0; q <= 2 * m; ++q)
        {
            const double scale = q < 2 * m ? scale_a : std::abs(analytic(q));
            const double den = std::max(std::abs(analytic(q)), 1e-3 * scale);
            worst = std::max(worst, std::abs(analytic(q) - numeric(q)) / std::max(den, 1e-300));
        }
    }
    return {worst <= 1e-5, "max relative error " + detail::fmt(worst) + " (tol 1e-5)"};
}

// 6. AM objective never increases.
inline Outcome am_monotonicity(unsigned)
{
    double worst = -std::numeric_limits<double>::infinity();
    Index violations = 0;
    for (Index t = 0; t < 100; ++t)
    {
        Rng rng(mix_seed({606, static_cast<std::uint64_t>(t)}));
        const DownlinkTrial tr = draw_downlink_trial(16, 32, 128, 1.0, PhaseScheduleKind::random, rng);
        const EstimateResult r = estimate_single_user(tr.obs, tr.schedule, MfConfig::am_defaults());
        const auto& h = r.objective_history;
        bool bad = false;
        for (std::size_t i = 1; i < h.size(); ++i)
        {
            worst = std::max(worst, h[i] - h[i - 1]);
            bad |= h[i] > h[i - 1] + 1e-9;
        }
        violations += bad;
    }
    return {violations == 0, std::to_string(violations) + "/100 runs with an increase > 1e-9; largest step " +
                                 detail::fmt(worst)};
}

// 7. NMSE ordering at 10 dB: MF-AM (K=400) vs LR (K=400) and LS (K=1700).
inline Outcome nmse_ordering(unsigned threads)
{
    ExperimentSpec spec;
    spec.dims = {32, 50, 1, 1, 400};
    spec.snr_grid_db = {10.0};
    spec.k_grid = {400};
    spec.estimators = {Estimator::MF_AM, Estimator::LR};
    spec.n_trials = 200;
    spec.master_seed = 707;
    spec.compute_se = false;
    const auto mf_lr = run_sweep(spec, threads);
    spec.k_grid = {1700};
    spec.estimators = {Estimator::LS};
    const auto ls = run_sweep(spec, threads);

    Index failures = 0;
    const double mf = detail::mean_metric(mf_lr, Estimator::MF_AM, 10.0, false, &failures);
    const double lr = detail::mean_metric(mf_lr, Estimator::LR, 10.0, false, &failures);
    const double lsv = detail::mean_metric(ls, Estimator::LS, 10.0, false, &failures);
    return {failures == 0 && mf <= lr && mf <= lsv, "NMSE MF-AM " + detail::fmt(mf) + ", LR " + detail::fmt(lr) +
                                                        ", LS(K=1700) " + detail::fmt(lsv) + ", failed records " +
                                                        std::to_string(failures)};
}

// 8. SE ordering random <= estimated <= optimal, near optimal at high SNR.
inline Outcome se_ordering(unsigned threads)
{
    ExperimentSpec spec;
    spec.dims = {32, 50, 1, 1, 400};
    spec.k_grid = {400};
    spec.estimators = {Estimator::RANDOM, Estimator::MF_AM, Estimator::OPTIMAL};
    spec.n_trials = 200;
    spec.master_seed = 808;
    const auto recs = run_sweep(spec, threads);

    bool ok = true;
    Index failures = 0;
    std::string d;
    for (double snr : spec.snr_grid_db)
    {
        const double rnd = detail::mean_metric(recs, Estimator::RANDOM, snr, true, &failures);
        const double est = detail::mean_metric(recs, Estimator::MF_AM, snr, true, &failures);
        const double opt = detail::mean_metric(recs, Estimator::OPTIMAL, snr, true, &failures);
        const double ratio = est / opt;
        ok &= rnd <= est && est <= opt;
        if (snr >= 10.0)
            ok &= ratio >= 0.95;
        d += (d.empty() ? "" : "; ") + detail::fmt(snr) + " dB: " + detail::fmt(rnd) + " <= " + detail::fmt(est) +
             " <= " + detail::fmt(opt) + " (ratio " + detail::fmt(ratio) + ")";
    }
    ok &= failures == 0;
    return {ok, d + "; failed records " + std::to_string(failures)};
}

// 9. Uplink NMSE decreases in K; ā MSE halves per doubling with the true angle.
inline Outcome uplink_trend(unsigned threads)
{
    ExperimentSpec spec;
    spec.scenario = Scenario::multi_user_uplink;
    spec.dims = {32, 50, 5, 5, 50};
    spec.snr_grid_db = {10.0};
    spec.k_grid = {50, 100, 200, 400};
    spec.estimators = {Estimator::MF_UL};
    spec.n_trials = 200;
    spec.master_seed = 909;
    spec.schedule_kind = PhaseScheduleKind::dft;
    const auto rows = summarize(run_sweep(spec, threads));

    bool ok = true;
    std::string d = "NMSE";
    for (std::size_t i = 0; i < rows.size(); ++i)
    {
        d += " K=" + std::to_string(rows[i].k) + ":" + detail::fmt(rows[i].mean_nmse);
        ok &= rows[i].count == spec.n_trials;
        if (i > 0)
            ok &= rows[i].mean_nmse < rows[i - 1].mean_nmse;
    }

    // ā MSE with ψ injected, same trials.
    const double noise_var = noise_var_from_snr_db(10.0);
    std::vector<double> mse;
    for (std::size_t ki = 0; ki < spec.k_grid.size(); ++ki)
    {
        std::vector<double> v;
        for (Index t = 0; t < spec.n_trials; ++t)
        {
            Rng rng(riscest::detail::trial_seed(spec.master_seed, {0, static_cast<Index>(ki), t}));
            const UplinkTrial tr = draw_uplink_trial(spec.dims, spec.k_grid[ki], noise_var, spec.schedule_kind, rng);
            MultiUserConfig cfg;
            cfg.psi_override = tr.channel.psi;
            v.push_back(a_bar_mse(tr, estimate_multi_user(tr.obs, tr.schedule, cfg)));
        }
        mse.push_back(detail::mean(v));
    }
    d += "; a_bar MSE ratios";
    for (std::size_t i = 1; i < mse.size(); ++i)
    {
        const double ratio = mse[i] / mse[i - 1];
        d += " " + detail::fmt(ratio);
        ok &= std::abs(ratio - 0.5) <= 0.05;
    }
    return {ok, d + " (target 0.5 +- 10%)"};
}

// 10. Fast per-user LS equals the explicit Kronecker LS.
inline Outcome kronecker_equivalence(unsigned)
{
    double worst = 0.0;
    Rng rng(1010);
    for (Index n = 1; n <= 4; ++n)
        for (Index m = 1; m <= 4; ++m)
            for (Index k = m; k <= 4; ++k)
            {
                const CMat theta = random_phase_schedule(m, k, rng);
                const CMat s = complex_gaussian_matrix(n, k, rng);
                const double psi = uniform01(rng);
                const CVec fast = estimate_a_q(s, theta, psi);

                const CVec a = array_response(n, psi);
                CMat v(n * k, m);
                for (Index kk = 0; kk < k; ++kk)
                    for (Index i = 0; i < n; ++i)
                        for (Index mm = 0; mm < m; ++mm)
                            v(kk * n + i, mm) = theta(mm, kk) * a(i);
                const CVec vec_s = Eigen::Map<const CVec>(s.data(), n * k);
                const CVec slow = v.completeOrthogonalDecomposition().solve(vec_s).conjugate();
                worst = std::max(worst, (fast - slow).norm() / std::max(1.0, slow.norm()));
            }
    return {worst <= 1e-12, "max relative difference " + detail::fmt(worst) + " (tol 1e-12)"};
}

// 11. Byte-identical CSV across reruns and thread counts.
inline Outcome determinism(unsigned)
{
    ExperimentSpec down;
    down.dims = {6, 8, 1, 1, 16};
    down.snr_grid_db = {0.0, 10.0};
    down.k_grid = {7, 16, 48};
    down.estimators = {Estimator::MF_AM, Estimator::MF_GD, Estimator::LS, Estimator::LR, Estimator::OPTIMAL,
                       Estimator::RANDOM};
    down.n_trials = 6;
    down.master_seed = 1111;
    down.solvers.mf_gd.max_iters = 100;

    ExperimentSpec up;
    up.scenario = Scenario::multi_user_uplink;
    up.dims = {6, 8, 3, 3, 8};
    up.snr_grid_db = {5.0};
    up.k_grid = {4, 8, 16};
    up.estimators = {Estimator::MF_UL};
    up.n_trials = 6;
    up.master_seed = 1112;

    std::string d;
    bool ok = true;
    for (const ExperimentSpec* spec : {&down, &up})
    {
        const std::string ref = to_csv(run_sweep(*spec, 1));
        for (unsigned th : {1u, 2u, 3u, 8u})
            ok &= to_csv(run_sweep(*spec, th)) == ref;
        d += (d.empty() ? "" : "; ") + std::string(to_string(spec->scenario)) + " " + std::to_string(ref.size()) +
             " bytes";
    }
    return {ok, d + (ok ? ", identical for threads 1,1,2,3,8" : ", outputs differ")};
}

inline std::vector<Criterion> criteria()
{
    return {
        {1, "uplink a_bar MSE equals sigma^2 M/(KT) with DFT phases", 30, mse_reproduction},
        {2, "DFT phases attain the predicted-MSE lower bound", 5, mse_optimality},
        {3, "noiseless MF-AM exact at K=M", 60, noiseless_exactness},
        {4, "minimal pilot feasibility boundary", 10, feasibility_boundary},
        {5, "analytic gradients match finite differences", 5, gradient_check},
        {6, "AM objective is non-increasing", 60, am_monotonicity},
        {7, "MF-AM NMSE below LR and LS at 10 dB", 900, nmse_ordering},
        {8, "SE ordering random <= MF <= optimal", 900, se_ordering},
        {9, "uplink NMSE decreases with K", 900, uplink_trend},
        {10, "fast per-user LS equals Kronecker LS", 5, kronecker_equivalence},
        {11, "sweeps are deterministic across thread counts", 600, determinism},
    };
}

/// Run one criterion, catching any exception as a failure. A criterion
/// that exceeds its time budget fails.
inline Report run(const Criterion& c, unsigned threads = 1)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try
    {
        o = c.run(threads);
    }
    catch (const std::exception& e)
    {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Report r{c.id, c.name, o.passed, o.detail, s, c.budget_s};
    if (s > c.budget_s)
    {
        r.passed = false;
        r.detail += "; exceeded time budget " + detail::fmt(c.budget_s) + " s";
    }
    return r;
}

inline std::string format_line(const Report& r)
{
    return std::string(r.passed ? "PASS" : "FAIL") + " [" + std::to_string(r.id) + "] " + r.name + " | " +
           r.detail + " | " + detail::fmt(r.seconds) + " s";
}

} // namespace riscest::acceptance

#endif
