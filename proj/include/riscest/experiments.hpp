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
/// \file experiments.hpp
///
/// Monte Carlo sweeps over (SNR, K, trial). Every (snr index, k index,
/// trial) cell draws its own channel, schedule and noise from
///
///   trial_seed = mix_seed({master_seed, snr_index, k_index, trial})
///
/// and all estimators of the sweep are run on that same draw. Estimator
/// specific randomness (the random-phase benchmark) uses
/// mix_seed({trial_seed, estimator_id}). Records are emitted estimator-major,
/// then by SNR, K and trial, independent of the thread count.
///
#ifndef RISCEST_EXPERIMENTS_HPP
#define RISCEST_EXPERIMENTS_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "baselines.hpp"
#include "channel_model.hpp"
#include "metrics.hpp"
#include "mf_estimator.hpp"
#include "multiuser_estimator.hpp"
#include "random.hpp"
#include "signal_model.hpp"
#include "types.hpp"

namespace riscest
{

inline constexpr std::string_view version = "0.1.0";

enum class Scenario
{
    single_user_downlink,
    multi_user_uplink,
    overhead_table
};

/// Estimators and benchmarks a sweep can run. OPTIMAL and RANDOM are the
/// spectral-efficiency benchmarks (design from the true channel / random
/// phases); MF_UL is the two-stage uplink estimator.
enum class Estimator : std::uint64_t
{
    MF_AM = 1,
    MF_GD = 2,
    LS = 3,
    LR = 4,
    MF_UL = 5,
    OPTIMAL = 6,
    RANDOM = 7
};

inline std::string_view to_string(Scenario s)
{
    switch (s)
    {
    case Scenario::single_user_downlink: return "single_user_downlink";
    case Scenario::multi_user_uplink: return "multi_user_uplink";
    case Scenario::overhead_table: return "overhead_table";
    }
    return "?";
}

inline Scenario scenario_from_string(std::string_view s)
{
    if (s == "single_user_downlink")
        return Scenario::single_user_downlink;
    if (s == "multi_user_uplink")
        return Scenario::multi_user_uplink;
    if (s == "overhead_table")
        return Scenario::overhead_table;
    throw ConfigError("unknown scenario '" + std::string(s) + "'");
}

inline std::string_view to_string(Estimator e)
{
    switch (e)
    {
    case Estimator::MF_AM: return "MF_AM";
    case Estimator::MF_GD: return "MF_GD";
    case Estimator::LS: return "LS";
    case Estimator::LR: return "LR";
    case Estimator::MF_UL: return "MF_UL";
    case Estimator::OPTIMAL: return "OPTIMAL";
    case Estimator::RANDOM: return "RANDOM";
    }
    return "?";
}

inline Estimator estimator_from_string(std::string_view s)
{
    for (auto e : {Estimator::MF_AM, Estimator::MF_GD, Estimator::LS, Estimator::LR, Estimator::MF_UL,
                   Estimator::OPTIMAL, Estimator::RANDOM})
        if (to_string(e) == s)
            return e;
    throw ConfigError("unknown estimator '" + std::string(s) + "'");
}

inline std::string_view to_string(PhaseScheduleKind k)
{
    return k == PhaseScheduleKind::dft ? "dft" : "random";
}

inline PhaseScheduleKind schedule_kind_from_string(std::string_view s)
{
    if (s == "random")
        return PhaseScheduleKind::random;
    if (s == "dft")
        return PhaseScheduleKind::dft;
    throw ConfigError("unknown schedule_kind '" + std::string(s) + "'");
}

/// Minimal training pilots (training overhead) of each method.
inline Index minimal_pilots(Estimator e, const SystemDims& dims)
{
    switch (e)
    {
    case Estimator::MF_AM:
    case Estimator::MF_GD:
    case Estimator::MF_UL: return dims.m_ris;
    case Estimator::LS: return dims.m_ris * dims.n_bs;
    case Estimator::LR: return dims.m_ris + dims.n_bs;
    case Estimator::OPTIMAL:
    case Estimator::RANDOM: return 0;
    }
    return 0;
}

struct OverheadRow
{
    std::string estimator;
    Index minimal_pilots = 0;
    bool runnable = true;
};

/// Training-overhead table. KBF is listed for reference only.
inline std::vector<OverheadRow> overhead_table(const SystemDims& dims)
{
    dims.validate();
    return {
        {"MF_GD", minimal_pilots(Estimator::MF_GD, dims), true},
        {"MF_AM", minimal_pilots(Estimator::MF_AM, dims), true},
        {"LS", minimal_pilots(Estimator::LS, dims), true},
        {"LR", minimal_pilots(Estimator::LR, dims), true},
        {"KBF", dims.m_ris * dims.n_bs, false},
    };
}

// ----- Experiment specification -------------------------------------------------

/// Solver knobs exposed through the experiment spec.
struct SolverSettings
{
    MfConfig mf_am = MfConfig::am_defaults();
    MfConfig mf_gd = MfConfig::gd_defaults();
    LrConfig lr{};
    LsConfig ls{};
};

struct ExperimentSpec
{
    Scenario scenario = Scenario::single_user_downlink;
    SystemDims dims{32, 50, 1, 1, 400};
    std::vector<double> snr_grid_db{-10, -5, 0, 5, 10, 15, 20};
    std::vector<Index> k_grid{400};
    std::vector<Estimator> estimators{Estimator::MF_AM, Estimator::MF_GD, Estimator::LS, Estimator::LR};
    Index n_trials = 200;
    std::uint64_t master_seed = 1;
    PhaseScheduleKind schedule_kind = PhaseScheduleKind::random;

    /// Force σ² = 0 (records carry snr_db = +inf).
    bool noiseless = false;
    /// Attach the spectral efficiency of each estimate (downlink only).
    bool compute_se = true;
    /// Uplink: bypass ψ estimation with the true angle.
    bool inject_true_psi = false;
    /// Measure wall time per record. Off by default so output is reproducible
    /// byte for byte.
    bool record_timing = false;

    SolverSettings solvers{};

    void validate() const
    {
        if (scenario == Scenario::multi_user_uplink)
            dims.validate_uplink();
        else
            dims.validate();
        if (n_trials < 1)
            throw ConfigError("ExperimentSpec: n_trials must be >= 1");
        if (k_grid.empty() || (snr_grid_db.empty() && !noiseless))
            throw ConfigError("ExperimentSpec: snr_grid_db and k_grid must be non-empty");
        if (std::any_of(k_grid.begin(), k_grid.end(), [](Index k) { return k < 1; }))
            throw ConfigError("ExperimentSpec: every K must be >= 1");
        if (std::any_of(snr_grid_db.begin(), snr_grid_db.end(), [](double s) { return !std::isfinite(s); }))
            throw ConfigError("ExperimentSpec: SNR values must be finite (use noiseless for sigma^2 = 0)");
        if (estimators.empty() && scenario != Scenario::overhead_table)
            throw ConfigError("ExperimentSpec: at least one estimator is required");
        for (Estimator e : estimators)
        {
            const bool uplink = e == Estimator::MF_UL;
            if (scenario == Scenario::multi_user_uplink && !uplink)
                throw ConfigError("ExperimentSpec: multi_user_uplink supports only MF_UL");
            if (scenario == Scenario::single_user_downlink && uplink)
                throw ConfigError("ExperimentSpec: MF_UL requires the multi_user_uplink scenario");
        }
        solvers.mf_am.validate();
        solvers.mf_gd.validate();
    }

    std::vector<double> effective_snr_grid() const
    {
        if (noiseless)
            return {std::numeric_limits<double>::infinity()};
        return snr_grid_db;
    }
};

/// σ² for a given SNR in dB (SNR = 1/σ²); +inf maps to 0.
inline double noise_var_from_snr_db(double snr_db)
{
    if (std::isinf(snr_db) && snr_db > 0)
        return 0.0;
    return std::pow(10.0, -snr_db / 10.0);
}

// ----- Records -------------------------------------------------------------------

enum class RecordStatus
{
    ok,
    infeasible,
    failed
};

struct ResultRecord
{
    Scenario scenario = Scenario::single_user_downlink;
    Estimator estimator = Estimator::MF_AM;
    double snr_db = 0.0;
    Index k = 0;
    Index trial = 0;
    std::uint64_t seed = 0;
    RecordStatus status = RecordStatus::ok;
    std::optional<double> nmse;
    std::optional<double> se;
    double wall_time_ms = 0.0;

    bool operator==(const ResultRecord&) const = default;
};

// ----- Single trials -----------------------------------------------------------------

/// Everything drawn for one downlink trial.
struct DownlinkTrial
{
    ChannelRealization channel;
    CascadedChannel cascaded;
    PilotSchedule schedule;
    DownlinkObservations obs;
};

inline DownlinkTrial draw_downlink_trial(Index n_bs, Index m_ris, Index k_slots, double noise_var,
                                         PhaseScheduleKind kind, Rng& rng)
{
    DownlinkTrial t;
    const SystemDims dims{n_bs, m_ris, 1, 1, k_slots};
    t.channel = sample_channel(dims, rng);
    t.cascaded = cascaded_downlink(t.channel);
    t.schedule = make_pilot_schedule(n_bs, m_ris, k_slots, kind, rng);
    t.obs = downlink_observe(t.cascaded, t.schedule, noise_var, rng);
    return t;
}

/// Everything drawn for one uplink trial.
struct UplinkTrial
{
    ChannelRealization channel;
    std::vector<CascadedChannel> cascaded; // per user
    UplinkSchedule schedule;
    UplinkObservations obs;
};

inline UplinkTrial draw_uplink_trial(const SystemDims& dims, Index k_blocks, double noise_var, PhaseScheduleKind kind,
                                     Rng& rng)
{
    SystemDims d = dims;
    d.k_pilots = k_blocks;
    d.validate_uplink();
    UplinkTrial t;
    t.channel = sample_channel(d, rng);
    for (Index q = 0; q < d.q_users; ++q)
        t.cascaded.push_back(cascaded_uplink(t.channel, q));
    CMat phases = kind == PhaseScheduleKind::dft ? dft_phase_schedule(d.m_ris, k_blocks)
                                                 : random_phase_schedule(d.m_ris, k_blocks, rng);
    t.schedule = make_uplink_schedule(d, std::move(phases));
    t.obs = uplink_observe(uplink_bs_ris(t.channel), t.channel.h_users, t.schedule, noise_var, rng);
    return t;
}

/// Downlink estimate of H_e by the named estimator.
inline CMat run_downlink_estimator(Estimator e, const DownlinkTrial& t, const SolverSettings& solvers)
{
    switch (e)
    {
    case Estimator::MF_AM: return estimate_single_user(t.obs, t.schedule, solvers.mf_am).h_e_hat;
    case Estimator::MF_GD: return estimate_single_user(t.obs, t.schedule, solvers.mf_gd).h_e_hat;
    case Estimator::LS: return ls_full(t.obs, t.schedule, solvers.ls);
    case Estimator::LR: return lr_rankone(t.obs, t.schedule, solvers.lr).h_e_hat;
    default: break;
    }
    throw ConfigError("estimator " + std::string(to_string(e)) + " does not produce a downlink estimate");
}

/// Per-user MSE of ā_q for an uplink estimate.
inline double a_bar_mse(const UplinkTrial& t, const MultiUserEstimate& est)
{
    double acc = 0.0;
    for (std::size_t q = 0; q < t.cascaded.size(); ++q)
        acc += (est.a_bar_hats[q] - t.cascaded[q].a_bar).squaredNorm();
    return acc / static_cast<double>(t.cascaded.size());
}

inline double uplink_nmse(const UplinkTrial& t, const MultiUserEstimate& est)
{
    std::vector<CMat> truth;
    for (const auto& c : t.cascaded)
        truth.push_back(c.h_e);
    return nmse_multi_user(truth, est.h_q_hats);
}

namespace detail
{
struct SweepCell
{
    Index snr_index;
    Index k_index;
    Index trial;
};

inline std::uint64_t trial_seed(std::uint64_t master, const SweepCell& c)
{
    return mix_seed({master, static_cast<std::uint64_t>(c.snr_index), static_cast<std::uint64_t>(c.k_index),
                     static_cast<std::uint64_t>(c.trial)});
}

template <class Fn>
double timed_ms(bool enabled, Fn&& fn)
{
    if (!enabled)
    {
        fn();
        return 0.0;
    }
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

/// Records for one cell, in spec estimator order.
inline std::vector<ResultRecord> run_cell(const ExperimentSpec& spec, const SweepCell& cell)
{
    const double snr_db = spec.effective_snr_grid()[static_cast<std::size_t>(cell.snr_index)];
    const Index k = spec.k_grid[static_cast<std::size_t>(cell.k_index)];
    const double noise_var = spec.noiseless ? 0.0 : noise_var_from_snr_db(snr_db);
    const std::uint64_t seed = trial_seed(spec.master_seed, cell);

    std::vector<ResultRecord> out;
    auto base = [&](Estimator e) {
        ResultRecord r;
        r.scenario = spec.scenario;
        r.estimator = e;
        r.snr_db = snr_db;
        r.k = k;
        r.trial = cell.trial;
        r.seed = seed;
        return r;
    };

    if (spec.scenario == Scenario::multi_user_uplink)
    {
        // DFT design needs K >= M; random phases need it for the LS stage anyway.
        const bool feasible = k >= minimal_pilots(Estimator::MF_UL, spec.dims);
        std::optional<UplinkTrial> trial;
        if (feasible)
        {
            Rng rng(seed);
            trial = draw_uplink_trial(spec.dims, k, noise_var, spec.schedule_kind, rng);
        }
        for (Estimator e : spec.estimators)
        {
            ResultRecord r = base(e);
            if (!feasible)
            {
                r.status = RecordStatus::infeasible;
                out.push_back(r);
                continue;
            }
            MultiUserConfig cfg;
            if (spec.inject_true_psi)
                cfg.psi_override = trial->channel.psi;
            try
            {
                MultiUserEstimate est;
                r.wall_time_ms = timed_ms(spec.record_timing, [&] { est = estimate_multi_user(trial->obs, trial->schedule, cfg); });
                r.nmse = uplink_nmse(*trial, est);
            }
            catch (const Error&)
            {
                r.status = RecordStatus::failed;
            }
            out.push_back(r);
        }
        return out;
    }

    std::optional<DownlinkTrial> trial;
    auto ensure_trial = [&]() -> const DownlinkTrial& {
        if (!trial)
        {
            Rng rng(seed);
            trial = draw_downlink_trial(spec.dims.n_bs, spec.dims.m_ris, k, noise_var, spec.schedule_kind, rng);
        }
        return *trial;
    };
    const bool want_se = spec.compute_se && noise_var > 0.0;

    for (Estimator e : spec.estimators)
    {
        ResultRecord r = base(e);
        if (k < minimal_pilots(e, spec.dims))
        {
            r.status = RecordStatus::infeasible;
            out.push_back(r);
            continue;
        }
        const DownlinkTrial& t = ensure_trial();
        try
        {
            if (e == Estimator::OPTIMAL || e == Estimator::RANDOM)
            {
                Rng rng(mix_seed({seed, static_cast<std::uint64_t>(e)}));
                if (want_se)
                    r.se = spectral_efficiency(t.cascaded.h_e, t.cascaded.h_e, noise_var,
                                               e == Estimator::OPTIMAL ? SeMode::optimal : SeMode::random, rng);
            }
            else
            {
                CMat h_hat;
                r.wall_time_ms = timed_ms(spec.record_timing, [&] { h_hat = run_downlink_estimator(e, t, spec.solvers); });
                r.nmse = nmse(t.cascaded.h_e, h_hat);
                if (want_se)
                {
                    Rng unused(0);
                    r.se = spectral_efficiency(t.cascaded.h_e, h_hat, noise_var, SeMode::estimated, unused);
                }
            }
        }
        catch (const Error&)
        {
            r.status = RecordStatus::failed;
            r.nmse.reset();
            r.se.reset();
        }
        out.push_back(r);
    }
    return out;
}
} // namespace detail

/// Run a sweep on `threads` workers (0 = hardware concurrency). The result
/// does not depend on `threads`.
inline std::vector<ResultRecord> run_sweep(const ExperimentSpec& spec, unsigned threads = 1)
{
    spec.validate();
    if (spec.scenario == Scenario::overhead_table)
        throw ConfigError("run_sweep: overhead_table has no Monte Carlo sweep; use overhead_table()");

    const auto snrs = spec.effective_snr_grid();
    std::vector<detail::SweepCell> cells;
    for (Index s = 0; s < static_cast<Index>(snrs.size()); ++s)
        for (Index k = 0; k < static_cast<Index>(spec.k_grid.size()); ++k)
            for (Index t = 0; t < spec.n_trials; ++t)
                cells.push_back({s, k, t});

    std::vector<std::vector<ResultRecord>> per_cell(cells.size());
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, cells.size())));

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < cells.size(); i = next++)
            per_cell[i] = detail::run_cell(spec, cells[i]);
    };
    if (threads <= 1)
        worker();
    else
    {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i)
            pool.emplace_back(worker);
    }

    std::vector<ResultRecord> out;
    out.reserve(cells.size() * spec.estimators.size());
    for (std::size_t e = 0; e < spec.estimators.size(); ++e)
        for (const auto& rows : per_cell)
            out.push_back(rows[e]);
    return out;
}

/// Mean NMSE (ok records only) per (estimator, snr, k).
struct SummaryRow
{
    Estimator estimator;
    double snr_db;
    Index k;
    Index count;
    double mean_nmse;
    double mean_se;
    Index se_count;
};

inline std::vector<SummaryRow> summarize(const std::vector<ResultRecord>& records)
{
    std::vector<SummaryRow> rows;
    for (const auto& r : records)
    {
        auto it = std::find_if(rows.begin(), rows.end(), [&](const SummaryRow& s) {
            return s.estimator == r.estimator && s.snr_db == r.snr_db && s.k == r.k;
        });
        if (it == rows.end())
        {
            rows.push_back({r.estimator, r.snr_db, r.k, 0, 0.0, 0.0, 0});
            it = std::prev(rows.end());
        }
        if (r.status != RecordStatus::ok)
            continue;
        if (r.nmse)
        {
            it->mean_nmse += *r.nmse;
            ++it->count;
        }
        if (r.se)
        {
            it->mean_se += *r.se;
            ++it->se_count;
        }
    }
    for (auto& s : rows)
    {
        s.mean_nmse = s.count ? s.mean_nmse / static_cast<double>(s.count) : std::numeric_limits<double>::quiet_NaN();
        s.mean_se = s.se_count ? s.mean_se / static_cast<double>(s.se_count) : std::numeric_limits<double>::quiet_NaN();
    }
    return rows;
}

} // namespace riscest

#endif
