// SPDX-License-Identifier: Apache-2.0
//
// Estimate one downlink cascaded channel with each method and print the NMSE.

#include <cstdio>

#include <riscest/riscest.hpp>

int main()
{
    using namespace riscest;

    const Index n = 16, m = 32, k = 128;
    const double snr_db = 10.0;
    Rng rng(42);

    const ChannelRealization chan = sample_channel({n, m, 1, 1, k}, rng);
    const CascadedChannel h = cascaded_downlink(chan);
    const PilotSchedule sched = make_pilot_schedule(n, m, k, PhaseScheduleKind::random, rng);
    const DownlinkObservations obs = downlink_observe(h, sched, noise_var_from_snr_db(snr_db), rng);

    const EstimateResult am = estimate_single_user(obs, sched, MfConfig::am_defaults());
    const EstimateResult gd = estimate_single_user(obs, sched, MfConfig::gd_defaults());
    const RankOneEstimate lr = lr_rankone(obs, sched);

    std::printf("true psi %.6f, MF-AM psi %.6f after %ld iterations\n", chan.psi, am.psi_hat,
                static_cast<long>(am.iters_used));
    std::printf("NMSE  MF-AM %.3e  MF-GD %.3e  LR %.3e\n", nmse(h.h_e, am.h_e_hat), nmse(h.h_e, gd.h_e_hat),
                nmse(h.h_e, lr.h_e_hat));
    std::printf("LS needs K >= %ld pilots here; MF needs %ld\n", static_cast<long>(m * n), static_cast<long>(m));

    Rng unused(0);
    const double var = noise_var_from_snr_db(snr_db);
    std::printf("SE  estimated %.3f  optimal %.3f bit/s/Hz\n",
                spectral_efficiency(h.h_e, am.h_e_hat, var, SeMode::estimated, unused),
                spectral_efficiency(h.h_e, h.h_e, var, SeMode::optimal, unused));
    return 0;
}
