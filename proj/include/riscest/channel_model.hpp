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

#ifndef RISCEST_CHANNEL_MODEL_HPP
#define RISCEST_CHANNEL_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "random.hpp"
#include "types.hpp"

namespace riscest
{

// ----- Array response ------------------------------------------------------

/// Unit-norm ULA response. Entry i is exp(-j*2*pi*angle*i) / sqrt(n).
inline CVec array_response(Index n_elements, double angle)
{
    if (n_elements < 1)
        throw ConfigError("array_response: n_elements must be >= 1");
    CVec a(n_elements);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_elements));
    for (Index i = 0; i < n_elements; ++i)
    {
        const double ph = -two_pi * angle * static_cast<double>(i);
        a(i) = scale * cplx(std::cos(ph), std::sin(ph));
    }
    return a;
}

/// Elementwise derivative of array_response with respect to the angle.
/// d/dψ of Re and Im parts are -sin(ψz)∘z/√n and -cos(ψz)∘z/√n, z = 2π[0..n-1].
inline CVec array_response_derivative(Index n_elements, double angle)
{
    CVec d(n_elements);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_elements));
    for (Index i = 0; i < n_elements; ++i)
    {
        const double z = two_pi * static_cast<double>(i);
        d(i) = scale * z * cplx(-std::sin(angle * z), -std::cos(angle * z));
    }
    return d;
}

// ----- Channel realizations -----------------------------------------------

/// One propagation path of the BS-RIS link.
struct PathParams
{
    cplx gain;  // beta_BR^(l)
    double phi; // effective AoA at the RIS
    double psi; // effective AoD at the BS
};

/// Ground-truth channels. g_matrix is the downlink BS-RIS link (M x N);
/// the uplink link is its conjugate transpose (see uplink_bs_ris).
struct ChannelRealization
{
    double psi = 0.0;
    double phi = 0.0;
    cplx beta_br{1.0, 0.0};
    CMat g_matrix;               // M x N
    CVec h_r;                    // M, single-user RIS-UE link
    std::vector<CVec> h_users;   // Q vectors of length M
    CVec h_direct;               // N, carried only; never estimated
    std::vector<PathParams> paths;

    Index n_bs() const { return g_matrix.cols(); }
    Index m_ris() const { return g_matrix.rows(); }
};

/// Distribution knobs for sample_channel.
struct GainModel
{
    /// Standard deviation scale of beta_BR (beta_BR ~ CN(0, br_power)).
    double br_power = 1.0;
    /// Scale of the Rayleigh RIS-UE link (h ~ CN(0, ru_power I)).
    double ru_power = 1.0;
    /// Minimum circular gap between the AoDs of distinct paths, in units of
    /// 1/N. Only used by sample_multipath_channel.
    double min_psi_gap_beamwidths = 2.0;
    /// Rejection-sampling budget for the angular-gap constraint.
    int max_gap_attempts = 10000;
};

/// Uplink BS-RIS link (N x M).
inline CMat uplink_bs_ris(const ChannelRealization& chan)
{
    return chan.g_matrix.adjoint();
}

namespace detail
{
inline CMat single_path_g(Index m, Index n, cplx gain, double phi, double psi)
{
    return gain * array_response(m, phi) * array_response(n, psi).adjoint();
}

inline void draw_user_links(const SystemDims& dims, const GainModel& gm, Rng& rng, ChannelRealization& out)
{
    out.h_users.clear();
    out.h_users.reserve(static_cast<std::size_t>(dims.q_users));
    for (Index q = 0; q < dims.q_users; ++q)
        out.h_users.push_back(complex_gaussian_vector(dims.m_ris, rng, gm.ru_power));
    out.h_r = out.h_users.front();
    out.h_direct = CVec::Zero(dims.n_bs);
}
} // namespace detail

/// Single-path LOS BS-RIS link plus Rayleigh RIS-UE links.
///
/// Draw order (fixed, part of the reproducibility contract): psi, phi,
/// beta_BR, then the Q user vectors. h_r aliases the first user.
inline ChannelRealization sample_channel(const SystemDims& dims, Rng& rng, const GainModel& gm = {})
{
    dims.validate();
    ChannelRealization out;
    out.psi = uniform01(rng);
    out.phi = uniform01(rng);
    out.beta_br = std::sqrt(gm.br_power) * complex_gaussian(rng);
    out.g_matrix = detail::single_path_g(dims.m_ris, dims.n_bs, out.beta_br, out.phi, out.psi);
    out.paths = {PathParams{out.beta_br, out.phi, out.psi}};
    detail::draw_user_links(dims, gm, rng, out);
    return out;
}

/// L-path BS-RIS link G = Σ_l β_l a_R(φ_l) a_B(ψ_l)^H with AoDs separated by
/// at least gm.min_psi_gap_beamwidths / N on the circle. For L = 1 the draw
/// sequence is identical to sample_channel.
inline ChannelRealization sample_multipath_channel(const SystemDims& dims, Index n_paths, Rng& rng,
                                                   const GainModel& gm = {})
{
    dims.validate();
    if (n_paths < 1)
        throw ConfigError("sample_multipath_channel: n_paths must be >= 1");
    if (n_paths == 1)
        return sample_channel(dims, rng, gm);

    const double gap = gm.min_psi_gap_beamwidths / static_cast<double>(dims.n_bs);
    if (gap * static_cast<double>(n_paths) > 1.0)
        throw ConfigError("sample_multipath_channel: " + std::to_string(n_paths) +
                          " paths cannot be separated by a circular gap of " + std::to_string(gap));

    ChannelRealization out;
    out.g_matrix = CMat::Zero(dims.m_ris, dims.n_bs);
    for (Index l = 0; l < n_paths; ++l)
    {
        double psi = 0.0;
        int attempt = 0;
        for (;; ++attempt)
        {
            if (attempt >= gm.max_gap_attempts)
                throw ConfigError("sample_multipath_channel: angular-gap constraint not satisfiable "
                                  "within the sampling budget");
            psi = uniform01(rng);
            const bool ok = std::all_of(out.paths.begin(), out.paths.end(), [&](const PathParams& p) {
                return detail::circular_distance(p.psi, psi) >= gap;
            });
            if (ok)
                break;
        }
        const double phi = uniform01(rng);
        const cplx gain = std::sqrt(gm.br_power) * complex_gaussian(rng);
        out.paths.push_back({gain, phi, psi});
        out.g_matrix += detail::single_path_g(dims.m_ris, dims.n_bs, gain, phi, psi);
    }
    out.psi = out.paths.front().psi;
    out.phi = out.paths.front().phi;
    out.beta_br = out.paths.front().gain;
    detail::draw_user_links(dims, gm, rng, out);
    return out;
}

/// Rebuild g_matrix from an explicit path list (used to force degenerate
/// geometries such as coincident AoDs).
inline CMat g_from_paths(Index m_ris, Index n_bs, const std::vector<PathParams>& paths)
{
    CMat g = CMat::Zero(m_ris, n_bs);
    for (const auto& p : paths)
        g += detail::single_path_g(m_ris, n_bs, p.gain, p.phi, p.psi);
    return g;
}

// ----- Cascaded channels ---------------------------------------------------

/// Cascaded channel in factored form.
///
/// Downlink: h_e = diag(h_r^H) G (M x N) = a_bar a_B(psi)^H.
/// Uplink:   h_e = G diag(h_q)  (N x M) = a_B(psi) a_bar^H.
/// a_bar is empty when the BS-RIS link is not known to be single-path.
struct CascadedChannel
{
    CMat h_e;
    CVec a_bar;
    double psi = 0.0;

    bool has_factors() const { return a_bar.size() > 0; }
};

/// diag(h_r^H) G.
inline CascadedChannel cascaded_downlink(const CVec& h_r, const CMat& g)
{
    detail::require_dims(h_r.size() == g.rows(), "cascaded_downlink: h_r length must equal G rows (M)");
    CascadedChannel out;
    out.h_e = h_r.conjugate().asDiagonal() * g;
    return out;
}

/// Downlink cascaded channel of a single-path realization, with factors.
inline CascadedChannel cascaded_downlink(const ChannelRealization& chan)
{
    CascadedChannel out = cascaded_downlink(chan.h_r, chan.g_matrix);
    if (chan.paths.size() == 1)
    {
        out.a_bar = chan.h_r.conjugate().cwiseProduct(chan.beta_br * array_response(chan.m_ris(), chan.phi));
        out.psi = chan.psi;
    }
    return out;
}

/// G diag(h_q).
inline CascadedChannel cascaded_uplink(const CMat& g, const CVec& h_q)
{
    detail::require_dims(h_q.size() == g.cols(), "cascaded_uplink: h_q length must equal G columns (M)");
    CascadedChannel out;
    out.h_e = g * h_q.asDiagonal();
    return out;
}

/// Uplink cascaded channel of user q for a single-path realization, with
/// factors: ā_q = (β* a_R^H(φ) diag(h_q))^H where β* is the uplink gain.
inline CascadedChannel cascaded_uplink(const ChannelRealization& chan, Index q)
{
    if (q < 0 || q >= static_cast<Index>(chan.h_users.size()))
        throw ConfigError("cascaded_uplink: user index out of range");
    const CVec& h_q = chan.h_users[static_cast<std::size_t>(q)];
    CascadedChannel out = cascaded_uplink(uplink_bs_ris(chan), h_q);
    if (chan.paths.size() == 1)
    {
        out.a_bar = h_q.conjugate().cwiseProduct(chan.beta_br * array_response(chan.m_ris(), chan.phi));
        out.psi = chan.psi;
    }
    return out;
}

} // namespace riscest

#endif
