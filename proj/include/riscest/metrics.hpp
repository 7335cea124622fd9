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

#ifndef RISCEST_METRICS_HPP
#define RISCEST_METRICS_HPP

#include <cmath>
#include <vector>

#include <Eigen/SVD>

#include "channel_model.hpp"
#include "random.hpp"
#include "signal_model.hpp"
#include "types.hpp"

namespace riscest
{

/// ‖H − Ĥ‖_F² / ‖H‖_F².
inline double nmse(const CMat& h_true, const CMat& h_hat)
{
    detail::require_dims(h_true.rows() == h_hat.rows() && h_true.cols() == h_hat.cols(),
                         "nmse: matrices must have the same shape");
    const double den = h_true.squaredNorm();
    if (den == 0.0)
        throw DegenerateInputError("nmse: true channel is zero");
    return (h_true - h_hat).squaredNorm() / den;
}

/// Mean of per-user NMSEs.
inline double nmse_multi_user(const std::vector<CMat>& h_true, const std::vector<CMat>& h_hat)
{
    detail::require_dims(h_true.size() == h_hat.size() && !h_true.empty(), "nmse_multi_user: user counts differ");
    double acc = 0.0;
    for (std::size_t q = 0; q < h_true.size(); ++q)
        acc += nmse(h_true[q], h_hat[q]);
    return acc / static_cast<double>(h_true.size());
}

enum class SeMode
{
    estimated,
    random,
    optimal
};

/// RIS phases and BS beamformer for one downlink transmission.
struct BeamDesign
{
    CVec theta; // M, unit modulus
    CVec x;     // N, unit norm
};

/// Phase alignment plus matched beamforming from the leading singular pair
/// H ≈ σ u v^H: θ_m = exp(−j arg u_m), x = v. For H = ā a_B(ψ)^H this is
/// θ_m = exp(−j arg ā_m), x = a_B(ψ) up to a common phase, which maximizes
/// |θ^T H x| over unit-modulus θ and unit-norm x.
inline BeamDesign design_from_channel(const CMat& h_e)
{
    Eigen::JacobiSVD<CMat> svd(h_e, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const CVec u = svd.matrixU().col(0);
    BeamDesign d;
    d.theta.resize(u.size());
    for (Index m = 0; m < u.size(); ++m)
        d.theta(m) = std::polar(1.0, -std::arg(u(m)));
    d.x = svd.matrixV().col(0);
    return d;
}

/// Uniform random phases and a steering beam toward a uniform random angle.
inline BeamDesign random_design(Index m_ris, Index n_bs, Rng& rng)
{
    BeamDesign d;
    d.theta = random_phase_schedule(m_ris, 1, rng).col(0);
    d.x = array_response(n_bs, uniform01(rng));
    return d;
}

/// log2(1 + |θ^T H x|² / σ²) on the given channel.
inline double achieved_rate(const CMat& h_e, const BeamDesign& d, double noise_var)
{
    if (!(noise_var > 0.0))
        throw ConfigError("spectral_efficiency: noise_var must be > 0");
    const cplx g = d.theta.transpose() * h_e * d.x;
    return std::log2(1.0 + std::norm(g) / noise_var);
}

/// Spectral efficiency of a design derived per `mode`, always evaluated on
/// the true channel. `rng` is only consumed in random mode.
inline double spectral_efficiency(const CMat& h_e_true, const CMat& h_e_hat, double noise_var, SeMode mode, Rng& rng)
{
    detail::require_dims(h_e_true.rows() == h_e_hat.rows() && h_e_true.cols() == h_e_hat.cols(),
                         "spectral_efficiency: channel shapes differ");
    switch (mode)
    {
    case SeMode::estimated:
        return achieved_rate(h_e_true, design_from_channel(h_e_hat), noise_var);
    case SeMode::optimal:
        return achieved_rate(h_e_true, design_from_channel(h_e_true), noise_var);
    case SeMode::random:
        break;
    }
    return achieved_rate(h_e_true, random_design(h_e_true.rows(), h_e_true.cols(), rng), noise_var);
}

} // namespace riscest

#endif
