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

// Slow reference implementations used only by the tests. Everything here is
// written from the defining formulas with plain loops so that it shares no
// code path with the library.

#ifndef RISCEST_TEST_ORACLES_HPP
#define RISCEST_TEST_ORACLES_HPP

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace oracle
{

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

inline constexpr double pi = 3.14159265358979323846;

inline CVec steering(long n, double psi)
{
    CVec a(n);
    for (long i = 0; i < n; ++i)
        a(i) = std::exp(cplx(0.0, -2.0 * pi * psi * static_cast<double>(i))) / std::sqrt(static_cast<double>(n));
    return a;
}

// h_e[m,n] = conj(h_r[m]) g[m,n]
inline CMat cascaded_downlink(const CVec& h_r, const CMat& g)
{
    CMat h(g.rows(), g.cols());
    for (long m = 0; m < g.rows(); ++m)
        for (long n = 0; n < g.cols(); ++n)
            h(m, n) = std::conj(h_r(m)) * g(m, n);
    return h;
}

// h[n,m] = g[n,m] h_q[m]
inline CMat cascaded_uplink(const CMat& g, const CVec& h_q)
{
    CMat h(g.rows(), g.cols());
    for (long n = 0; n < g.rows(); ++n)
        for (long m = 0; m < g.cols(); ++m)
            h(n, m) = g(n, m) * h_q(m);
    return h;
}

// Σ_m Σ_n θ[m] h[m,n] x[n]
inline cplx bilinear(const CVec& theta, const CMat& h, const CVec& x)
{
    cplx acc = 0.0;
    for (long m = 0; m < h.rows(); ++m)
        for (long n = 0; n < h.cols(); ++n)
            acc += theta(m) * h(m, n) * x(n);
    return acc;
}

// J = Σ_k |θ_k^T ā a_B^H x_k − r_k|², term by term
inline double objective(const CVec& a_bar, double psi, const CVec& r, const CMat& pilots, const CMat& phases)
{
    const CVec a = steering(pilots.rows(), psi);
    double j = 0.0;
    for (long k = 0; k < r.size(); ++k)
    {
        cplx ta = 0.0, ax = 0.0;
        for (long m = 0; m < a_bar.size(); ++m)
            ta += phases(m, k) * a_bar(m);
        for (long n = 0; n < a.size(); ++n)
            ax += std::conj(a(n)) * pilots(n, k);
        j += std::norm(ta * ax - r(k));
    }
    return j;
}

// S = (√N/K) Σ_k r_k conj(θ_k) x_k^H
inline CMat spectral_matrix(const CVec& r, const CMat& pilots, const CMat& phases)
{
    const long n = pilots.rows(), m = phases.rows(), k = r.size();
    CMat s = CMat::Zero(m, n);
    for (long kk = 0; kk < k; ++kk)
        for (long i = 0; i < m; ++i)
            for (long j = 0; j < n; ++j)
                s(i, j) += r(kk) * std::conj(phases(i, kk)) * std::conj(pilots(j, kk));
    return s * (std::sqrt(static_cast<double>(n)) / static_cast<double>(k));
}

// Σ_q G diag(θ_k) h_q x_{q,k}^T accumulated entry by entry
inline CMat uplink_block(const CMat& g, const std::vector<CVec>& h_users, const CVec& theta,
                         const std::vector<CVec>& pilots_k)
{
    const long n = g.rows(), m = g.cols(), t = pilots_k.front().size();
    CMat r = CMat::Zero(n, t);
    for (std::size_t q = 0; q < h_users.size(); ++q)
        for (long i = 0; i < n; ++i)
            for (long s = 0; s < t; ++s)
                for (long mm = 0; mm < m; ++mm)
                    r(i, s) += g(i, mm) * theta(mm) * h_users[q](mm) * pilots_k[q](s);
    return r;
}

// Kronecker design of the unstructured LS: row k is x_k^T ⊗ θ_k^T
inline CMat ls_design(const CMat& pilots, const CMat& phases)
{
    const long n = pilots.rows(), m = phases.rows(), k = pilots.cols();
    CMat d(k, m * n);
    for (long kk = 0; kk < k; ++kk)
        for (long j = 0; j < n; ++j)
            for (long i = 0; i < m; ++i)
                d(kk, j * m + i) = pilots(j, kk) * phases(i, kk);
    return d;
}

// Maximize f on a uniform grid of `points` samples of [0,1)
template <class F>
double grid_argmax(F&& f, long points)
{
    double best = 0.0, best_v = -1e300;
    for (long i = 0; i < points; ++i)
    {
        const double psi = static_cast<double>(i) / static_cast<double>(points);
        const double v = f(psi);
        if (v > best_v)
        {
            best_v = v;
            best = psi;
        }
    }
    return best;
}

inline double circ(double a, double b)
{
    double d = std::fmod(std::abs(a - b), 1.0);
    return std::min(d, 1.0 - d);
}

} // namespace oracle

#endif
