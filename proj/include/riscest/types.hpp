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

#ifndef RISCEST_TYPES_HPP
#define RISCEST_TYPES_HPP

#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace riscest
{

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// ----- Errors -------------------------------------------------------------

/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error
{
  public:
    using Error::Error;
};

/// Too few observations, or a design/Gram matrix without full column rank.
class RankDeficientError : public Error
{
  public:
    using Error::Error;
};

/// Numerically full rank but beyond the configured condition-number limit.
class IllConditionedError : public RankDeficientError
{
  public:
    using RankDeficientError::RankDeficientError;
};

/// Input carries no signal (all-zero observations or channel).
class DegenerateInputError : public Error
{
  public:
    using Error::Error;
};

/// A configuration value is out of its domain.
class ConfigError : public Error
{
  public:
    using Error::Error;
};

// ----- Problem dimensions -------------------------------------------------

/// Problem dimensions: BS antennas, RIS elements, users, symbols per uplink
/// block and number of training slots (downlink) or blocks (uplink).
struct SystemDims
{
    Index n_bs = 1;
    Index m_ris = 1;
    Index q_users = 1;
    Index t_symbols = 1;
    Index k_pilots = 1;

    void validate() const
    {
        if (n_bs < 1 || m_ris < 1 || q_users < 1 || t_symbols < 1 || k_pilots < 1)
            throw ConfigError("SystemDims: every dimension must be >= 1");
    }

    /// Additional requirement for orthogonal uplink pilots.
    void validate_uplink() const
    {
        validate();
        if (t_symbols < q_users)
            throw ConfigError("SystemDims: orthogonal uplink pilots need t_symbols >= q_users (T=" +
                              std::to_string(t_symbols) + ", Q=" + std::to_string(q_users) + ")");
    }
};

namespace detail
{
inline void require_dims(bool ok, const char* what)
{
    if (!ok)
        throw DimensionError(what);
}

/// Circular distance on the unit torus [0,1).
inline double circular_distance(double a, double b)
{
    double d = std::abs(a - b);
    d -= std::floor(d);
    return std::min(d, 1.0 - d);
}

/// Wrap an angle into [0,1).
inline double wrap_unit(double x)
{
    double w = x - std::floor(x);
    return w >= 1.0 ? 0.0 : w;
}
} // namespace detail

} // namespace riscest

#endif
