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

#ifndef RISCEST_HPP
#define RISCEST_HPP

#include "types.hpp"
#include "random.hpp"
#include "channel_model.hpp"
#include "signal_model.hpp"
#include "manifold_search.hpp"
#include "mf_estimator.hpp"
#include "multiuser_estimator.hpp"
#include "baselines.hpp"
#include "metrics.hpp"
#include "experiments.hpp"
#include "results_io.hpp"

#endif
