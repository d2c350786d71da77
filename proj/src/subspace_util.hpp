// SPDX-License-Identifier: Apache-2.0
//
// mbtd - multiband time-delay estimation by weighted subspace fitting
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

#pragma once

#include <span>
#include <vector>

#include "mbtd/hankel_subspace.hpp"

namespace mbtd::detail {

/// Hankel stack of the listed bands with all snapshots fused.
HankelStack fused_stack(std::span<const ChannelEstimate> data, std::span<const int> bands, int q_cols);

/// Resolves q_cols = 0 to the default for (N, K).
int resolve_q_cols(const ChannelEstimate& est, int k_paths, int q_cols);

/// Maps -arg(z) / w_sc into [0, N Ts).
double delay_from_rotor(cplx z, const BandPlan& plan);

/// Least-squares solution of a * x = b.
CMatrix lstsq(const CMatrix& a, const CMatrix& b);

} // namespace mbtd::detail
