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

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mbtd/estimators.hpp"

namespace mbtd {

enum class EstimatorKind { proposed, esprit, mresprit, mimusic };

std::string_view estimator_name(EstimatorKind kind);
std::optional<EstimatorKind> parse_estimator(std::string_view name);

struct PipelineOptions {
    int q_cols = 0;        // 0 selects default_q_cols
    bool weighted = true;  // use the per-band noise weighting in the fit
    int grid_points = 0;   // MI-MUSIC grid, 0 selects default_grid_points
    double wrap_reach_ts = 1.0; // wrap re-selection window in units of Ts, 0 disables
    bool multi_start = true;    // also start from coarse MI-MUSIC peaks, keep the lower cost
    bool column_weighting = false; // scale basis columns by their singular values
    int reseed_rounds = 3;      // path swaps onto unclaimed MI-MUSIC peaks after the fit, 0 disables
    VarproOptions varpro;
};

/// Full proposed estimator: subspace, multiresolution initialization plus a
/// coarse MI-MUSIC start (the only start when the initializer fails), wrap
/// re-selection on the fitting cost, variable projection from each start
/// keeping the lowest cost, path reseeding, gain recovery.
FitResult estimate_proposed(std::span<const ChannelEstimate> data, int k_paths, const PipelineOptions& opts = {});

/// Delays (ascending) produced by any of the estimators. The ESPRIT-type
/// baselines only see the first and last band.
std::vector<double> run_estimator(EstimatorKind kind, std::span<const ChannelEstimate> data, int k_paths,
                                  const PipelineOptions& opts = {});

} // namespace mbtd
