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

#include "mbtd/frontend_sim.hpp"

namespace mbtd {

/// Deterministic (conditional) Cramer-Rao bound for the stacked multiband
/// model h = A(tau) a + q with block-diagonal noise covariance.
struct CrlbResult {
    RVector tau_variances; // seconds^2, one per path
    RMatrix fisher;        // 3K x 3K, parameters [tau; Re a; Im a]
    int snapshots = 1;
};

/// Noiseless stacked mean A(tau) a, length N * L.
CVector model_mean(const MultipathChannel& ch, const BandPlan& plan);

/// d mean / d [tau; Re a; Im a], (N L) x 3K.
CMatrix model_jacobian(const MultipathChannel& ch, const BandPlan& plan);

CrlbResult crlb_delays(const MultipathChannel& ch, const BandPlan& plan, std::span<const double> sigmas,
                       int snapshots);

/// RMSE floor of the smallest delay along an SNR axis. Each point uses
/// sigma_from_snr with snr + offsets_db[i] in band i.
std::vector<double> crlb_curve(const MultipathChannel& ch, const BandPlan& plan, std::span<const double> snr_axis_db,
                               std::span<const double> offsets_db, int snapshots);

} // namespace mbtd
