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

#include <cstdint>
#include <span>
#include <vector>

#include "mbtd/multipath_model.hpp"

namespace mbtd {

/// Known pilot symbols and calibrated RF-chain responses of the multibranch
/// receiver.
struct ProbeConfig {
    CVector pilots;                   // N entries, constant magnitude
    std::vector<CVector> rf_responses; // one length-N vector per band
    double cp_duration = 0.0;         // seconds

    /// Unit pilots, flat unit RF chains, cyclic prefix equal to N * Ts.
    static ProbeConfig flat(const BandPlan& plan);

    void validate(const BandPlan& plan) const;
};

/// Per-branch noise standard deviation after deconvolution.
struct NoiseModel {
    std::vector<double> sigmas;
};

/// Deconvolved per-band channel samples of one snapshot.
struct ChannelEstimate {
    std::vector<CVector> per_band;
    std::vector<double> sigmas;
    BandPlan plan;

    int bands() const noexcept { return static_cast<int>(per_band.size()); }
    /// Concatenation of all bands, length N * L.
    CVector stacked() const;
};

/// y_i = diag(s .* g_i) h_i + q_i, with q_i = diag(s .* g_i) q'_i and
/// q'_i ~ CN(0, sigma_i^2 I). Deterministic in rng_seed.
std::vector<CVector> synthesize_received(const MultipathChannel& ch, const BandPlan& plan,
                                         const ProbeConfig& probe, const NoiseModel& noise,
                                         std::uint64_t rng_seed);

/// h_i = diag^{-1}(s .* g_i) y_i.
ChannelEstimate deconvolve(std::span<const CVector> received, const ProbeConfig& probe, const NoiseModel& noise,
                           const BandPlan& plan);

/// sigma_i^2 = P_i / 10^(snr_db[i] / 10) with P_i = |h_i|^2 / N the mean
/// per-subcarrier power of the noiseless band samples.
NoiseModel sigma_from_snr(const MultipathChannel& ch, const BandPlan& plan, const ProbeConfig& probe,
                          std::span<const double> snr_db);

/// S independent snapshots of the same channel, each with its own noise
/// realization derived from rng_seed.
std::vector<ChannelEstimate> simulate_snapshots(const MultipathChannel& ch, const BandPlan& plan,
                                                const ProbeConfig& probe, const NoiseModel& noise,
                                                std::uint64_t rng_seed, int snapshots);

} // namespace mbtd
