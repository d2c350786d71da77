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

#include "mbtd/types.hpp"

namespace mbtd {

/// Grid of L equal-width bands whose centers sit on the subcarrier lattice
/// w_i = w_0 + n_i * w_sc. Derived quantities are computed on demand.
class BandPlan {
public:
    BandPlan(double f0_hz, double bandwidth_hz, int n_subcarriers, std::vector<int> band_offsets);

    /// Builds a plan from band center frequencies; each center must land on
    /// the subcarrier grid (B / N spacing) relative to the first one.
    static BandPlan from_centers(std::span<const double> centers_hz, double bandwidth_hz, int n_subcarriers);

    double f0() const noexcept { return f0_; }
    double bandwidth() const noexcept { return bandwidth_; }
    int n_subcarriers() const noexcept { return n_; }
    const std::vector<int>& band_offsets() const noexcept { return offsets_; }
    int band_count() const noexcept { return static_cast<int>(offsets_.size()); }

    double sample_period() const noexcept { return 1.0 / bandwidth_; }
    /// Angular subcarrier spacing 2*pi / (N * Ts).
    double subcarrier_spacing() const noexcept;
    /// N * Ts, the delay period of the phase rotors.
    double unambiguous_range() const noexcept { return n_ / bandwidth_; }
    double band_center_hz(int band) const;

    bool operator==(const BandPlan&) const = default;

private:
    double f0_;
    double bandwidth_;
    int n_;
    std::vector<int> offsets_;
};

/// K-path channel h(t) = sum_k a_k delta(t - tau_k). Gains are stored in the
/// re-based convention: the carrier phase at w_0 and the subcarrier index
/// origin are absorbed into them.
class MultipathChannel {
public:
    MultipathChannel(CVector gains, std::vector<double> delays);

    const CVector& gains() const noexcept { return gains_; }
    const std::vector<double>& delays() const noexcept { return delays_; }
    int paths() const noexcept { return static_cast<int>(delays_.size()); }

    /// Throws RangeError if any delay falls outside [0, N*Ts) of the plan.
    void check_range(const BandPlan& plan) const;

private:
    CVector gains_;
    std::vector<double> delays_;
};

struct SteeringSet {
    CVector phis;   // exp(-j w_sc tau_k)
    CMatrix thetas; // L x K, phis[k]^{n_i}
};

SteeringSet steering_from_delays(std::span<const double> delays, const BandPlan& plan);

/// rows x K matrix with entry (r, k) = phis[k]^r.
CMatrix vandermonde(const CVector& phis, int rows);

/// Noiseless samples H_i[n] = sum_k a_k Phi_k^{n_i + n}, n = 0..N-1.
CVector channel_samples(const MultipathChannel& ch, const BandPlan& plan, int band);

/// Vertical stack of vandermonde(phis, rows) * Theta_i over all bands,
/// (L * rows) x K.
CMatrix stacked_manifold(std::span<const double> delays, const BandPlan& plan, int rows);

/// Integer power of a unit-modulus rotor computed from its phase, which keeps
/// large exponents (n_i ~ 10^3) free of accumulated rounding.
cplx rotor_power(double phase, long long exponent);

} // namespace mbtd
