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

#include "mbtd/multipath_model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace mbtd {

BandPlan::BandPlan(double f0_hz, double bandwidth_hz, int n_subcarriers, std::vector<int> band_offsets)
    : f0_(f0_hz), bandwidth_(bandwidth_hz), n_(n_subcarriers), offsets_(std::move(band_offsets))
{
    if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_)) {
        throw ArgumentError("band plan: bandwidth must be positive and finite");
    }
    if (!std::isfinite(f0_)) {
        throw ArgumentError("band plan: f0 must be finite");
    }
    if (n_ < 2 || n_ % 2 != 0) {
        throw ArgumentError("band plan: subcarrier count must be even and >= 2");
    }
    if (offsets_.empty()) {
        throw ArgumentError("band plan: at least one band is required");
    }
    if (offsets_.front() != 0) {
        throw ArgumentError("band plan: first band offset must be 0");
    }
    for (std::size_t i = 1; i < offsets_.size(); ++i) {
        if (offsets_[i] - offsets_[i - 1] < n_) {
            std::ostringstream msg;
            msg << "band plan: bands " << i - 1 << " and " << i << " overlap (offset step "
                << offsets_[i] - offsets_[i - 1] << " < N = " << n_ << ")";
            throw ArgumentError(msg.str());
        }
    }
}

BandPlan BandPlan::from_centers(std::span<const double> centers_hz, double bandwidth_hz, int n_subcarriers)
{
    if (centers_hz.empty()) {
        throw ArgumentError("band plan: no band centers given");
    }
    if (!(bandwidth_hz > 0.0) || n_subcarriers < 2) {
        throw ArgumentError("band plan: invalid bandwidth or subcarrier count");
    }
    const double spacing = bandwidth_hz / n_subcarriers;
    std::vector<int> offsets;
    offsets.reserve(centers_hz.size());
    for (std::size_t i = 0; i < centers_hz.size(); ++i) {
        const double steps = (centers_hz[i] - centers_hz[0]) / spacing;
        const double rounded = std::round(steps);
        if (std::abs(steps - rounded) > 1e-6) {
            std::ostringstream msg;
            msg << "band plan: center " << i << " (" << centers_hz[i] << " Hz) is off the subcarrier grid";
            throw ArgumentError(msg.str());
        }
        offsets.push_back(static_cast<int>(rounded));
    }
    return BandPlan(centers_hz[0], bandwidth_hz, n_subcarriers, std::move(offsets));
}

double BandPlan::subcarrier_spacing() const noexcept
{
    return 2.0 * std::numbers::pi * bandwidth_ / n_;
}

double BandPlan::band_center_hz(int band) const
{
    if (band < 0 || band >= band_count()) {
        throw ArgumentError("band plan: band index out of range");
    }
    return f0_ + offsets_[band] * (bandwidth_ / n_);
}

MultipathChannel::MultipathChannel(CVector gains, std::vector<double> delays)
    : gains_(std::move(gains)), delays_(std::move(delays))
{
    if (delays_.empty()) {
        throw ArgumentError("channel: at least one path is required");
    }
    if (static_cast<std::size_t>(gains_.size()) != delays_.size()) {
        throw ArgumentError("channel: gains and delays differ in length");
    }
    for (std::size_t k = 0; k < delays_.size(); ++k) {
        if (!std::isfinite(delays_[k]) || delays_[k] < 0.0) {
            throw RangeError("channel: delay " + std::to_string(k) + " is negative or not finite", k);
        }
        if (k > 0 && delays_[k] < delays_[k - 1]) {
            throw ArgumentError("channel: delays must be sorted ascending (index " + std::to_string(k) + ")");
        }
        if (gains_[static_cast<Eigen::Index>(k)] == cplx(0.0, 0.0)) {
            throw ArgumentError("channel: gain " + std::to_string(k) + " is zero");
        }
    }
}

void MultipathChannel::check_range(const BandPlan& plan) const
{
    const double range = plan.unambiguous_range();
    for (std::size_t k = 0; k < delays_.size(); ++k) {
        if (delays_[k] >= range) {
            std::ostringstream msg;
            msg << "channel: delay " << k << " (" << delays_[k] << " s) outside unambiguous range [0, " << range
                << ")";
            throw RangeError(msg.str(), k);
        }
    }
}

cplx rotor_power(double phase, long long exponent)
{
    // Reduce phase * exponent modulo 2 pi without losing the integer part.
    const double angle = std::remainder(phase * static_cast<double>(exponent), 2.0 * std::numbers::pi);
    return std::polar(1.0, -angle);
}

SteeringSet steering_from_delays(std::span<const double> delays, const BandPlan& plan)
{
    const double range = plan.unambiguous_range();
    const double wsc = plan.subcarrier_spacing();
    const auto K = static_cast<Eigen::Index>(delays.size());
    const auto& offsets = plan.band_offsets();

    SteeringSet out;
    out.phis.resize(K);
    out.thetas.resize(plan.band_count(), K);
    for (Eigen::Index k = 0; k < K; ++k) {
        const double tau = delays[static_cast<std::size_t>(k)];
        if (!std::isfinite(tau) || tau < 0.0 || tau >= range) {
            std::ostringstream msg;
            msg << "steering: delay " << k << " (" << tau << " s) outside unambiguous range [0, " << range << ")";
            throw RangeError(msg.str(), static_cast<std::size_t>(k));
        }
        const double phase = wsc * tau;
        out.phis[k] = rotor_power(phase, 1);
        for (int i = 0; i < plan.band_count(); ++i) {
            out.thetas(i, k) = rotor_power(phase, offsets[i]);
        }
    }
    return out;
}

CMatrix vandermonde(const CVector& phis, int rows)
{
    if (rows < 1) {
        throw ArgumentError("vandermonde: rows must be >= 1");
    }
    CMatrix m(rows, phis.size());
    for (Eigen::Index k = 0; k < phis.size(); ++k) {
        const double mag = std::abs(phis[k]);
        const double arg = std::arg(phis[k]);
        for (int r = 0; r < rows; ++r) {
            m(r, k) = std::polar(std::pow(mag, r), std::remainder(arg * r, 2.0 * std::numbers::pi));
        }
    }
    return m;
}

CVector channel_samples(const MultipathChannel& ch, const BandPlan& plan, int band)
{
    if (band < 0 || band >= plan.band_count()) {
        throw ArgumentError("channel_samples: band index out of range");
    }
    ch.check_range(plan);
    const int n = plan.n_subcarriers();
    const double wsc = plan.subcarrier_spacing();
    const long long offset = plan.band_offsets()[band];
    CVector h = CVector::Zero(n);
    for (int k = 0; k < ch.paths(); ++k) {
        const double phase = wsc * ch.delays()[k];
        const cplx a = ch.gains()[k];
        for (int s = 0; s < n; ++s) {
            h[s] += a * rotor_power(phase, offset + s);
        }
    }
    return h;
}

CMatrix stacked_manifold(std::span<const double> delays, const BandPlan& plan, int rows)
{
    if (rows < 1) {
        throw ArgumentError("stacked_manifold: rows must be >= 1");
    }
    (void)steering_from_delays(delays, plan); // range validation
    const double wsc = plan.subcarrier_spacing();
    const int L = plan.band_count();
    const auto K = static_cast<Eigen::Index>(delays.size());
    CMatrix a(static_cast<Eigen::Index>(L) * rows, K);
    for (Eigen::Index k = 0; k < K; ++k) {
        const double phase = wsc * delays[static_cast<std::size_t>(k)];
        for (int i = 0; i < L; ++i) {
            const long long offset = plan.band_offsets()[i];
            for (int r = 0; r < rows; ++r) {
                a(static_cast<Eigen::Index>(i) * rows + r, k) = rotor_power(phase, offset + r);
            }
        }
    }
    return a;
}

} // namespace mbtd
