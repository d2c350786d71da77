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

#include "mbtd/frontend_sim.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "mbtd/seed.hpp"

namespace mbtd {

namespace {

constexpr double kMinDivisor = 1e-6;

void check_noise(const NoiseModel& noise, const BandPlan& plan)
{
    if (static_cast<int>(noise.sigmas.size()) != plan.band_count()) {
        throw ArgumentError("noise model: expected one sigma per band");
    }
    for (const double s : noise.sigmas) {
        if (!(s >= 0.0) || !std::isfinite(s)) {
            throw ArgumentError("noise model: sigmas must be finite and non-negative");
        }
    }
}

} // namespace

CVector ChannelEstimate::stacked() const
{
    Eigen::Index total = 0;
    for (const auto& h : per_band) {
        total += h.size();
    }
    CVector out(total);
    Eigen::Index at = 0;
    for (const auto& h : per_band) {
        out.segment(at, h.size()) = h;
        at += h.size();
    }
    return out;
}

ProbeConfig ProbeConfig::flat(const BandPlan& plan)
{
    const int n = plan.n_subcarriers();
    ProbeConfig p;
    p.pilots = CVector::Ones(n);
    p.rf_responses.assign(static_cast<std::size_t>(plan.band_count()), CVector::Ones(n));
    p.cp_duration = plan.unambiguous_range();
    return p;
}

void ProbeConfig::validate(const BandPlan& plan) const
{
    const int n = plan.n_subcarriers();
    if (pilots.size() != n) {
        throw ArgumentError("probe: pilot vector length differs from N");
    }
    if (static_cast<int>(rf_responses.size()) != plan.band_count()) {
        throw ArgumentError("probe: expected one RF response per band");
    }
    const double mag = std::abs(pilots[0]);
    if (!(mag > 0.0)) {
        throw IllConditionedProbeError("probe: pilot magnitude must be positive");
    }
    for (Eigen::Index k = 0; k < n; ++k) {
        if (std::abs(std::abs(pilots[k]) - mag) > 1e-9 * mag) {
            throw ArgumentError("probe: pilots must have constant magnitude (entry " + std::to_string(k) + ")");
        }
    }
    for (std::size_t i = 0; i < rf_responses.size(); ++i) {
        if (rf_responses[i].size() != n) {
            throw ArgumentError("probe: RF response " + std::to_string(i) + " length differs from N");
        }
        for (Eigen::Index k = 0; k < n; ++k) {
            if (std::abs(rf_responses[i][k]) < kMinDivisor) {
                std::ostringstream msg;
                msg << "probe: RF response " << i << " entry " << k << " is (close to) zero";
                throw IllConditionedProbeError(msg.str());
            }
        }
    }
    if (!(cp_duration >= 0.0) || cp_duration > plan.unambiguous_range() * (1.0 + 1e-12)) {
        throw ArgumentError("probe: cyclic prefix must lie in [0, N*Ts]");
    }
}

std::vector<CVector> synthesize_received(const MultipathChannel& ch, const BandPlan& plan,
                                         const ProbeConfig& probe, const NoiseModel& noise,
                                         std::uint64_t rng_seed)
{
    probe.validate(plan);
    check_noise(noise, plan);
    const int n = plan.n_subcarriers();

    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<CVector> y;
    y.reserve(static_cast<std::size_t>(plan.band_count()));
    for (int i = 0; i < plan.band_count(); ++i) {
        const CVector gain = probe.pilots.cwiseProduct(probe.rf_responses[static_cast<std::size_t>(i)]);
        CVector qn(n);
        const double scale = noise.sigmas[static_cast<std::size_t>(i)] / std::sqrt(2.0);
        for (int k = 0; k < n; ++k) {
            const double re = normal(rng);
            const double im = normal(rng);
            qn[k] = scale * cplx(re, im);
        }
        y.push_back(gain.cwiseProduct(channel_samples(ch, plan, i) + qn));
    }
    return y;
}

ChannelEstimate deconvolve(std::span<const CVector> received, const ProbeConfig& probe, const NoiseModel& noise,
                           const BandPlan& plan)
{
    probe.validate(plan);
    check_noise(noise, plan);
    if (static_cast<int>(received.size()) != plan.band_count()) {
        throw ArgumentError("deconvolve: expected one received vector per band");
    }
    ChannelEstimate est{{}, noise.sigmas, plan};
    est.per_band.reserve(received.size());
    for (std::size_t i = 0; i < received.size(); ++i) {
        if (received[i].size() != plan.n_subcarriers()) {
            throw ArgumentError("deconvolve: received vector " + std::to_string(i) + " length differs from N");
        }
        const CVector divisor = probe.pilots.cwiseProduct(probe.rf_responses[i]);
        for (Eigen::Index k = 0; k < divisor.size(); ++k) {
            if (std::abs(divisor[k]) < kMinDivisor) {
                throw IllConditionedProbeError("deconvolve: divisor magnitude below 1e-6 at band " +
                                               std::to_string(i) + ", subcarrier " + std::to_string(k));
            }
        }
        est.per_band.push_back(received[i].cwiseQuotient(divisor));
    }
    return est;
}

NoiseModel sigma_from_snr(const MultipathChannel& ch, const BandPlan& plan, const ProbeConfig& probe,
                          std::span<const double> snr_db)
{
    if (static_cast<int>(snr_db.size()) != plan.band_count()) {
        throw ArgumentError("sigma_from_snr: expected one SNR value per band");
    }
    // The SNR is defined after deconvolution, so the probe only enters
    // through its validity.
    probe.validate(plan);
    NoiseModel out;
    out.sigmas.reserve(snr_db.size());
    for (int i = 0; i < plan.band_count(); ++i) {
        const double power = channel_samples(ch, plan, i).squaredNorm() / plan.n_subcarriers();
        const double var = power / std::pow(10.0, snr_db[static_cast<std::size_t>(i)] / 10.0);
        out.sigmas.push_back(std::sqrt(var));
    }
    return out;
}

std::vector<ChannelEstimate> simulate_snapshots(const MultipathChannel& ch, const BandPlan& plan,
                                                const ProbeConfig& probe, const NoiseModel& noise,
                                                std::uint64_t rng_seed, int snapshots)
{
    if (snapshots < 1) {
        throw ArgumentError("simulate_snapshots: snapshot count must be >= 1");
    }
    std::vector<ChannelEstimate> out;
    out.reserve(static_cast<std::size_t>(snapshots));
    for (int s = 0; s < snapshots; ++s) {
        const auto y = synthesize_received(ch, plan, probe, noise, derive_seed(rng_seed, {static_cast<std::uint64_t>(s)}));
        out.push_back(deconvolve(y, probe, noise, plan));
    }
    return out;
}

} // namespace mbtd
