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

#include <catch2/catch_amalgamated.hpp>

#include <numeric>

#include "mbtd/frontend_sim.hpp"
#include "test_support.hpp"

using namespace mbtd;
using Catch::Approx;

namespace {

ProbeConfig bumpy_probe(const BandPlan& plan, double pilot_mag, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ph(-3.14, 3.14);
    std::uniform_real_distribution<double> mag(0.5, 1.5);
    const int n = plan.n_subcarriers();
    ProbeConfig p = ProbeConfig::flat(plan);
    for (int k = 0; k < n; ++k) {
        p.pilots[k] = std::polar(pilot_mag, ph(rng));
    }
    for (auto& g : p.rf_responses) {
        for (int k = 0; k < n; ++k) {
            g[k] = std::polar(mag(rng), ph(rng));
        }
    }
    return p;
}

MultipathChannel sample_channel(const BandPlan& plan, std::uint64_t seed, int k = 3)
{
    std::mt19937_64 rng(seed);
    return MultipathChannel(test::random_gains(rng, k), test::random_delays(rng, plan, k, 0.5));
}

} // namespace

TEST_CASE("ProbeConfig - validation")
{
    const BandPlan plan = test::desk_plan();
    CHECK_NOTHROW(ProbeConfig::flat(plan).validate(plan));

    ProbeConfig uneven = ProbeConfig::flat(plan);
    uneven.pilots[5] = 2.0;
    CHECK_THROWS_AS(uneven.validate(plan), ArgumentError);

    ProbeConfig dead = ProbeConfig::flat(plan);
    dead.rf_responses[1][7] = 1e-8;
    CHECK_THROWS_AS(dead.validate(plan), IllConditionedProbeError);

    ProbeConfig zero_pilot = ProbeConfig::flat(plan);
    zero_pilot.pilots.setZero();
    CHECK_THROWS_AS(zero_pilot.validate(plan), IllConditionedProbeError);

    ProbeConfig long_cp = ProbeConfig::flat(plan);
    long_cp.cp_duration = plan.unambiguous_range() * 1.5;
    CHECK_THROWS_AS(long_cp.validate(plan), ArgumentError);

    ProbeConfig short_bands = ProbeConfig::flat(plan);
    short_bands.rf_responses.pop_back();
    CHECK_THROWS_AS(short_bands.validate(plan), ArgumentError);
}

TEST_CASE("synthesize_received - noiseless is the modulated channel")
{
    const BandPlan plan = test::desk_plan();
    const MultipathChannel ch = sample_channel(plan, 1);
    const ProbeConfig probe = bumpy_probe(plan, 1.0, 2);
    const NoiseModel zero{{0.0, 0.0, 0.0}};
    const auto y = synthesize_received(ch, plan, probe, zero, 99);
    for (int i = 0; i < plan.band_count(); ++i) {
        const CVector want = probe.pilots.cwiseProduct(probe.rf_responses[static_cast<std::size_t>(i)])
                                 .cwiseProduct(channel_samples(ch, plan, i));
        CHECK((y[static_cast<std::size_t>(i)] - want).norm() == 0.0);
    }
}

TEST_CASE("synthesize_received - deterministic per seed")
{
    const BandPlan plan = test::desk_plan();
    const MultipathChannel ch = sample_channel(plan, 3);
    const ProbeConfig probe = ProbeConfig::flat(plan);
    const NoiseModel noise{{0.1, 0.2, 0.3}};
    const auto a = synthesize_received(ch, plan, probe, noise, 1234);
    const auto b = synthesize_received(ch, plan, probe, noise, 1234);
    const auto c = synthesize_received(ch, plan, probe, noise, 1235);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] == b[i]);
        CHECK(a[i] != c[i]);
    }
}

TEST_CASE("synthesize_received - dimension mismatch")
{
    const BandPlan plan = test::desk_plan();
    const MultipathChannel ch = sample_channel(plan, 3);
    const NoiseModel two{{0.1, 0.1}};
    CHECK_THROWS_AS(synthesize_received(ch, plan, ProbeConfig::flat(plan), two, 1), ArgumentError);
    const NoiseModel negative{{0.1, -0.1, 0.1}};
    CHECK_THROWS_AS(synthesize_received(ch, plan, ProbeConfig::flat(plan), negative, 1), ArgumentError);
}

TEST_CASE("deconvolve - noise moments and whiteness")
{
    // 160 draws of 64 subcarriers per band, about 1e4 entries.
    const BandPlan plan = test::desk_plan();
    const MultipathChannel ch = sample_channel(plan, 4);
    const ProbeConfig probe = bumpy_probe(plan, 1.0, 5);
    const NoiseModel noise{{0.5, 1.0, 2.0}};
    std::vector<std::vector<cplx>> q(3);
    for (std::uint64_t draw = 0; draw < 160; ++draw) {
        const auto est = deconvolve(synthesize_received(ch, plan, probe, noise, draw), probe, noise, plan);
        for (int i = 0; i < 3; ++i) {
            const CVector e = est.per_band[static_cast<std::size_t>(i)] - channel_samples(ch, plan, i);
            q[static_cast<std::size_t>(i)].insert(q[static_cast<std::size_t>(i)].end(), e.data(),
                                                  e.data() + e.size());
        }
    }
    for (int i = 0; i < 3; ++i) {
        const auto& v = q[static_cast<std::size_t>(i)];
        const double s2 = noise.sigmas[static_cast<std::size_t>(i)] * noise.sigmas[static_cast<std::size_t>(i)];
        double var = 0.0;
        for (const cplx x : v) {
            var += std::norm(x);
        }
        var /= static_cast<double>(v.size());
        CHECK(std::abs(var / s2 - 1.0) < 0.05);

        const double bound = 4.0 / std::sqrt(static_cast<double>(v.size()));
        for (std::size_t lag = 1; lag <= 3; ++lag) {
            cplx r = 0.0;
            for (std::size_t n = lag; n < v.size(); ++n) {
                r += v[n] * std::conj(v[n - lag]);
            }
            CHECK(std::abs(r) / (var * static_cast<double>(v.size())) < bound);
        }
    }
}

TEST_CASE("deconvolve - identity probe and round trip")
{
    const BandPlan plan = test::desk_plan();
    const MultipathChannel ch = sample_channel(plan, 6);
    const NoiseModel zero{{0.0, 0.0, 0.0}};

    const ProbeConfig flat = ProbeConfig::flat(plan);
    const auto e1 = deconvolve(synthesize_received(ch, plan, flat, zero, 1), flat, zero, plan);
    for (int i = 0; i < 3; ++i) {
        CHECK((e1.per_band[static_cast<std::size_t>(i)] - channel_samples(ch, plan, i)).norm() == 0.0);
    }

    const ProbeConfig bumpy = bumpy_probe(plan, 3.0, 7);
    const auto e2 = deconvolve(synthesize_received(ch, plan, bumpy, zero, 1), bumpy, zero, plan);
    for (int i = 0; i < 3; ++i) {
        const CVector h = channel_samples(ch, plan, i);
        CHECK((e2.per_band[static_cast<std::size_t>(i)] - h).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK(e2.sigmas == zero.sigmas);
    CHECK(e2.plan == plan);
    CHECK(e2.stacked().size() == 3 * 64);
}

TEST_CASE("deconvolve - pilot magnitude 2 scales noise variance by 1/4")
{
    const BandPlan plan(0.0, 20e6, 64, {0});
    const MultipathChannel ch = sample_channel(plan, 8, 1);
    ProbeConfig probe = ProbeConfig::flat(plan);
    probe.pilots *= 2.0;
    const NoiseModel noise{{0.7}};
    double in = 0.0;
    double out = 0.0;
    for (std::uint64_t draw = 0; draw < 20; ++draw) {
        const auto y = synthesize_received(ch, plan, probe, noise, draw);
        const CVector clean = 2.0 * channel_samples(ch, plan, 0);
        const CVector q = y[0] - clean;
        in += q.squaredNorm();
        out += (deconvolve(y, probe, noise, plan).per_band[0] - channel_samples(ch, plan, 0)).squaredNorm();
    }
    CHECK(out / in == Approx(0.25).epsilon(1e-12));
}

TEST_CASE("deconvolve - error paths")
{
    const BandPlan plan = test::desk_plan();
    const ProbeConfig probe = ProbeConfig::flat(plan);
    const NoiseModel zero{{0.0, 0.0, 0.0}};
    std::vector<CVector> y(2, CVector::Ones(64));
    CHECK_THROWS_AS(deconvolve(y, probe, zero, plan), ArgumentError);
    y.push_back(CVector::Ones(63));
    CHECK_THROWS_AS(deconvolve(y, probe, zero, plan), ArgumentError);

    y.back() = CVector::Ones(64);
    ProbeConfig bad = probe;
    bad.rf_responses[2][0] = 5e-7;
    CHECK_THROWS_AS(deconvolve(y, bad, zero, plan), IllConditionedProbeError);
}

TEST_CASE("sigma_from_snr - examples")
{
    const BandPlan plan = test::desk_plan();
    const ProbeConfig probe = ProbeConfig::flat(plan);
    const MultipathChannel ch = sample_channel(plan, 9);

    const std::vector<double> zero_db{0.0, 0.0, 0.0};
    const NoiseModel n0 = sigma_from_snr(ch, plan, probe, zero_db);
    for (int i = 0; i < 3; ++i) {
        const double p = channel_samples(ch, plan, i).squaredNorm() / 64.0;
        CHECK(n0.sigmas[static_cast<std::size_t>(i)] * n0.sigmas[static_cast<std::size_t>(i)] ==
              Approx(p).epsilon(1e-12));
    }

    const std::vector<double> huge{300.0, 300.0, 300.0};
    const NoiseModel nh = sigma_from_snr(ch, plan, probe, huge);
    for (int i = 0; i < 3; ++i) {
        const double p = channel_samples(ch, plan, i).squaredNorm() / 64.0;
        CHECK(nh.sigmas[static_cast<std::size_t>(i)] * nh.sigmas[static_cast<std::size_t>(i)] <= 1.000001e-30 * p);
    }

    CVector one(1);
    one << std::polar(1.0, 0.4);
    const MultipathChannel unit(one, {3.3e-8});
    const std::vector<double> snr{10.0, 20.0, -5.0};
    const NoiseModel nu = sigma_from_snr(unit, plan, probe, snr);
    for (int i = 0; i < 3; ++i) {
        CHECK(nu.sigmas[static_cast<std::size_t>(i)] * nu.sigmas[static_cast<std::size_t>(i)] ==
              Approx(std::pow(10.0, -snr[static_cast<std::size_t>(i)] / 10.0)).epsilon(1e-12));
    }

    const std::vector<double> short_snr{10.0};
    CHECK_THROWS_AS(sigma_from_snr(unit, plan, probe, short_snr), ArgumentError);
}

TEST_CASE("simulate_snapshots - independent per snapshot, reproducible")
{
    const BandPlan plan = test::desk_plan();
    const MultipathChannel ch = sample_channel(plan, 10);
    const auto a = test::noisy(ch, plan, 10.0, 42, 3);
    const auto b = test::noisy(ch, plan, 10.0, 42, 3);
    REQUIRE(a.size() == 3);
    for (std::size_t s = 0; s < 3; ++s) {
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(a[s].per_band[i] == b[s].per_band[i]);
        }
    }
    CHECK(a[0].per_band[0] != a[1].per_band[0]);
    CHECK_THROWS_AS(test::noisy(ch, plan, 10.0, 42, 0), ArgumentError);
}
