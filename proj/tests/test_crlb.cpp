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

#include <numbers>

#include "mbtd/crlb.hpp"
#include "test_support.hpp"

using namespace mbtd;
using Catch::Approx;

namespace {

MultipathChannel sample_channel(const BandPlan& plan, std::uint64_t seed, int k)
{
    std::mt19937_64 rng(seed);
    return MultipathChannel(test::random_gains(rng, k), test::random_delays(rng, plan, k, 0.5));
}

MultipathChannel with(const MultipathChannel& ch, std::vector<double> delays, CVector gains)
{
    return MultipathChannel(std::move(gains), std::move(delays));
}

} // namespace

TEST_CASE("model_jacobian - central finite differences")
{
    const BandPlan plan = test::desk_plan();
    for (int k = 1; k <= 3; ++k) {
        const MultipathChannel ch = sample_channel(plan, 70 + static_cast<std::uint64_t>(k), k);
        const CMatrix d = model_jacobian(ch, plan);
        REQUIRE(d.cols() == 3 * k);
        REQUIRE(d.rows() == 3 * 64);
        CMatrix fd(d.rows(), d.cols());
        const double ht = 1e-6 * plan.sample_period();
        const double ha = 1e-6;
        for (int j = 0; j < k; ++j) {
            std::vector<double> up = ch.delays();
            std::vector<double> dn = ch.delays();
            up[static_cast<std::size_t>(j)] += ht;
            dn[static_cast<std::size_t>(j)] -= ht;
            fd.col(j) = (model_mean(with(ch, up, ch.gains()), plan) - model_mean(with(ch, dn, ch.gains()), plan)) /
                        (2.0 * ht);
            for (int part = 0; part < 2; ++part) {
                const cplx step = part == 0 ? cplx(ha, 0.0) : cplx(0.0, ha);
                CVector gu = ch.gains();
                CVector gd = ch.gains();
                gu[j] += step;
                gd[j] -= step;
                fd.col((1 + part) * k + j) =
                    (model_mean(with(ch, ch.delays(), gu), plan) - model_mean(with(ch, ch.delays(), gd), plan)) /
                    (2.0 * ha);
            }
        }
        CHECK((d - fd).norm() < 1e-6 * fd.norm());
    }
}

TEST_CASE("crlb_delays - single path closed form")
{
    // One path, equal sigmas: var = sigma^2 / (2 S |a|^2 w^2 sum (m - mean m)^2)
    const BandPlan plan = test::desk_plan();
    CVector g(1);
    g << cplx(0.6, -0.9);
    const MultipathChannel ch(g, {4.4e-7});
    const double sigma = 0.3;
    const int snaps = 4;
    const std::vector<double> sig(3, sigma);
    const CrlbResult r = crlb_delays(ch, plan, sig, snaps);

    std::vector<double> m;
    for (const int off : plan.band_offsets()) {
        for (int n = 0; n < 64; ++n) {
            m.push_back(off + n);
        }
    }
    double mean = 0.0;
    for (const double x : m) {
        mean += x;
    }
    mean /= static_cast<double>(m.size());
    double spread = 0.0;
    for (const double x : m) {
        spread += (x - mean) * (x - mean);
    }
    const double w = plan.subcarrier_spacing();
    const double want = sigma * sigma / (2.0 * snaps * std::norm(g[0]) * w * w * spread);
    CHECK(r.tau_variances[0] == Approx(want).epsilon(1e-9));
}

TEST_CASE("crlb_delays - scaling identities")
{
    const BandPlan plan = test::desk_plan();
    const MultipathChannel ch = sample_channel(plan, 80, 3);
    const std::vector<double> sig{0.2, 0.3, 0.5};
    std::vector<double> sig2 = sig;
    for (double& s : sig2) {
        s *= std::sqrt(2.0);
    }
    const CrlbResult base = crlb_delays(ch, plan, sig, 5);
    const CrlbResult noisier = crlb_delays(ch, plan, sig2, 5);
    const CrlbResult more = crlb_delays(ch, plan, sig, 10);
    for (int k = 0; k < 3; ++k) {
        CHECK(noisier.tau_variances[k] == Approx(2.0 * base.tau_variances[k]).epsilon(1e-9));
        CHECK(more.tau_variances[k] == Approx(0.5 * base.tau_variances[k]).epsilon(1e-9));
        CHECK(base.tau_variances[k] > 0.0);
    }
    CHECK(more.snapshots == 10);
}

TEST_CASE("crlb_delays - Fisher matrix symmetric and PSD")
{
    const BandPlan plan = test::desk_plan();
    const MultipathChannel ch = sample_channel(plan, 81, 3);
    const std::vector<double> sig{0.2, 0.3, 0.5};
    const RMatrix f = crlb_delays(ch, plan, sig, 3).fisher;
    CHECK((f - f.transpose()).norm() == 0.0);
    const RVector ev = Eigen::SelfAdjointEigenSolver<RMatrix>(f).eigenvalues();
    CHECK(ev.minCoeff() >= -1e-10 * f.trace());
}

TEST_CASE("crlb_delays - invariant under a global gain phase")
{
    const BandPlan plan = test::desk_plan();
    const MultipathChannel ch = sample_channel(plan, 82, 2);
    const MultipathChannel rot(ch.gains() * std::polar(1.0, 1.234), ch.delays());
    const std::vector<double> sig{0.2, 0.2, 0.4};
    const RVector a = crlb_delays(ch, plan, sig, 2).tau_variances;
    const RVector b = crlb_delays(rot, plan, sig, 2).tau_variances;
    CHECK((a - b).norm() < 1e-9 * a.norm());
}

TEST_CASE("crlb_delays - error paths")
{
    const BandPlan plan = test::desk_plan();
    CVector g(2);
    g << 1.0, 0.5;
    const MultipathChannel same(g, {1e-7, 1e-7});
    const std::vector<double> sig{0.1, 0.1, 0.1};
    CHECK_THROWS_AS(crlb_delays(same, plan, sig, 1), SingularInformationError);

    const MultipathChannel ch = sample_channel(plan, 83, 2);
    CHECK_THROWS_AS(crlb_delays(ch, plan, std::vector<double>{0.1, 0.1}, 1), ArgumentError);
    CHECK_THROWS_AS(crlb_delays(ch, plan, std::vector<double>{0.1, 0.0, 0.1}, 1), ArgumentError);
    CHECK_THROWS_AS(crlb_delays(ch, plan, sig, 0), ArgumentError);
}

TEST_CASE("crlb_curve - slope, monotonicity and offsets")
{
    const BandPlan plan = test::desk_plan();
    const MultipathChannel ch = sample_channel(plan, 84, 3);
    const std::vector<double> axis{0.0, 10.0, 20.0, 30.0};
    const std::vector<double> zero{0.0, 0.0, 0.0};
    const auto c = crlb_curve(ch, plan, axis, zero, 10);
    CHECK(c[0] / c[2] == Approx(10.0).epsilon(1e-3));
    CHECK(c[1] / c[3] == Approx(10.0).epsilon(1e-3));
    for (std::size_t i = 1; i < c.size(); ++i) {
        CHECK(c[i] < c[i - 1]);
    }

    // zero offsets equal the uniform bound
    const ProbeConfig probe = ProbeConfig::flat(plan);
    const std::vector<double> snr(3, 10.0);
    const NoiseModel nm = sigma_from_snr(ch, plan, probe, snr);
    CHECK(c[1] == Approx(std::sqrt(crlb_delays(ch, plan, nm.sigmas, 10).tau_variances[0])).epsilon(1e-12));

    // weaker bands loosen the bound
    const std::vector<double> weak{0.0, -3.0, -4.7};
    const auto cw = crlb_curve(ch, plan, axis, weak, 10);
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(cw[i] > c[i]);
    }
    CHECK_THROWS_AS(crlb_curve(ch, plan, axis, std::vector<double>{0.0}, 10), ArgumentError);
}

TEST_CASE("crlb_curve - wider aperture tightens the bound")
{
    const BandPlan gapped(0.0, 80e6, 256, {0, 384, 736, 1088});
    const BandPlan contiguous(0.0, 80e6, 256, {0, 256, 512, 768});
    CVector g(3);
    g << 1.0, cplx(0.4, 0.3), cplx(-0.2, 0.5);
    const double ts = gapped.sample_period();
    const MultipathChannel ch(g, {1.3 * ts, 2.1 * ts, 4.6 * ts});
    const std::vector<double> axis{10.0};
    const std::vector<double> zero(4, 0.0);
    CHECK(crlb_curve(ch, gapped, axis, zero, 10)[0] < crlb_curve(ch, contiguous, axis, zero, 10)[0]);
}
