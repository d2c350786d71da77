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

#include "mbtd/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "mbtd/crlb.hpp"
#include "mbtd/seed.hpp"

namespace mbtd {

namespace {

constexpr std::uint64_t kNoiseStream = 0x6E6F6973; // "nois"

struct TrialOutcome {
    std::vector<double> sq_error; // per estimator, NaN on failure
    double crlb_var = std::numeric_limits<double>::quiet_NaN();
};

// Runs fn(item) for item in [0, count) on a bounded pool. Items write to
// disjoint slots, so the result does not depend on the schedule.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn)
{
    const auto workers = static_cast<std::size_t>(std::clamp(threads, 1, 256));
    if (workers == 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < std::min(workers, count); ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                fn(i);
            }
        });
    }
}

int snapshots_at(const Scenario& scn, std::size_t axis_index)
{
    return scn.axis == SweepAxis::snr ? scn.snapshots : scn.snapshot_axis[axis_index];
}

double snr_at(const Scenario& scn, std::size_t axis_index)
{
    return scn.axis == SweepAxis::snr ? scn.snr_axis_db[axis_index] : scn.snr_db;
}

NoiseModel noise_for(const Scenario& scn, const MultipathChannel& ch, const BandPlan& plan, const ProbeConfig& probe,
                     std::size_t axis_index)
{
    std::vector<double> snr(scn.per_band_offsets_db.size());
    for (std::size_t i = 0; i < snr.size(); ++i) {
        snr[i] = snr_at(scn, axis_index) + scn.per_band_offsets_db[i];
    }
    return sigma_from_snr(ch, plan, probe, snr);
}

double trial_crlb(const MultipathChannel& ch, const BandPlan& plan, const NoiseModel& noise, int snapshots)
{
    try {
        return crlb_delays(ch, plan, noise.sigmas, snapshots).tau_variances[0];
    } catch (const Error&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

double root_mean(const std::vector<double>& values)
{
    double sum = 0.0;
    int n = 0;
    for (const double v : values) {
        if (std::isfinite(v)) {
            sum += v;
            ++n;
        }
    }
    return n > 0 ? std::sqrt(sum / n) : std::numeric_limits<double>::quiet_NaN();
}

} // namespace

double los_error(std::span<const double> truth, std::span<const double> estimate)
{
    if (truth.empty() || estimate.empty()) {
        throw ArgumentError("los_error: empty delay set");
    }
    struct Pair {
        double dist;
        std::size_t t;
        std::size_t e;
    };
    std::vector<Pair> pairs;
    pairs.reserve(truth.size() * estimate.size());
    for (std::size_t t = 0; t < truth.size(); ++t) {
        for (std::size_t e = 0; e < estimate.size(); ++e) {
            pairs.push_back({std::abs(truth[t] - estimate[e]), t, e});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.dist != b.dist) {
            return a.dist < b.dist;
        }
        return a.t != b.t ? a.t < b.t : a.e < b.e;
    });
    const std::size_t los = static_cast<std::size_t>(std::min_element(truth.begin(), truth.end()) - truth.begin());
    std::vector<bool> used_t(truth.size(), false);
    std::vector<bool> used_e(estimate.size(), false);
    for (const Pair& p : pairs) {
        if (used_t[p.t] || used_e[p.e]) {
            continue;
        }
        if (p.t == los) {
            return estimate[p.e] - truth[p.t];
        }
        used_t[p.t] = true;
        used_e[p.e] = true;
    }
    // More true paths than estimates: the LOS went unmatched.
    return std::numeric_limits<double>::quiet_NaN();
}

BenchResult run_bench(const Scenario& scn, int threads)
{
    scn.validate();
    const BandPlan plan = scn.plan();
    const ProbeConfig probe = scn.probe();
    const std::size_t n_axis = scn.axis_size();
    const auto n_trials = static_cast<std::size_t>(scn.trials);
    const std::size_t n_est = scn.estimators.size();
    const int K = scn.paths();

    PipelineOptions opts;
    opts.q_cols = scn.q_cols;
    opts.grid_points = scn.grid_points;
    opts.weighted = scn.weighted;
    opts.column_weighting = scn.column_weighting;

    std::vector<TrialOutcome> outcomes(n_axis * n_trials);
    parallel_for(outcomes.size(), threads, [&](std::size_t item) {
        const std::size_t a = item / n_trials;
        const std::size_t t = item % n_trials;
        TrialOutcome& out = outcomes[item];
        out.sq_error.assign(n_est, std::numeric_limits<double>::quiet_NaN());

        const MultipathChannel ch = scn.channel(static_cast<int>(t));
        const NoiseModel noise = noise_for(scn, ch, plan, probe, a);
        const int snaps = snapshots_at(scn, a);
        const std::uint64_t seed = derive_seed(scn.master_seed, {kNoiseStream, a, t});
        const auto data = simulate_snapshots(ch, plan, probe, noise, seed, snaps);
        out.crlb_var = trial_crlb(ch, plan, noise, snaps);

        for (std::size_t e = 0; e < n_est; ++e) {
            try {
                const auto est = run_estimator(scn.estimators[e], data, K, opts);
                const double err = los_error(ch.delays(), est);
                if (std::isfinite(err)) {
                    out.sq_error[e] = err * err;
                }
            } catch (const Error&) {
                // counted as a failure below
            }
        }
    });

    BenchResult res;
    const std::string axis_name = scn.axis == SweepAxis::snr ? "snr" : "snapshots";
    for (std::size_t a = 0; a < n_axis; ++a) {
        std::vector<double> crlb(n_trials);
        for (std::size_t t = 0; t < n_trials; ++t) {
            crlb[t] = outcomes[a * n_trials + t].crlb_var;
        }
        const double crlb_s = root_mean(crlb);
        for (std::size_t e = 0; e < n_est; ++e) {
            std::vector<double> sq(n_trials);
            int used = 0;
            for (std::size_t t = 0; t < n_trials; ++t) {
                sq[t] = outcomes[a * n_trials + t].sq_error[e];
                used += std::isfinite(sq[t]) ? 1 : 0;
            }
            res.rows.push_back({axis_name, scn.axis_value(a), std::string(estimator_name(scn.estimators[e])),
                                root_mean(sq), crlb_s, used, scn.trials - used});
        }
    }
    return res;
}

std::vector<double> crlb_axis(const Scenario& scn, int threads)
{
    scn.validate();
    const BandPlan plan = scn.plan();
    const ProbeConfig probe = scn.probe();
    const std::size_t n_axis = scn.axis_size();
    const auto n_trials = static_cast<std::size_t>(scn.trials);
    std::vector<double> var(n_axis * n_trials);
    parallel_for(var.size(), threads, [&](std::size_t item) {
        const std::size_t a = item / n_trials;
        const std::size_t t = item % n_trials;
        const MultipathChannel ch = scn.channel(static_cast<int>(t));
        var[item] = trial_crlb(ch, plan, noise_for(scn, ch, plan, probe, a), snapshots_at(scn, a));
    });
    std::vector<double> out;
    for (std::size_t a = 0; a < n_axis; ++a) {
        out.push_back(root_mean(std::vector<double>(var.begin() + static_cast<std::ptrdiff_t>(a * n_trials),
                                                    var.begin() + static_cast<std::ptrdiff_t>((a + 1) * n_trials))));
    }
    return out;
}

} // namespace mbtd
