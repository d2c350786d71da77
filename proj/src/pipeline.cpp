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

#include "mbtd/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace mbtd {

namespace {

constexpr std::array<std::pair<EstimatorKind, std::string_view>, 4> kNames{{
    {EstimatorKind::proposed, "proposed"},
    {EstimatorKind::esprit, "esprit"},
    {EstimatorKind::mresprit, "mresprit"},
    {EstimatorKind::mimusic, "mimusic"},
}};

std::vector<int> outer_bands(const BandPlan& plan)
{
    if (plan.band_count() == 1) {
        return {0};
    }
    return {0, plan.band_count() - 1};
}

// Local maxima of the spectrum that no current estimate sits near, highest
// first.
std::vector<double> unclaimed_peaks(const RVector& spec, const BandPlan& plan, std::span<const double> claimed,
                                    std::size_t limit)
{
    const auto grid = static_cast<int>(spec.size());
    const double step = plan.unambiguous_range() / grid;
    const double range = plan.unambiguous_range();
    const double guard = 0.5 * plan.sample_period();
    std::vector<int> peaks;
    for (int g = 0; g < grid; ++g) {
        if (spec[g] > spec[(g + grid - 1) % grid] && spec[g] >= spec[(g + 1) % grid]) {
            peaks.push_back(g);
        }
    }
    std::sort(peaks.begin(), peaks.end(), [&](int a, int b) { return spec[a] > spec[b]; });
    std::vector<double> out;
    for (const int g : peaks) {
        const double t = g * step;
        const bool near = std::any_of(claimed.begin(), claimed.end(), [&](double c) {
            const double d = std::abs(t - c);
            return std::min(d, range - d) < guard;
        });
        if (!near) {
            out.push_back(t);
            if (out.size() == limit) {
                break;
            }
        }
    }
    return out;
}

// Moves one path at a time onto a spectrum peak the fit left unused. The
// swap is screened on the cost alone, then refitted, and kept only when the
// refit lowers the cost.
void reseed(const WsfProblem& prob, const RVector& spec, const PipelineOptions& opts, FitResult& best)
{
    const BandPlan& plan = prob.plan;
    const std::size_t k_paths = best.delays.size();
    for (int round = 0; round < opts.reseed_rounds; ++round) {
        const auto cands = unclaimed_peaks(spec, plan, best.delays, 2 * k_paths);
        double screen = best.cost;
        std::vector<double> pick;
        for (std::size_t k = 0; k < k_paths; ++k) {
            for (const double c : cands) {
                std::vector<double> trial = best.delays;
                trial[k] = c;
                std::sort(trial.begin(), trial.end());
                double cost = 0.0;
                try {
                    cost = wsf_cost(trial, prob).cost;
                } catch (const SingularManifoldError&) {
                    continue;
                }
                if (cost < screen) {
                    screen = cost;
                    pick = std::move(trial);
                }
            }
        }
        if (pick.empty()) {
            return;
        }
        FitResult fit;
        try {
            fit = varpro_solve(prob, pick, opts.varpro);
        } catch (const SingularManifoldError&) {
            return;
        }
        if (!(fit.cost < best.cost)) {
            return;
        }
        best = std::move(fit);
    }
}

} // namespace

std::string_view estimator_name(EstimatorKind kind)
{
    for (const auto& [k, name] : kNames) {
        if (k == kind) {
            return name;
        }
    }
    return "unknown";
}

std::optional<EstimatorKind> parse_estimator(std::string_view name)
{
    for (const auto& [k, n] : kNames) {
        if (n == name) {
            return k;
        }
    }
    return std::nullopt;
}

FitResult estimate_proposed(std::span<const ChannelEstimate> data, int k_paths, const PipelineOptions& opts)
{
    if (data.empty()) {
        throw ArgumentError("estimate_proposed: no snapshots");
    }
    const BandPlan& plan = data.front().plan;
    const int q = opts.q_cols > 0 ? opts.q_cols : default_q_cols(plan.n_subcarriers(), k_paths);
    const SignalBasis basis = signal_basis(data, k_paths, q);
    WsfProblem prob =
        opts.weighted ? build_blocks(basis, data.front().sigmas, plan) : build_blocks_uniform(basis, plan);
    if (opts.column_weighting) {
        apply_column_weights(prob, basis.singular_values);
    }

    const int coarse_grid = 10 * plan.n_subcarriers();
    std::vector<std::vector<double>> starts;
    std::optional<RVector> spec;
    try {
        auto mr = init_multiresolution(data, k_paths, q);
        (void)wsf_cost(mr, prob);
        starts.push_back(std::move(mr));
    } catch (const InitializerFailedError&) {
    } catch (const SingularManifoldError&) {
    }
    if (starts.empty() || opts.multi_start) {
        try {
            starts.push_back(mimusic_baseline(data, k_paths, coarse_grid, q));
            spec = mimusic_spectrum(basis, plan, coarse_grid);
        } catch (const PeakDeficitError&) {
            if (starts.empty()) {
                throw InitializerFailedError("estimate_proposed: no usable initialization");
            }
        }
    }

    std::optional<FitResult> best;
    for (auto& init : starts) {
        if (opts.wrap_reach_ts > 0.0) {
            init = refine_wraps(prob, init, opts.wrap_reach_ts * plan.sample_period());
        }
        FitResult fit;
        try {
            fit = varpro_solve(prob, init, opts.varpro);
        } catch (const SingularManifoldError&) {
            continue;
        }
        if (!best || fit.cost < best->cost) {
            best = std::move(fit);
        }
    }
    if (!best) {
        throw SingularManifoldError("estimate_proposed: every start hit a singular manifold");
    }
    if (opts.reseed_rounds > 0) {
        if (!spec) {
            spec = mimusic_spectrum(basis, plan, coarse_grid);
        }
        reseed(prob, *spec, opts, *best);
    }
    best->gains = estimate_gains(best->delays, data);
    return *best;
}

std::vector<double> run_estimator(EstimatorKind kind, std::span<const ChannelEstimate> data, int k_paths,
                                  const PipelineOptions& opts)
{
    if (data.empty()) {
        throw ArgumentError("run_estimator: no snapshots");
    }
    switch (kind) {
    case EstimatorKind::proposed:
        return estimate_proposed(data, k_paths, opts).delays;
    case EstimatorKind::esprit: {
        const auto bands = outer_bands(data.front().plan);
        return esprit_baseline(data, k_paths, bands, opts.q_cols);
    }
    case EstimatorKind::mresprit:
        return init_multiresolution(data, k_paths, opts.q_cols);
    case EstimatorKind::mimusic:
        return mimusic_baseline(data, k_paths, opts.grid_points, opts.q_cols);
    }
    throw ArgumentError("run_estimator: unknown estimator");
}

} // namespace mbtd
