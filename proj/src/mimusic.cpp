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

#include "mbtd/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "subspace_util.hpp"

namespace mbtd {

int default_grid_points(const BandPlan& plan)
{
    const int n = plan.n_subcarriers();
    return std::max(10 * n, 16 * (plan.band_offsets().back() + n));
}

RVector mimusic_spectrum(const SignalBasis& basis, const BandPlan& plan, int grid_points)
{
    const int n = plan.n_subcarriers();
    if (grid_points < 10 * n) {
        throw ArgumentError("mimusic: grid_points must be at least 10 N");
    }
    const int L = plan.band_count();
    const int P = basis.p_rows;
    const auto K = basis.basis.cols();
    if (basis.basis.rows() != static_cast<Eigen::Index>(L) * P) {
        throw ArgumentError("mimusic: basis height differs from L * P");
    }

    // On the grid tau_g = g N Ts / G the rotor is exp(-j 2 pi g / G), so
    // U_i^H v(tau_g) is a length-G DFT of the conjugated basis column.
    Eigen::FFT<double> fft;
    std::vector<cplx> in(static_cast<std::size_t>(grid_points));
    std::vector<cplx> out;
    std::vector<CVector> proj(static_cast<std::size_t>(K), CVector::Zero(grid_points));
    for (int i = 0; i < L; ++i) {
        const long long offset = plan.band_offsets()[i];
        for (Eigen::Index k = 0; k < K; ++k) {
            std::fill(in.begin(), in.end(), cplx{});
            for (int r = 0; r < P; ++r) {
                in[static_cast<std::size_t>(r)] = std::conj(basis.basis(static_cast<Eigen::Index>(i) * P + r, k));
            }
            fft.fwd(out, in);
            CVector& acc = proj[static_cast<std::size_t>(k)];
            for (int g = 0; g < grid_points; ++g) {
                // Phi^{n_i} at grid point g.
                const long long e = (offset * g) % grid_points;
                const double ang = -2.0 * std::numbers::pi * static_cast<double>(e) / grid_points;
                acc[g] += std::polar(1.0, ang) * out[static_cast<std::size_t>(g)];
            }
        }
    }

    const double norm_a = static_cast<double>(L) * P;
    RVector spectrum(grid_points);
    for (int g = 0; g < grid_points; ++g) {
        double captured = 0.0;
        for (Eigen::Index k = 0; k < K; ++k) {
            captured += std::norm(proj[static_cast<std::size_t>(k)][g]);
        }
        const double residual = std::max(norm_a - captured, 1e-300 * norm_a);
        spectrum[g] = 1.0 / residual;
    }
    return spectrum;
}

std::vector<double> mimusic_baseline(std::span<const ChannelEstimate> data, int k_paths, int grid_points,
                                     int q_cols)
{
    if (data.empty()) {
        throw ArgumentError("mimusic: no snapshots");
    }
    const BandPlan& plan = data.front().plan;
    const int q = detail::resolve_q_cols(data.front(), k_paths, q_cols);
    const int grid = grid_points > 0 ? grid_points : default_grid_points(plan);
    const SignalBasis basis = signal_basis(data, k_paths, q);
    const RVector spec = mimusic_spectrum(basis, plan, grid);

    RVector sorted = spec;
    std::nth_element(sorted.data(), sorted.data() + grid / 2, sorted.data() + grid);
    const double median = sorted[grid / 2];

    std::vector<int> peaks;
    for (int g = 0; g < grid; ++g) {
        const double prev = spec[(g + grid - 1) % grid];
        const double next = spec[(g + 1) % grid];
        if (spec[g] > prev && spec[g] >= next && spec[g] > median) {
            peaks.push_back(g);
        }
    }
    if (static_cast<int>(peaks.size()) < k_paths) {
        throw PeakDeficitError("mimusic: found " + std::to_string(peaks.size()) + " peaks above the median, need " +
                               std::to_string(k_paths));
    }
    std::partial_sort(peaks.begin(), peaks.begin() + k_paths, peaks.end(),
                      [&](int a, int b) { return spec[a] > spec[b]; });

    const double step = plan.unambiguous_range() / grid;
    std::vector<double> tau;
    tau.reserve(static_cast<std::size_t>(k_paths));
    for (int k = 0; k < k_paths; ++k) {
        const int g = peaks[static_cast<std::size_t>(k)];
        // The null spectrum 1 / P(tau) is locally quadratic around a
        // minimum, so the parabola is fitted to it rather than to P.
        const double ym = 1.0 / spec[(g + grid - 1) % grid];
        const double y0 = 1.0 / spec[g];
        const double yp = 1.0 / spec[(g + 1) % grid];
        const double den = ym - 2.0 * y0 + yp;
        double delta = den > 0.0 ? 0.5 * (ym - yp) / den : 0.0;
        delta = std::clamp(delta, -0.5, 0.5);
        double t = (g + delta) * step;
        if (t < 0.0) {
            t += plan.unambiguous_range();
        }
        tau.push_back(std::fmod(t, plan.unambiguous_range()));
    }
    std::sort(tau.begin(), tau.end());
    return tau;
}

} // namespace mbtd
