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

#include "subspace_util.hpp"

namespace mbtd {

namespace {

// Fixed generic combination for simultaneous diagonalization of the two
// commuting rotations; any value off the unit circle's symmetry lines works.
const cplx kMix = std::polar(0.9, 0.7);

constexpr double kMaxEigvecCondition = 1e10;

} // namespace

std::vector<double> init_multiresolution(std::span<const ChannelEstimate> data, int k_paths, int q_cols)
{
    if (data.empty()) {
        throw ArgumentError("init_multiresolution: no snapshots");
    }
    const BandPlan& plan = data.front().plan;
    const int L = plan.band_count();
    if (L == 1) {
        const int only[] = {0};
        return esprit_baseline(data, k_paths, only, q_cols);
    }

    const int q = detail::resolve_q_cols(data.front(), k_paths, q_cols);
    const int pair[] = {0, L - 1};
    const HankelStack stack = detail::fused_stack(data, pair, q);
    const Eigen::Index P = stack.p_rows;
    if (P - 1 < k_paths) {
        throw ArgumentError("init_multiresolution: P - 1 must be at least K");
    }

    // Vertical stack [H_0; H_{L-1}] = [M'; M' Phi^{n_{L-1}}] X.
    CMatrix h(2 * P, stack.blocks[0].cols());
    h.topRows(P) = stack.blocks[0];
    h.bottomRows(P) = stack.blocks[1];
    CMatrix u;
    RVector sv;
    leading_left_singular(h, k_paths, u, sv);

    // Within-band shift (resolution ~ 1 / B) over both blocks.
    const Eigen::Index sub = P - 1;
    CMatrix u1(2 * sub, k_paths);
    CMatrix u2(2 * sub, k_paths);
    u1 << u.topRows(sub), u.middleRows(P, sub);
    u2 << u.middleRows(1, sub), u.bottomRows(sub);
    const CMatrix psi_shift = detail::lstsq(u1, u2);

    // Cross-band rotation Phi^{n_{L-1}} (fine but wrapped).
    const CMatrix psi_cross = detail::lstsq(u.topRows(P), u.bottomRows(P));

    // Both rotations share eigenvectors; diagonalize a generic combination so
    // the coarse and fine eigenvalues come out paired.
    Eigen::ComplexEigenSolver<CMatrix> eig(psi_cross + kMix * psi_shift, true);
    if (eig.info() != Eigen::Success) {
        throw InitializerFailedError("init_multiresolution: eigen decomposition failed");
    }
    const CMatrix& t = eig.eigenvectors();
    const RVector tsv = Eigen::JacobiSVD<CMatrix>(t).singularValues();
    if (!(tsv[tsv.size() - 1] > 0.0) || tsv[0] / tsv[tsv.size() - 1] > kMaxEigvecCondition) {
        throw InitializerFailedError("init_multiresolution: eigenvalue pairing is ill-conditioned");
    }
    const auto t_lu = t.partialPivLu();
    const CVector coarse = t_lu.solve(psi_shift * t).diagonal();
    const CVector fine = t_lu.solve(psi_cross * t).diagonal();

    const double range = plan.unambiguous_range();
    const double n_last = plan.band_offsets().back();
    const double wrap = range / n_last;
    std::vector<double> tau;
    tau.reserve(static_cast<std::size_t>(k_paths));
    for (int k = 0; k < k_paths; ++k) {
        const cplx zc = coarse[k];
        const cplx zf = fine[k];
        if (!std::isfinite(std::abs(zc)) || !std::isfinite(std::abs(zf)) || std::abs(zc) == 0.0 ||
            std::abs(zf) == 0.0) {
            throw InitializerFailedError("init_multiresolution: degenerate rotation eigenvalue");
        }
        const double tau_coarse = detail::delay_from_rotor(zc, plan);
        const double tau_fine = -std::arg(zf) / (n_last * plan.subcarrier_spacing());
        const double m = std::round((tau_coarse - tau_fine) / wrap);
        double t_k = std::fmod(tau_fine + m * wrap, range);
        if (t_k < 0.0) {
            t_k += range;
        }
        tau.push_back(t_k >= range ? 0.0 : t_k);
    }
    std::sort(tau.begin(), tau.end());
    return tau;
}

} // namespace mbtd
