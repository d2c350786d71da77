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

namespace detail {

int resolve_q_cols(const ChannelEstimate& est, int k_paths, int q_cols)
{
    if (k_paths < 1) {
        throw ArgumentError("estimator: K must be >= 1");
    }
    return q_cols > 0 ? q_cols : default_q_cols(est.plan.n_subcarriers(), k_paths);
}

HankelStack fused_stack(std::span<const ChannelEstimate> data, std::span<const int> bands, int q_cols)
{
    if (data.empty()) {
        throw ArgumentError("estimator: no snapshots");
    }
    if (bands.empty()) {
        throw ArgumentError("estimator: band list is empty");
    }
    std::vector<HankelStack> stacks;
    stacks.reserve(data.size());
    for (const auto& est : data) {
        HankelStack full = hankel_lift(est, q_cols);
        HankelStack picked;
        picked.p_rows = full.p_rows;
        picked.q_cols = full.q_cols;
        picked.snapshots = 1;
        for (const int b : bands) {
            if (b < 0 || b >= full.bands()) {
                throw ArgumentError("estimator: band index " + std::to_string(b) + " out of range");
            }
            picked.blocks.push_back(full.blocks[static_cast<std::size_t>(b)]);
        }
        stacks.push_back(std::move(picked));
    }
    return fuse_snapshots(stacks);
}

double delay_from_rotor(cplx z, const BandPlan& plan)
{
    const double range = plan.unambiguous_range();
    double tau = -std::arg(z) / plan.subcarrier_spacing();
    if (tau < 0.0) {
        tau += range;
    }
    return tau >= range ? 0.0 : tau;
}

CMatrix lstsq(const CMatrix& a, const CMatrix& b)
{
    return a.colPivHouseholderQr().solve(b);
}

} // namespace detail

CVector esprit_rotation_eigenvalues(std::span<const ChannelEstimate> data, int k_paths, std::span<const int> bands,
                                    int q_cols)
{
    if (data.empty()) {
        throw ArgumentError("esprit: no snapshots");
    }
    const int q = detail::resolve_q_cols(data.front(), k_paths, q_cols);
    const HankelStack stack = detail::fused_stack(data, bands, q);
    if (stack.p_rows - 1 < k_paths) {
        throw ArgumentError("esprit: P - 1 must be at least K");
    }
    const CMatrix u = row_block_basis(stack, k_paths);
    const Eigen::Index sub = u.rows() - 1;
    const CMatrix psi = detail::lstsq(u.topRows(sub), u.bottomRows(sub));
    Eigen::ComplexEigenSolver<CMatrix> eig(psi, false);
    if (eig.info() != Eigen::Success) {
        throw InitializerFailedError("esprit: eigen decomposition of the rotation failed");
    }
    return eig.eigenvalues();
}

std::vector<double> esprit_baseline(std::span<const ChannelEstimate> data, int k_paths, std::span<const int> bands,
                                    int q_cols)
{
    const CVector lambda = esprit_rotation_eigenvalues(data, k_paths, bands, q_cols);
    const BandPlan& plan = data.front().plan;
    std::vector<double> tau;
    tau.reserve(static_cast<std::size_t>(lambda.size()));
    for (const cplx z : lambda) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
            throw InitializerFailedError("esprit: non-finite rotation eigenvalue");
        }
        tau.push_back(detail::delay_from_rotor(z, plan));
    }
    std::sort(tau.begin(), tau.end());
    return tau;
}

} // namespace mbtd
