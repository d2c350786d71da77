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

#include "mbtd/hankel_subspace.hpp"

#include <algorithm>
#include <cmath>

namespace mbtd {

int default_q_cols(int n_subcarriers, int k_paths)
{
    const int q = (n_subcarriers + 2) / 3;
    const int hi = n_subcarriers + 1 - (k_paths + 2);
    if (hi < k_paths) {
        throw ArgumentError("default_q_cols: N too small for K paths");
    }
    return std::clamp(q, k_paths, hi);
}

HankelStack hankel_lift(const ChannelEstimate& est, int q_cols)
{
    if (est.per_band.empty()) {
        throw ArgumentError("hankel_lift: estimate has no bands");
    }
    const auto n = static_cast<int>(est.per_band.front().size());
    if (q_cols < 1 || q_cols > n) {
        throw ArgumentError("hankel_lift: q_cols must lie in [1, N]");
    }
    const int p = n - q_cols + 1;

    HankelStack out;
    out.p_rows = p;
    out.q_cols = q_cols;
    out.snapshots = 1;
    out.blocks.reserve(est.per_band.size());
    for (const auto& h : est.per_band) {
        if (h.size() != n) {
            throw ArgumentError("hankel_lift: bands differ in length");
        }
        CMatrix block(p, q_cols);
        for (int c = 0; c < q_cols; ++c) {
            block.col(c) = h.segment(c, p);
        }
        out.blocks.push_back(std::move(block));
    }
    return out;
}

HankelStack fuse_snapshots(std::span<const HankelStack> stacks)
{
    if (stacks.empty()) {
        throw ArgumentError("fuse_snapshots: no stacks");
    }
    const HankelStack& first = stacks.front();
    HankelStack out;
    out.p_rows = first.p_rows;
    out.q_cols = first.q_cols;
    out.snapshots = 0;
    for (const auto& s : stacks) {
        if (s.bands() != first.bands() || s.p_rows != first.p_rows || s.q_cols != first.q_cols) {
            throw ArgumentError("fuse_snapshots: stacks differ in shape");
        }
        out.snapshots += s.snapshots;
    }
    const Eigen::Index cols = static_cast<Eigen::Index>(out.snapshots) * out.q_cols;
    for (int i = 0; i < first.bands(); ++i) {
        CMatrix block(out.p_rows, cols);
        Eigen::Index at = 0;
        for (const auto& s : stacks) {
            const CMatrix& b = s.blocks[static_cast<std::size_t>(i)];
            block.middleCols(at, b.cols()) = b;
            at += b.cols();
        }
        out.blocks.push_back(std::move(block));
    }
    return out;
}

void leading_left_singular(const CMatrix& m, int count, CMatrix& vectors, RVector& values)
{
    if (count < 1 || count > std::min(m.rows(), m.cols())) {
        throw ArgumentError("subspace: requested rank exceeds matrix dimensions");
    }
    Eigen::BDCSVD<CMatrix> svd(m, Eigen::ComputeThinU);
    const RVector& s = svd.singularValues();
    if (!(s[0] > 0.0) || !(s[count - 1] >= 1e-12 * s[0])) {
        throw DegenerateDataError("subspace: data rank is below the requested path count");
    }
    vectors = svd.matrixU().leftCols(count);
    values = s.head(count);
}

CMatrix row_block_basis(const HankelStack& stack, int k_paths)
{
    if (stack.blocks.empty()) {
        throw ArgumentError("row_block_basis: empty stack");
    }
    Eigen::Index cols = 0;
    for (const auto& b : stack.blocks) {
        cols += b.cols();
    }
    CMatrix hr(stack.p_rows, cols);
    Eigen::Index at = 0;
    for (const auto& b : stack.blocks) {
        hr.middleCols(at, b.cols()) = b;
        at += b.cols();
    }
    CMatrix u;
    RVector s;
    leading_left_singular(hr, k_paths, u, s);
    return u;
}

SignalBasis denoise_and_stack(const HankelStack& stack, const CMatrix& u_r)
{
    if (u_r.rows() != stack.p_rows) {
        throw ArgumentError("denoise_and_stack: basis row count differs from P");
    }
    if (stack.blocks.empty()) {
        throw ArgumentError("denoise_and_stack: empty stack");
    }
    const Eigen::Index p = stack.p_rows;
    const Eigen::Index cols = stack.blocks.front().cols();
    CMatrix h(p * stack.bands(), cols);
    for (int i = 0; i < stack.bands(); ++i) {
        const CMatrix& b = stack.blocks[static_cast<std::size_t>(i)];
        h.middleRows(i * p, p).noalias() = u_r * (u_r.adjoint() * b);
    }
    SignalBasis out;
    out.k_paths = static_cast<int>(u_r.cols());
    out.p_rows = stack.p_rows;
    out.l_bands = stack.bands();
    leading_left_singular(h, out.k_paths, out.basis, out.singular_values);
    return out;
}

SignalBasis signal_basis(std::span<const ChannelEstimate> snapshots, int k_paths, int q_cols)
{
    if (snapshots.empty()) {
        throw ArgumentError("signal_basis: no snapshots");
    }
    std::vector<HankelStack> stacks;
    stacks.reserve(snapshots.size());
    for (const auto& est : snapshots) {
        stacks.push_back(hankel_lift(est, q_cols));
    }
    const HankelStack fused = fuse_snapshots(stacks);
    return denoise_and_stack(fused, row_block_basis(fused, k_paths));
}

} // namespace mbtd
