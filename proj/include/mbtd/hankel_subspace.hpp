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

#pragma once

#include <span>
#include <vector>

#include "mbtd/frontend_sim.hpp"

namespace mbtd {

/// Per-band Hankel blocks H_i (P x Q, or P x S*Q after snapshot fusion).
struct HankelStack {
    std::vector<CMatrix> blocks;
    int p_rows = 0;
    int q_cols = 0;
    int snapshots = 1;

    int bands() const noexcept { return static_cast<int>(blocks.size()); }
};

/// Orthonormal K-dimensional basis of the denoised column-block matrix.
struct SignalBasis {
    CMatrix basis;           // (L * P) x K
    RVector singular_values; // K, non-increasing
    int p_rows = 0;
    int k_paths = 0;
    int l_bands = 0;
};

/// ceil(N / 3) clamped to [K, N + 1 - (K + 2)].
int default_q_cols(int n_subcarriers, int k_paths);

/// Entry (p, q) of block i is h_i[p + q]; P = N - Q + 1.
HankelStack hankel_lift(const ChannelEstimate& est, int q_cols);

/// Concatenates the per-band blocks of several snapshots column-wise.
HankelStack fuse_snapshots(std::span<const HankelStack> stacks);

/// Leading k_paths left singular vectors of H_r = [H_0 H_1 ... H_{L-1}].
CMatrix row_block_basis(const HankelStack& stack, int k_paths);

/// Projects every block onto span(u_r), stacks the results vertically and
/// returns the leading K left singular basis of that stack.
SignalBasis denoise_and_stack(const HankelStack& stack, const CMatrix& u_r);

/// Lift, fuse, and run both SVD stages for a set of snapshots.
SignalBasis signal_basis(std::span<const ChannelEstimate> snapshots, int k_paths, int q_cols);

/// Leading `count` left singular vectors and values of m, throwing
/// DegenerateDataError when sigma_count / sigma_1 < 1e-12.
void leading_left_singular(const CMatrix& m, int count, CMatrix& vectors, RVector& values);

} // namespace mbtd
