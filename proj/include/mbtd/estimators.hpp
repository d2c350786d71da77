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

#include "mbtd/hankel_subspace.hpp"

namespace mbtd {

// ---------------------------------------------------------------------------
// Weighted subspace fitting over the multiple shift-invariance structure.
//
// For every band i the signal basis U is cut into its first and last P-1 rows
// (U_{i,1}, U_{i,2}); these are fitted jointly by the structured manifold
//
//     A(tau) = [ M'' Phi^{n_0}; M'' Phi^{n_0+1}; ...; M'' Phi^{n_{L-1}+1} ]
//
// through an unknown K x K matrix. The linear matrix is eliminated exactly
// (variable projection), leaving a K-dimensional problem in the delays.
// ---------------------------------------------------------------------------

struct WsfProblem {
    CMatrix script_u; // 2 L (P-1) x K
    RVector weights;  // diagonal of W, 1 / sigma_i^2 on both sub-blocks of band i
    BandPlan plan;
    int p_rows = 0;
    int k_paths = 0;
};

/// Stacks the selected sub-blocks of U in band order (first rows, last rows)
/// and builds the diagonal weighting. All-zero sigmas select uniform weights.
WsfProblem build_blocks(const SignalBasis& u, std::span<const double> noise_sigmas, const BandPlan& plan);

/// Same stacking with W = I.
WsfProblem build_blocks_uniform(const SignalBasis& u, const BandPlan& plan);

/// Scales column k of the stacked blocks by s_k / s_0, so directions close
/// to the noise floor count less in the fit. Off by default in the pipeline.
void apply_column_weights(WsfProblem& prob, const RVector& singular_values);

/// The structured manifold A(tau), 2 L (P-1) x K.
CMatrix wsf_manifold(std::span<const double> delays, const BandPlan& plan, int p_rows);

struct WsfCost {
    double cost = 0.0;
    CVector residual; // vec((I - P_{W^1/2 A}) W^{1/2} U), column-major
};

/// Exact minimum over the linear matrix of |W^{1/2}(U - A T^{-1})|_F^2.
WsfCost wsf_cost(std::span<const double> delays, const WsfProblem& prob);

enum class JacobianKind { kaufman, golub_pereyra };

/// Real Jacobian d[Re r; Im r] / d tau (seconds) of the projected residual.
RMatrix wsf_jacobian(std::span<const double> delays, const WsfProblem& prob, JacobianKind kind);

struct VarproOptions {
    int max_iterations = 50;
    double initial_damping = 1e-3;
    double cost_tolerance = 1e-12; // relative cost decrease
    double step_tolerance = 1e-12; // relative to |tau|
    JacobianKind jacobian = JacobianKind::kaufman;
};

struct FitResult {
    std::vector<double> delays; // ascending, seconds
    CVector gains;              // filled when data is passed to varpro_solve
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;
    CMatrix linear_coeffs; // K x K minimizer T^{-1}
};

/// Re-picks the integer wrap of every delay (multiples of N Ts / n_{L-1})
/// within +-`reach` seconds by coordinate-wise minimization of the fitting
/// cost. Repairs initializations whose coarse stage chose the wrong wrap.
std::vector<double> refine_wraps(const WsfProblem& prob, std::span<const double> delays, double reach,
                                 int passes = 2);

/// Levenberg-Marquardt on the variable-projection residual.
FitResult varpro_solve(const WsfProblem& prob, std::span<const double> init_delays, const VarproOptions& opts = {});

/// As above, then recovers the gains by least squares on the full stacked
/// model using the snapshot-averaged estimate.
FitResult varpro_solve(const WsfProblem& prob, std::span<const double> init_delays, const VarproOptions& opts,
                       std::span<const ChannelEstimate> data);

/// Least-squares gains on the stacked multiband model A(tau) a = h, with
/// each band weighted by 1 / sigma_i when all sigmas are positive.
CVector estimate_gains(std::span<const double> delays, std::span<const ChannelEstimate> data);

// ---------------------------------------------------------------------------
// Baselines and initializer.
// ---------------------------------------------------------------------------

/// Eigenvalues of the least-squares rotation U_1 Psi = U_2 computed on the
/// column-stacked Hankel blocks of the listed bands.
CVector esprit_rotation_eigenvalues(std::span<const ChannelEstimate> data, int k_paths, std::span<const int> bands,
                                    int q_cols);

/// Single-invariance ESPRIT on the listed bands; delays ascending.
std::vector<double> esprit_baseline(std::span<const ChannelEstimate> data, int k_paths, std::span<const int> bands,
                                    int q_cols = 0);

/// Two-stage coarse/fine initializer: within-band shift invariance gives a
/// coarse delay, the rotation between the first and last band gives a fine
/// but wrapped one; the wrap nearest to the coarse value is kept.
std::vector<double> init_multiresolution(std::span<const ChannelEstimate> data, int k_paths, int q_cols = 0);

/// Minimum number of pseudospectrum grid points used by default: at least
/// 10 N, and 16 points per main lobe of the full multiband aperture.
int default_grid_points(const BandPlan& plan);

/// 1 / |(I - U U^H) a(tau)|^2 on a uniform grid over [0, N Ts).
RVector mimusic_spectrum(const SignalBasis& basis, const BandPlan& plan, int grid_points);

/// Multiple-invariance MUSIC: K largest spectrum peaks, refined by
/// parabolic interpolation; delays ascending.
std::vector<double> mimusic_baseline(std::span<const ChannelEstimate> data, int k_paths, int grid_points = 0,
                                     int q_cols = 0);

} // namespace mbtd
