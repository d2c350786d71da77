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

#include "mbtd/crlb.hpp"

#include <cmath>

namespace mbtd {

namespace {
constexpr cplx kJ{0.0, 1.0};
}

CVector model_mean(const MultipathChannel& ch, const BandPlan& plan)
{
    const int n = plan.n_subcarriers();
    CVector mu(static_cast<Eigen::Index>(n) * plan.band_count());
    for (int i = 0; i < plan.band_count(); ++i) {
        mu.segment(static_cast<Eigen::Index>(i) * n, n) = channel_samples(ch, plan, i);
    }
    return mu;
}

CMatrix model_jacobian(const MultipathChannel& ch, const BandPlan& plan)
{
    ch.check_range(plan);
    const int n = plan.n_subcarriers();
    const int K = ch.paths();
    const double wsc = plan.subcarrier_spacing();
    const CMatrix a = stacked_manifold(ch.delays(), plan, n);
    CMatrix d(a.rows(), 3 * K);
    for (int k = 0; k < K; ++k) {
        for (int i = 0; i < plan.band_count(); ++i) {
            for (int s = 0; s < n; ++s) {
                const Eigen::Index row = static_cast<Eigen::Index>(i) * n + s;
                const double m = static_cast<double>(plan.band_offsets()[i]) + s;
                d(row, k) = -kJ * wsc * m * a(row, k) * ch.gains()[k];
            }
        }
        d.col(K + k) = a.col(k);
        d.col(2 * K + k) = kJ * a.col(k);
    }
    return d;
}

CrlbResult crlb_delays(const MultipathChannel& ch, const BandPlan& plan, std::span<const double> sigmas,
                       int snapshots)
{
    if (static_cast<int>(sigmas.size()) != plan.band_count()) {
        throw ArgumentError("crlb: expected one sigma per band");
    }
    if (snapshots < 1) {
        throw ArgumentError("crlb: snapshots must be >= 1");
    }
    for (const double s : sigmas) {
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw ArgumentError("crlb: sigmas must be positive and finite");
        }
    }
    const int n = plan.n_subcarriers();
    const int K = ch.paths();
    CMatrix d = model_jacobian(ch, plan);
    // Sigma^{-1/2} D
    for (int i = 0; i < plan.band_count(); ++i) {
        d.middleRows(static_cast<Eigen::Index>(i) * n, n) /= sigmas[static_cast<std::size_t>(i)];
    }

    CrlbResult out;
    out.snapshots = snapshots;
    out.fisher = 2.0 * snapshots * (d.adjoint() * d).real();
    out.fisher = 0.5 * (out.fisher + out.fisher.transpose()).eval();

    // Invert with symmetric diagonal scaling: delay entries are O(w_sc^2)
    // while gain entries are O(1).
    const RVector scale = out.fisher.diagonal().cwiseSqrt().cwiseInverse();
    if (!scale.allFinite()) {
        throw SingularInformationError("crlb: Fisher matrix has a zero diagonal entry");
    }
    const RMatrix scaled = scale.asDiagonal() * out.fisher * scale.asDiagonal();
    Eigen::SelfAdjointEigenSolver<RMatrix> eig(scaled);
    const RVector ev = eig.eigenvalues();
    if (!(ev.minCoeff() > 1e-12 * ev.maxCoeff())) {
        throw SingularInformationError("crlb: Fisher information is singular (coinciding delays?)");
    }
    const RMatrix inv_scaled = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    out.tau_variances.resize(K);
    for (int k = 0; k < K; ++k) {
        out.tau_variances[k] = inv_scaled(k, k) * scale[k] * scale[k];
    }
    return out;
}

std::vector<double> crlb_curve(const MultipathChannel& ch, const BandPlan& plan, std::span<const double> snr_axis_db,
                               std::span<const double> offsets_db, int snapshots)
{
    if (static_cast<int>(offsets_db.size()) != plan.band_count()) {
        throw ArgumentError("crlb_curve: expected one offset per band");
    }
    const ProbeConfig probe = ProbeConfig::flat(plan);
    std::vector<double> out;
    out.reserve(snr_axis_db.size());
    std::vector<double> snr(offsets_db.size());
    for (const double s : snr_axis_db) {
        for (std::size_t i = 0; i < offsets_db.size(); ++i) {
            snr[i] = s + offsets_db[i];
        }
        const NoiseModel noise = sigma_from_snr(ch, plan, probe, snr);
        // Paths are sorted, so index 0 is the line-of-sight component.
        out.push_back(std::sqrt(crlb_delays(ch, plan, noise.sigmas, snapshots).tau_variances[0]));
    }
    return out;
}

} // namespace mbtd
