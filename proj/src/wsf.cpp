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
#include <limits>
#include <numeric>

namespace mbtd {

namespace {

constexpr cplx kJ{0.0, 1.0};

// Row exponents of the structured manifold: band i contributes n_i + r and
// n_i + 1 + r for r = 0..P-2.
std::vector<long long> manifold_exponents(const BandPlan& plan, int p_rows)
{
    const int sub = p_rows - 1;
    std::vector<long long> e;
    e.reserve(static_cast<std::size_t>(2 * plan.band_count() * sub));
    for (const int n : plan.band_offsets()) {
        for (int shift = 0; shift < 2; ++shift) {
            for (int r = 0; r < sub; ++r) {
                e.push_back(static_cast<long long>(n) + shift + r);
            }
        }
    }
    return e;
}

double wrap_delay(double tau, double range)
{
    double w = std::fmod(tau, range);
    if (w < 0.0) {
        w += range;
    }
    return w >= range ? 0.0 : w;
}

void check_delays(std::span<const double> delays, const WsfProblem& prob)
{
    if (static_cast<int>(delays.size()) != prob.k_paths) {
        throw ArgumentError("wsf: delay count differs from K");
    }
    const double range = prob.plan.unambiguous_range();
    for (std::size_t k = 0; k < delays.size(); ++k) {
        if (!std::isfinite(delays[k]) || delays[k] < 0.0 || delays[k] >= range) {
            throw RangeError("wsf: delay " + std::to_string(k) + " outside unambiguous range", k);
        }
    }
    for (std::size_t a = 0; a < delays.size(); ++a) {
        for (std::size_t b = a + 1; b < delays.size(); ++b) {
            const double d = std::abs(delays[a] - delays[b]);
            if (std::min(d, range - d) < 1e-12 * range) {
                throw SingularManifoldError("wsf: delays " + std::to_string(a) + " and " + std::to_string(b) +
                                            " coincide");
            }
        }
    }
}

// Weighted manifold factorization shared by the cost and the Jacobian.
struct Projection {
    CMatrix a_w;      // W^{1/2} A
    CMatrix q;        // thin Q of a_w
    CMatrix r;        // K x K upper-triangular factor
    CMatrix u_w;      // W^{1/2} U
    CMatrix residual; // (I - P) u_w
    CMatrix coeffs;   // a_w^+ u_w
};

Projection project(std::span<const double> delays, const WsfProblem& prob)
{
    check_delays(delays, prob);
    const RVector sqrt_w = prob.weights.cwiseSqrt();
    Projection p;
    p.a_w = sqrt_w.asDiagonal() * wsf_manifold(delays, prob.plan, prob.p_rows);
    p.u_w = sqrt_w.asDiagonal() * prob.script_u;

    const Eigen::Index rows = p.a_w.rows();
    const Eigen::Index k = p.a_w.cols();
    Eigen::HouseholderQR<CMatrix> qr(p.a_w);
    p.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    const double r_max = p.r.diagonal().cwiseAbs().maxCoeff();
    if (!(p.r.diagonal().cwiseAbs().minCoeff() > 1e-13 * r_max)) {
        throw SingularManifoldError("wsf: structured manifold is rank deficient");
    }
    p.q = qr.householderQ() * CMatrix::Identity(rows, k);
    const CMatrix qh_u = p.q.adjoint() * p.u_w;
    p.residual = p.u_w - p.q * qh_u;
    p.coeffs = p.r.triangularView<Eigen::Upper>().solve(qh_u);
    return p;
}

double safe_cost(std::span<const double> delays, const WsfProblem& prob)
{
    try {
        return wsf_cost(delays, prob).cost;
    } catch (const SingularManifoldError&) {
        return std::numeric_limits<double>::infinity();
    }
}

} // namespace

WsfProblem build_blocks(const SignalBasis& u, std::span<const double> noise_sigmas, const BandPlan& plan)
{
    const int L = plan.band_count();
    const int P = u.p_rows;
    const int K = static_cast<int>(u.basis.cols());
    if (u.basis.rows() != static_cast<Eigen::Index>(L) * P) {
        throw ArgumentError("build_blocks: basis height differs from L * P");
    }
    if (P - 1 < K) {
        throw ArgumentError("build_blocks: P - 1 must be at least K");
    }
    if (static_cast<int>(noise_sigmas.size()) != L) {
        throw ArgumentError("build_blocks: expected one sigma per band");
    }
    const bool all_zero = std::all_of(noise_sigmas.begin(), noise_sigmas.end(), [](double s) { return s == 0.0; });
    if (!all_zero) {
        for (const double s : noise_sigmas) {
            if (!(s > 0.0) || !std::isfinite(s)) {
                throw ArgumentError("build_blocks: sigmas must be all positive or all zero");
            }
        }
    }

    const int sub = P - 1;
    WsfProblem prob{CMatrix(2 * L * sub, K), RVector(2 * L * sub), plan, P, K};
    for (int i = 0; i < L; ++i) {
        const Eigen::Index top = static_cast<Eigen::Index>(i) * P;
        const Eigen::Index out = static_cast<Eigen::Index>(2 * i) * sub;
        prob.script_u.middleRows(out, sub) = u.basis.middleRows(top, sub);
        prob.script_u.middleRows(out + sub, sub) = u.basis.middleRows(top + 1, sub);
        const double s = noise_sigmas[static_cast<std::size_t>(i)];
        const double w = all_zero ? 1.0 : 1.0 / (s * s);
        prob.weights.segment(out, 2 * sub).setConstant(w);
    }
    return prob;
}

WsfProblem build_blocks_uniform(const SignalBasis& u, const BandPlan& plan)
{
    const std::vector<double> zeros(static_cast<std::size_t>(plan.band_count()), 0.0);
    return build_blocks(u, zeros, plan);
}

void apply_column_weights(WsfProblem& prob, const RVector& singular_values)
{
    if (singular_values.size() != prob.script_u.cols()) {
        throw ArgumentError("column weights: need one singular value per basis column");
    }
    const double top = singular_values[0];
    if (!(top > 0.0) || !std::isfinite(top)) {
        throw ArgumentError("column weights: leading singular value must be positive and finite");
    }
    for (Eigen::Index k = 0; k < prob.script_u.cols(); ++k) {
        prob.script_u.col(k) *= singular_values[k] / top;
    }
}

CMatrix wsf_manifold(std::span<const double> delays, const BandPlan& plan, int p_rows)
{
    if (p_rows < 2) {
        throw ArgumentError("wsf_manifold: P must be at least 2");
    }
    const auto exps = manifold_exponents(plan, p_rows);
    const double wsc = plan.subcarrier_spacing();
    CMatrix a(static_cast<Eigen::Index>(exps.size()), static_cast<Eigen::Index>(delays.size()));
    for (std::size_t k = 0; k < delays.size(); ++k) {
        const double phase = wsc * delays[k];
        for (std::size_t r = 0; r < exps.size(); ++r) {
            a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = rotor_power(phase, exps[r]);
        }
    }
    return a;
}

WsfCost wsf_cost(std::span<const double> delays, const WsfProblem& prob)
{
    Projection p = project(delays, prob);
    WsfCost out;
    out.cost = p.residual.squaredNorm();
    out.residual = Eigen::Map<const CVector>(p.residual.data(), p.residual.size());
    return out;
}

namespace {

RMatrix jacobian_at(const Projection& p, const WsfProblem& prob, JacobianKind kind)
{
    const auto exps = manifold_exponents(prob.plan, prob.p_rows);
    const double wsc = prob.plan.subcarrier_spacing();
    const Eigen::Index rows = p.a_w.rows();
    const Eigen::Index K = p.a_w.cols();
    const Eigen::Index n = rows * K;

    // Column k of (A^+)^H = Q R^{-H} e_k.
    CMatrix pinv_h;
    if (kind == JacobianKind::golub_pereyra) {
        const CMatrix r_inv_h =
            p.r.adjoint().triangularView<Eigen::Lower>().solve(CMatrix::Identity(K, K));
        pinv_h = p.q * r_inv_h;
    }

    RMatrix jac(2 * n, K);
    CVector d_a(rows);
    for (Eigen::Index k = 0; k < K; ++k) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            d_a[r] = -kJ * wsc * static_cast<double>(exps[static_cast<std::size_t>(r)]) * p.a_w(r, k);
        }
        const CVector perp = d_a - p.q * (p.q.adjoint() * d_a);
        CMatrix jk = -perp * p.coeffs.row(k);
        if (kind == JacobianKind::golub_pereyra) {
            jk.noalias() -= pinv_h.col(k) * (d_a.adjoint() * p.residual);
        }
        const Eigen::Map<const CVector> flat(jk.data(), n);
        jac.col(k).head(n) = flat.real();
        jac.col(k).tail(n) = flat.imag();
    }
    return jac;
}

} // namespace

RMatrix wsf_jacobian(std::span<const double> delays, const WsfProblem& prob, JacobianKind kind)
{
    return jacobian_at(project(delays, prob), prob, kind);
}

std::vector<double> refine_wraps(const WsfProblem& prob, std::span<const double> delays, double reach, int passes)
{
    std::vector<double> tau(delays.begin(), delays.end());
    const BandPlan& plan = prob.plan;
    if (plan.band_count() < 2 || !(reach > 0.0)) {
        return tau;
    }
    const double range = plan.unambiguous_range();
    const double wrap = range / plan.band_offsets().back();
    const int span = static_cast<int>(std::ceil(reach / wrap));
    double best = safe_cost(tau, prob);
    for (int pass = 0; pass < passes; ++pass) {
        bool moved = false;
        for (std::size_t k = 0; k < tau.size(); ++k) {
            const double origin = tau[k];
            double pick = origin;
            for (int m = -span; m <= span; ++m) {
                if (m == 0) {
                    continue;
                }
                tau[k] = wrap_delay(origin + m * wrap, range);
                const double c = safe_cost(tau, prob);
                if (c < best) {
                    best = c;
                    pick = tau[k];
                }
            }
            tau[k] = pick;
            moved = moved || pick != origin;
        }
        if (!moved) {
            break;
        }
    }
    return tau;
}

FitResult varpro_solve(const WsfProblem& prob, std::span<const double> init_delays, const VarproOptions& opts)
{
    if (opts.max_iterations < 0) {
        throw ArgumentError("varpro_solve: max_iterations must be non-negative");
    }
    const double ts = prob.plan.sample_period();
    const double range = prob.plan.unambiguous_range();
    const auto K = static_cast<Eigen::Index>(prob.k_paths);

    std::vector<double> tau(init_delays.begin(), init_delays.end());
    double cost = wsf_cost(tau, prob).cost; // propagates errors on the initial point
    const double scale = (prob.weights.cwiseSqrt().asDiagonal() * prob.script_u).squaredNorm();
    const double floor = 1e-30 * std::max(scale, std::numeric_limits<double>::min());

    FitResult out;
    double damping = opts.initial_damping;
    bool converged = cost <= floor;
    int it = 0;
    while (!converged && it < opts.max_iterations) {
        ++it;
        // Work in units of Ts so the normal equations stay well scaled.
        const Projection p = project(tau, prob);
        const RMatrix jac = jacobian_at(p, prob, opts.jacobian) * ts;
        const Eigen::Map<const CVector> res(p.residual.data(), p.residual.size());
        RVector r(2 * res.size());
        r.head(res.size()) = res.real();
        r.tail(res.size()) = res.imag();

        const RMatrix normal = jac.transpose() * jac;
        const RVector grad = jac.transpose() * r;
        RVector diag = normal.diagonal();
        for (Eigen::Index k = 0; k < K; ++k) {
            diag[k] = std::max(diag[k], 1e-300);
        }

        bool accepted = false;
        double new_cost = cost;
        RVector step;
        std::vector<double> trial(tau.size());
        while (damping < 1e16) {
            RMatrix lhs = normal;
            lhs.diagonal() += damping * diag;
            step = lhs.ldlt().solve(-grad);
            for (std::size_t k = 0; k < tau.size(); ++k) {
                trial[k] = wrap_delay(tau[k] + step[static_cast<Eigen::Index>(k)] * ts, range);
            }
            new_cost = safe_cost(trial, prob);
            if (new_cost < cost) {
                accepted = true;
                break;
            }
            damping *= 10.0;
        }
        if (!accepted) {
            // No descent direction left at working precision.
            converged = true;
            break;
        }
        damping = std::max(damping / 10.0, 1e-12);

        const double decrease = cost - new_cost;
        double tau_norm = 0.0;
        for (const double t : tau) {
            tau_norm += (t / ts) * (t / ts);
        }
        tau = trial;
        cost = new_cost;
        if (decrease <= opts.cost_tolerance * (cost + decrease) ||
            step.norm() <= opts.step_tolerance * std::sqrt(tau_norm) || cost <= floor) {
            converged = true;
        }
    }

    // Sort and carry the linear coefficients along.
    std::vector<std::size_t> order(tau.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return tau[a] < tau[b]; });
    const Projection final_p = project(tau, prob);
    out.delays.resize(tau.size());
    out.linear_coeffs.resize(K, K);
    for (std::size_t k = 0; k < order.size(); ++k) {
        out.delays[k] = tau[order[k]];
        out.linear_coeffs.row(static_cast<Eigen::Index>(k)) = final_p.coeffs.row(static_cast<Eigen::Index>(order[k]));
    }
    out.cost = final_p.residual.squaredNorm();
    out.iterations = it;
    out.converged = converged;
    return out;
}

FitResult varpro_solve(const WsfProblem& prob, std::span<const double> init_delays, const VarproOptions& opts,
                       std::span<const ChannelEstimate> data)
{
    FitResult out = varpro_solve(prob, init_delays, opts);
    out.gains = estimate_gains(out.delays, data);
    return out;
}

CVector estimate_gains(std::span<const double> delays, std::span<const ChannelEstimate> data)
{
    if (data.empty()) {
        throw ArgumentError("estimate_gains: no data");
    }
    const BandPlan& plan = data.front().plan;
    const int n = plan.n_subcarriers();
    CVector mean = CVector::Zero(static_cast<Eigen::Index>(n) * plan.band_count());
    for (const auto& est : data) {
        mean += est.stacked();
    }
    mean /= static_cast<double>(data.size());

    CMatrix a = stacked_manifold(delays, plan, n);
    const auto& sigmas = data.front().sigmas;
    const bool weighted = std::all_of(sigmas.begin(), sigmas.end(), [](double s) { return s > 0.0; });
    if (weighted) {
        for (int i = 0; i < plan.band_count(); ++i) {
            const double w = 1.0 / sigmas[static_cast<std::size_t>(i)];
            a.middleRows(static_cast<Eigen::Index>(i) * n, n) *= w;
            mean.segment(static_cast<Eigen::Index>(i) * n, n) *= w;
        }
    }
    return a.colPivHouseholderQr().solve(mean);
}

} // namespace mbtd
