// SPDX-License-Identifier: Apache-2.0
#include "she/receive_filter.hpp"

#include <cmath>
#include <stdexcept>

#include "she/metrics.hpp"

namespace she {

namespace {

// sum_i |s_i|^2 A~(theta_i) Y Y^H A~(theta_i)^H + sr^2 I
Eigen::MatrixXcd clutter_plus_noise(const Eigen::MatrixXcd& effective,
                                    const SystemConfig& config) {
    const int mr = config.geometry.num_rx;
    Eigen::MatrixXcd d = config.noise_radar *
                         Eigen::MatrixXcd::Identity(mr, mr);
    for (std::size_t i = 0; i < config.clutter_angles.size(); ++i) {
        const Eigen::MatrixXcd ay =
            radar_channel(config.clutter_angles[i], config.geometry) * effective;
        d += std::norm(config.clutter_amplitudes[i]) * (ay * ay.adjoint());
    }
    return d;
}

} // namespace

Eigen::VectorXd radar_sinr_grid(const Eigen::VectorXcd& w,
                                const Eigen::MatrixXcd& effective,
                                const SystemConfig& config,
                                const std::vector<double>& grid) {
    Eigen::VectorXd s(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t k = 0; k < grid.size(); ++k)
        s(static_cast<Eigen::Index>(k)) =
            radar_sinr_effective(w, effective, grid[k], config);
    return s;
}

Eigen::VectorXd update_auxiliary_l(const Eigen::VectorXcd& w,
                                   const Eigen::MatrixXcd& effective,
                                   const SystemConfig& config,
                                   const std::vector<double>& grid) {
    if (w.norm() == 0.0) throw std::invalid_argument("update_auxiliary_l: zero filter");
    const Eigen::MatrixXcd d = clutter_plus_noise(effective, config);
    const double denom = std::real(w.dot(d * w));
    Eigen::VectorXd l(static_cast<Eigen::Index>(grid.size()));
    const double amp = std::abs(config.target_amplitude);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double num =
            ((w.adjoint() * radar_channel(grid[k], config.geometry)) * effective)
                .squaredNorm();
        l(static_cast<Eigen::Index>(k)) = amp * std::sqrt(num) / denom;
    }
    return l;
}

ReceiveMmCache build_mm_cache(const Eigen::VectorXcd& w,
                              const Eigen::MatrixXcd& effective,
                              const SystemConfig& config,
                              const std::vector<double>& grid) {
    ReceiveMmCache cache;
    cache.denom = clutter_plus_noise(effective, config);
    cache.kappa_bar.resize(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Eigen::MatrixXcd ay =
            radar_channel(grid[k], config.geometry) * effective;
        const Eigen::RowVectorXcd way = w.adjoint() * ay;
        cache.Lambda.push_back(way * ay.adjoint());
        cache.kappa_bar(static_cast<Eigen::Index>(k)) = way.squaredNorm();
    }
    return cache;
}

QcqpProblem build_mm_subproblem(const ReceiveFilterState& state,
                                const ReceiveMmCache& cache,
                                const SystemConfig& config) {
    const int mr = config.geometry.num_rx;
    const int kk = static_cast<int>(cache.Lambda.size());
    const double amp = std::abs(config.target_amplitude);

    std::vector<int> tvar(kk, -1); // epigraph slot per active angle
    int active = 0;
    for (int k = 0; k < kk; ++k) {
        if (cache.kappa_bar(k) < 0.0)
            throw std::runtime_error("build_mm_subproblem: corrupted cache (kappa < 0)");
        if (state.l(k) > 1e-14) tvar[k] = active++;
    }

    QcqpProblem p;
    p.dim = mr;
    p.num_extras = active + 1; // t variables then c
    const int c_idx = active;

    p.objective.extra_lin = Eigen::VectorXd::Zero(p.num_extras);
    p.objective.extra_lin(c_idx) = -1.0;

    for (int k = 0; k < kk; ++k) {
        QuadTerm main;
        main.extra_lin = Eigen::VectorXd::Zero(p.num_extras);
        main.extra_lin(c_idx) = 1.0;
        if (tvar[k] >= 0) {
            const double lk = state.l(k);
            main.quad = lk * lk * cache.denom;
            main.extra_lin(tvar[k]) = -2.0 * lk * amp;

            QuadTerm epi; // t_k^2 + kappa_bar_k - 2 Re(Lambda_k w) <= 0
            epi.extra_quad = Eigen::VectorXd::Zero(p.num_extras);
            epi.extra_quad(tvar[k]) = 1.0;
            epi.lin = -cache.Lambda[static_cast<std::size_t>(k)].adjoint();
            epi.constant = cache.kappa_bar(k);
            p.constraints.push_back(std::move(epi));

            QuadTerm pos; // -t_k <= 0
            pos.extra_lin = Eigen::VectorXd::Zero(p.num_extras);
            pos.extra_lin(tvar[k]) = -1.0;
            p.constraints.push_back(std::move(pos));
        }
        p.constraints.push_back(std::move(main));
    }

    QuadTerm ball; // ||w||^2 <= 100 (SINR is scale invariant; bounds the domain)
    ball.quad = Eigen::MatrixXcd::Identity(mr, mr);
    ball.constant = -100.0;
    p.constraints.push_back(std::move(ball));
    return p;
}

ReceiveFilterState optimize_receive_filter(const Eigen::MatrixXcd& effective,
                                           const Eigen::VectorXcd& w_init,
                                           const SystemConfig& config,
                                           const std::vector<double>& grid,
                                           double tol, int max_outer) {
    if (w_init.norm() == 0.0)
        throw std::invalid_argument("optimize_receive_filter: zero initial filter");
    ReceiveFilterState state;
    state.w = w_init.normalized();
    state.l = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));

    if (effective.cwiseAbs().maxCoeff() == 0.0) {
        state.min_sinr = 0.0;
        state.sinr_trace.push_back(0.0);
        return state; // zero beamformer: SINR is 0 for any filter
    }

    Eigen::VectorXd sinr = radar_sinr_grid(state.w, effective, config, grid);
    state.min_sinr = sinr.minCoeff();
    state.sinr_trace.push_back(state.min_sinr);

    for (int it = 0; it < max_outer; ++it) {
        state.iteration = it + 1;
        state.l = update_auxiliary_l(state.w, effective, config, grid);
        const ReceiveMmCache cache = build_mm_cache(state.w, effective, config, grid);
        const QcqpProblem prob = build_mm_subproblem(state, cache, config);

        QcqpOptions opts;
        opts.hint_x = state.w;
        QcqpSolution sol = solve(prob, opts);
        if (sol.status == QcqpStatus::Infeasible ||
            sol.status == QcqpStatus::NumericalFailure)
            throw std::runtime_error("receive filter subproblem failed");
        if (sol.status != QcqpStatus::Optimal) {
            // Uncertified step: accept it only if it strictly improves the
            // worst-angle SINR, otherwise keep the current filter.
            if (sol.x.norm() == 0.0) break;
            const Eigen::VectorXd sinr_try =
                radar_sinr_grid(sol.x, effective, config, grid);
            if (sinr_try.minCoeff() <= state.min_sinr) break;
            state.w = sol.x.normalized();
            state.min_sinr = sinr_try.minCoeff();
            state.sinr_trace.push_back(state.min_sinr);
            continue;
        }

        const Eigen::VectorXcd cand = sol.x;
        if (cand.norm() == 0.0) break;
        const Eigen::VectorXd sinr_new = radar_sinr_grid(cand, effective, config, grid);
        const double min_new = sinr_new.minCoeff();
        if (min_new < state.min_sinr - 1e-7)
            throw std::runtime_error("receive filter: objective decreased (solver stall)");
        const double gain = min_new - state.min_sinr;
        state.w = cand.normalized();
        state.c = sol.extras(sol.extras.size() - 1);
        state.min_sinr = min_new;
        state.sinr_trace.push_back(min_new);
        if (gain < tol * std::max(state.min_sinr, 1e-12)) break;
    }
    return state;
}

Eigen::VectorXcd closed_form_single_angle(const Eigen::MatrixXcd& effective,
                                          const SystemConfig& config, double theta_deg) {
    const Eigen::MatrixXcd ay = radar_channel(theta_deg, config.geometry) * effective;
    const Eigen::MatrixXcd num =
        std::norm(config.target_amplitude) * (ay * ay.adjoint());
    const Eigen::MatrixXcd den = clutter_plus_noise(effective, config);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> es(num, den);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("closed_form_single_angle: eigensolver failed");
    // eigenvalues ascending; take the principal generalized eigenvector
    Eigen::VectorXcd w = es.eigenvectors().col(es.eigenvectors().cols() - 1);
    return w.normalized();
}

} // namespace she
