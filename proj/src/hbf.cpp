// SPDX-License-Identifier: Apache-2.0
#include "she/hbf.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace she {

namespace {

// Column layout of the vectorized (Y, eta) subproblem. Column 0 of Y (the
// I2S stream) is dropped from the variable set for conventional HBF.
struct YLayout {
    int mt = 0;
    int users = 0;
    bool i2s = true;

    int cols() const { return users + (i2s ? 1 : 0); }
    int dim() const { return mt * cols(); }
    // block index of Y column `col` (0 = I2S, 1..U = users); -1 if pinned zero
    int block(int col) const {
        if (i2s) return col;
        return col == 0 ? -1 : col - 1;
    }

    Eigen::VectorXcd vec(const Eigen::MatrixXcd& y) const {
        Eigen::VectorXcd x(dim());
        for (int col = 0; col <= users; ++col) {
            const int b = block(col);
            if (b >= 0) x.segment(b * mt, mt) = y.col(col);
        }
        return x;
    }
    Eigen::MatrixXcd unvec(const Eigen::VectorXcd& x) const {
        Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(mt, users + 1);
        for (int col = 0; col <= users; ++col) {
            const int b = block(col);
            if (b >= 0) y.col(col) = x.segment(b * mt, mt);
        }
        return y;
    }
};

YLayout layout_for(const SystemConfig& config, const HbfOptions& opts) {
    return {config.geometry.num_tx, config.num_users, opts.use_i2s};
}

// min over users of the WMMSE surrogate log2(omega) - omega*mse + 1; equals
// the minimum rate right after a (kappa, omega) refresh.
double min_wmmse_rate_bound(const Eigen::MatrixXcd& y, const WmmseState& wmmse,
                            const ChannelSet& channels, const SystemConfig& config) {
    double lo = std::numeric_limits<double>::infinity();
    for (int u = 0; u < config.num_users; ++u) {
        const double e = mse(u, wmmse.kappa[u], channels.lue.col(u), y, config.noise_user);
        lo = std::min(lo, std::log2(wmmse.omega[u]) - wmmse.omega[u] * e + 1.0);
    }
    return lo;
}

WmmseState wmmse_refresh(const Eigen::MatrixXcd& y, const ChannelSet& channels,
                         const SystemConfig& config) {
    WmmseState s;
    s.kappa = update_equalizers(y, channels, config.noise_user);
    std::vector<double> sinrs;
    for (int u = 0; u < config.num_users; ++u)
        sinrs.push_back(lue_sinr_effective(u, channels.lue.col(u), y, config.noise_user));
    s.omega = update_weights(sinrs);
    return s;
}

} // namespace

std::vector<std::complex<double>> update_equalizers(const Eigen::MatrixXcd& effective,
                                                    const ChannelSet& channels,
                                                    double noise_user) {
    const int users = static_cast<int>(effective.cols()) - 1;
    std::vector<std::complex<double>> kappa(users);
    for (int u = 0; u < users; ++u) {
        const Eigen::RowVectorXcd rx = channels.lue.col(u).adjoint() * effective;
        const double denom = rx.squaredNorm() + noise_user;
        kappa[u] = std::conj(rx(u + 1)) / denom; // y_u^H h_u / (||h_u^H Y||^2 + s^2)
    }
    return kappa;
}

std::vector<double> update_weights(const std::vector<double>& lue_sinrs) {
    std::vector<double> omega;
    omega.reserve(lue_sinrs.size());
    for (double s : lue_sinrs) {
        if (s < 0.0) throw std::invalid_argument("update_weights: negative SINR");
        omega.push_back(1.0 + s);
    }
    return omega;
}

HbfMmCache build_hbf_mm_cache(const Eigen::MatrixXcd& expansion,
                              const ChannelSet& channels, const Eigen::VectorXcd& w,
                              const SystemConfig& config,
                              const std::vector<double>& grid, double gamma_target,
                              const HbfOptions& opts) {
    HbfMmCache cache;
    const int users = config.num_users;
    const int n_samples = static_cast<int>(channels.eue_samples.size());
    const double amp2 = std::norm(config.target_amplitude);

    cache.G.reserve(n_samples);
    for (const auto& he : channels.eue_samples) cache.G.push_back(he * he.adjoint());

    cache.Upsilon.resize(users, n_samples);
    cache.g0.resize(static_cast<std::size_t>(users) * n_samples);
    const Eigen::VectorXcd y0 = expansion.col(0);
    for (int u = 0; u < users; ++u) {
        const double cap_rate = std::max(config.eue_rate_caps[u] - opts.eue_margin, 0.0);
        const double cap = std::exp2(cap_rate) - 1.0;
        for (int n = 0; n < n_samples; ++n) {
            const double quad0 = std::real(y0.dot(cache.G[n] * y0));
            cache.Upsilon(u, n) = cap * (quad0 - config.noise_eue);
            cache.g0[static_cast<std::size_t>(u) * n_samples + n] =
                2.0 * cap * (cache.G[n] * y0);
        }
    }

    if (opts.radar_constraint) {
        const int num_clutter = static_cast<int>(config.clutter_angles.size());
        cache.B.resize(num_clutter, config.geometry.num_tx);
        for (int i = 0; i < num_clutter; ++i)
            cache.B.row(i) =
                config.clutter_amplitudes[i] *
                (w.adjoint() * radar_channel(config.clutter_angles[i], config.geometry));
        cache.noise_term = config.noise_radar * w.squaredNorm();
        cache.Psi.resize(static_cast<Eigen::Index>(grid.size()));
        const double scale = amp2 / gamma_target;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const Eigen::VectorXcd aw =
                radar_channel(grid[k], config.geometry).adjoint() * w;
            cache.J.push_back(aw * aw.adjoint());
            // The |s0|^2/gamma scaling must multiply both the anchor constant
            // and the linear coefficient for the minorant to be tight.
            const Eigen::MatrixXcd jy = cache.J.back() * expansion;
            cache.Psi(static_cast<Eigen::Index>(k)) =
                scale * jy.cwiseProduct(expansion.conjugate()).sum().real();
            cache.M_lin.push_back(2.0 * scale * jy);
        }
    }
    return cache;
}

QcqpProblem build_y_subproblem(const AlState& al, const WmmseState& wmmse,
                               const HbfMmCache& cache, const ChannelSet& channels,
                               const Eigen::MatrixXcd& analog_times_digital,
                               const SystemConfig& config, const HbfOptions& opts) {
    const YLayout lay = layout_for(config, opts);
    const int mt = lay.mt;
    const int users = config.num_users;
    const int dim = lay.dim();
    const int n_samples = static_cast<int>(channels.eue_samples.size());

    QcqpProblem p;
    p.dim = dim;
    p.num_extras = 1; // eta

    // objective: -eta + (rho/2) ||Y - (A D_CI - Z)||_F^2
    const Eigen::MatrixXcd target = analog_times_digital - al.dual;
    const Eigen::VectorXcd tvec = lay.vec(target);
    const double rho = al.penalty;
    p.objective.quad = (0.5 * rho) * Eigen::MatrixXcd::Identity(dim, dim);
    p.objective.lin = -(0.5 * rho) * tvec;
    p.objective.constant = 0.5 * rho * tvec.squaredNorm();
    p.objective.extra_lin = Eigen::VectorXd::Constant(1, -1.0);

    // WMMSE rate floors: omega_u * mse_u(Y) + eta - log2(omega_u) - 1 <= 0
    for (int u = 0; u < users; ++u) {
        const Eigen::VectorXcd h = channels.lue.col(u);
        const std::complex<double> kap = wmmse.kappa[u];
        const double om = wmmse.omega[u];
        QuadTerm t;
        t.quad = Eigen::MatrixXcd::Zero(dim, dim);
        const Eigen::MatrixXcd hh = (om * std::norm(kap)) * (h * h.adjoint());
        for (int col = 0; col <= users; ++col) {
            const int b = lay.block(col);
            if (b >= 0) t.quad.block(b * mt, b * mt, mt, mt) = hh;
        }
        t.lin = Eigen::VectorXcd::Zero(dim);
        t.lin.segment(lay.block(u + 1) * mt, mt) = -(om * std::conj(kap)) * h;
        t.constant = om * (std::norm(kap) * config.noise_user + 1.0) -
                     std::log2(om) - 1.0;
        t.extra_lin = Eigen::VectorXd::Constant(1, 1.0);
        p.constraints.push_back(std::move(t));
    }

    { // relaxed power ball ||Y||_F^2 <= P
        QuadTerm t;
        t.quad = Eigen::MatrixXcd::Identity(dim, dim);
        t.constant = -config.power_budget;
        p.constraints.push_back(std::move(t));
    }

    // linearized eavesdropper rate caps, one per (user, sample)
    for (int u = 0; u < users; ++u) {
        for (int n = 0; n < n_samples; ++n) {
            QuadTerm t;
            t.quad = Eigen::MatrixXcd::Zero(dim, dim);
            const int bu = lay.block(u + 1) * mt;
            t.quad.block(bu, bu, mt, mt) = cache.G[n];
            t.constant = cache.Upsilon(u, n);
            if (lay.i2s) {
                t.lin = Eigen::VectorXcd::Zero(dim);
                t.lin.segment(lay.block(0) * mt, mt) =
                    -0.5 * cache.g0[static_cast<std::size_t>(u) * n_samples + n];
            }
            p.constraints.push_back(std::move(t));
        }
    }

    // linearized radar SINR floors, one per grid angle
    if (opts.radar_constraint) {
        Eigen::MatrixXcd bgram;
        if (cache.B.rows() > 0) bgram = cache.B.adjoint() * cache.B;
        for (std::size_t k = 0; k < cache.J.size(); ++k) {
            QuadTerm t;
            t.quad = Eigen::MatrixXcd::Zero(dim, dim);
            if (cache.B.rows() > 0)
                for (int col = 0; col <= users; ++col) {
                    const int b = lay.block(col);
                    if (b >= 0) t.quad.block(b * mt, b * mt, mt, mt) = bgram;
                }
            t.lin = Eigen::VectorXcd::Zero(dim);
            for (int col = 0; col <= users; ++col) {
                const int b = lay.block(col);
                if (b >= 0)
                    t.lin.segment(b * mt, mt) = -0.5 * cache.M_lin[k].col(col);
            }
            t.constant = cache.noise_term + cache.Psi(static_cast<Eigen::Index>(k));
            p.constraints.push_back(std::move(t));
        }
    }
    return p;
}

Eigen::MatrixXcd update_analog_bcd(const Eigen::MatrixXcd& target,
                                   Eigen::MatrixXcd analog,
                                   const Eigen::MatrixXcd& digital, int sweeps) {
    const int rows = static_cast<int>(analog.rows());
    const int cols = static_cast<int>(analog.cols());
    Eigen::MatrixXcd residual = target - analog * digital;
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j) {
                const Eigen::RowVectorXcd dj = digital.row(j);
                const double nj = dj.squaredNorm();
                if (nj == 0.0) continue;
                const std::complex<double> a_old = analog(i, j);
                const std::complex<double> c =
                    (residual.row(i) * dj.adjoint())(0) + a_old * nj;
                if (c == std::complex<double>(0.0, 0.0)) continue; // tie: keep phase
                const std::complex<double> a_new = unit_phasor(std::arg(c));
                residual.row(i) += (a_old - a_new) * dj;
                analog(i, j) = a_new;
            }
        }
    }
    return analog;
}

Eigen::MatrixXcd update_digital(const Eigen::MatrixXcd& target,
                                const Eigen::MatrixXcd& analog) {
    Eigen::MatrixXcd gram = analog.adjoint() * analog;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram);
    const double hi = es.eigenvalues().maxCoeff();
    const double lo = es.eigenvalues().minCoeff();
    if (!(lo > hi * 1e-12)) {
        std::cerr << "update_digital: near-singular Gram matrix, regularizing\n";
        gram += 1e-10 * static_cast<double>(analog.rows()) *
                Eigen::MatrixXcd::Identity(gram.rows(), gram.cols());
    }
    return gram.ldlt().solve(analog.adjoint() * target);
}

Eigen::MatrixXcd update_dual(const AlState& al, const Eigen::MatrixXcd& analog,
                             const Eigen::MatrixXcd& digital) {
    return al.dual + al.effective - analog * digital;
}

BeamformerSet initial_beamformers(const ChannelSet& channels, const SystemConfig& config,
                                  const HbfOptions& opts, Rng& rng) {
    const int mt = config.geometry.num_tx;
    const int users = config.num_users;
    const int nrf = opts.analog_stage ? config.num_rf : mt;

    Eigen::MatrixXcd analog;
    if (opts.analog_stage) {
        analog.resize(mt, nrf);
        for (int i = 0; i < mt; ++i)
            for (int j = 0; j < nrf; ++j)
                analog(i, j) =
                    unit_phasor(rng.uniform(-std::numbers::pi, std::numbers::pi));
    } else {
        analog = Eigen::MatrixXcd::Identity(mt, mt);
    }

    Eigen::MatrixXcd y(mt, users + 1);
    y.col(0) = opts.use_i2s
                   ? transmit_steering(config.target_angle, config.geometry).normalized()
                   : Eigen::VectorXcd::Zero(mt);
    for (int u = 0; u < users; ++u) y.col(u + 1) = channels.lue.col(u).normalized();
    y *= std::sqrt(config.power_budget) / y.norm();

    const Eigen::MatrixXcd d_ci = update_digital(y, analog);
    BeamformerSet bf;
    bf.analog = analog;
    bf.digital_i2s = d_ci.col(0);
    bf.digital_comm = d_ci.rightCols(users);
    return bf;
}

InnerResult inner_loop(const ChannelSet& channels, const Eigen::VectorXcd& w,
                       const BeamformerSet& init, const SystemConfig& config,
                       const std::vector<double>& grid, const HbfOptions& opts) {
    const YLayout lay = layout_for(config, opts);
    const int users = config.num_users;

    InnerResult out;
    Eigen::MatrixXcd analog = init.analog;
    Eigen::MatrixXcd d_ci = init.stacked();
    if (!opts.use_i2s) d_ci.col(0).setZero();

    AlState al;
    al.penalty = opts.penalty;
    al.effective = analog * d_ci;
    al.dual = Eigen::MatrixXcd::Zero(al.effective.rows(), al.effective.cols());
    WmmseState wmmse = wmmse_refresh(al.effective, channels, config);
    al.eta = min_wmmse_rate_bound(al.effective, wmmse, channels, config);

    double gamma = config.radar_sinr_target;
    out.achieved_gamma_target = gamma;
    int gamma_retries_left = opts.gamma_retries;
    const double consensus_tol =
        opts.consensus_tol_factor * std::sqrt(config.power_budget);

    for (int it = 0; it < opts.max_inner; ++it) {
        al.inner_iteration = it + 1;

        const Eigen::MatrixXcd ad = analog * d_ci;
        QcqpOptions qopts;
        qopts.tol = opts.qcqp_tol;
        qopts.hint_x = lay.vec(al.effective);
        qopts.hint_extras = Eigen::VectorXd::Constant(1, al.eta - 1.0);
        QcqpSolution sol;
        while (true) {
            const HbfMmCache cache =
                build_hbf_mm_cache(al.effective, channels, w, config, grid, gamma, opts);
            QcqpProblem prob =
                build_y_subproblem(al, wmmse, cache, channels, ad, config, opts);
            sol = solve(prob, qopts);
            if (sol.status == QcqpStatus::Infeasible && opts.radar_constraint &&
                gamma_retries_left > 0) {
                gamma *= std::pow(10.0, -0.3); // back off 3 dB and retry
                --gamma_retries_left;
                out.achieved_gamma_target = gamma;
                out.gamma_relaxed = true;
                continue;
            }
            break;
        }
        if (sol.status == QcqpStatus::Infeasible)
            throw std::runtime_error("inner_loop: (Y, eta) subproblem infeasible");
        if (sol.status == QcqpStatus::NumericalFailure)
            throw std::runtime_error("inner_loop: (Y, eta) subproblem solver failure");

        const double prev_eta = al.eta;
        al.effective = lay.unvec(sol.x);
        al.eta = sol.extras(0);

        if (opts.analog_stage)
            analog = update_analog_bcd(al.effective + al.dual, analog, d_ci,
                                       opts.bcd_sweeps);
        d_ci = update_digital(al.effective + al.dual, analog);
        if (!opts.use_i2s) d_ci.col(0).setZero();

        wmmse = wmmse_refresh(al.effective, channels, config);
        al.dual = update_dual(al, analog, d_ci);

        const double consensus = (al.effective - analog * d_ci).norm();
        out.trace.push_back({al.inner_iteration, al.eta, consensus});
        if (consensus <= consensus_tol &&
            std::abs(al.eta - prev_eta) <= opts.eta_tol * (1.0 + std::abs(al.eta)))
            break;
        if (it == opts.max_inner - 1) out.hit_iteration_cap = true;
    }

    // Final power handling: rescale the digital stage to meet the budget with
    // equality unless that breaks an eavesdropper cap, in which case report
    // the power as slack (and shrink offending columns if even the natural
    // scale violates a cap).
    const auto eue_ok = [&](const Eigen::MatrixXcd& y) {
        for (int u = 0; u < users; ++u) {
            for (const auto& he : channels.eue_samples) {
                const double r = rate(eue_sinr_effective(u, he, y, config.noise_eue));
                if (r > config.eue_rate_caps[u] + 1e-4) return false;
            }
        }
        return true;
    };
    const double natural_power = (analog * d_ci).squaredNorm();
    if (natural_power > 0.0) {
        // the (1 - 1e-12) margin keeps the recomputed power at or below the
        // budget despite rounding
        const double alpha =
            std::sqrt(config.power_budget / natural_power) * (1.0 - 1e-12);
        if (eue_ok(alpha * (analog * d_ci))) {
            d_ci *= alpha;
        } else {
            if (!eue_ok(analog * d_ci)) {
                // per-user closed-form shrink onto the cap boundary
                const Eigen::MatrixXcd y = analog * d_ci;
                for (int u = 0; u < users; ++u) {
                    const double cap = std::exp2(config.eue_rate_caps[u]) - 1.0;
                    double beta2 = 1.0;
                    for (const auto& he : channels.eue_samples) {
                        const double sig = std::norm(he.dot(y.col(u + 1)));
                        const double jam = std::norm(he.dot(y.col(0)));
                        if (sig > 0.0)
                            beta2 = std::min(beta2,
                                             cap * (jam + config.noise_eue) / sig);
                    }
                    d_ci.col(u + 1) *= std::sqrt(std::max(beta2, 0.0));
                }
            }
            // pour the remaining budget into the sensing stream: growing y_0
            // only lowers every eavesdropper rate
            bool topped_up = false;
            if (opts.use_i2s) {
                const Eigen::MatrixXcd y = analog * d_ci;
                const double p_comm = y.rightCols(users).squaredNorm();
                const double p0 = y.col(0).squaredNorm();
                if (p0 > 0.0 && p_comm < config.power_budget) {
                    const double beta =
                        std::sqrt((config.power_budget - p_comm) / p0) *
                        (1.0 - 1e-12);
                    if (beta >= 1.0) {
                        d_ci.col(0) *= beta;
                        topped_up = true;
                    }
                }
            }
            if (!topped_up) out.power_slack = true;
        }
    }

    out.beamformers.analog = analog;
    out.beamformers.digital_i2s = d_ci.col(0);
    out.beamformers.digital_comm = d_ci.rightCols(users);
    out.al = al;
    out.wmmse = wmmse;
    return out;
}

} // namespace she
