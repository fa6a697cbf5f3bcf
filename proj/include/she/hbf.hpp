// SPDX-License-Identifier: Apache-2.0
//
// Hybrid beamformer optimization for a fixed receive filter: WMMSE auxiliary
// updates, the augmented-Lagrangian split over the effective beamformer Y,
// the MM-linearized convex (Y, eta) step, element-wise coordinate descent for
// the constant-modulus analog stage and the closed-form digital stage.
#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "she/array_model.hpp"
#include "she/metrics.hpp"
#include "she/qcqp.hpp"

namespace she {

struct WmmseState {
    std::vector<std::complex<double>> kappa; // per-user equalizers
    std::vector<double> omega;               // per-user weights, >= 1
};

struct AlState {
    Eigen::MatrixXcd effective; // Y = [y_0 | y_1 .. y_U], M_t x (U+1)
    Eigen::MatrixXcd dual;      // Z, same shape
    double penalty = 10.0;      // rho
    double eta = 0.0;
    int inner_iteration = 0;
};

struct HbfOptions {
    double penalty = 10.0;
    int max_inner = 60;
    double consensus_tol_factor = 1e-3; // scaled by sqrt(power budget)
    double eta_tol = 1e-3; // relative change in eta
    int bcd_sweeps = 2;
    double qcqp_tol = 1e-9;
    double eue_margin = 1e-3;  // guard band on the eavesdropper rate caps
    int gamma_retries = 10;    // 3 dB target reductions when a step is infeasible
    bool use_i2s = true;       // false: conventional HBF, y_0 pinned to zero
    bool radar_constraint = true; // false: communication-only variants
    bool analog_stage = true;  // false: fully digital (A = I_{M_t})
};

struct InnerTraceRow {
    int inner_iter = 0;
    double eta = 0.0;
    double consensus_residual = 0.0;
};

struct InnerResult {
    BeamformerSet beamformers;
    AlState al;
    WmmseState wmmse;
    std::vector<InnerTraceRow> trace;
    double achieved_gamma_target = 0.0; // radar threshold actually imposed
    bool gamma_relaxed = false;
    bool hit_iteration_cap = false;
    bool power_slack = false; // final power left below budget on purpose
};

/// Equalizer update kappa_u = (y_u^H h_u) / (||h_u^H Y||_F^2 + sigma_u^2).
std::vector<std::complex<double>> update_equalizers(const Eigen::MatrixXcd& effective,
                                                    const ChannelSet& channels,
                                                    double noise_user);

/// Weight update omega_u = 1 + SINR_u.
std::vector<double> update_weights(const std::vector<double>& lue_sinrs);

/// Expansion-point data for the MM-linearized (Y, eta) step.
struct HbfMmCache {
    std::vector<Eigen::MatrixXcd> G;       // N rank-one sample Grams h h^H
    Eigen::MatrixXd Upsilon;               // U x N constants
    std::vector<Eigen::MatrixXcd> g0;      // U*N linear coefficients for y_0 (as columns)
    std::vector<Eigen::MatrixXcd> J;       // K rank-one filtered radar Grams
    Eigen::VectorXd Psi;                   // K constants
    std::vector<Eigen::MatrixXcd> M_lin;   // K linearization coefficient blocks, M_t x (U+1)
    Eigen::MatrixXcd B;                    // clutter filter stack, I x M_t
    double noise_term = 0.0;               // sr^2 ||w||^2
};

HbfMmCache build_hbf_mm_cache(const Eigen::MatrixXcd& expansion,
                              const ChannelSet& channels, const Eigen::VectorXcd& w,
                              const SystemConfig& config,
                              const std::vector<double>& grid, double gamma_target,
                              const HbfOptions& opts);

/// Convex QCQP over (Y, eta): WMMSE rate floors, relaxed power ball,
/// linearized eavesdropper-rate and radar-SINR constraints, and the
/// augmented-Lagrangian proximity objective (rho/2)||Y - A D_CI + Z||^2.
QcqpProblem build_y_subproblem(const AlState& al, const WmmseState& wmmse,
                               const HbfMmCache& cache, const ChannelSet& channels,
                               const Eigen::MatrixXcd& analog_times_digital,
                               const SystemConfig& config, const HbfOptions& opts);

/// One or more element-wise coordinate descent sweeps on the unit-modulus
/// analog matrix minimizing ||target - A * digital||_F^2.
Eigen::MatrixXcd update_analog_bcd(const Eigen::MatrixXcd& target,
                                   Eigen::MatrixXcd analog,
                                   const Eigen::MatrixXcd& digital, int sweeps);

/// Closed-form digital stage (A^H A)^{-1} A^H (Y + Z).
Eigen::MatrixXcd update_digital(const Eigen::MatrixXcd& target,
                                const Eigen::MatrixXcd& analog);

/// Dual ascent Z <- Z + Y - A D_CI.
Eigen::MatrixXcd update_dual(const AlState& al, const Eigen::MatrixXcd& analog,
                             const Eigen::MatrixXcd& digital);

/// Full inner loop (Algorithm steps: Y, A, D_CI, WMMSE, Z) until the
/// consensus residual and eta settle.
InnerResult inner_loop(const ChannelSet& channels, const Eigen::VectorXcd& w,
                       const BeamformerSet& init, const SystemConfig& config,
                       const std::vector<double>& grid, const HbfOptions& opts);

/// Deterministic starting point: random-phase analog stage, matched-filter
/// effective columns scaled to the power budget, digital stage by least
/// squares.
BeamformerSet initial_beamformers(const ChannelSet& channels, const SystemConfig& config,
                                  const HbfOptions& opts, Rng& rng);

} // namespace she
