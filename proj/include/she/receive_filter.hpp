// SPDX-License-Identifier: Apache-2.0
//
// Radar receive-filter design: max-min SINR over the target-angle grid via
// the quadratic transform plus an MM surrogate solved as a convex QCQP.
#pragma once

#include <vector>

#include <Eigen/Dense>

#include "she/array_model.hpp"
#include "she/qcqp.hpp"

namespace she {

struct ReceiveFilterState {
    Eigen::VectorXcd w;    // M_r receive filter
    Eigen::VectorXd l;     // K quadratic-transform auxiliaries
    double c = 0.0;        // epigraph of the min SINR
    int iteration = 0;
    double min_sinr = 0.0; // min over grid angles at w
    std::vector<double> sinr_trace; // min SINR per outer iteration
};

/// Expansion-point data for one MM subproblem.
struct ReceiveMmCache {
    std::vector<Eigen::RowVectorXcd> Lambda; // K rows: w^H A~_k Y Y^H A~_k^H
    Eigen::VectorXd kappa_bar;               // K: ||w^H A~_k Y||_F^2
    Eigen::MatrixXcd denom;                  // sum_i |s_i|^2 A~_i Y Y^H A~_i^H + sr^2 I
};

/// Per-grid-angle radar SINRs for a filter w and effective beamformer Y.
Eigen::VectorXd radar_sinr_grid(const Eigen::VectorXcd& w,
                                const Eigen::MatrixXcd& effective,
                                const SystemConfig& config,
                                const std::vector<double>& grid);

/// Quadratic-transform auxiliary update:
/// l_k = |s0| sqrt(||w^H A~_k Y||_F^2) / (||w^H L||_F^2 + sr^2 ||w||^2).
Eigen::VectorXd update_auxiliary_l(const Eigen::VectorXcd& w,
                                   const Eigen::MatrixXcd& effective,
                                   const SystemConfig& config,
                                   const std::vector<double>& grid);

ReceiveMmCache build_mm_cache(const Eigen::VectorXcd& w,
                              const Eigen::MatrixXcd& effective,
                              const SystemConfig& config,
                              const std::vector<double>& grid);

/// Convex surrogate over (w, t_k, c): per angle
///   l_k^2 (w^H D w) - 2 l_k |s0| t_k + c <= 0,
///   t_k^2 <= -kappa_bar_k + 2 Re(Lambda_k w),  t_k >= 0,
/// square roots handled by the epigraph variables t_k. Angles with l_k = 0
/// contribute the degenerate constraint c <= 0 and carry no t variable.
/// A generous norm ball on w bounds the domain (the SINR is scale invariant).
QcqpProblem build_mm_subproblem(const ReceiveFilterState& state,
                                const ReceiveMmCache& cache,
                                const SystemConfig& config);

/// Alternates the l update with the MM subproblem until the min-grid SINR
/// stops improving. Returned w has unit norm.
ReceiveFilterState optimize_receive_filter(const Eigen::MatrixXcd& effective,
                                           const Eigen::VectorXcd& w_init,
                                           const SystemConfig& config,
                                           const std::vector<double>& grid,
                                           double tol = 1e-4, int max_outer = 50);

/// K = 1 closed form: principal generalized eigenvector of the target versus
/// clutter-plus-noise quadratic forms. Test oracle and cross check.
Eigen::VectorXcd closed_form_single_angle(const Eigen::MatrixXcd& effective,
                                          const SystemConfig& config, double theta_deg);

} // namespace she
