// SPDX-License-Identifier: Apache-2.0
//
// Convex quadratically-constrained quadratic programming over complex
// vectors, via a log-barrier interior point on the real embedding. Handles
// additional real scalar variables (epigraph/slack style) that may enter
// objective and constraints linearly or through nonnegative diagonal
// quadratic coefficients.
#pragma once

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace she {

/// One quadratic form  x^H Q x + 2 Re(b^H x) + sum_i eq_i s_i^2
///                     + sum_i el_i s_i + c
/// over the complex vector x and real extras s. Empty members mean zero.
struct QuadTerm {
    Eigen::MatrixXcd quad;      // n x n Hermitian PSD
    Eigen::VectorXcd lin;       // n
    Eigen::VectorXd extra_quad; // f entries, each >= 0
    Eigen::VectorXd extra_lin;  // f entries
    double constant = 0.0;

    double value(const Eigen::VectorXcd& x, const Eigen::VectorXd& s) const;
};

struct QcqpProblem {
    int dim = 0;        // complex dimension n
    int num_extras = 0; // free real variables f
    QuadTerm objective;
    std::vector<QuadTerm> constraints; // each means value <= 0

    /// Hermitian symmetrization plus finiteness checks; with full_psd_check,
    /// eigenvalues below -1e-9 are clipped and below -1e-6 rejected.
    void validate(bool full_psd_check = false);

    /// Dump the instance in a plain text matrix format for offline inspection.
    std::string debug_dump() const;
};

enum class QcqpStatus { Optimal, Infeasible, IterationLimit, NumericalFailure };

struct QcqpSolution {
    Eigen::VectorXcd x;
    Eigen::VectorXd extras;
    QcqpStatus status = QcqpStatus::NumericalFailure;
    double objective_value = 0.0;
    double max_constraint_violation = 0.0;
    double kkt_residual = 0.0;
    Eigen::VectorXd multipliers; // one per constraint
    int newton_iterations = 0;
    // (barrier stage, merit) per accepted Newton step; merit is non-increasing
    // within a stage
    std::vector<std::pair<int, double>> merit_trace;
};

struct QcqpOptions {
    double tol = 1e-9;   // target duality gap and stationarity scale
    int max_iter = 2000; // Newton step budget across all barrier stages
    std::optional<Eigen::VectorXcd> hint_x;
    std::optional<Eigen::VectorXd> hint_extras;
};

QcqpSolution solve(const QcqpProblem& problem, const QcqpOptions& opts = {});

/// Recompute the scaled KKT residual of a solution (stationarity, primal
/// feasibility and complementary slackness) from its stored multipliers.
double kkt_residual(const QcqpProblem& problem, const QcqpSolution& solution);

} // namespace she
