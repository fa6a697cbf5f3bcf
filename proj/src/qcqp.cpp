// SPDX-License-Identifier: Apache-2.0
#include "she/qcqp.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace she {

namespace {

bool all_finite(const Eigen::MatrixXcd& m) { return m.allFinite(); }

// Real embedding of one quadratic term: z = [Re x; Im x; s],
// value = 0.5 z^T H z + g^T z + c.
struct RealTerm {
    Eigen::MatrixXd hess;    // N x N, empty when the term is affine
    Eigen::VectorXd lin;     // N
    double constant = 0.0;
    bool has_quad = false;

    double value(const Eigen::VectorXd& z) const {
        double v = lin.dot(z) + constant;
        if (has_quad) v += 0.5 * z.dot(hess * z);
        return v;
    }
    Eigen::VectorXd grad(const Eigen::VectorXd& z) const {
        if (has_quad) return hess * z + lin;
        return lin;
    }
};

RealTerm embed(const QuadTerm& t, int n, int f) {
    const int big = 2 * n + f;
    RealTerm r;
    r.lin = Eigen::VectorXd::Zero(big);
    r.constant = t.constant;
    if (t.lin.size() > 0) {
        r.lin.head(n) = 2.0 * t.lin.real();
        r.lin.segment(n, n) = 2.0 * t.lin.imag();
    }
    if (t.extra_lin.size() > 0) r.lin.tail(f) = t.extra_lin;
    const bool cq = t.quad.size() > 0 && t.quad.cwiseAbs().maxCoeff() > 0.0;
    const bool eq = t.extra_quad.size() > 0 && t.extra_quad.cwiseAbs().maxCoeff() > 0.0;
    if (cq || eq) {
        r.has_quad = true;
        r.hess = Eigen::MatrixXd::Zero(big, big);
        if (cq) {
            const Eigen::MatrixXd qr = 2.0 * t.quad.real();
            const Eigen::MatrixXd qi = 2.0 * t.quad.imag();
            r.hess.topLeftCorner(n, n) = qr;
            r.hess.block(0, n, n, n) = -qi;
            r.hess.block(n, 0, n, n) = qi;
            r.hess.block(n, n, n, n) = qr;
        }
        if (eq) r.hess.bottomRightCorner(f, f).diagonal() = 2.0 * t.extra_quad;
    }
    return r;
}

struct BarrierResult {
    Eigen::VectorXd z;
    double t_final = 1.0;
    int newton_steps = 0;
    bool stalled = false;
    bool hit_iter_limit = false;
};

// Log-barrier interior point. `stop_below` (when set) triggers an early exit
// as soon as the last coordinate of z drops under the given value (phase-1).
BarrierResult barrier_minimize(const RealTerm& objective,
                               const std::vector<RealTerm>& cons,
                               Eigen::VectorXd z, double gap_tol, int max_steps,
                               std::optional<double> stop_below,
                               std::vector<std::pair<int, double>>* trace) {
    const int m = static_cast<int>(cons.size());
    const int big = static_cast<int>(z.size());
    BarrierResult out;
    out.z = z;

    // Centering objective in the 1/t scaling f + (1/t) * barrier: same Newton
    // direction as t*f + barrier but keeps the merit near the scale of f, so
    // line-search comparisons stay meaningful at large t.
    auto merit = [&](const Eigen::VectorXd& p, double t, bool& ok) {
        double phi = objective.value(p);
        ok = true;
        for (const auto& c : cons) {
            const double fv = c.value(p);
            if (fv >= 0.0 || !std::isfinite(fv)) { ok = false; return 0.0; }
            phi -= std::log(-fv) / t;
        }
        ok = std::isfinite(phi);
        return phi;
    };

    double t = 1.0;
    int steps = 0;
    int stage = 0;
    const double mu = 20.0;
    while (true) {
        // Newton centering at barrier parameter t. Intermediate stages center
        // loosely; the final stage polishes until round-off so the reported
        // multipliers satisfy stationarity tightly.
        const bool final_stage = static_cast<double>(m) / t <= gap_tol;
        const double center_tol = final_stage ? 1e-18 : 1e-12;
        for (int it = 0; it < 200 && steps < max_steps; ++it, ++steps) {
            const double tinv = 1.0 / t;
            Eigen::VectorXd g = objective.grad(z);
            Eigen::MatrixXd h = Eigen::MatrixXd::Zero(big, big);
            if (objective.has_quad) h = objective.hess;
            bool domain_ok = true;
            for (const auto& c : cons) {
                const double fv = c.value(z);
                if (fv >= 0.0) { domain_ok = false; break; }
                const Eigen::VectorXd gc = c.grad(z);
                const double inv = tinv / (-fv);
                g += inv * gc;
                if (c.has_quad) h += inv * c.hess;
                h.selfadjointView<Eigen::Lower>().rankUpdate(gc, t * inv * inv);
            }
            h.triangularView<Eigen::StrictlyUpper>() =
                h.transpose().triangularView<Eigen::StrictlyUpper>();
            if (!domain_ok || !g.allFinite()) { out.stalled = true; break; }

            Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
            Eigen::VectorXd dz;
            double ridge = 0.0;
            for (int attempt = 0; attempt < 6; ++attempt) {
                if (attempt > 0) {
                    ridge = (ridge == 0.0) ? 1e-12 * (1.0 + h.diagonal().cwiseAbs().maxCoeff())
                                           : ridge * 100.0;
                    ldlt.compute(h + ridge * Eigen::MatrixXd::Identity(big, big));
                }
                dz = ldlt.solve(-g);
                if (dz.allFinite() && ldlt.info() == Eigen::Success) break;
            }
            if (!dz.allFinite()) { out.stalled = true; break; }

            bool ok = false;
            const double phi0 = merit(z, t, ok);
            const double decrement2 = -g.dot(dz);
            if (decrement2 <= center_tol * (1.0 + std::abs(phi0))) break; // centered

            double alpha = 1.0;
            Eigen::VectorXd znew;
            bool accepted = false;
            for (int ls = 0; ls < 60; ++ls) {
                znew = z + alpha * dz;
                bool fok = false;
                const double phi1 = merit(znew, t, fok);
                if (fok && phi1 <= phi0 - 0.25 * alpha * decrement2) {
                    accepted = true;
                    if (trace) trace->emplace_back(stage, phi1);
                    // merit progress at round-off: polished as far as doubles go
                    if (phi0 - phi1 <= 1e-14 * (1.0 + std::abs(phi0))) {
                        z = znew;
                        out.z = z;
                        accepted = false;
                    }
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) { break; } // stalled at this stage; tighten t anyway
            z = znew;
            out.z = z;
            if (stop_below && z(big - 1) < *stop_below) {
                // Land just below the exit depth instead of wherever the full
                // step went: the phase-1 objective is unbounded below and one
                // Newton step can overshoot to absurd magnitudes.
                const double s0 = (z - alpha * dz)(big - 1);
                const double s1 = z(big - 1);
                const double frac = (*stop_below - s0) / (s1 - s0);
                if (frac > 0.0 && frac < 1.0)
                    z -= (1.0 - frac) * alpha * dz * 0.999;
                out.z = z;
                out.t_final = t;
                out.newton_steps = steps + 1;
                return out;
            }
        }
        if (steps >= max_steps) { out.hit_iter_limit = true; break; }
        if (static_cast<double>(m) / t <= gap_tol) break;
        t *= mu;
        ++stage;
    }
    out.z = z;
    out.t_final = t;
    out.newton_steps = steps;
    return out;
}

} // namespace

double QuadTerm::value(const Eigen::VectorXcd& x, const Eigen::VectorXd& s) const {
    double v = constant;
    if (quad.size() > 0) v += std::real(x.dot(quad * x)); // x^H Q x
    if (lin.size() > 0) v += 2.0 * std::real(lin.dot(x)); // 2 Re(b^H x)
    if (extra_quad.size() > 0) v += extra_quad.dot(s.cwiseAbs2());
    if (extra_lin.size() > 0) v += extra_lin.dot(s);
    return v;
}

void QcqpProblem::validate(bool full_psd_check) {
    auto fix = [&](QuadTerm& t, const char* what) {
        if (t.quad.size() > 0) {
            if (t.quad.rows() != dim || t.quad.cols() != dim)
                throw std::invalid_argument(std::string("qcqp: bad quad shape in ") + what);
            if (!all_finite(t.quad)) throw std::invalid_argument("qcqp: non-finite quad");
            const double asym = (t.quad - t.quad.adjoint()).cwiseAbs().maxCoeff();
            if (asym > 1e-10 * (1.0 + t.quad.cwiseAbs().maxCoeff()))
                throw std::invalid_argument(std::string("qcqp: non-Hermitian quad in ") + what);
            t.quad = 0.5 * (t.quad + t.quad.adjoint().eval());
            if (full_psd_check) {
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(t.quad);
                const double lo = es.eigenvalues().minCoeff();
                if (lo < -1e-6)
                    throw std::invalid_argument(std::string("qcqp: indefinite quad in ") + what);
                if (lo < -1e-9) {
                    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
                    t.quad = es.eigenvectors() * ev.asDiagonal() *
                             es.eigenvectors().adjoint();
                }
            }
        }
        if (t.lin.size() > 0 && t.lin.size() != dim)
            throw std::invalid_argument("qcqp: bad lin length");
        if (t.lin.size() > 0 && !t.lin.allFinite())
            throw std::invalid_argument("qcqp: non-finite lin");
        if (t.extra_quad.size() > 0) {
            if (t.extra_quad.size() != num_extras)
                throw std::invalid_argument("qcqp: bad extra_quad length");
            if (t.extra_quad.minCoeff() < 0.0)
                throw std::invalid_argument("qcqp: negative extra_quad coefficient");
        }
        if (t.extra_lin.size() > 0 && t.extra_lin.size() != num_extras)
            throw std::invalid_argument("qcqp: bad extra_lin length");
        if (!std::isfinite(t.constant))
            throw std::invalid_argument("qcqp: non-finite constant");
    };
    fix(objective, "objective");
    for (auto& c : constraints) fix(c, "constraint");
}

std::string QcqpProblem::debug_dump() const {
    std::ostringstream os;
    os.precision(17);
    auto dump_term = [&](const QuadTerm& t, const char* tag) {
        os << tag << " const " << t.constant << "\n";
        if (t.quad.size() > 0) {
            os << tag << " quad " << t.quad.rows() << "\n";
            for (Eigen::Index i = 0; i < t.quad.rows(); ++i) {
                for (Eigen::Index j = 0; j < t.quad.cols(); ++j)
                    os << t.quad(i, j).real() << " " << t.quad(i, j).imag() << " ";
                os << "\n";
            }
        }
        if (t.lin.size() > 0) {
            os << tag << " lin";
            for (Eigen::Index i = 0; i < t.lin.size(); ++i)
                os << " " << t.lin(i).real() << " " << t.lin(i).imag();
            os << "\n";
        }
        if (t.extra_quad.size() > 0) {
            os << tag << " extra_quad";
            for (Eigen::Index i = 0; i < t.extra_quad.size(); ++i)
                os << " " << t.extra_quad(i);
            os << "\n";
        }
        if (t.extra_lin.size() > 0) {
            os << tag << " extra_lin";
            for (Eigen::Index i = 0; i < t.extra_lin.size(); ++i)
                os << " " << t.extra_lin(i);
            os << "\n";
        }
    };
    os << "qcqp dim " << dim << " extras " << num_extras << " constraints "
       << constraints.size() << "\n";
    dump_term(objective, "obj");
    for (std::size_t j = 0; j < constraints.size(); ++j) {
        os << "con " << j << "\n";
        dump_term(constraints[j], "con");
    }
    return os.str();
}

namespace {

void split(const Eigen::VectorXd& z, int n, int f, Eigen::VectorXcd& x,
           Eigen::VectorXd& s) {
    x.resize(n);
    x.real() = z.head(n);
    x.imag() = z.segment(n, n);
    s = z.tail(f);
}

double stationarity_residual(const RealTerm& obj, const std::vector<RealTerm>& cons,
                             const Eigen::VectorXd& z, const Eigen::VectorXd& lambda) {
    Eigen::VectorXd r = obj.grad(z);
    double scale = std::max(1.0, r.lpNorm<Eigen::Infinity>());
    for (std::size_t j = 0; j < cons.size(); ++j) {
        const Eigen::VectorXd gc = cons[j].grad(z);
        r += lambda(static_cast<Eigen::Index>(j)) * gc;
        scale = std::max(scale, lambda(static_cast<Eigen::Index>(j)) *
                                    gc.lpNorm<Eigen::Infinity>());
    }
    return r.lpNorm<Eigen::Infinity>() / scale;
}

} // namespace

QcqpSolution solve(const QcqpProblem& problem_in, const QcqpOptions& opts) {
    QcqpProblem problem = problem_in;
    problem.validate(false);
    const int n = problem.dim;
    const int f = problem.num_extras;
    const int big = 2 * n + f;
    const int m = static_cast<int>(problem.constraints.size());

    const RealTerm obj = embed(problem.objective, n, f);
    std::vector<RealTerm> cons;
    cons.reserve(m);
    for (const auto& c : problem.constraints) cons.push_back(embed(c, n, f));

    QcqpSolution sol;
    sol.multipliers = Eigen::VectorXd::Zero(m);

    Eigen::VectorXd z0 = Eigen::VectorXd::Zero(big);
    if (opts.hint_x && opts.hint_x->size() == n) {
        z0.head(n) = opts.hint_x->real();
        z0.segment(n, n) = opts.hint_x->imag();
    }
    if (opts.hint_extras && opts.hint_extras->size() == f) z0.tail(f) = *opts.hint_extras;

    auto finish = [&](const Eigen::VectorXd& z, double t, QcqpStatus status,
                      int steps) {
        split(z, n, f, sol.x, sol.extras);
        sol.status = status;
        sol.objective_value = obj.value(z);
        sol.newton_iterations += steps;
        double viol = 0.0;
        for (int j = 0; j < m; ++j) {
            const double fv = cons[j].value(z);
            viol = std::max(viol, fv);
            sol.multipliers(j) = (fv < 0.0) ? 1.0 / (t * (-fv)) : 0.0;
        }
        sol.max_constraint_violation = std::max(viol, 0.0);
        if (m > 0 && std::isfinite(t)) {
            // Refine the active-set multipliers by nonnegative least squares on
            // the stationarity equation; barrier estimates carry the round-off
            // of the tiny residuals 1/(t f_j).
            std::vector<int> active;
            const double lam_floor = 1e-8 * std::max(1.0, sol.multipliers.maxCoeff());
            for (int j = 0; j < m; ++j)
                if (sol.multipliers(j) > lam_floor) active.push_back(j);
            if (!active.empty()) {
                Eigen::MatrixXd a(big, static_cast<Eigen::Index>(active.size()));
                for (std::size_t j = 0; j < active.size(); ++j)
                    a.col(static_cast<Eigen::Index>(j)) =
                        cons[static_cast<std::size_t>(active[j])].grad(z);
                const Eigen::VectorXd lam =
                    a.colPivHouseholderQr().solve(-obj.grad(z)).cwiseMax(0.0);
                Eigen::VectorXd refined = sol.multipliers;
                for (std::size_t j = 0; j < active.size(); ++j)
                    refined(active[j]) = lam(static_cast<Eigen::Index>(j));
                QcqpSolution probe = sol;
                split(z, n, f, probe.x, probe.extras);
                const double base = kkt_residual(problem, probe);
                probe.multipliers = refined;
                if (kkt_residual(problem, probe) < base)
                    sol.multipliers = refined;
            }
        }
        sol.kkt_residual = kkt_residual(problem, sol);
        if (status == QcqpStatus::Optimal &&
            (!sol.x.allFinite() || !sol.extras.allFinite()))
            sol.status = QcqpStatus::NumericalFailure;
        // an Optimal return certifies KKT accuracy; demote if polishing failed
        if (sol.status == QcqpStatus::Optimal && sol.kkt_residual > 1e-7)
            sol.status = QcqpStatus::IterationLimit;
        return sol;
    };

    if (m == 0) {
        // plain convex QP: one regularized Newton solve from z0
        if (!obj.has_quad) return finish(z0, 1.0, QcqpStatus::NumericalFailure, 0);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(
            obj.hess + 1e-14 * Eigen::MatrixXd::Identity(big, big));
        const Eigen::VectorXd z = ldlt.solve(-obj.lin);
        if (!z.allFinite()) return finish(z0, 1.0, QcqpStatus::NumericalFailure, 1);
        return finish(z, std::numeric_limits<double>::infinity(), QcqpStatus::Optimal, 1);
    }

    // phase 1 when the start is not strictly feasible
    double maxf = -std::numeric_limits<double>::infinity();
    for (const auto& c : cons) maxf = std::max(maxf, c.value(z0));
    const double strict_margin = 1e-9;
    Eigen::VectorXd z = z0;
    if (!(maxf < -strict_margin)) {
        std::vector<RealTerm> cons1;
        cons1.reserve(m);
        for (const auto& c : cons) {
            RealTerm a = c;
            a.lin.conservativeResize(big + 1);
            a.lin(big) = -1.0;
            if (a.has_quad) {
                a.hess.conservativeResize(big + 1, big + 1);
                a.hess.row(big).setZero();
                a.hess.col(big).setZero();
            }
            cons1.push_back(std::move(a));
        }
        Eigen::VectorXd z1(big + 1);
        z1.head(big) = z0;
        z1(big) = maxf + std::max(1.0, 0.1 * std::abs(maxf));
        // minimize s + eps*||z - z_start||^2: the tiny proximal term keeps the
        // unbounded coordinates (epigraph/floor variables) from running off to
        // huge magnitudes while s descends.
        const double eps1 =
            1e-8 * (1.0 + std::abs(maxf)) / (1.0 + z1.squaredNorm());
        RealTerm obj1;
        obj1.has_quad = true;
        obj1.hess = 2.0 * eps1 * Eigen::MatrixXd::Identity(big + 1, big + 1);
        obj1.lin = -2.0 * eps1 * z1;
        obj1.lin(big) += 1.0;
        obj1.constant = eps1 * z1.squaredNorm();
        // Exit depth scales with the constraint magnitudes: stopping barely
        // inside a large-scale feasible set strands the main barrier on the
        // boundary where line searches drown in round-off.
        const double exit_depth =
            std::max(10.0 * strict_margin, 1e-4 * (1.0 + std::abs(maxf)));
        const BarrierResult ph1 = barrier_minimize(obj1, cons1, z1, 1e-10,
                                                   opts.max_iter, -exit_depth, nullptr);
        if (!(ph1.z(big) < -strict_margin)) {
            // phase-1 objective bounded away from zero: no interior point
            split(z0, n, f, sol.x, sol.extras);
            sol.status = (ph1.hit_iter_limit ? QcqpStatus::IterationLimit
                                             : QcqpStatus::Infeasible);
            sol.newton_iterations = ph1.newton_steps;
            sol.objective_value = obj.value(z0);
            sol.max_constraint_violation = std::max(maxf, 0.0);
            sol.kkt_residual = std::numeric_limits<double>::infinity();
            return sol;
        }
        z = ph1.z.head(big);
        sol.newton_iterations += ph1.newton_steps;
    }

    const BarrierResult res = barrier_minimize(obj, cons, z, opts.tol,
                                               opts.max_iter, std::nullopt,
                                               &sol.merit_trace);
    QcqpStatus status = QcqpStatus::Optimal;
    if (res.hit_iter_limit) status = QcqpStatus::IterationLimit;
    if (!res.z.allFinite()) status = QcqpStatus::NumericalFailure;
    return finish(res.z, res.t_final, status, res.newton_steps);
}

double kkt_residual(const QcqpProblem& problem, const QcqpSolution& solution) {
    const int n = problem.dim;
    const int f = problem.num_extras;
    const int big = 2 * n + f;
    const RealTerm obj = embed(problem.objective, n, f);
    std::vector<RealTerm> cons;
    for (const auto& c : problem.constraints) cons.push_back(embed(c, n, f));

    Eigen::VectorXd z(big);
    z.head(n) = solution.x.real();
    z.segment(n, n) = solution.x.imag();
    z.tail(f) = solution.extras;

    Eigen::VectorXd lambda = solution.multipliers;
    if (lambda.size() != static_cast<Eigen::Index>(cons.size()))
        lambda = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cons.size()));

    double feas = 0.0;
    double comp = 0.0;
    for (std::size_t j = 0; j < cons.size(); ++j) {
        const double fv = cons[j].value(z);
        feas = std::max(feas, fv);
        comp = std::max(comp, std::abs(lambda(static_cast<Eigen::Index>(j)) * fv));
    }
    const double stat = stationarity_residual(obj, cons, z, lambda);
    return std::max({stat, feas, comp});
}

} // namespace she
