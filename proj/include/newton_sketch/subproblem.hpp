#pragma once

#include "newton_sketch/core.hpp"
#include "newton_sketch/objectives.hpp"
#include "newton_sketch/projection.hpp"

#include <optional>
#include <string>

namespace nsketch {

/// Sketched Newton model around `anchor`:
///   phi(D) = 1/2 ||sketched_sqrt D||^2 + 1/2 D^T G D + <grad, D>
/// where G is the optional exact structured Hessian. `structured_lowrank`,
/// when set, must describe the same G and enables the Woodbury path.
struct QuadraticModel {
    Matrix sketched_sqrt;
    std::optional<Matrix> structured;
    std::optional<DiagPlusLowRank> structured_lowrank;
    Vector grad;
    Vector anchor;

    Index dim() const noexcept { return grad.size(); }

    Vector apply_hessian(const Vector& v) const {
        Vector out = sketched_sqrt.transpose() * (sketched_sqrt * v);
        if (structured) {
            out.noalias() += *structured * v;
        } else if (structured_lowrank) {
            out += structured_lowrank->diag.cwiseProduct(v);
            out.noalias() += structured_lowrank->factor * (structured_lowrank->factor.transpose() * v);
        }
        return out;
    }

    double value(const Vector& step) const { return 0.5 * step.dot(apply_hessian(step)) + grad.dot(step); }

    Matrix dense_hessian() const {
        Matrix Q = Matrix::Zero(dim(), dim());
        Q.selfadjointView<Eigen::Lower>().rankUpdate(sketched_sqrt.transpose());
        Q = Q.selfadjointView<Eigen::Lower>();
        if (structured) {
            Q += *structured;
        } else if (structured_lowrank) {
            Q.diagonal() += structured_lowrank->diag;
            Q.noalias() += structured_lowrank->factor * structured_lowrank->factor.transpose();
        }
        return Q;
    }
};

/// Raised when projected gradient exhausts its budget; carries the best
/// feasible step found.
class SubproblemNonConvergence : public Error {
public:
    SubproblemNonConvergence(const std::string& what, Vector best, double residual)
        : Error(what), best_step(std::move(best)), residual(residual) {}
    Vector best_step;
    double residual;
};

/// -(diag(D) + V V^T)^{-1} grad through the k x k capacitance matrix
/// I + V^T D^{-1} V, followed by one step of iterative refinement.
inline Vector solve_diag_plus_lowrank(const Vector& D, const Matrix& V, const Vector& grad) {
    if (D.size() != grad.size() || V.rows() != grad.size())
        throw DimensionError("solve_diag_plus_lowrank: inconsistent dimensions");
    if (!(D.array() > 0.0).all()) throw InvalidParameter("solve_diag_plus_lowrank: diagonal must be positive");
    const Vector Dinv = D.cwiseInverse();
    const Index k = V.cols();
    if (k == 0) return -grad.cwiseProduct(Dinv);

    const Matrix DinvV = Dinv.asDiagonal() * V;
    Matrix capacitance = Matrix::Identity(k, k);
    capacitance.noalias() += V.transpose() * DinvV;
    Eigen::LLT<Matrix> llt(capacitance);
    if (llt.info() != Eigen::Success) throw NumericalError("solve_diag_plus_lowrank: capacitance matrix is singular");

    auto apply_inverse = [&](const Vector& r) {
        const Vector Dr = Dinv.cwiseProduct(r);
        return Vector(Dr - DinvV * llt.solve(V.transpose() * Dr));
    };
    Vector x = apply_inverse(-grad);
    const Vector residual = -grad - (D.cwiseProduct(x) + V * (V.transpose() * x));
    x += apply_inverse(residual);
    if (!x.allFinite()) throw NumericalError("solve_diag_plus_lowrank: non-finite solution");
    return x;
}

/// Unconstrained minimizer -Q^{-1} grad. Uses the Woodbury identity when the
/// structured part is diagonal-plus-low-rank and the total rank is below d;
/// otherwise a dense Cholesky factorization with one refinement step.
inline Vector solve_free(const QuadraticModel& qm) {
    const Index d = qm.dim();
    if (qm.sketched_sqrt.cols() != d) throw DimensionError("solve_free: sketched_sqrt has wrong column count");
    if (qm.structured_lowrank && !qm.structured) {
        const auto& s = qm.structured_lowrank.value();
        const Index rank = qm.sketched_sqrt.rows() + s.factor.cols();
        if (rank < d && (s.diag.array() > 0.0).all()) {
            Matrix V(d, rank);
            V.leftCols(qm.sketched_sqrt.rows()) = qm.sketched_sqrt.transpose();
            V.rightCols(s.factor.cols()) = s.factor;
            return solve_diag_plus_lowrank(s.diag, V, qm.grad);
        }
    }
    const Matrix Q = qm.dense_hessian();
    Eigen::LLT<Matrix> llt(Q);
    if (llt.info() != Eigen::Success) {
        throw RankDeficientError("sketched Hessian is singular or indefinite (m=" +
                                 std::to_string(qm.sketched_sqrt.rows()) + ", d=" + std::to_string(d) +
                                 "); increase the sketch size m");
    }
    Vector step = llt.solve(-qm.grad);
    step += llt.solve(-qm.grad - Q * step);
    if (!step.allFinite()) {
        throw RankDeficientError("sketched Hessian is numerically singular (m=" +
                                 std::to_string(qm.sketched_sqrt.rows()) + ", d=" + std::to_string(d) +
                                 "); increase the sketch size m");
    }
    return step;
}

struct SubproblemOptions {
    double tol = 1e-10;
    int max_pg_iters = 100000;
    int power_iters = 20;
};

/// Largest eigenvalue of the model Hessian by power iteration from the
/// all-ones vector.
inline double estimate_model_lipschitz(const QuadraticModel& qm, int iters) {
    Vector v = Vector::Ones(qm.dim()).normalized();
    double estimate = 0.0;
    for (int k = 0; k < iters; ++k) {
        const Vector w = qm.apply_hessian(v);
        estimate = w.norm();
        if (!(estimate > 0.0)) return 0.0;
        v = w / estimate;
    }
    return estimate;
}

/// argmin of the model over {D : anchor + D in cs} by projected gradient with
/// backtracking on the quadratic upper bound. Stops when the gradient-mapping
/// residual ||D+ - D|| / step falls below tol.
inline Vector solve_constrained(const QuadraticModel& qm, const ConstraintSet& cs,
                                const SubproblemOptions& opts = {}) {
    if (cs.is_free()) return solve_free(qm);
    const Index d = qm.dim();
    double lipschitz = estimate_model_lipschitz(qm, opts.power_iters);
    double step = lipschitz > 0.0 ? 1.0 / lipschitz : 1.0;

    Vector delta = Vector::Zero(d);
    Vector hess_delta = Vector::Zero(d);
    double phi = 0.0;
    double residual = kInfinity;
    for (int k = 0; k < opts.max_pg_iters; ++k) {
        const Vector model_grad = hess_delta + qm.grad;
        Vector next, hess_next;
        double phi_next = 0.0;
        for (int halvings = 0;; ++halvings) {
            next = cs.project(qm.anchor + delta - step * model_grad) - qm.anchor;
            hess_next = qm.apply_hessian(next);
            phi_next = 0.5 * next.dot(hess_next) + qm.grad.dot(next);
            const Vector move = next - delta;
            const double bound = phi + model_grad.dot(move) + 0.5 / step * move.squaredNorm();
            if (phi_next <= bound + 1e-14 * std::max(1.0, std::abs(phi)) || halvings >= 60) break;
            step *= 0.5;
        }
        residual = (next - delta).norm() / step;
        delta = std::move(next);
        hess_delta = std::move(hess_next);
        phi = phi_next;
        if (residual <= opts.tol) return delta;
    }
    throw SubproblemNonConvergence("solve_constrained: projected gradient did not reach tol " +
                                       std::to_string(opts.tol) + " within " +
                                       std::to_string(opts.max_pg_iters) + " iterations",
                                   delta, residual);
}

}  // namespace nsketch
