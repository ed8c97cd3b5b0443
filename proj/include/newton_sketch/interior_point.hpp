#pragma once

#include "newton_sketch/core.hpp"
#include "newton_sketch/objectives.hpp"
#include "newton_sketch/solver.hpp"

#include <functional>
#include <string>
#include <vector>

namespace nsketch {

enum class BarrierStrategy { full_sketch, partial_sketch };

/// min f0(x) s.t. r inequality constraints, described through the
/// tau-weighted centering objective tau f0(x) + barrier(x).
struct BarrierProblem {
    std::function<ObjectiveModel(double)> centering;
    std::function<double(const Vector&)> objective;
    int constraints = 0;
};

struct BarrierConfig {
    double tau0 = 1.0;
    double mu = 10.0;
    double delta = 1e-6;
    BarrierStrategy strategy = BarrierStrategy::partial_sketch;
    /// Inner Newton Sketch settings. Its delta is ignored; each centering
    /// uses inner_tolerance(delta).
    SolverConfig inner;
};

inline void validate(const BarrierConfig& config) {
    if (!(config.tau0 > 0.0)) throw InvalidParameter("barrier: tau0 must be positive");
    if (!(config.mu > 1.0)) throw InvalidParameter("barrier: mu must be > 1");
    if (!(config.delta > 0.0)) throw InvalidParameter("barrier: delta must be positive");
}

/// Sub-optimality of an exact center: f0(x(tau)) - f0(x*) <= r / tau.
inline double suboptimality_bound(int r, double tau) {
    if (!(tau > 0.0)) throw InvalidParameter("suboptimality_bound: tau must be positive");
    return static_cast<double>(r) / tau;
}

/// Number of tau <- mu tau updates before r / tau <= delta.
inline int outer_iterations(int r, double tau0, double delta, double mu) {
    if (!(mu > 1.0)) throw InvalidParameter("outer_iterations: mu must be > 1");
    const double ratio = static_cast<double>(r) / (tau0 * delta);
    if (!(ratio > 1.0)) return 0;
    return static_cast<int>(tolerant_ceil(std::log(ratio) / std::log(mu)));
}

/// Decrement tolerance for every centering: min(1e-9, delta / 10).
inline double inner_tolerance(double delta) { return std::min(1e-9, delta / 10.0); }

struct CentralPathEntry {
    double tau = 0.0;
    Vector x;
    int inner_iterations = 0;
    bool inner_converged = false;
    double f0_value = 0.0;
    double bound = 0.0;  // r / tau
    std::int64_t wallclock_ns = 0;
    SolveResult inner;
};

struct BarrierResult {
    Vector x;
    std::vector<CentralPathEntry> trace;
    int outer_iterations = 0;
};

class BarrierError : public Error {
public:
    BarrierError(const std::string& what, BarrierResult partial)
        : Error(what), partial(std::move(partial)) {}
    BarrierResult partial;
};

/// Barrier method with Newton Sketch centering. Each centering is warm
/// started at the previous center; the loop performs exactly
/// outer_iterations(r, tau0, delta, mu) updates of tau.
inline BarrierResult barrier_solve(const BarrierProblem& problem, const BarrierConfig& config, const Vector& x0) {
    validate(config);
    if (problem.constraints < 1) throw InvalidParameter("barrier: problem must have r >= 1 constraints");
    const int updates = outer_iterations(problem.constraints, config.tau0, config.delta, config.mu);

    BarrierResult result;
    result.x = x0;
    result.outer_iterations = updates;
    double tau = config.tau0;
    for (int k = 0; k <= updates; ++k) {
        SolverConfig inner = config.inner;
        inner.delta = inner_tolerance(config.delta);
        inner.partial = config.strategy == BarrierStrategy::partial_sketch;
        inner.sketch.seed = derive_seed(config.inner.sketch.seed, static_cast<std::uint64_t>(k) + 0x5eed0000ULL);

        const auto start = std::chrono::steady_clock::now();
        CentralPathEntry entry;
        entry.tau = tau;
        try {
            entry.inner = solve(problem.centering(tau), inner, result.x);
        } catch (const Error& e) {
            throw BarrierError("barrier: centering " + std::to_string(k) + " at tau=" + std::to_string(tau) +
                                   " failed: " + e.what(),
                               result);
        }
        entry.wallclock_ns =
            std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
        entry.x = entry.inner.x;
        entry.inner_iterations = static_cast<int>(entry.inner.records.size());
        entry.inner_converged = entry.inner.converged;
        entry.f0_value = problem.objective(entry.x);
        entry.bound = suboptimality_bound(problem.constraints, tau);
        result.x = entry.x;
        result.trace.push_back(std::move(entry));
        if (k < updates) tau *= config.mu;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Problem families

/// min <c, x> s.t. A x <= b
inline BarrierProblem lp_barrier_problem(const Matrix& A, const Vector& b, const Vector& c) {
    BarrierProblem p;
    p.centering = [A, b, c](double tau) { return lp_barrier_objective(A, b, c, tau); };
    p.objective = [c](const Vector& x) { return c.dot(x); };
    p.constraints = static_cast<int>(A.rows());
    return p;
}

/// min -<mean, x> + lambda x^T A^T A x over {x >= 0, <1, x> <= 1}
inline BarrierProblem portfolio_barrier_problem(const Matrix& A, const Vector& mean, double lambda) {
    BarrierProblem p;
    p.centering = [A, mean, lambda](double tau) { return portfolio_barrier_objective(A, mean, lambda, tau); };
    p.objective = [A, mean, lambda](const Vector& x) { return -mean.dot(x) + lambda * (A * x).squaredNorm(); };
    p.constraints = static_cast<int>(A.cols()) + 1;
    return p;
}

/// min ||y - w||^2 s.t. ||A^T w||_inf <= lambda (the Lasso dual, as a minimization)
inline BarrierProblem lasso_dual_barrier_problem(const Matrix& A, const Vector& y, double lambda,
                                                 LassoSqrtForm form = LassoSqrtForm::stacked) {
    BarrierProblem p;
    p.centering = [A, y, lambda, form](double tau) { return lasso_dual_barrier_objective(A, y, lambda, tau, form); };
    p.objective = [y](const Vector& w) { return (y - w).squaredNorm(); };
    p.constraints = 2 * static_cast<int>(A.cols());
    return p;
}

}  // namespace nsketch
