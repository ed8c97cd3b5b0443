#pragma once

#include "newton_sketch/objectives.hpp"
#include "newton_sketch/solver.hpp"

#include <chrono>

namespace nsketch::harness {

/// Steepest descent dx = -grad f with the same Armijo search as the Newton
/// Sketch. decrement_sq is ||grad f||^2 and the stopping rule mirrors the
/// sketch solver: stop when decrement_sq / 2 <= delta.
inline SolveResult run_baseline_gd(const ObjectiveModel& model, const Vector& x0, double a, double b, int max_iters,
                                   double delta) {
    SolverConfig check;
    check.a = a;
    check.b = b;
    check.delta = delta;
    check.max_iters = max_iters;
    validate(check);
    if (!model.in_domain(x0)) throw InvalidParameter("run_baseline_gd: x0 is outside the domain");

    using Clock = std::chrono::steady_clock;
    SolveResult result;
    result.x = x0;
    double f_x = model.value(x0);
    try {
        for (int t = 0; t < max_iters; ++t) {
            const auto start = Clock::now();
            IterationRecord rec;
            rec.t = t;
            rec.f_value = f_x;
            const Vector grad = model.gradient(result.x);
            rec.decrement_sq = grad.squaredNorm();
            if (0.5 * rec.decrement_sq <= delta) {
                rec.wallclock_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
                result.records.push_back(rec);
                result.converged = true;
                break;
            }
            const Vector dx = -grad;
            const LineSearchResult ls = backtracking_line_search(model, result.x, dx, f_x, -rec.decrement_sq, a, b);
            result.x += ls.mu * dx;
            f_x = ls.f_new;
            rec.step_size = ls.mu;
            rec.backtracks = ls.backtracks;
            rec.wallclock_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
            result.records.push_back(rec);
        }
    } catch (const Error& e) {
        result.f_final = f_x;
        throw SolveError(std::string("gradient descent failed: ") + e.what(), result, std::current_exception());
    }
    result.f_final = f_x;
    return result;
}

/// Exact damped Newton (identity sketch) run to a tight tolerance; used as
/// the reference optimum for optimality gaps.
inline SolveResult reference_optimum(const ObjectiveModel& model, const Vector& x0,
                                     const ConstraintSet& cs = ConstraintSet::free(), bool partial = true,
                                     double delta = 1e-12, int max_iters = 500) {
    SolverConfig config;
    config.sketch.kind = SketchKind::identity;
    config.delta = delta;
    config.max_iters = max_iters;
    config.partial = partial;
    return solve(model, config, x0, cs);
}

}  // namespace nsketch::harness
