#pragma once

#include "newton_sketch/core.hpp"
#include "newton_sketch/objectives.hpp"
#include "newton_sketch/projection.hpp"
#include "newton_sketch/sketch.hpp"
#include "newton_sketch/subproblem.hpp"

#include <chrono>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace nsketch {

struct SolverConfig {
    /// kind, m and seed are used; n is filled in per iteration from the row
    /// count of the Hessian square root. m == 0 means ceil(6 d).
    SketchSpec sketch{SketchKind::ros_hadamard, 0, 1, 0};
    /// Optional per-iteration sketch size m_t; overrides sketch.m.
    std::function<Index(int)> sketch_rows_schedule;
    double epsilon = 0.1;  // nominal sketch accuracy, used for the phase constants only
    double a = 0.1;
    double b = 0.5;
    double delta = 1e-8;
    int max_iters = 100;
    int max_backtracks = 100;
    /// Keep the structured Hessian part exact and sketch only hessian_sqrt.
    bool partial = false;
    /// Keep a copy of every iterate x_t in SolveResult::iterates.
    bool record_iterates = false;
    SubproblemOptions subproblem;
};

inline void validate(const SolverConfig& config) {
    if (!(config.a > 0.0 && config.a < 0.5)) throw InvalidParameter("solver: a must lie in (0, 1/2)");
    if (!(config.b > 0.0 && config.b < 1.0)) throw InvalidParameter("solver: b must lie in (0, 1)");
    if (!(config.delta > 0.0)) throw InvalidParameter("solver: delta must be positive");
    if (config.max_iters < 1) throw InvalidParameter("solver: max_iters must be >= 1");
    if (config.sketch.m < 0) throw InvalidParameter("solver: sketch rows must be >= 0");
}

struct IterationRecord {
    int t = 0;
    double f_value = 0.0;       // f(x_t)
    double decrement_sq = 0.0;  // -<grad f(x_t), dx_t>
    double step_size = 0.0;     // mu_t; 0 on the terminating record
    int backtracks = 0;
    std::int64_t wallclock_ns = 0;
    Index sketch_rows = 0;
};

struct PhaseConstants {
    double eta = 0.0;
    double nu = 0.0;
};

struct SolveResult {
    Vector x;
    double f_final = 0.0;
    std::vector<IterationRecord> records;
    std::vector<Vector> iterates;  // x_0, x_1, ... when requested
    bool converged = false;
    std::optional<PhaseConstants> phase;
};

/// A failure inside solve(), with the trace recorded up to that point. The
/// original exception is kept in `cause`.
class SolveError : public Error {
public:
    SolveError(const std::string& what, SolveResult partial, std::exception_ptr cause)
        : Error(what), partial(std::move(partial)), cause(std::move(cause)) {}
    SolveResult partial;
    std::exception_ptr cause;
};

/// eta and nu from the sketch accuracy and line-search constants. Requires
/// 0 <= epsilon < 1 and a in (0, 1/2); throws when eta <= 0.
inline PhaseConstants phase_constants(double epsilon, double a, double b) {
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw InvalidParameter("phase_constants: epsilon must lie in [0, 1)");
    if (!(a > 0.0 && a < 0.5)) throw InvalidParameter("phase_constants: a must lie in (0, 1/2)");
    if (!(b > 0.0 && b < 1.0)) throw InvalidParameter("phase_constants: b must lie in (0, 1)");
    const double kappa = (1.0 + epsilon) / (1.0 - epsilon);
    const double eta = 0.125 * (1.0 - 0.5 * kappa * kappa - a) / (kappa * kappa * kappa);
    if (!(eta > 0.0))
        throw InvalidParameter("phase_constants: eta <= 0 for epsilon=" + std::to_string(epsilon) +
                               ", a=" + std::to_string(a) + "; reduce epsilon or a");
    return {eta, a * b * eta * eta / (1.0 + kappa * eta)};
}

/// Iteration bound (f(x0) - f*) / nu + 0.65 log2(1 / (16 delta)).
inline double predicted_iterations(double f_gap0, double nu, double delta) {
    if (!(nu > 0.0)) throw InvalidParameter("predicted_iterations: nu must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidParameter("predicted_iterations: delta must lie in (0, 1)");
    return f_gap0 / nu + 0.65 * std::log2(1.0 / (16.0 * delta));
}

struct StepResult {
    Vector step;
    double decrement_sq = 0.0;
};

namespace detail {

inline Matrix sketchable_sqrt(const ObjectiveModel& model, const Vector& x, bool partial) {
    Matrix B = model.hessian_sqrt(x);
    if (partial || !model.has_structured()) return B;
    if (!model.structured_sqrt)
        throw InvalidParameter("full sketch requested but the objective has no structured square root");
    const Matrix R = model.structured_sqrt(x);
    Matrix stacked(B.rows() + R.rows(), B.cols());
    stacked.topRows(B.rows()) = B;
    stacked.bottomRows(R.rows()) = R;
    return stacked;
}

inline StepResult step_from_sqrt(const ObjectiveModel& model, const Vector& x, const Vector& grad,
                                 const Matrix& sqrt_rows, const SketchOperator& op, const ConstraintSet& cs,
                                 bool partial, const SubproblemOptions& opts) {
    if (op.cols() != sqrt_rows.rows())
        throw DimensionError("newton_sketch_step: sketch has " + std::to_string(op.cols()) +
                             " columns but the Hessian square root has " + std::to_string(sqrt_rows.rows()) +
                             " rows");
    QuadraticModel qm;
    qm.sketched_sqrt = op.apply(sqrt_rows);
    if (partial && model.has_structured()) {
        if (model.structured_diag_lowrank)
            qm.structured_lowrank = model.structured_diag_lowrank(x);
        else
            qm.structured = model.structured_hessian(x);
    }
    qm.grad = grad;
    qm.anchor = x;
    StepResult out;
    out.step = solve_constrained(qm, cs, opts);
    out.decrement_sq = std::max(0.0, -grad.dot(out.step));
    return out;
}

}  // namespace detail

/// One sketched Newton step at x with a given sketch realization. The sketch
/// must have as many columns as the (possibly stacked) square root has rows.
inline StepResult newton_sketch_step(const ObjectiveModel& model, const Vector& x, const SketchOperator& op,
                                     const ConstraintSet& cs, bool partial,
                                     const SubproblemOptions& opts = {}) {
    const Vector grad = model.gradient(x);
    return detail::step_from_sqrt(model, x, grad, detail::sketchable_sqrt(model, x, partial), op, cs, partial,
                                  opts);
}

struct LineSearchResult {
    double mu = 1.0;
    int backtracks = 0;
    double f_new = 0.0;
};

/// Backtracking from mu = 1: accepts the first mu = b^k with
/// f(x + mu dx) finite and <= f_x + a mu slope, slope = <grad f(x), dx> < 0.
/// With model.value_change the test is made on the change itself and f_new
/// is f_x plus that change.
inline LineSearchResult backtracking_line_search(const ObjectiveModel& model, const Vector& x, const Vector& dx,
                                                 double f_x, double slope, double a, double b,
                                                 int max_backtracks = 100) {
    if (!(slope < 0.0))
        throw LineSearchError("line search: direction is not a descent direction (slope " + std::to_string(slope) +
                              ")");
    LineSearchResult out;
    for (int k = 0; k <= max_backtracks; ++k) {
        if (model.value_change) {
            const double change = model.value_change(x, out.mu * dx);
            if (std::isfinite(change) && change <= a * out.mu * slope) {
                out.backtracks = k;
                out.f_new = f_x + change;
                return out;
            }
        } else {
            const double f_trial = model.value(x + out.mu * dx);
            if (std::isfinite(f_trial) && f_trial <= f_x + a * out.mu * slope) {
                out.backtracks = k;
                out.f_new = f_trial;
                return out;
            }
        }
        out.mu *= b;
    }
    throw LineSearchError("line search: no acceptable step after " + std::to_string(max_backtracks) +
                          " backtracks (wrong gradient or non-descent direction?)");
}

inline LineSearchResult backtracking_line_search(const ObjectiveModel& model, const Vector& x, const Vector& dx,
                                                 double a, double b) {
    return backtracking_line_search(model, x, dx, model.value(x), model.gradient(x).dot(dx), a, b);
}


/// Newton Sketch with backtracking line search. A fresh sketch is drawn at
/// every iteration from derive_seed(config.sketch.seed, t). With
/// config.partial the structured Hessian part is kept exact.
///
/// Stops when decrement_sq / 2 <= delta.
inline SolveResult solve(const ObjectiveModel& model, const SolverConfig& config, const Vector& x0,
                         const ConstraintSet& cs = ConstraintSet::free()) {
    validate(config);
    if (x0.size() != model.dim) throw DimensionError("solve: x0 has wrong dimension");
    if (!model.in_domain(x0)) throw InvalidParameter("solve: x0 is outside the objective domain");
    if (!cs.contains(x0, 1e-12)) throw InvalidParameter("solve: x0 violates the constraint set");

    using Clock = std::chrono::steady_clock;
    SolveResult result;
    result.x = x0;
    try {
        result.phase = phase_constants(config.epsilon, config.a, config.b);
    } catch (const InvalidParameter&) {
        result.phase.reset();
    }

    const Index default_rows =
        config.sketch.m > 0 ? config.sketch.m : static_cast<Index>(tolerant_ceil(6.0 * static_cast<double>(model.dim)));
    double f_x = model.value(result.x);
    try {
        for (int t = 0; t < config.max_iters; ++t) {
            const auto start = Clock::now();
            IterationRecord rec;
            rec.t = t;
            rec.f_value = f_x;
            if (config.record_iterates) result.iterates.push_back(result.x);

            const Vector grad = model.gradient(result.x);
            const Matrix sqrt_rows = detail::sketchable_sqrt(model, result.x, config.partial);
            SketchSpec spec = config.sketch;
            spec.n = sqrt_rows.rows();
            spec.m = config.sketch_rows_schedule ? config.sketch_rows_schedule(t) : default_rows;
            if (spec.kind == SketchKind::identity) spec.m = spec.n;
            spec.seed = derive_seed(config.sketch.seed, static_cast<std::uint64_t>(t));
            rec.sketch_rows = spec.m;
            const SketchOperator op(spec);

            const StepResult step = detail::step_from_sqrt(model, result.x, grad, sqrt_rows, op, cs, config.partial,
                                                           config.subproblem);
            rec.decrement_sq = step.decrement_sq;
            if (0.5 * step.decrement_sq <= config.delta) {
                rec.wallclock_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
                result.records.push_back(rec);
                result.converged = true;
                break;
            }
            const LineSearchResult ls = backtracking_line_search(model, result.x, step.step, f_x, -step.decrement_sq,
                                                                 config.a, config.b, config.max_backtracks);
            result.x += ls.mu * step.step;
            f_x = ls.f_new;
            rec.step_size = ls.mu;
            rec.backtracks = ls.backtracks;
            rec.wallclock_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
            result.records.push_back(rec);
        }
    } catch (const Error& e) {
        result.f_final = f_x;
        throw SolveError(std::string("solve failed after ") + std::to_string(result.records.size()) +
                             " iterations: " + e.what(),
                         result, std::current_exception());
    }
    result.f_final = f_x;
    return result;
}

/// Checks f(x_{t+1}) <= f(x_t) + a mu_t <grad, dx_t> for every accepted step,
/// using only the logged values. Returns the index of the first violating
/// record or -1.
inline int first_armijo_violation(const SolveResult& result, double a) {
    const auto& records = result.records;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.step_size == 0.0) continue;
        const double f_next = i + 1 < records.size() ? records[i + 1].f_value : result.f_final;
        if (!(f_next <= r.f_value + a * r.step_size * -r.decrement_sq)) return static_cast<int>(i);
    }
    return -1;
}

}  // namespace nsketch
