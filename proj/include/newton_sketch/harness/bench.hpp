#pragma once

#include "newton_sketch/harness/baselines.hpp"
#include "newton_sketch/harness/problems.hpp"
#include "newton_sketch/harness/sizing.hpp"
#include "newton_sketch/harness/trace_io.hpp"
#include "newton_sketch/interior_point.hpp"

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace nsketch::harness {

/// Median of the per-iteration wallclock over the records that took a step.
inline double median_iteration_ns(const SolveResult& result) {
    std::vector<double> times;
    for (const auto& r : result.records)
        if (r.step_size > 0.0) times.push_back(static_cast<double>(r.wallclock_ns));
    if (times.empty()) return 0.0;
    const auto mid = times.begin() + static_cast<std::ptrdiff_t>(times.size() / 2);
    std::nth_element(times.begin(), mid, times.end());
    return *mid;
}

/// First record index with f - f_star <= tol, or -1.
inline int iterations_to_gap(const SolveResult& result, double f_star, double tol) {
    for (const auto& r : result.records)
        if (r.f_value - f_star <= tol) return r.t;
    return -1;
}

// ---------------------------------------------------------------------------
// Logistic regression: Newton Sketch against exact Newton and gradient descent

struct LogisticBenchConfig {
    Index n = 16384;
    Index d = 100;
    double rho = 0.99;
    double scale = 2.0;
    std::uint64_t seed = 0;
    SketchKind sketch = SketchKind::ros_hadamard;
    Index m = 0;  // 0: ceil(6 d)
    double delta = 1e-10;
    double a = 0.1;
    double b = 0.5;
    int max_iters = 100;
    int gd_iters = 0;  // 0 skips gradient descent
};

struct LogisticBench {
    GlmInstance instance;
    double f_star = 0.0;
    SolveResult sketch;
    SolveResult exact;
    std::optional<SolveResult> gd;
};

inline LogisticBench run_logistic_bench(const LogisticBenchConfig& config) {
    LogisticBench out;
    out.instance = gen_logistic_instance(config.n, config.d, config.rho, config.scale, config.seed);
    const ObjectiveModel model = glm_objective(out.instance.A, out.instance.y, GlmFamily{GlmKind::logistic});
    const Vector x0 = Vector::Zero(config.d);
    out.f_star = reference_optimum(model, x0).f_final;

    SolverConfig solver;
    solver.a = config.a;
    solver.b = config.b;
    solver.delta = config.delta;
    solver.max_iters = config.max_iters;
    solver.sketch.kind = config.sketch;
    solver.sketch.m = config.m > 0 ? config.m : sketch_size_unconstrained(config.d, std::nullopt, 6.0, config.n);
    solver.sketch.seed = config.seed;
    out.sketch = solve(model, solver, x0);

    SolverConfig exact = solver;
    exact.sketch.kind = SketchKind::identity;
    out.exact = solve(model, exact, x0);

    if (config.gd_iters > 0) out.gd = run_baseline_gd(model, x0, config.a, config.b, config.gd_iters, config.delta);
    return out;
}

// ---------------------------------------------------------------------------
// Lasso through its dual barrier: partial Newton Sketch against exact Newton

struct LassoBenchConfig {
    Index n = 50;
    Index d = 4096;
    double rho = 0.99;
    double scale = 2.0;
    std::uint64_t seed = 0;
    SketchKind sketch = SketchKind::ros_hadamard;
    Index m = 0;  // 0: 6 n
    double delta = 1e-6;
    double tau0 = 1.0;
    double mu = 10.0;
    int max_iters = 1000;
};

struct LassoRun {
    BarrierResult barrier;
    std::vector<double> gaps;  // duality gap after each centering
    std::int64_t total_wallclock_ns = 0;
};

struct LassoBench {
    LassoInstance instance;
    LassoRun sketch;
    LassoRun exact;
};

inline double lasso_duality_gap(const LassoInstance& inst, double tau, const Vector& w) {
    const Vector x = lasso_recover_primal(inst.A, inst.lambda, tau, w);
    return lasso_primal_value(inst.A, inst.y, inst.lambda, x) - lasso_dual_value(inst.y, w);
}

/// The sketched run folds both barrier terms into one d-row square root and
/// keeps 2 tau I exact; the exact run uses the stacked square root, whose
/// Gram is the true barrier Hessian.
inline LassoBench run_lasso_bench(const LassoBenchConfig& config) {
    LassoBench out;
    out.instance = gen_lasso_instance(config.n, config.d, config.rho, config.scale, config.seed);
    const auto& inst = out.instance;

    BarrierConfig barrier;
    barrier.tau0 = config.tau0;
    barrier.mu = config.mu;
    barrier.delta = config.delta;
    barrier.strategy = BarrierStrategy::partial_sketch;
    barrier.inner.max_iters = config.max_iters;
    barrier.inner.sketch.seed = config.seed;

    auto run = [&](const BarrierProblem& problem, const BarrierConfig& c) {
        LassoRun r;
        r.barrier = barrier_solve(problem, c, Vector::Zero(config.n));
        for (const auto& e : r.barrier.trace) {
            r.gaps.push_back(lasso_duality_gap(inst, e.tau, e.x));
            r.total_wallclock_ns += e.wallclock_ns;
        }
        return r;
    };

    BarrierConfig sketched = barrier;
    sketched.inner.sketch.kind = config.sketch;
    sketched.inner.sketch.m = config.m > 0 ? config.m : 6 * config.n;
    out.sketch = run(lasso_dual_barrier_problem(inst.A, inst.y, inst.lambda, LassoSqrtForm::combined), sketched);

    BarrierConfig exact = barrier;
    exact.inner.sketch.kind = SketchKind::identity;
    out.exact = run(lasso_dual_barrier_problem(inst.A, inst.y, inst.lambda, LassoSqrtForm::stacked), exact);
    return out;
}

// ---------------------------------------------------------------------------
// Barrier output

/// All inner iterations of a barrier run as one trace, numbered consecutively.
inline SolveResult flatten_barrier(const BarrierResult& run) {
    SolveResult flat;
    flat.x = run.x;
    flat.converged = !run.trace.empty();
    int t = 0;
    for (const auto& entry : run.trace) {
        for (IterationRecord r : entry.inner.records) {
            r.t = t++;
            flat.records.push_back(r);
        }
        flat.converged = flat.converged && entry.inner_converged;
        flat.f_final = entry.inner.f_final;
    }
    return flat;
}

/// One row per centering; `gaps` adds a duality_gap column when given.
inline std::string central_path_csv(const BarrierResult& run, const std::vector<double>* gaps = nullptr) {
    std::ostringstream out;
    out << "tau,inner_iterations,inner_converged,f0_value,bound,wallclock_ns";
    if (gaps) out << ",duality_gap";
    out << '\n';
    for (std::size_t k = 0; k < run.trace.size(); ++k) {
        const auto& e = run.trace[k];
        out << format_double(e.tau) << ',' << e.inner_iterations << ',' << (e.inner_converged ? 1 : 0) << ','
            << format_double(e.f0_value) << ',' << format_double(e.bound) << ',' << e.wallclock_ns;
        if (gaps) out << ',' << format_double((*gaps)[k]);
        out << '\n';
    }
    return out.str();
}

}  // namespace nsketch::harness
