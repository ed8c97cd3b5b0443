#include "oracles.hpp"

#include <newton_sketch/harness/baselines.hpp>
#include <newton_sketch/harness/problems.hpp>
#include <newton_sketch/solver.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace nsketch;
using namespace nsketch::harness;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, scale);
    Matrix M(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) M(i, j) = normal(rng);
    return M;
}

ObjectiveModel half_distance(const Vector& target) {
    // 1/2 ||x - target||^2 = 1/2 ||I x||^2 - <target, x> + const
    const Index d = target.size();
    ObjectiveModel m = quadratic_objective(Matrix::Identity(d, d), target);
    return m;
}

// Logistic loss plus 1/2 ||x||^2, with the ridge folded into the square root.
ObjectiveModel ridge_logistic(const GlmInstance& inst) {
    const ObjectiveModel base = glm_objective(inst.A, inst.y, GlmFamily{GlmKind::logistic});
    const Index d = inst.A.cols();
    ObjectiveModel m = base;
    m.value = [base](const Vector& x) { return base.value(x) + 0.5 * x.squaredNorm(); };
    m.gradient = [base](const Vector& x) { return Vector(base.gradient(x) + x); };
    m.hessian_sqrt = [base, d](const Vector& x) {
        const Matrix B = base.hessian_sqrt(x);
        Matrix out(B.rows() + d, d);
        out.topRows(B.rows()) = B;
        out.bottomRows(d) = Matrix::Identity(d, d);
        return out;
    };
    return m;
}

SolverConfig identity_config(double delta) {
    SolverConfig config;
    config.sketch.kind = SketchKind::identity;
    config.delta = delta;
    return config;
}

}  // namespace

// ---------------------------------------------------------------------------
// Single steps

TEST(NewtonSketchStep, ExactNewtonOnQuadratic) {
    const Vector target = random_matrix(4, 1, 1);
    const Vector x = random_matrix(4, 1, 2);
    const auto model = half_distance(target);
    const SketchOperator op(SketchSpec{SketchKind::identity, 4, 4, 0});
    const StepResult step = newton_sketch_step(model, x, op, ConstraintSet::free(), false);
    EXPECT_LE((step.step - (target - x)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_NEAR(step.decrement_sq, (x - target).squaredNorm(), 1e-12);
}

TEST(NewtonSketchStep, ZeroGradientGivesZeroStep) {
    const Vector target = random_matrix(4, 1, 3);
    const SketchOperator op(SketchSpec{SketchKind::gaussian, 12, 4, 0});
    const StepResult step = newton_sketch_step(half_distance(target), target, op, ConstraintSet::free(), false);
    EXPECT_EQ(step.step.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(step.decrement_sq, 0.0);
}

TEST(NewtonSketchStep, IdentitySketchMatchesExactNewtonOnLogistic) {
    const GlmInstance inst = gen_logistic_instance(64, 5, 0.5, 1.0, 4);
    const auto model = glm_objective(inst.A, inst.y, GlmFamily{GlmKind::logistic});
    const oracle::Logistic ref{inst.A, inst.y};
    const Vector x = random_matrix(5, 1, 5, 0.3);
    const Vector expected = -ref.hessian(x).ldlt().solve(ref.gradient(x));
    const SketchOperator op(SketchSpec{SketchKind::identity, 64, 64, 0});
    const StepResult step = newton_sketch_step(model, x, op, ConstraintSet::free(), false);
    EXPECT_LE((step.step - expected).norm() / expected.norm(), 1e-9);
}

TEST(NewtonSketchStep, SketchColumnMismatchIsADimensionError) {
    const SketchOperator op(SketchSpec{SketchKind::gaussian, 4, 5, 0});
    EXPECT_THROW(newton_sketch_step(half_distance(Vector::Ones(4)), Vector::Zero(4), op, ConstraintSet::free(), false),
                 DimensionError);
}

TEST(NewtonSketchStep, PartialAndFullSketchAgreeUnderIdentity) {
    const Matrix A = random_matrix(30, 3, 6, 0.3);
    const Vector mean = random_matrix(3, 1, 7, 0.1);
    const auto model = portfolio_barrier_objective(A, mean, 0.5, 2.0);
    const Vector x = Vector::Constant(3, 0.2);
    const StepResult partial = newton_sketch_step(model, x, SketchOperator(SketchSpec{SketchKind::identity, 30, 30, 0}),
                                                  ConstraintSet::free(), true);
    const StepResult full = newton_sketch_step(model, x, SketchOperator(SketchSpec{SketchKind::identity, 34, 34, 0}),
                                               ConstraintSet::free(), false);
    const Vector expected = -model.full_hessian(x).ldlt().solve(model.gradient(x));
    EXPECT_LE((partial.step - expected).norm() / expected.norm(), 1e-9);
    EXPECT_LE((full.step - expected).norm() / expected.norm(), 1e-9);
}

// ---------------------------------------------------------------------------
// Line search

TEST(LineSearch, FullStepOnQuadratic) {
    const auto model = half_distance(Vector::Zero(3));
    const Vector x = Vector::Constant(3, 2.0);
    const LineSearchResult ls = backtracking_line_search(model, x, -x, 0.1, 0.5);
    EXPECT_EQ(ls.mu, 1.0);
    EXPECT_EQ(ls.backtracks, 0);
}

TEST(LineSearch, RejectsOffDomainTrialPoints) {
    Matrix A(2, 1);
    A << 1.0, -1.0;
    const auto model = lp_barrier_objective(A, Vector::Ones(2), Vector::Ones(1), 1.0);
    const Vector x = Vector::Zero(1);
    const Vector dx = Vector::Constant(1, -3.0);  // x + dx leaves the slab
    const LineSearchResult ls = backtracking_line_search(model, x, dx, 0.1, 0.5);
    EXPECT_LT(ls.mu, 1.0);
    EXPECT_TRUE(model.in_domain(x + ls.mu * dx));
}

TEST(LineSearch, QuarticOvershootMatchesDirectScan) {
    ObjectiveModel model;
    model.dim = 1;
    model.value = [](const Vector& x) { return std::pow(x(0), 4); };
    model.gradient = [](const Vector& x) { return Vector::Constant(1, 4.0 * std::pow(x(0), 3)); };
    model.in_domain = [](const Vector&) { return true; };
    const Vector x = Vector::Constant(1, 1.0);
    const Vector dx = Vector::Constant(1, -10.0);
    const double slope = 4.0 * -10.0;
    int expected_k = -1;
    for (int k = 0; k <= 20; ++k) {
        const double mu = std::pow(0.5, k);
        if (std::pow(1.0 - 10.0 * mu, 4) <= 1.0 + 0.1 * mu * slope) {
            expected_k = k;
            break;
        }
    }
    ASSERT_GE(expected_k, 0);
    const LineSearchResult ls = backtracking_line_search(model, x, dx, 0.1, 0.5);
    EXPECT_EQ(ls.backtracks, expected_k);
    EXPECT_EQ(ls.mu, std::pow(0.5, expected_k));
}

TEST(LineSearch, NonDescentDirectionFails) {
    const auto model = half_distance(Vector::Zero(2));
    const Vector x = Vector::Ones(2);
    EXPECT_THROW(backtracking_line_search(model, x, x, 0.1, 0.5), LineSearchError);
}

TEST(LineSearch, WrongSlopeExhaustsBacktracks) {
    const auto model = half_distance(Vector::Zero(1));
    const Vector x = Vector::Ones(1);
    // Claims a slope far steeper than the true one, so Armijo never holds.
    EXPECT_THROW(backtracking_line_search(model, x, -x, model.value(x), -1e6, 0.1, 0.5, 10), LineSearchError);
}

// ---------------------------------------------------------------------------
// Phase constants and iteration bound

TEST(PhaseConstants, LimitOfExactSketch) {
    const PhaseConstants pc = phase_constants(0.0, 0.1, 0.5);
    EXPECT_NEAR(pc.eta, 0.05, 1e-15);
    EXPECT_NEAR(pc.nu, 0.000125 / 1.05, 1e-15);
    EXPECT_NEAR(pc.nu, 1.1905e-4, 1e-8);
}

TEST(PhaseConstants, EtaIsAtMostOneSixteenth) {
    for (double eps = 0.0; eps < 0.25; eps += 0.01)
        for (double a = 0.01; a < 0.5; a += 0.02)
            for (double b = 0.1; b < 1.0; b += 0.2) {
                try {
                    const PhaseConstants pc = phase_constants(eps, a, b);
                    EXPECT_LE(pc.eta, 1.0 / 16.0);
                    EXPECT_GT(pc.nu, 0.0);
                } catch (const InvalidParameter&) {
                }
            }
}

TEST(PhaseConstants, NonPositiveEtaIsRejected) {
    EXPECT_THROW(phase_constants(0.2, 0.45, 0.5), InvalidParameter);
    EXPECT_THROW(phase_constants(1.0, 0.1, 0.5), InvalidParameter);
}

TEST(PredictedIterations, Examples) {
    const double delta = 1e-6;
    EXPECT_DOUBLE_EQ(predicted_iterations(0.0, 1.0, delta), 0.65 * std::log2(1.0 / (16.0 * delta)));
    EXPECT_DOUBLE_EQ(predicted_iterations(2.0, 4.0, 1.0 / 16.0), 0.5);
    EXPECT_NEAR(predicted_iterations(1.0, 1.19e-4, 1e-6), 1.0 / 1.19e-4 + 0.65 * std::log2(62500.0), 1e-9);
    EXPECT_NEAR(1.0 / 1.19e-4, 8403.36, 0.01);
    EXPECT_THROW(predicted_iterations(1.0, 0.0, 1e-6), InvalidParameter);
}

// ---------------------------------------------------------------------------
// Full solves

TEST(Solve, QuadraticConvergesInOneIteration) {
    const auto model = half_distance(random_matrix(3, 1, 8));
    const SolveResult r = solve(model, identity_config(1e-12), Vector::Zero(3));
    ASSERT_TRUE(r.converged);
    ASSERT_EQ(r.records.size(), 2u);
    EXPECT_EQ(r.records[0].step_size, 1.0);
    EXPECT_EQ(r.records[1].t, 1);
    EXPECT_LE(r.records[1].decrement_sq / 2, 1e-12);
    EXPECT_EQ(r.records[1].step_size, 0.0);
}

TEST(Solve, LogisticWithRosSketchConvergesOnTenSeeds) {
    const GlmInstance inst = gen_logistic_instance(512, 10, 0.99, 2.0, 9);
    const auto model = glm_objective(inst.A, inst.y, GlmFamily{GlmKind::logistic});
    const SolveResult ref = reference_optimum(model, Vector::Zero(10));
    ASSERT_TRUE(ref.converged);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SolverConfig config;
        config.sketch = SketchSpec{SketchKind::ros_hadamard, 60, 1, seed};
        config.delta = 1e-9;
        const SolveResult r = solve(model, config, Vector::Zero(10));
        EXPECT_TRUE(r.converged) << "seed " << seed;
        EXPECT_LE(r.records.size(), 50u) << "seed " << seed;
        EXPECT_LE(r.f_final - ref.f_final, 1e-6) << "seed " << seed;
        EXPECT_EQ(first_armijo_violation(r, config.a), -1);
        for (std::size_t i = 1; i < r.records.size(); ++i) EXPECT_LE(r.records[i].f_value, r.records[i - 1].f_value);
        for (const auto& rec : r.records) EXPECT_GE(rec.decrement_sq, 0.0);
        EXPECT_LE(r.records.back().decrement_sq / 2, config.delta);
    }
}

TEST(Solve, IdentitySketchReproducesReferenceNewton) {
    const GlmInstance inst = gen_logistic_instance(512, 10, 0.99, 2.0, 10);
    const auto model = glm_objective(inst.A, inst.y, GlmFamily{GlmKind::logistic});
    const oracle::Logistic ref{inst.A, inst.y};
    SolverConfig config = identity_config(1e-10);
    config.record_iterates = true;
    const SolveResult r = solve(model, config, Vector::Zero(10));
    const auto trace = oracle::damped_newton([&](const Vector& x) { return ref.value(x); },
                                             [&](const Vector& x) { return ref.gradient(x); },
                                             [&](const Vector& x) { return ref.hessian(x); }, Vector::Zero(10), 0.1,
                                             0.5, 1e-10, 100);
    ASSERT_EQ(r.iterates.size(), trace.iterates.size());
    for (std::size_t t = 0; t < trace.iterates.size(); ++t) {
        const double scale = std::max(1.0, trace.iterates[t].norm());
        EXPECT_LE((r.iterates[t] - trace.iterates[t]).norm() / scale, 1e-9) << "t=" << t;
    }
}

TEST(Solve, ConstrainedPortfolioStaysFeasibleAndMonotone) {
    const PortfolioInstance inst = gen_portfolio_instance(8, 11, 512);
    const auto model = quadratic_objective(std::sqrt(2.0 * inst.lambda) * inst.A, inst.mean);
    SolverConfig config;
    config.sketch = SketchSpec{SketchKind::gaussian, 40, 1, 3};
    config.delta = 1e-12;
    const Vector x0 = Vector::Constant(8, 1.0 / 9.0);
    const SolveResult r = solve(model, config, x0, ConstraintSet::simplex());
    EXPECT_TRUE(r.converged);
    EXPECT_TRUE(ConstraintSet::simplex().contains(r.x, 1e-10));
    EXPECT_EQ(first_armijo_violation(r, config.a), -1);
    const double f_star = 0.5 * 2.0 * inst.lambda * (inst.A * inst.x_star).squaredNorm() - inst.mean.dot(inst.x_star);
    EXPECT_LE(r.f_final - f_star, 1e-8);
    EXPECT_LE((r.x - inst.x_star).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Solve, RejectsInfeasibleStart) {
    EXPECT_THROW(solve(half_distance(Vector::Ones(2)), identity_config(1e-8), Vector::Constant(2, 0.8),
                       ConstraintSet::simplex()),
                 InvalidParameter);
    Matrix A(2, 1);
    A << 1.0, -1.0;
    const auto lp = lp_barrier_objective(A, Vector::Ones(2), Vector::Ones(1), 1.0);
    EXPECT_THROW(solve(lp, identity_config(1e-8), Vector::Constant(1, 2.0)), InvalidParameter);
}

TEST(Solve, RankDeficientSketchCarriesTrace) {
    const GlmInstance inst = gen_logistic_instance(64, 8, 0.5, 1.0, 12);
    const auto model = glm_objective(inst.A, inst.y, GlmFamily{GlmKind::logistic});
    SolverConfig config;
    config.sketch = SketchSpec{SketchKind::gaussian, 3, 1, 0};
    try {
        solve(model, config, Vector::Zero(8));
        FAIL() << "expected SolveError";
    } catch (const SolveError& e) {
        EXPECT_TRUE(e.partial.records.empty());
        EXPECT_THROW(std::rethrow_exception(e.cause), RankDeficientError);
    }
}

TEST(Solve, SameSeedSameTrace) {
    const GlmInstance inst = gen_logistic_instance(256, 6, 0.9, 2.0, 13);
    const auto model = glm_objective(inst.A, inst.y, GlmFamily{GlmKind::logistic});
    SolverConfig config;
    config.sketch = SketchSpec{SketchKind::rademacher, 36, 1, 77};
    const SolveResult a = solve(model, config, Vector::Zero(6));
    const SolveResult b = solve(model, config, Vector::Zero(6));
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        EXPECT_EQ(a.records[i].f_value, b.records[i].f_value);
        EXPECT_EQ(a.records[i].decrement_sq, b.records[i].decrement_sq);
    }
    EXPECT_EQ(a.x, b.x);
}

TEST(Solve, DecrementContractsInSecondPhase) {
    int steps = 0, nonincreasing = 0;
    const GlmInstance inst = gen_logistic_instance(2048, 10, 0.9, 2.0, 14);
    const auto model = glm_objective(inst.A, inst.y, GlmFamily{GlmKind::logistic});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SolverConfig config;
        config.sketch = SketchSpec{SketchKind::ros_hadamard, 500, 1, seed};
        config.delta = 1e-20;
        config.max_iters = 40;
        const SolveResult r = solve(model, config, Vector::Zero(10));
        for (std::size_t i = 0; i + 1 < r.records.size(); ++i) {
            const double lam = std::sqrt(r.records[i].decrement_sq);
            const double next = std::sqrt(r.records[i + 1].decrement_sq);
            // Stop before the decrement reaches the rounding floor of f.
            if (lam > 1.0 / 16.0 || next < 1e-6) continue;
            ++steps;
            nonincreasing += next <= lam;
        }
    }
    ASSERT_GT(steps, 20);
    EXPECT_GE(nonincreasing, 0.95 * steps) << nonincreasing << "/" << steps;
}

TEST(Solve, GrowingSketchGivesSuperlinearErrorDecay) {
    const Index d = 10;
    const GlmInstance inst = gen_logistic_instance(4096, d, 0.9, 2.0, 15);
    const auto model = ridge_logistic(inst);
    const Vector x_star = reference_optimum(model, Vector::Zero(d)).x;
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SolverConfig config;
        config.sketch = SketchSpec{SketchKind::ros_hadamard, 0, 1, seed};
        config.sketch_rows_schedule = [d](int t) {
            const double eps = 1.0 / std::log(2.0 + t);
            return static_cast<Index>(std::ceil(6.0 * static_cast<double>(d) / (eps * eps)));
        };
        config.delta = 1e-30;
        config.max_iters = 60;
        config.record_iterates = true;
        const SolveResult r = solve(model, config, Vector::Zero(d));
        // Keep the iterates above the rounding floor, where the error stops moving.
        double floor = kInfinity;
        for (const auto& x : r.iterates) floor = std::min(floor, (x - x_star).norm());
        std::vector<double> errors;
        for (const auto& x : r.iterates) {
            const double e = (x - x_star).norm();
            if (e < 100.0 * floor) break;
            errors.push_back(e);
        }
        std::vector<double> ratios;
        for (std::size_t i = 0; i + 1 < errors.size(); ++i) ratios.push_back(errors[i + 1] / errors[i]);
        ASSERT_GE(ratios.size(), 6u) << "seed " << seed;
        const double first = (ratios[0] + ratios[1] + ratios[2]) / 3;
        const std::size_t n = ratios.size();
        const double last = (ratios[n - 1] + ratios[n - 2] + ratios[n - 3]) / 3;
        wins += last < first;
    }
    EXPECT_GE(wins, 18);
}

// ---------------------------------------------------------------------------
// Gradient descent baseline

TEST(BaselineGd, ConvergesOnQuadratic) {
    const SolveResult r = run_baseline_gd(half_distance(Vector::Zero(3)), Vector::Constant(3, 4.0), 0.1, 0.5, 100, 1e-12);
    EXPECT_TRUE(r.converged);
    for (std::size_t i = 1; i < r.records.size(); ++i) EXPECT_LE(r.records[i].f_value, r.records[i - 1].f_value);
}

TEST(BaselineGd, DeterministicTrace) {
    const GlmInstance inst = gen_logistic_instance(128, 4, 0.5, 1.0, 16);
    const auto model = glm_objective(inst.A, inst.y, GlmFamily{GlmKind::logistic});
    const SolveResult a = run_baseline_gd(model, Vector::Zero(4), 0.1, 0.5, 50, 1e-10);
    const SolveResult b = run_baseline_gd(model, Vector::Zero(4), 0.1, 0.5, 50, 1e-10);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) EXPECT_EQ(a.records[i].f_value, b.records[i].f_value);
}

TEST(BaselineGd, NeedsMoreIterationsThanNewtonSketchOnIllConditionedLogistic) {
    const GlmInstance inst = gen_logistic_instance(1024, 10, 0.99, 2.0, 17);
    const auto model = glm_objective(inst.A, inst.y, GlmFamily{GlmKind::logistic});
    const Matrix H = model.full_hessian(reference_optimum(model, Vector::Zero(10)).x);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(H, Eigen::EigenvaluesOnly);
    ASSERT_GE(eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff(), 100.0);
    const double f_star = reference_optimum(model, Vector::Zero(10)).f_final;

    auto iterations_to_gap = [&](const SolveResult& r) {
        for (const auto& rec : r.records)
            if (rec.f_value - f_star <= 1e-6) return rec.t;
        return std::numeric_limits<int>::max();
    };
    SolverConfig config;
    config.sketch = SketchSpec{SketchKind::ros_hadamard, 60, 1, 1};
    config.delta = 1e-12;
    const int sketch_iters = iterations_to_gap(solve(model, config, Vector::Zero(10)));
    int gd_iters = std::numeric_limits<int>::max();
    try {
        gd_iters = iterations_to_gap(run_baseline_gd(model, Vector::Zero(10), 0.1, 0.5, 2000, 1e-12));
    } catch (const SolveError& e) {
        gd_iters = iterations_to_gap(e.partial);
    }
    EXPECT_LT(sketch_iters, gd_iters);
}
