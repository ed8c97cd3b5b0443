#pragma once

#include "newton_sketch/core.hpp"

#include <algorithm>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace nsketch::harness {

enum class ProblemFamily { logistic_glm, lp, portfolio, lasso_dual, least_squares };

inline std::string_view to_string(ProblemFamily family) {
    switch (family) {
        case ProblemFamily::logistic_glm: return "logistic";
        case ProblemFamily::lp: return "lp";
        case ProblemFamily::portfolio: return "portfolio";
        case ProblemFamily::lasso_dual: return "lasso";
        case ProblemFamily::least_squares: return "least_squares";
    }
    return "unknown";
}

inline ProblemFamily parse_problem_family(std::string_view name) {
    if (name == "logistic" || name == "logistic_glm") return ProblemFamily::logistic_glm;
    if (name == "lp") return ProblemFamily::lp;
    if (name == "portfolio") return ProblemFamily::portfolio;
    if (name == "lasso" || name == "lasso_dual") return ProblemFamily::lasso_dual;
    if (name == "least_squares" || name == "square") return ProblemFamily::least_squares;
    throw InvalidParameter("unknown problem family '" + std::string(name) + "'");
}

struct ProblemSpec {
    ProblemFamily family = ProblemFamily::logistic_glm;
    Index n = 0;
    Index d = 0;
    std::uint64_t seed = 0;
    double rho = 0.99;           // feature correlation
    double scale = 2.0;          // feature variance
    double radius = 1.0;         // l1 radius R
    double lambda = 0.0;         // 0: family default
    Index sparsity = 0;          // 0: family default
    Index n_max = 100000;        // portfolio cap on n = d^3
};

inline void validate(const ProblemSpec& spec) {
    if (spec.d < 1) throw InvalidParameter("problem: d must be >= 1");
    if (spec.family != ProblemFamily::portfolio && spec.n < 1) throw InvalidParameter("problem: n must be >= 1");
    if (!(std::abs(spec.rho) < 1.0)) throw InvalidParameter("problem: |rho| must be < 1");
    if (!(spec.scale > 0.0)) throw InvalidParameter("problem: scale must be positive");
}

/// n x d matrix with i.i.d. rows from N(0, Sigma), Sigma_ij = scale rho^|i-j|.
/// Each row is L z with L the lower Cholesky factor of Sigma, applied through
/// the equivalent AR(1) recursion x_1 = sqrt(scale) z_1,
/// x_j = rho x_{j-1} + sqrt(scale (1 - rho^2)) z_j.
inline Matrix gen_correlated_gaussian(Index n, Index d, double rho, double scale, std::uint64_t seed) {
    if (!(std::abs(rho) < 1.0)) throw InvalidParameter("gen_correlated_gaussian: |rho| must be < 1");
    std::mt19937_64 rng(mix64(seed));
    std::normal_distribution<double> normal(0.0, 1.0);
    const double head = std::sqrt(scale);
    const double innovation = std::sqrt(scale * (1.0 - rho * rho));
    Matrix A(n, d);
    for (Index i = 0; i < n; ++i) {
        double prev = head * normal(rng);
        A(i, 0) = prev;
        for (Index j = 1; j < d; ++j) {
            prev = rho * prev + innovation * normal(rng);
            A(i, j) = prev;
        }
    }
    return A;
}

struct GlmInstance {
    Matrix A;
    Vector y;
    Vector x_true;
};

/// Logistic labels y in {0,1} drawn from the model with x_true ~ N(0, I/d).
inline GlmInstance gen_logistic_instance(Index n, Index d, double rho, double scale, std::uint64_t seed) {
    GlmInstance inst;
    inst.A = gen_correlated_gaussian(n, d, rho, scale, seed);
    std::mt19937_64 rng(mix64(derive_seed(seed, 1)));
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
    inst.x_true.resize(d);
    for (Index j = 0; j < d; ++j) inst.x_true(j) = normal(rng);
    const Vector u = inst.A * inst.x_true;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    inst.y.resize(n);
    for (Index i = 0; i < n; ++i) {
        const double p = 1.0 / (1.0 + std::exp(-u(i)));
        inst.y(i) = unit(rng) < p ? 1.0 : 0.0;
    }
    return inst;
}

/// y = A x_true + 0.1 noise.
inline GlmInstance gen_least_squares_instance(Index n, Index d, double rho, double scale, std::uint64_t seed) {
    GlmInstance inst;
    inst.A = gen_correlated_gaussian(n, d, rho, scale, seed);
    std::mt19937_64 rng(mix64(derive_seed(seed, 1)));
    std::normal_distribution<double> normal(0.0, 1.0);
    inst.x_true.resize(d);
    for (Index j = 0; j < d; ++j) inst.x_true(j) = normal(rng) / std::sqrt(static_cast<double>(d));
    inst.y = inst.A * inst.x_true;
    for (Index i = 0; i < n; ++i) inst.y(i) += 0.1 * normal(rng);
    return inst;
}

struct LpInstance {
    Matrix A;
    Vector b;
    Vector c;
    Vector x0;  // strictly feasible start
};

/// Bounded polytope {A x <= b} around the origin with unit-norm rows and
/// b_i in [1, 1.5]. In d = 2 the normals are stratified over the circle; in
/// higher dimension the first 2d rows are +-e_k so the set stays bounded.
inline LpInstance gen_lp_instance(Index n, Index d, std::uint64_t seed) {
    if (n < d + 1) throw InvalidParameter("gen_lp_instance: need n >= d + 1 constraints");
    if (d > 2 && n < 2 * d) throw InvalidParameter("gen_lp_instance: need n >= 2d constraints for d > 2");
    std::mt19937_64 rng(mix64(seed));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    LpInstance inst;
    inst.A.resize(n, d);
    if (d == 1) {
        for (Index i = 0; i < n; ++i) inst.A(i, 0) = (i % 2 == 0) ? 1.0 : -1.0;
    } else if (d == 2) {
        for (Index i = 0; i < n; ++i) {
            const double angle = 2.0 * std::numbers::pi * (static_cast<double>(i) + unit(rng)) / static_cast<double>(n);
            inst.A(i, 0) = std::cos(angle);
            inst.A(i, 1) = std::sin(angle);
        }
    } else {
        inst.A.setZero();
        for (Index k = 0; k < d; ++k) {
            inst.A(2 * k, k) = 1.0;
            inst.A(2 * k + 1, k) = -1.0;
        }
        for (Index i = 2 * d; i < n; ++i) {
            for (Index k = 0; k < d; ++k) inst.A(i, k) = normal(rng);
            inst.A.row(i).normalize();
        }
    }
    inst.b.resize(n);
    for (Index i = 0; i < n; ++i) inst.b(i) = 1.0 + 0.5 * unit(rng);
    inst.c.resize(d);
    for (Index k = 0; k < d; ++k) inst.c(k) = normal(rng);
    inst.c.normalize();
    inst.x0 = Vector::Zero(d);
    return inst;
}

struct PortfolioInstance {
    Matrix A;        // n x d returns, columns scaled by 1/sqrt(n)
    Vector mean;     // linear coefficient
    double lambda;   // risk weight
    Index sparsity;  // s
    Vector x_star;   // planted optimum over {x >= 0, <1,x> <= 1}
    double f_star;   // -<mean, x*> + lambda ||A x*||^2
};

/// s = ceil(2 log d), natural log.
inline Index portfolio_sparsity(Index d) {
    return static_cast<Index>(tolerant_ceil(2.0 * std::log(static_cast<double>(d))));
}

/// Portfolio instance with n = min(d^3, n_max) and a planted optimum whose
/// support has s = ceil(2 log d) entries. The mean vector is chosen so that
/// the KKT conditions hold at x*: 2 lambda A^T A x* - mean = nu, with nu = 0
/// on the support and nu > 0 off it; <1, x*> = 1/2 keeps the budget slack.
inline PortfolioInstance gen_portfolio_instance(Index d, std::uint64_t seed, Index n_max = 100000,
                                                double lambda = 0.5) {
    if (d < 2) throw InvalidParameter("gen_portfolio_instance: d must be >= 2");
    PortfolioInstance inst;
    const Index cube = d * d * d;
    const Index n = std::min(cube, n_max);
    inst.lambda = lambda;
    inst.sparsity = std::min(portfolio_sparsity(d), d);

    std::mt19937_64 rng(mix64(seed));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    inst.A.resize(n, d);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < d; ++j) inst.A(i, j) = normal(rng);
    inst.A /= std::sqrt(static_cast<double>(n));

    std::vector<Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    inst.x_star = Vector::Zero(d);
    for (Index k = 0; k < inst.sparsity; ++k) inst.x_star(order[static_cast<std::size_t>(k)]) = 0.5 + unit(rng);
    inst.x_star *= 0.5 / inst.x_star.sum();

    Vector multiplier = Vector::Zero(d);
    for (Index k = inst.sparsity; k < d; ++k) multiplier(order[static_cast<std::size_t>(k)]) = 0.05 + 0.1 * unit(rng);
    inst.mean = 2.0 * lambda * (inst.A.transpose() * (inst.A * inst.x_star)) - multiplier;
    inst.f_star = -inst.mean.dot(inst.x_star) + lambda * (inst.A * inst.x_star).squaredNorm();
    return inst;
}

struct LassoInstance {
    Matrix A;  // n x d
    Vector y;
    double lambda;
    Vector x_true;
};

/// Correlated design as in the logistic experiment, sparse x_true with
/// `sparsity` nonzeros, y = A x_true + 0.1 noise and
/// lambda = lambda_ratio * ||A^T y||_inf.
inline LassoInstance gen_lasso_instance(Index n, Index d, double rho, double scale, std::uint64_t seed,
                                        Index sparsity = 10, double lambda_ratio = 0.1) {
    LassoInstance inst;
    inst.A = gen_correlated_gaussian(n, d, rho, scale, seed);
    std::mt19937_64 rng(mix64(derive_seed(seed, 1)));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<Index> pick(0, d - 1);
    inst.x_true = Vector::Zero(d);
    for (Index k = 0; k < std::min(sparsity, d); ++k) inst.x_true(pick(rng)) = normal(rng);
    inst.y = inst.A * inst.x_true;
    for (Index i = 0; i < n; ++i) inst.y(i) += 0.1 * normal(rng);
    inst.lambda = lambda_ratio * (inst.A.transpose() * inst.y).cwiseAbs().maxCoeff();
    return inst;
}

}  // namespace nsketch::harness
