#pragma once

#include "newton_sketch/core.hpp"

#include <algorithm>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

namespace nsketch {

/// diag(diag) + factor * factor^T
struct DiagPlusLowRank {
    Vector diag;
    Matrix factor;
};

/// Callable bundle describing f = f0 + g.
///
/// `hessian_sqrt` is the sketchable part: an n_eff x d matrix B(x) with
/// B^T B = Hessian of f0. The optional structured part is the exact Hessian
/// of g; when present it is available densely, through a square root (used
/// when the whole Hessian is sketched), and, where the structure allows, as
/// a diagonal-plus-low-rank factorization.
///
/// `value_change`, when set, returns f(x + s) - f(x) computed without
/// subtracting two large values; the line search prefers it.
struct ObjectiveModel {
    Index dim = 0;
    std::function<double(const Vector&)> value;  // +inf outside the domain
    std::function<double(const Vector&, const Vector&)> value_change;  // +inf outside the domain
    std::function<Vector(const Vector&)> gradient;
    std::function<Matrix(const Vector&)> hessian_sqrt;
    std::function<Matrix(const Vector&)> structured_hessian;
    std::function<Matrix(const Vector&)> structured_sqrt;
    std::function<DiagPlusLowRank(const Vector&)> structured_diag_lowrank;
    std::function<bool(const Vector&)> in_domain;

    bool has_structured() const noexcept { return static_cast<bool>(structured_hessian); }

    Matrix full_hessian(const Vector& x) const {
        const Matrix B = hessian_sqrt(x);
        Matrix H = B.transpose() * B;
        if (has_structured()) H += structured_hessian(x);
        return H;
    }
};

// ---------------------------------------------------------------------------
// Generalized linear models: f(x) = sum_i psi(<a_i, x>, y_i)

enum class GlmKind { square, logistic, poisson };

inline std::string_view to_string(GlmKind kind) {
    switch (kind) {
        case GlmKind::square: return "square";
        case GlmKind::logistic: return "logistic";
        case GlmKind::poisson: return "poisson";
    }
    return "unknown";
}

inline GlmKind parse_glm_kind(std::string_view name) {
    if (name == "square" || name == "least_squares") return GlmKind::square;
    if (name == "logistic" || name == "logistic_glm") return GlmKind::logistic;
    if (name == "poisson") return GlmKind::poisson;
    throw InvalidParameter("unknown GLM family '" + std::string(name) + "'");
}

/// Scalar link maps. Logistic uses labels y in {0, 1}:
/// psi(u, y) = log(1 + e^u) - y u.
struct GlmFamily {
    GlmKind kind = GlmKind::square;

    static constexpr double kPoissonCurvatureClamp = 30.0;

    double psi(double u, double y) const {
        switch (kind) {
            case GlmKind::square: return 0.5 * (u - y) * (u - y);
            case GlmKind::logistic: return log1pexp(u) - y * u;
            case GlmKind::poisson: return std::exp(u) - y * u;
        }
        return 0.0;
    }
    double dpsi(double u, double y) const {
        switch (kind) {
            case GlmKind::square: return u - y;
            case GlmKind::logistic: return sigmoid(u) - y;
            case GlmKind::poisson: return std::exp(u) - y;
        }
        return 0.0;
    }
    // Label-independent for all three families.
    double d2psi(double u, double /*y*/ = 0.0) const {
        switch (kind) {
            case GlmKind::square: return 1.0;
            case GlmKind::logistic: {
                const double s = sigmoid(u);
                return s * (1.0 - s);
            }
            case GlmKind::poisson: return std::exp(std::min(u, kPoissonCurvatureClamp));
        }
        return 0.0;
    }

    static double sigmoid(double u) {
        if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
        const double e = std::exp(u);
        return e / (1.0 + e);
    }
    static double log1pexp(double u) {
        if (u > 0) return u + std::log1p(std::exp(-u));
        return std::log1p(std::exp(u));
    }
};

inline ObjectiveModel glm_objective(Matrix A, Vector y, GlmFamily family) {
    if (A.rows() != y.size()) throw DimensionError("glm_objective: A has " + std::to_string(A.rows()) +
                                                   " rows but y has " + std::to_string(y.size()));
    if (!A.allFinite() || !y.allFinite()) throw InvalidParameter("glm_objective: non-finite data");
    struct Data {
        Matrix A;
        Vector y;
        GlmFamily family;
    };
    auto data = std::make_shared<const Data>(Data{std::move(A), std::move(y), family});

    ObjectiveModel model;
    model.dim = data->A.cols();
    model.value = [data](const Vector& x) {
        const Vector u = data->A * x;
        double total = 0.0;
        for (Index i = 0; i < u.size(); ++i) total += data->family.psi(u(i), data->y(i));
        return total;
    };
    model.gradient = [data](const Vector& x) {
        Vector u = data->A * x;
        for (Index i = 0; i < u.size(); ++i) u(i) = data->family.dpsi(u(i), data->y(i));
        return Vector(data->A.transpose() * u);
    };
    model.hessian_sqrt = [data](const Vector& x) {
        const Vector u = data->A * x;
        Vector w(u.size());
        for (Index i = 0; i < u.size(); ++i) w(i) = std::sqrt(data->family.d2psi(u(i), data->y(i)));
        return Matrix(w.asDiagonal() * data->A);
    };
    model.in_domain = [](const Vector& x) { return x.allFinite(); };
    return model;
}

/// f(x) = 1/2 ||A x||^2 - <c, x>
inline ObjectiveModel quadratic_objective(Matrix A, Vector c) {
    if (A.cols() != c.size()) throw DimensionError("quadratic_objective: A/c size mismatch");
    auto A_ptr = std::make_shared<const Matrix>(std::move(A));
    auto c_ptr = std::make_shared<const Vector>(std::move(c));
    ObjectiveModel model;
    model.dim = A_ptr->cols();
    model.value = [A_ptr, c_ptr](const Vector& x) { return 0.5 * (*A_ptr * x).squaredNorm() - c_ptr->dot(x); };
    model.gradient = [A_ptr, c_ptr](const Vector& x) {
        return Vector(A_ptr->transpose() * (*A_ptr * x) - *c_ptr);
    };
    model.hessian_sqrt = [A_ptr](const Vector&) { return *A_ptr; };
    model.in_domain = [](const Vector& x) { return x.allFinite(); };
    return model;
}

// ---------------------------------------------------------------------------
// Barrier objectives

/// f(x) = tau <c, x> - sum_i log(b_i - <a_i, x>)
inline ObjectiveModel lp_barrier_objective(Matrix A, Vector b, Vector c, double tau) {
    if (A.rows() != b.size() || A.cols() != c.size())
        throw DimensionError("lp_barrier_objective: inconsistent A/b/c sizes");
    if (!(tau > 0)) throw InvalidParameter("lp_barrier_objective: tau must be positive");
    struct Data {
        Matrix A;
        Vector b, c;
        double tau;
    };
    auto data = std::make_shared<const Data>(Data{std::move(A), std::move(b), std::move(c), tau});
    auto slack = [data](const Vector& x) { return Vector(data->b - data->A * x); };

    ObjectiveModel model;
    model.dim = data->A.cols();
    model.in_domain = [slack](const Vector& x) {
        return x.allFinite() && (slack(x).array() > 0.0).all();
    };
    model.value = [data, slack](const Vector& x) {
        const Vector s = slack(x);
        if (!x.allFinite() || !(s.array() > 0.0).all()) return kInfinity;
        return data->tau * data->c.dot(x) - s.array().log().sum();
    };
    model.value_change = [data, slack](const Vector& x, const Vector& step) {
        const Vector ratio = (data->A * step).cwiseQuotient(slack(x));
        if (!step.allFinite() || !(ratio.array() < 1.0).all()) return kInfinity;
        return data->tau * data->c.dot(step) - (-ratio.array()).log1p().sum();
    };
    model.gradient = [data, slack](const Vector& x) {
        const Vector inv = slack(x).cwiseInverse();
        return Vector(data->tau * data->c + data->A.transpose() * inv);
    };
    model.hessian_sqrt = [data, slack](const Vector& x) {
        const Vector inv = slack(x).cwiseAbs().cwiseInverse();
        return Matrix(inv.asDiagonal() * data->A);
    };
    return model;
}

/// f(x) = -tau <mean, x> + tau lambda x^T A^T A x - sum_i log x_i - log(1 - <1, x>)
///
/// Sketchable square root sqrt(2 tau lambda) A; the simplex barrier Hessian
/// diag(1/x_i^2) + 11^T/(1 - <1, x>)^2 is the structured part.
inline ObjectiveModel portfolio_barrier_objective(Matrix A, Vector mean, double lambda, double tau) {
    if (A.cols() != mean.size()) throw DimensionError("portfolio_barrier_objective: A/mean size mismatch");
    if (!(lambda > 0) || !(tau > 0)) throw InvalidParameter("portfolio_barrier_objective: lambda, tau must be positive");
    struct Data {
        Matrix A;
        Vector mean;
        double lambda, tau;
    };
    auto data = std::make_shared<const Data>(Data{std::move(A), std::move(mean), lambda, tau});
    auto feasible = [](const Vector& x) { return x.allFinite() && (x.array() > 0.0).all() && x.sum() < 1.0; };

    ObjectiveModel model;
    model.dim = data->A.cols();
    model.in_domain = feasible;
    model.value = [data, feasible](const Vector& x) {
        if (!feasible(x)) return kInfinity;
        const double quad = (data->A * x).squaredNorm();
        return -data->tau * data->mean.dot(x) + data->tau * data->lambda * quad - x.array().log().sum() -
               std::log(1.0 - x.sum());
    };
    model.value_change = [data](const Vector& x, const Vector& step) {
        const Vector ratio = step.cwiseQuotient(x);
        const double budget = step.sum() / (1.0 - x.sum());
        if (!step.allFinite() || !(ratio.array() > -1.0).all() || !(budget < 1.0)) return kInfinity;
        const Vector As = data->A * step;
        const double quad = 2.0 * (data->A * x).dot(As) + As.squaredNorm();
        return -data->tau * data->mean.dot(step) + data->tau * data->lambda * quad - ratio.array().log1p().sum() -
               std::log1p(-budget);
    };
    model.gradient = [data](const Vector& x) {
        Vector g = -data->tau * data->mean + 2.0 * data->tau * data->lambda * (data->A.transpose() * (data->A * x));
        g -= x.cwiseInverse();
        g.array() += 1.0 / (1.0 - x.sum());
        return g;
    };
    const Matrix scaled = std::sqrt(2.0 * tau * lambda) * data->A;
    auto scaled_ptr = std::make_shared<const Matrix>(scaled);
    model.hessian_sqrt = [scaled_ptr](const Vector&) { return *scaled_ptr; };
    model.structured_hessian = [](const Vector& x) {
        const double slack = 1.0 - x.sum();
        Matrix H = Matrix::Constant(x.size(), x.size(), 1.0 / (slack * slack));
        H.diagonal() += x.array().square().inverse().matrix();
        return H;
    };
    model.structured_sqrt = [](const Vector& x) {
        const Index d = x.size();
        Matrix R = Matrix::Zero(d + 1, d);
        R.topRows(d).diagonal() = x.cwiseInverse();
        R.row(d).setConstant(1.0 / std::abs(1.0 - x.sum()));
        return R;
    };
    model.structured_diag_lowrank = [](const Vector& x) {
        DiagPlusLowRank s;
        s.diag = x.array().square().inverse().matrix();
        s.factor = Matrix::Constant(x.size(), 1, 1.0 / std::abs(1.0 - x.sum()));
        return s;
    };
    return model;
}

/// How the two barrier terms of the Lasso dual are folded into a sketchable
/// square root.
enum class LassoSqrtForm {
    /// 2d x n stack [diag(1/s-) A^T; diag(1/s+) A^T]; Gram equals the barrier Hessian.
    stacked,
    /// d x n matrix diag(1/s- + 1/s+) A^T; Gram over-estimates the barrier
    /// Hessian by 2 A diag(1/(s- s+)) A^T.
    combined,
};

struct LassoSlacks {
    Vector lo;  // lambda - <A_j, w>
    Vector hi;  // lambda + <A_j, w>
};

/// Slacks of the dual constraints |<A_j, w>| <= lambda. Near-active slacks
/// are far smaller than the terms of <A_j, w>, so those entries are summed
/// again in extended precision.
inline LassoSlacks lasso_slacks(const Matrix& A, double lambda, const Vector& w) {
    constexpr double kRefineBelow = 1e-4;
    const Vector u = A.transpose() * w;
    LassoSlacks s{(lambda - u.array()).matrix(), (lambda + u.array()).matrix()};
    for (Index j = 0; j < u.size(); ++j) {
        if (std::min(s.lo(j), s.hi(j)) > kRefineBelow * lambda) continue;
        long double dot = 0.0L;
        for (Index i = 0; i < A.rows(); ++i)
            dot += static_cast<long double>(A(i, j)) * static_cast<long double>(w(i));
        s.lo(j) = static_cast<double>(static_cast<long double>(lambda) - dot);
        s.hi(j) = static_cast<double>(static_cast<long double>(lambda) + dot);
    }
    return s;
}

/// Barrier form of the Lasso dual, variable w in R^n:
/// f(w) = tau ||y - w||^2 - sum_j log(lambda - <A_j, w>) - sum_j log(lambda + <A_j, w>)
/// with A_j the j-th column of A (n x d). The 2 tau I term is kept exact.
inline ObjectiveModel lasso_dual_barrier_objective(Matrix A, Vector y, double lambda, double tau,
                                                   LassoSqrtForm form = LassoSqrtForm::stacked) {
    if (A.rows() != y.size()) throw DimensionError("lasso_dual_barrier_objective: A/y size mismatch");
    if (!(lambda > 0) || !(tau > 0)) throw InvalidParameter("lasso_dual_barrier_objective: lambda, tau must be positive");
    struct Data {
        Matrix A;
        Vector y;
        double lambda, tau;
    };
    auto data = std::make_shared<const Data>(Data{std::move(A), std::move(y), lambda, tau});
    auto feasible = [data](const Vector& w) {
        if (!w.allFinite()) return false;
        const LassoSlacks s = lasso_slacks(data->A, data->lambda, w);
        return (s.lo.array() > 0.0).all() && (s.hi.array() > 0.0).all();
    };

    ObjectiveModel model;
    model.dim = data->A.rows();
    model.in_domain = feasible;
    model.value = [data](const Vector& w) {
        if (!w.allFinite()) return kInfinity;
        const LassoSlacks s = lasso_slacks(data->A, data->lambda, w);
        if (!(s.lo.array() > 0.0).all() || !(s.hi.array() > 0.0).all()) return kInfinity;
        return data->tau * (data->y - w).squaredNorm() - s.lo.array().log().sum() - s.hi.array().log().sum();
    };
    model.value_change = [data](const Vector& w, const Vector& step) {
        const LassoSlacks s = lasso_slacks(data->A, data->lambda, w);
        const Vector v = data->A.transpose() * step;
        const Vector lo = v.array() / s.lo.array();
        const Vector hi = v.array() / s.hi.array();
        if (!step.allFinite() || !(lo.array() < 1.0).all() || !(hi.array() > -1.0).all()) return kInfinity;
        return data->tau * (step.squaredNorm() - 2.0 * (data->y - w).dot(step)) - (-lo.array()).log1p().sum() -
               hi.array().log1p().sum();
    };
    model.gradient = [data](const Vector& w) {
        const LassoSlacks s = lasso_slacks(data->A, data->lambda, w);
        const Vector coef = s.lo.array().inverse() - s.hi.array().inverse();
        return Vector(2.0 * data->tau * (w - data->y) + data->A * coef);
    };
    model.hessian_sqrt = [data, form](const Vector& w) {
        const LassoSlacks s = lasso_slacks(data->A, data->lambda, w);
        const Vector lo = s.lo.array().abs().inverse();
        const Vector hi = s.hi.array().abs().inverse();
        const Index d = data->A.cols();
        if (form == LassoSqrtForm::combined) return Matrix((lo + hi).asDiagonal() * data->A.transpose());
        Matrix B(2 * d, data->A.rows());
        B.topRows(d) = lo.asDiagonal() * data->A.transpose();
        B.bottomRows(d) = hi.asDiagonal() * data->A.transpose();
        return B;
    };
    const Index n = data->A.rows();
    model.structured_hessian = [n, tau](const Vector&) { return Matrix(2.0 * tau * Matrix::Identity(n, n)); };
    model.structured_sqrt = [n, tau](const Vector&) {
        return Matrix(std::sqrt(2.0 * tau) * Matrix::Identity(n, n));
    };
    model.structured_diag_lowrank = [n, tau](const Vector&) {
        return DiagPlusLowRank{Vector::Constant(n, 2.0 * tau), Matrix(n, 0)};
    };
    return model;
}

// Lasso primal/dual bookkeeping for min_x 1/2 ||Ax - y||^2 + lambda ||x||_1.

inline double lasso_primal_value(const Matrix& A, const Vector& y, double lambda, const Vector& x) {
    return 0.5 * (A * x - y).squaredNorm() + lambda * x.lpNorm<1>();
}

/// Dual objective 1/2 ||y||^2 - 1/2 ||y - w||^2 (feasible when ||A^T w||_inf <= lambda).
inline double lasso_dual_value(const Vector& y, const Vector& w) {
    return 0.5 * y.squaredNorm() - 0.5 * (y - w).squaredNorm();
}

/// Primal point read off the barrier multipliers at a tau-centered dual w:
/// x_j = (1 / (2 tau)) (1/(lambda - <A_j, w>) - 1/(lambda + <A_j, w>)).
inline Vector lasso_recover_primal(const Matrix& A, double lambda, double tau, const Vector& w) {
    const LassoSlacks s = lasso_slacks(A, lambda, w);
    return (s.lo.array().inverse() - s.hi.array().inverse()) / (2.0 * tau);
}

}  // namespace nsketch
